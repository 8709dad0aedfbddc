//! Backward error analysis for variational discretisations of wave equations
//! restricted to travelling and rotating waves.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod symcore;
pub mod jetcalc;
pub mod stencil;
pub mod modeq;
pub mod hamstruct;
pub mod noether;
pub mod ptrees;
pub mod numlab;

pub use error::{Error, Result};
