use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use super::poly::MAX_VARS;
use super::ratfunc::RatFunc;

pub const ALPHA: usize = 0;
pub const C: usize = 1;
pub const DT: usize = 2;
pub const DX: usize = 3;

/// Largest configuration dimension supported by the atom encoding.
pub const MAX_DIM: usize = 6;

const RESERVED: [&str; 4] = ["alpha", "c", "dt", "dx"];

/// Problem-wide limits and the parameter table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Context {
    dim: usize,
    max_jet: usize,
    max_pot: usize,
    params: Vec<String>,
}

impl Context {
    pub fn new(dim: usize) -> Result<Context> {
        Context::with_limits(dim, 8, 6)
    }

    pub fn with_limits(dim: usize, max_jet: usize, max_pot: usize) -> Result<Context> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidProblem(alloc::format!(
                "dimension {} outside 1..={}",
                dim, MAX_DIM
            )));
        }
        Ok(Context {
            dim,
            max_jet,
            max_pot,
            params: RESERVED.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_jet(&self) -> usize {
        self.max_jet
    }

    pub fn max_pot(&self) -> usize {
        self.max_pot
    }

    pub fn set_limits(&mut self, max_jet: usize, max_pot: usize) {
        self.max_jet = max_jet;
        self.max_pot = max_pot;
    }

    pub fn declare_param(&mut self, name: &str) -> Result<usize> {
        if RESERVED.contains(&name) {
            return Err(Error::InvalidProblem(alloc::format!("`{}` is a reserved parameter", name)));
        }
        if self.params.iter().any(|p| p == name) {
            return Err(Error::InvalidProblem(alloc::format!("parameter `{}` declared twice", name)));
        }
        if self.params.len() >= MAX_VARS {
            return Err(Error::InvalidProblem("too many parameters".to_string()));
        }
        self.params.push(name.to_string());
        Ok(self.params.len() - 1)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }

    pub fn param_name(&self, i: usize) -> &str {
        &self.params[i]
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<RatFunc> {
        self.param_index(name).map(RatFunc::var)
    }

    pub fn check_jet(&self, order: usize) -> Result<()> {
        if order > self.max_jet {
            Err(Error::JetOrderOverflow { order, max: self.max_jet })
        } else {
            Ok(())
        }
    }

    pub fn check_pot(&self, order: usize) -> Result<()> {
        if order > self.max_pot {
            Err(Error::PotentialOrderOverflow { order, max: self.max_pot })
        } else {
            Ok(())
        }
    }
}

pub fn alpha() -> RatFunc {
    RatFunc::var(ALPHA)
}

pub fn c() -> RatFunc {
    RatFunc::var(C)
}

pub fn dt() -> RatFunc {
    RatFunc::var(DT)
}

pub fn dx() -> RatFunc {
    RatFunc::var(DX)
}
