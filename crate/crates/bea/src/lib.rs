//! Problem files, reports, golden checks and numeric experiments around `bea-core`.

pub mod cli;
pub mod experiments;
pub mod golden;
pub mod problem;
pub mod report;
