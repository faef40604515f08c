//! File formats, command-line front end, FFT lattice evaluation and parallel
//! study runners on top of `twolevel-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod lattice;
pub mod parallel;
pub mod studies;
pub mod svg;
pub mod table;

pub use error::{AppError, Result};
pub use lattice::LatticeEvaluator;
pub use parallel::run_monte_carlo_par;
pub use table::{compare_estimators, split, CompareSettings, MultiSubjectTable, SplitSpec};
