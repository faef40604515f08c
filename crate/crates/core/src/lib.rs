//! Two-level sampling estimators and risk calculus.
//!
//! A population of `m` subjects shares a mean function `g`; subject `j`
//! carries its own function `f⁽ʲ⁾ = g + deviation`, observed at precision
//! `n`. Everything is expressed against the Fourier eigenbasis on `[0, 1]`
//! with polynomially decaying eigenvalues.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation: basis arithmetic, data generation from seeded streams,
//! estimators, Monte Carlo scoring, theoretical rates and design-grid
//! evaluation. File formats, plotting, the CLI and the parallel runners
//! live in the companion `twolevel` crate.
#![no_std]

extern crate alloc;

pub mod design;
pub mod error;
pub mod estimators;
pub mod risk;
pub mod sim;
pub mod spectral;

pub(crate) mod math;

pub use error::{Error, Result};
pub use spectral::{fourier_eval, FunctionSeries, SobolevBall, Spectrum};
