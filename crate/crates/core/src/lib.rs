//! Error predictions for the square-root LASSO
//! `min_x ‖y − Ax‖₂ + (λ/√m)‖x‖₁` under Gaussian designs.
//!
//! * [`analytics`] and [`gaussian`]: closed-form scalar building blocks;
//! * [`gordon`]: the deterministic min-max that characterizes cost and error;
//! * [`prediction`]: critical regularizers and fast error predictions;
//! * [`instance`], [`solver`], [`harness`]: seeded instances, a certified
//!   solver and Monte Carlo sweeps;
//! * [`io`]: configuration and result tables.

pub mod analytics;
pub mod dims;
pub mod error;
pub mod gaussian;
pub mod gordon;
pub mod harness;
pub mod instance;
pub mod io;
pub mod prediction;
pub mod roots;
pub mod solver;

pub use dims::{Dims, NoiseLevel};
pub use error::{Error, Result};

// Every chapter of the guide runs as a doc-test.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gaussian-tails.md")]
    mod gaussian_tails {}
    #[doc = include_str!("../../../book/src/sample-complexity.md")]
    mod sample_complexity {}
    #[doc = include_str!("../../../book/src/min-max-oracle.md")]
    mod min_max_oracle {}
    #[doc = include_str!("../../../book/src/predictions.md")]
    mod predictions {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
