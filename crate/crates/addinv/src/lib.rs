//! Smooth backfitting estimation for additive regression under a known
//! convolution operator.
//!
//! The observed regression function is the convolution of an additive signal
//! with a known operator. Estimation runs in four stages:
//!
//! 1. transform the predictors to the unit cube with marginal empirical
//!    distribution functions ([`empirical`]),
//! 2. fit the additive components of the *direct* regression on the unit cube
//!    by smooth backfitting ([`backfitting`]),
//! 3. recover each signal component by a regularised Fourier inversion of the
//!    per-component residuals ([`deconvolution`]),
//! 4. assemble the additive signal estimate and its variance normalizers.
//!
//! The [`simulation`] module contains a Monte Carlo harness around the full
//! pipeline (signal models, designs, nested bandwidth selection, IMSE
//! aggregation) and [`cli`] the configuration, file formats and subcommand
//! drivers behind the `addinv` binary.

pub mod backfitting;
pub mod cli;
pub mod deconvolution;
pub mod empirical;
mod error;
pub mod grid;
pub mod kernels;
pub mod quad;
pub mod simulation;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
