//! Prediction laboratory for Rayleigh flat-fading channels.
//!
//! The crate has three layers:
//!
//! * [`channel`] simulates correlated flat-fading gains with a
//!   sum-of-sinusoids model and turns them into noisy least-squares
//!   pilot estimates with a chosen SNR,
//! * [`wiener`] and [`neural`] predict the gain several samples ahead
//!   from a finite window of past estimates — the former is the optimal
//!   linear filter designed from the autocorrelation, the latter are
//!   small recurrent networks (vanilla RNN and LSTM) trained from
//!   scratch with backpropagation through time and Adam,
//! * [`harness`] runs seeded Monte Carlo trials and sweeps (window
//!   length, horizon, SNR, Doppler, architecture grids) and writes the
//!   aggregated mean-square prediction error to CSV.
//!
//! [`numerics`] holds the shared mathematical primitives (Bessel J0,
//! Hermitian Toeplitz systems) and [`rng`] the seed-derivation scheme
//! that makes every run reproducible.

// Negated comparisons (`!(x > 0.0)`) are NaN-rejecting validations, and
// index loops mirror the subscripts of the matrix recurrences they
// implement; both are deliberate throughout the numeric code.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod error;
pub mod harness;
pub mod neural;
pub mod numerics;
pub mod rng;
pub mod wiener;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
