//! Finite-window linear (Wiener) predictor of the fading gain.
//!
//! With phi[k] the autocorrelation of the estimates, the length-N
//! predictor for horizon ell solves `R w = r` where R is the Hermitian
//! Toeplitz matrix with first row (phi[0] .. phi[N-1]) and
//! r = (phi[ell] .. phi[N-1+ell]).  The window is ordered newest first
//! and the prediction is
//!
//! ```text
//! h_hat[n+ell] = sum_{k=1..N} conj(w_k) h_tilde[n-k+1]
//! ```
//!
//! The design residual power `phi[0] - Re(r^H w)` is the theoretical
//! minimum mean-square error of the filter.

use num_complex::Complex64;

use crate::channel::jakes_acf;
use crate::numerics::{solve_hermitian_toeplitz, HermitianToeplitzSpec};
use crate::{Error, Result};

/// Autocorrelation values for lags 0..=K together with the training
/// length they were estimated from.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfEstimate {
    /// values[k] is the lag-k autocorrelation.
    pub values: Vec<Complex64>,
    /// Number of samples the estimate was computed from.
    pub train_len: usize,
}

impl AcfEstimate {
    /// Exact Jakes-model autocorrelation (no estimation noise), mainly
    /// for oracle experiments.  `train_len` is set to the smallest value
    /// consistent with the lag range since no finite window produced it.
    pub fn from_model(max_doppler: f64, sample_interval: f64, max_lag: usize) -> Self {
        let values = (0..=max_lag)
            .map(|k| Complex64::new(jakes_acf(k as f64, max_doppler, sample_interval), 0.0))
            .collect();
        AcfEstimate { values, train_len: max_lag + 1 }
    }

    /// Largest available lag.
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }
}

/// A designed linear predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPredictor {
    /// Filter taps w_1..w_N (applied conjugated, newest sample first).
    pub taps: Vec<Complex64>,
    /// Window length N.
    pub window: usize,
    /// Prediction horizon ell in samples.
    pub horizon: usize,
    /// Design residual power phi[0] - Re(r^H w).
    pub theoretical_mmse: f64,
}

/// Biased sample autocorrelation of a training segment:
/// `phi[k] = (1/L) sum_{n=0}^{L-1-k} x[n] conj(x[n+k])`.
///
/// Only the valid pairs are summed but the divisor stays L, which keeps
/// the implied Toeplitz matrix positive semidefinite.
pub fn sample_acf(samples: &[Complex64], max_lag: usize) -> Result<AcfEstimate> {
    let len = samples.len();
    if len == 0 {
        return Err(Error::Domain("autocorrelation of an empty segment".into()));
    }
    if max_lag >= len {
        return Err(Error::Domain(format!(
            "max lag {max_lag} needs at least {} samples, got {len}",
            max_lag + 1
        )));
    }
    let mut values = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..len - k {
            acc += samples[n] * samples[n + k].conj();
        }
        values.push(acc / len as f64);
    }
    Ok(AcfEstimate { values, train_len: len })
}

/// Designs the window-N, horizon-ell predictor from an autocorrelation.
///
/// The normal equations are solved with zero diagonal loading; the
/// solver escalates the loading automatically if the matrix turns out
/// singular (for example a constant channel).
pub fn design(acf: &AcfEstimate, window: usize, horizon: usize) -> Result<WienerPredictor> {
    if window == 0 {
        return Err(Error::Domain("window must be at least 1".into()));
    }
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let needed = window - 1 + horizon;
    if acf.max_lag() < needed {
        return Err(Error::Domain(format!(
            "window {window} and horizon {horizon} need lags up to {needed}, autocorrelation has {}",
            acf.max_lag()
        )));
    }
    let first_row = acf.values[..window].to_vec();
    let rhs: Vec<Complex64> = acf.values[horizon..horizon + window].to_vec();
    let spec = HermitianToeplitzSpec::new(first_row, 0.0)?;
    let taps = solve_hermitian_toeplitz(&spec, &rhs)?;
    let cross: f64 = rhs.iter().zip(&taps).map(|(r, w)| (r.conj() * w).re).sum();
    let theoretical_mmse = acf.values[0].re - cross;
    Ok(WienerPredictor { taps, window, horizon, theoretical_mmse })
}

/// Applies the predictor to a window of estimates ordered newest first:
/// returns `sum_k conj(taps[k]) window[k]`.
pub fn predict(pred: &WienerPredictor, window_newest_first: &[Complex64]) -> Complex64 {
    assert_eq!(
        window_newest_first.len(),
        pred.window,
        "window length {} does not match predictor window {}",
        window_newest_first.len(),
        pred.window
    );
    pred.taps
        .iter()
        .zip(window_newest_first)
        .map(|(w, x)| w.conj() * x)
        .sum()
}

/// Mean-square prediction error over a test segment: slides the window
/// across the noisy estimates and compares each prediction against the
/// true gain `horizon` samples ahead.
pub fn empirical_mse(
    pred: &WienerPredictor,
    estimates: &[Complex64],
    truth: &[Complex64],
) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::Domain(format!(
            "estimates ({}) and truth ({}) lengths differ",
            estimates.len(),
            truth.len()
        )));
    }
    let n = pred.window;
    let ell = pred.horizon;
    if estimates.len() < n + ell {
        return Err(Error::Domain(format!(
            "segment of {} samples too short for window {n} + horizon {ell}",
            estimates.len()
        )));
    }
    let mut acc = 0.0;
    let mut count = 0usize;
    for target in (n - 1 + ell)..estimates.len() {
        let newest = target - ell;
        let window: Vec<Complex64> =
            (0..n).map(|k| estimates[newest - k]).collect();
        let err = truth[target] - predict(pred, &window);
        acc += err.norm_sqr();
        count += 1;
    }
    Ok(acc / count as f64)
}
