//! Sum-of-sinusoids Rayleigh flat-fading simulator and the reference
//! statistics it reproduces.
//!
//! The complex gain at sample n (spacing `ts` seconds) superposes M
//! propagation paths:
//!
//! ```text
//! h[n] = (1/sqrt(M)) * sum_m  x_i,m(n ts) + j x_q,m(n ts)
//! x_i,m(t) = A_m cos((2 pi f_d t + psi_m) cos(alpha_m) + phi_m)
//! x_q,m(t) = B_m sin((2 pi f_d t + psi_m) cos(alpha_m) + phi_m)
//! ```
//!
//! with A_m, B_m ~ N(0, 1), alpha_m, phi_m, psi_m ~ U[-pi, pi) drawn
//! once per realization.  In the ensemble the gain is zero mean, unit
//! power, Rayleigh in envelope, and has the Jakes autocorrelation
//! `E{h[n] h*[n+k]} = J0(2 pi f_d |k| ts)` whose spectral density is the
//! classic bathtub shape, infinite at the maximum Doppler shift.
//!
//! Pilot-based least-squares estimation is modeled as the gain plus
//! circularly symmetric complex Gaussian noise sized by the SNR.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::numerics::{bessel_j0, mean_power};
use crate::rng::{normal_pair, stream_rng};
use crate::{Error, Result};

/// Stream tags for deriving independent generators from one seed.
const STREAM_SOS_PARAMS: u64 = 0xC0;
const STREAM_LS_NOISE: u64 = 0xA0;

/// Per-path random parameters of one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SosParameters {
    /// In-phase amplitudes A_m ~ N(0, 1).
    pub amp_i: Vec<f64>,
    /// Quadrature amplitudes B_m ~ N(0, 1).
    pub amp_q: Vec<f64>,
    /// Arrival angles alpha_m ~ U[-pi, pi).
    pub angle: Vec<f64>,
    /// Path phases phi_m ~ U[-pi, pi).
    pub path_phase: Vec<f64>,
    /// Doppler-term phases psi_m ~ U[-pi, pi).
    pub doppler_phase: Vec<f64>,
}

/// One realization of the fading gain sampled at a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    /// Complex gain per sample.
    pub samples: Vec<Complex64>,
    /// Sample spacing in seconds.
    pub sample_interval: f64,
    /// Maximum Doppler shift in Hz.
    pub max_doppler: f64,
    /// Number of superposed paths.
    pub num_paths: usize,
    /// Seed the realization was drawn from.
    pub seed: u64,
}

/// Least-squares channel estimates: the true gain plus complex Gaussian
/// noise, kept together with the noiseless truth for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LsTrace {
    /// Noisy estimates, one per channel sample.
    pub estimates: Vec<Complex64>,
    /// Variance of the complex noise (both quadratures together).
    pub noise_variance: f64,
    /// SNR in dB this trace was corrupted at (+inf means noiseless).
    pub snr_db: f64,
    /// The underlying noiseless realization.
    pub truth: ChannelTrace,
}

impl LsTrace {
    /// Chronological (training, test) split at `floor(train_fraction * L)`.
    pub fn split(&self, train_fraction: f64) -> (LsSegment<'_>, LsSegment<'_>) {
        let cut = (train_fraction * self.estimates.len() as f64).floor() as usize;
        (self.segment(0, cut), self.segment(cut, self.estimates.len()))
    }

    /// A contiguous view [start, end) of estimates and matching truth.
    pub fn segment(&self, start: usize, end: usize) -> LsSegment<'_> {
        LsSegment {
            estimates: &self.estimates[start..end],
            truth: &self.truth.samples[start..end],
        }
    }
}

/// A view over a stretch of noisy estimates and the aligned true gains.
#[derive(Debug, Clone, Copy)]
pub struct LsSegment<'a> {
    /// Noisy estimates.
    pub estimates: &'a [Complex64],
    /// True gains at the same indices.
    pub truth: &'a [Complex64],
}

/// Draws the per-path parameter set for `num_paths` paths.
///
/// The draw order per path is fixed (A, B, alpha, phi, psi) so a given
/// (count, seed) pair always produces the identical set.
pub fn draw_sos_parameters(num_paths: usize, seed: u64) -> Result<SosParameters> {
    if num_paths == 0 {
        return Err(Error::Domain("path count must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, STREAM_SOS_PARAMS);
    let mut p = SosParameters {
        amp_i: Vec::with_capacity(num_paths),
        amp_q: Vec::with_capacity(num_paths),
        angle: Vec::with_capacity(num_paths),
        path_phase: Vec::with_capacity(num_paths),
        doppler_phase: Vec::with_capacity(num_paths),
    };
    for _ in 0..num_paths {
        let (a, b) = normal_pair(&mut rng);
        p.amp_i.push(a);
        p.amp_q.push(b);
        p.angle.push(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        p.path_phase.push(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        p.doppler_phase.push(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
    }
    Ok(p)
}

/// Generates one fading realization of `length` samples.
pub fn generate_trace(
    length: usize,
    sample_interval: f64,
    max_doppler: f64,
    num_paths: usize,
    seed: u64,
) -> Result<ChannelTrace> {
    if length == 0 {
        return Err(Error::Domain("trace length must be at least 1".into()));
    }
    if !(sample_interval > 0.0 && sample_interval.is_finite()) {
        return Err(Error::Domain(format!("sample interval must be positive, got {sample_interval}")));
    }
    if !(max_doppler >= 0.0 && max_doppler.is_finite()) {
        return Err(Error::Domain(format!("max Doppler must be >= 0, got {max_doppler}")));
    }
    let params = draw_sos_parameters(num_paths, seed)?;
    let samples = synthesize(&params, length, sample_interval, max_doppler);
    debug_assert!(samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    Ok(ChannelTrace { samples, sample_interval, max_doppler, num_paths, seed })
}

/// Evaluates the sum-of-sinusoids for a fixed parameter draw.
fn synthesize(
    params: &SosParameters,
    length: usize,
    sample_interval: f64,
    max_doppler: f64,
) -> Vec<Complex64> {
    let num_paths = params.amp_i.len();
    let scale = 1.0 / (num_paths as f64).sqrt();
    // Per-path phase advance per sample and phase at n = 0.
    let step: Vec<f64> = params
        .angle
        .iter()
        .map(|&a| std::f64::consts::TAU * max_doppler * sample_interval * a.cos())
        .collect();
    let base: Vec<f64> = params
        .angle
        .iter()
        .zip(&params.doppler_phase)
        .zip(&params.path_phase)
        .map(|((&a, &psi), &phi)| psi * a.cos() + phi)
        .collect();
    let mut samples = Vec::with_capacity(length);
    for n in 0..length {
        let n = n as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for m in 0..num_paths {
            let (s, c) = (base[m] + n * step[m]).sin_cos();
            re += params.amp_i[m] * c;
            im += params.amp_q[m] * s;
        }
        samples.push(Complex64::new(re * scale, im * scale));
    }
    samples
}

/// Jakes autocorrelation at an integer or fractional sample lag:
/// `J0(2 pi f_d |lag| ts)`.
///
/// Panics if the combined argument is non-finite, i.e. when a caller
/// violates the finite-lag/-Doppler/-interval preconditions.
pub fn jakes_acf(lag: f64, max_doppler: f64, sample_interval: f64) -> f64 {
    bessel_j0(std::f64::consts::TAU * max_doppler * lag.abs() * sample_interval)
        .expect("Jakes autocorrelation arguments must be finite")
}

/// Jakes Doppler spectral density
/// `1 / (pi f_d sqrt(1 - (f/f_d)^2))` for |f| < f_d.
///
/// The density diverges at the band edge, so |f| >= f_d (and a
/// non-positive maximum Doppler) are domain errors.
pub fn jakes_spectrum(freq: f64, max_doppler: f64) -> Result<f64> {
    if !(max_doppler > 0.0 && max_doppler.is_finite()) {
        return Err(Error::Domain(format!("max Doppler must be positive, got {max_doppler}")));
    }
    if !(freq.abs() < max_doppler) {
        return Err(Error::Domain(format!(
            "spectrum defined only inside the Doppler band: |{freq}| >= {max_doppler}"
        )));
    }
    let ratio = freq / max_doppler;
    Ok(1.0 / (std::f64::consts::PI * max_doppler * (1.0 - ratio * ratio).sqrt()))
}

/// Corrupts a trace into least-squares estimates at the given SNR.
///
/// The noise variance is `mean_power(trace) / 10^(snr_db/10)`, split
/// evenly between the quadratures; `snr_db = +inf` is the noiseless
/// sentinel and returns the samples unchanged.
pub fn corrupt_to_ls(trace: ChannelTrace, snr_db: f64, seed: u64) -> Result<LsTrace> {
    if snr_db.is_nan() {
        return Err(Error::Domain("SNR must not be NaN".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(LsTrace {
            estimates: trace.samples.clone(),
            noise_variance: 0.0,
            snr_db,
            truth: trace,
        });
    }
    let noise_variance = mean_power(&trace.samples)? / 10f64.powf(snr_db / 10.0);
    let sigma = (noise_variance / 2.0).sqrt();
    let mut rng = stream_rng(seed, STREAM_LS_NOISE);
    let estimates = trace
        .samples
        .iter()
        .map(|&h| {
            let (g_re, g_im) = normal_pair(&mut rng);
            h + Complex64::new(sigma * g_re, sigma * g_im)
        })
        .collect();
    Ok(LsTrace { estimates, noise_variance, snr_db, truth: trace })
}

/// Writes a noiseless trace as CSV (`n,re,im`), 16 significant digits.
pub fn export_trace_csv(trace: &ChannelTrace, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    let res: std::io::Result<()> = (|| {
        writeln!(out, "n,re,im")?;
        for (n, z) in trace.samples.iter().enumerate() {
            writeln!(out, "{n},{:.15e},{:.15e}", z.re, z.im)?;
        }
        out.flush()
    })();
    res.map_err(io_err)
}

/// Writes estimates next to the truth as CSV (`n,re,im,ls_re,ls_im`).
pub fn export_ls_csv(ls: &LsTrace, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    let res: std::io::Result<()> = (|| {
        writeln!(out, "n,re,im,ls_re,ls_im")?;
        for (n, (truth, est)) in ls.truth.samples.iter().zip(&ls.estimates).enumerate() {
            writeln!(
                out,
                "{n},{:.15e},{:.15e},{:.15e},{:.15e}",
                truth.re, truth.im, est.re, est.im
            )?;
        }
        out.flush()
    })();
    res.map_err(io_err)
}
