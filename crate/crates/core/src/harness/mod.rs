//! Monte Carlo benchmarking of the predictors.
//!
//! One trial generates a fading realization, corrupts it to noisy
//! estimates at a chosen SNR, splits the estimates chronologically into
//! a training and a test stretch, fits every requested predictor on the
//! training stretch, and measures each one's mean squared prediction
//! error against the true gain over the test stretch.  Sweeps repeat
//! trials over a grid of one protocol knob with per-trial seeds derived
//! from (base seed, axis index, trial index), so results never depend
//! on scheduling, and write the averaged errors as CSV.

pub mod config;

use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{corrupt_to_ls, generate_trace, ChannelTrace, LsSegment};
use crate::neural::{
    self, init_model, make_blocks, predict_nn, Architecture, CellKind, InputMode, TrainConfig,
};
use crate::rng::{combine, stream_rng, trial_seed, normal_pair};
use crate::wiener::{design, empirical_mse, sample_acf};
use crate::{Error, Result};

/// Substream tags peeling per-trial seeds into independent streams.
const STREAM_CHANNEL: u64 = 0x01;
const STREAM_NOISE: u64 = 0x02;
const STREAM_WHITE: u64 = 0x03;
const STREAM_INIT_RNN: u64 = 0x11;
const STREAM_INIT_LSTM: u64 = 0x12;
const STREAM_TRAIN_RNN: u64 = 0x21;
const STREAM_TRAIN_LSTM: u64 = 0x22;

/// Predictors a trial can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    /// Linear predictor designed from the sample autocorrelation.
    Wiener,
    /// Vanilla recurrent network.
    Rnn,
    /// LSTM network.
    Lstm,
}

impl PredictorKind {
    /// Name used in CSV rows and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Wiener => "wiener",
            PredictorKind::Rnn => "rnn",
            PredictorKind::Lstm => "lstm",
        }
    }

    /// Parses a CLI/config name.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "wiener" => Ok(PredictorKind::Wiener),
            "rnn" => Ok(PredictorKind::Rnn),
            "lstm" => Ok(PredictorKind::Lstm),
            other => Err(Error::Config(format!(
                "unknown predictor '{other}' (expected wiener, rnn, or lstm)"
            ))),
        }
    }

    fn cell(self) -> Option<CellKind> {
        match self {
            PredictorKind::Wiener => None,
            PredictorKind::Rnn => Some(CellKind::Rnn),
            PredictorKind::Lstm => Some(CellKind::Lstm),
        }
    }
}

/// Everything one Monte Carlo trial needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    /// Channel length L in samples.
    pub total_samples: usize,
    /// Leading fraction of the estimates used for fitting.
    pub train_fraction: f64,
    /// Observation window length N.
    pub window: usize,
    /// Prediction horizon in samples.
    pub horizon: usize,
    /// Estimation SNR in dB (+inf for noiseless).
    pub snr_db: f64,
    /// Maximum Doppler shift in Hz.
    pub max_doppler: f64,
    /// Sample spacing in seconds.
    pub sample_interval: f64,
    /// Superposed paths in the channel simulator.
    pub num_sinusoids: usize,
    /// Predictors to fit and score.
    pub predictors: Vec<PredictorKind>,
    /// Recurrent layers in each neural predictor.
    pub hidden_layers: usize,
    /// Hidden units per layer.
    pub hidden_units: usize,
    /// Window encoding for the neural predictors.
    pub input_mode: InputMode,
    /// Dropout rate on the final hidden state during training.
    pub dropout_rate: f64,
    /// Optimization schedule (its seed field is overwritten per trial).
    pub train: TrainConfig,
    /// Base seed for every stream of this trial.
    pub seed: u64,
    /// Replace the fading process by white noise (an unpredictable
    /// input whose best possible MSE equals the signal power).
    pub white_diagnostic: bool,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            total_samples: 1000,
            train_fraction: 0.75,
            window: 5,
            horizon: 1,
            snr_db: 10.0,
            max_doppler: 100.0,
            sample_interval: 1e-3,
            num_sinusoids: 200,
            predictors: vec![PredictorKind::Wiener, PredictorKind::Rnn, PredictorKind::Lstm],
            hidden_layers: 1,
            hidden_units: 16,
            input_mode: InputMode::Sequence,
            dropout_rate: 0.2,
            train: TrainConfig::default(),
            seed: 0,
            white_diagnostic: false,
        }
    }
}

impl TrialConfig {
    /// Checks the protocol invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if self.window == 0 || self.horizon == 0 {
            return Err(Error::Config("window and horizon must be at least 1".into()));
        }
        let needed = self.window + self.horizon;
        let cut = (self.train_fraction * self.total_samples as f64).floor() as usize;
        let test_len = self.total_samples - cut;
        if test_len < needed {
            return Err(Error::Config(format!(
                "test stretch of {test_len} samples cannot host a window of {} plus horizon {}",
                self.window, self.horizon
            )));
        }
        // Fitting needs windows and the autocorrelation up to lag N-1+l.
        if cut < needed + 1 {
            return Err(Error::Config(format!(
                "training stretch of {cut} samples is too short for window {} and horizon {}",
                self.window, self.horizon
            )));
        }
        if self.predictors.is_empty() {
            return Err(Error::Config("at least one predictor is required".into()));
        }
        if self.num_sinusoids == 0 {
            return Err(Error::Config("at least one path is required".into()));
        }
        if !(self.sample_interval > 0.0) {
            return Err(Error::Config(format!(
                "sample interval must be positive, got {}",
                self.sample_interval
            )));
        }
        if self.max_doppler < 0.0 {
            return Err(Error::Config(format!(
                "maximum Doppler shift must be non-negative, got {}",
                self.max_doppler
            )));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("SNR must not be NaN".into()));
        }
        Ok(())
    }

    /// Network shape for one cell type at this trial's window length.
    fn architecture(&self, cell: CellKind) -> Architecture {
        Architecture {
            cell,
            hidden_layers: self.hidden_layers,
            hidden_units: self.hidden_units,
            input_mode: self.input_mode,
            window: self.window,
            dropout_rate: self.dropout_rate,
        }
    }
}

/// One predictor's score in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorOutcome {
    /// Predictor label as it appears in CSV rows.
    pub label: String,
    /// Mean squared prediction error against the true gain.
    pub mse: f64,
    /// Number of test predictions averaged.
    pub predictions: usize,
    /// Training epochs consumed (zero for the linear predictor).
    pub epochs: usize,
}

/// All predictor scores of one trial.  Equality of two trials means
/// equal outcomes; the wall time is informational.
#[derive(Debug, Clone)]
pub struct TrialResult {
    /// One entry per requested predictor, in request order.
    pub outcomes: Vec<PredictorOutcome>,
    /// How long the trial took.
    pub wall: Duration,
}

/// White complex Gaussian "channel" for the diagnostic mode.
fn white_trace(cfg: &TrialConfig, seed: u64) -> ChannelTrace {
    let mut rng = stream_rng(seed, STREAM_WHITE);
    let samples = (0..cfg.total_samples)
        .map(|_| {
            let (a, b) = normal_pair(&mut rng);
            Complex64::new(a * 0.5f64.sqrt(), b * 0.5f64.sqrt())
        })
        .collect();
    ChannelTrace {
        samples,
        sample_interval: cfg.sample_interval,
        max_doppler: cfg.max_doppler,
        num_paths: cfg.num_sinusoids,
        seed,
    }
}

/// Mean squared test error of a trained network, sliding the window
/// across the noisy estimates exactly like the linear predictor.
fn nn_empirical_mse(
    model: &neural::RecurrentModel,
    seg: &LsSegment<'_>,
    horizon: usize,
) -> Result<f64> {
    let n = model.arch.window;
    let mut acc = 0.0;
    let mut count = 0usize;
    for target in (n - 1 + horizon)..seg.estimates.len() {
        let newest = target - horizon;
        let window: Vec<Complex64> = (0..n).map(|k| seg.estimates[newest - k]).collect();
        let err = seg.truth[target] - predict_nn(model, &window)?;
        acc += err.norm_sqr();
        count += 1;
    }
    Ok(acc / count as f64)
}

/// Runs one seeded trial: simulate, corrupt, split, fit every requested
/// predictor on the training stretch, and score it on the test stretch.
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialResult> {
    let start = Instant::now();
    cfg.validate()?;
    let trace = if cfg.white_diagnostic {
        white_trace(cfg, combine(cfg.seed, STREAM_CHANNEL))
    } else {
        generate_trace(
            cfg.total_samples,
            cfg.sample_interval,
            cfg.max_doppler,
            cfg.num_sinusoids,
            combine(cfg.seed, STREAM_CHANNEL),
        )?
    };
    let ls = corrupt_to_ls(trace, cfg.snr_db, combine(cfg.seed, STREAM_NOISE))?;
    let (train_seg, test_seg) = ls.split(cfg.train_fraction);
    let prediction_count = test_seg.estimates.len() - (cfg.window - 1 + cfg.horizon);

    let mut outcomes = Vec::with_capacity(cfg.predictors.len());
    for kind in &cfg.predictors {
        let outcome = match kind.cell() {
            None => {
                let max_lag = cfg.window - 1 + cfg.horizon;
                let acf = sample_acf(train_seg.estimates, max_lag)?;
                let predictor = design(&acf, cfg.window, cfg.horizon)?;
                let mse = empirical_mse(&predictor, test_seg.estimates, test_seg.truth)?;
                PredictorOutcome {
                    label: kind.name().to_string(),
                    mse,
                    predictions: prediction_count,
                    epochs: 0,
                }
            }
            Some(cell) => {
                let (init_stream, train_stream) = match cell {
                    CellKind::Rnn => (STREAM_INIT_RNN, STREAM_TRAIN_RNN),
                    CellKind::Lstm => (STREAM_INIT_LSTM, STREAM_TRAIN_LSTM),
                };
                let data = make_blocks(train_seg.estimates, cfg.window, cfg.horizon)?;
                let mut model =
                    init_model(cfg.architecture(cell), combine(cfg.seed, init_stream))?;
                let mut schedule = cfg.train.clone();
                schedule.seed = combine(cfg.seed, train_stream);
                let report = neural::train(&mut model, &data, &schedule)?;
                let mse = nn_empirical_mse(&model, &test_seg, cfg.horizon)?;
                PredictorOutcome {
                    label: kind.name().to_string(),
                    mse,
                    predictions: prediction_count,
                    epochs: report.epochs_run,
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(TrialResult { outcomes, wall: start.elapsed() })
}

/// Protocol knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Observation window length N.
    Window,
    /// Prediction horizon in samples.
    Horizon,
    /// Estimation SNR in dB.
    SnrDb,
    /// Maximum Doppler shift in Hz.
    FdMax,
}

impl SweepAxis {
    /// Name used in the CSV `axis` column and config files.
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Window => "window",
            SweepAxis::Horizon => "horizon",
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::FdMax => "fd_max",
        }
    }

    /// Parses a CLI/config name.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "window" => Ok(SweepAxis::Window),
            "horizon" => Ok(SweepAxis::Horizon),
            "snr_db" => Ok(SweepAxis::SnrDb),
            "fd_max" => Ok(SweepAxis::FdMax),
            other => Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected window, horizon, snr_db, or fd_max)"
            ))),
        }
    }
}

fn integer_axis_value(value: f64, what: &str) -> Result<usize> {
    if value.fract() == 0.0 && (1.0..=1e9).contains(&value) {
        Ok(value as usize)
    } else {
        Err(Error::Config(format!("{what} axis value must be a positive integer, got {value}")))
    }
}

fn apply_axis(base: &TrialConfig, axis: SweepAxis, value: f64) -> Result<TrialConfig> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::Window => cfg.window = integer_axis_value(value, "window")?,
        SweepAxis::Horizon => cfg.horizon = integer_axis_value(value, "horizon")?,
        SweepAxis::SnrDb => cfg.snr_db = value,
        SweepAxis::FdMax => {
            if !(value >= 0.0) {
                return Err(Error::Config(format!(
                    "fd_max axis value must be non-negative, got {value}"
                )));
            }
            cfg.max_doppler = value;
        }
    }
    Ok(cfg)
}

/// One averaged cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Value of the swept knob.
    pub axis_value: f64,
    /// Predictor label.
    pub predictor: String,
    /// Trials averaged into this cell.
    pub trials: usize,
    /// Mean squared prediction error, linear scale.
    pub mse: f64,
    /// The same mean in dB.
    pub mse_db: f64,
}

/// A completed sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Which knob was swept.
    pub axis: SweepAxis,
    /// One row per (axis value, predictor), in generation order.
    pub rows: Vec<SweepRow>,
}

/// Converts a mean squared error to dB; an exact zero maps to the
/// sentinel floor of -300 dB.
pub fn mse_to_db(mse: f64) -> Result<f64> {
    if mse < 0.0 || mse.is_nan() {
        return Err(Error::Domain(format!("mean squared error must be non-negative, got {mse}")));
    }
    if mse == 0.0 {
        return Ok(-300.0);
    }
    Ok(10.0 * mse.log10())
}

/// Runs `trials` seeded trials per axis value and averages each
/// predictor's MSE arithmetically before converting to dB.  Trial seeds
/// depend only on (base seed, axis index, trial index), so results are
/// identical no matter how the trials are scheduled.
pub fn run_sweep(
    base: &TrialConfig,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Domain("sweep needs at least one axis value".into()));
    }
    if trials == 0 {
        return Err(Error::Domain("sweep needs at least one trial per axis value".into()));
    }
    // Validate every cell before spending any compute.
    let mut cell_cfgs = Vec::with_capacity(values.len());
    for &v in values {
        let cfg = apply_axis(base, axis, v)?;
        cfg.validate()?;
        cell_cfgs.push(cfg);
    }
    let jobs: Vec<(usize, usize)> =
        (0..values.len()).flat_map(|ai| (0..trials).map(move |ti| (ai, ti))).collect();
    let results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(ai, ti)| {
            let mut cfg = cell_cfgs[ai].clone();
            cfg.seed = trial_seed(base.seed, ai as u64, ti as u64);
            run_trial(&cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(values.len() * base.predictors.len());
    for (ai, &value) in values.iter().enumerate() {
        for (pi, kind) in base.predictors.iter().enumerate() {
            let mut sum = 0.0;
            for ti in 0..trials {
                let outcome = &results[ai * trials + ti].outcomes[pi];
                debug_assert_eq!(outcome.label, kind.name());
                sum += outcome.mse;
            }
            let mse = sum / trials as f64;
            rows.push(SweepRow {
                axis_value: value,
                predictor: kind.name().to_string(),
                trials,
                mse,
                mse_db: mse_to_db(mse)?,
            });
        }
    }
    Ok(SweepResult { axis, rows })
}

/// Compares network shapes (layers x units) across Doppler shifts with
/// paired trials: grid cell k at (axis value, trial) reuses the exact
/// channel and noise realization every other grid cell sees there.
pub fn architecture_sweep(
    base: &TrialConfig,
    grid: &[(usize, usize)],
    doppler_values: &[f64],
    trials: usize,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Domain("architecture grid must not be empty".into()));
    }
    let mut rows = Vec::new();
    for &(layers, units) in grid {
        if layers == 0 || units == 0 {
            return Err(Error::Config(format!(
                "architecture {layers}x{units} is invalid; layers and units must be at least 1"
            )));
        }
        let mut cell_base = base.clone();
        cell_base.hidden_layers = layers;
        cell_base.hidden_units = units;
        cell_base.predictors = vec![PredictorKind::Rnn];
        let sweep = run_sweep(&cell_base, SweepAxis::FdMax, doppler_values, trials)?;
        let label = format!("rnn_{layers}x{units}");
        rows.extend(sweep.rows.into_iter().map(|mut row| {
            row.predictor = label.clone();
            row
        }));
    }
    Ok(SweepResult { axis: SweepAxis::FdMax, rows })
}

/// Writes a sweep as CSV with rows sorted by (axis value, predictor).
/// The same SweepResult always produces byte-identical output.
pub fn write_results(sweep: &SweepResult, path: &Path) -> Result<()> {
    let mut rows: Vec<&SweepRow> = sweep.rows.iter().collect();
    rows.sort_by(|a, b| {
        a.axis_value
            .partial_cmp(&b.axis_value)
            .expect("axis values are finite")
            .then_with(|| a.predictor.cmp(&b.predictor))
    });
    let mut text = String::from("axis,axis_value,predictor,trials,mse,mse_db\n");
    for row in rows {
        text.push_str(&format!(
            "{},{:.15e},{},{},{:.15e},{:.15e}\n",
            sweep.axis.name(),
            row.axis_value,
            row.predictor,
            row.trials,
            row.mse,
            row.mse_db
        ));
    }
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
