//! Line-oriented `key = value` configuration files.
//!
//! Four sections group the knobs: `[channel]` for the simulator,
//! `[predictor]` for what is fit and its shape, `[train]` for the
//! optimization schedule, `[sweep]` for the Monte Carlo protocol.
//! Blank lines and lines starting with `#` are skipped.  Unknown
//! sections, unknown keys, duplicate keys, and malformed values are
//! all errors; anything not set keeps its protocol default.

use std::collections::HashSet;
use std::path::Path;

use super::{PredictorKind, SweepAxis, TrialConfig};
use crate::neural::InputMode;
use crate::{Error, Result};

/// A parsed run request: the trial template plus the sweep protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// Trial template (sweeps override one knob per axis value).
    pub trial: TrialConfig,
    /// Knob to sweep, when the file requests one.
    pub sweep_axis: Option<SweepAxis>,
    /// Axis values to visit.
    pub sweep_values: Vec<f64>,
    /// Trials averaged per axis value.
    pub trials: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec { trial: TrialConfig::default(), sweep_axis: None, sweep_values: Vec::new(), trials: 100 }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Section {
    Channel,
    Predictor,
    Train,
    Sweep,
}

impl Section {
    fn parse(name: &str, line_no: usize) -> Result<Self> {
        match name {
            "channel" => Ok(Section::Channel),
            "predictor" => Ok(Section::Predictor),
            "train" => Ok(Section::Train),
            "sweep" => Ok(Section::Sweep),
            other => Err(Error::Config(format!(
                "line {line_no}: unknown section '[{other}]' (expected [channel], [predictor], [train], or [sweep])"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Section::Channel => "channel",
            Section::Predictor => "predictor",
            Section::Train => "train",
            Section::Sweep => "sweep",
        }
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str, line_no: usize) -> Result<T> {
    value.parse::<T>().map_err(|_| {
        Error::Config(format!("line {line_no}: cannot parse '{value}' for key '{key}'"))
    })
}

fn parse_bool(value: &str, key: &str, line_no: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Config(format!(
            "line {line_no}: key '{key}' expects true or false, got '{other}'"
        ))),
    }
}

/// Parses configuration text into a run request over the defaults.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let mut spec = RunSpec::default();
    let mut section: Option<Section> = None;
    let mut seen: HashSet<(Section, String)> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                Error::Config(format!("line {line_no}: malformed section header '{line}'"))
            })?;
            section = Some(Section::parse(name.trim(), line_no)?);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {line_no}: expected 'key = value', got '{line}'"))
        })?;
        let key = key.trim();
        let value = value.trim();
        let sec = section.ok_or_else(|| {
            Error::Config(format!("line {line_no}: key '{key}' appears before any section header"))
        })?;
        if !seen.insert((sec, key.to_string())) {
            return Err(Error::Config(format!(
                "line {line_no}: duplicate key '{key}' in section [{}]",
                sec.name()
            )));
        }
        let trial = &mut spec.trial;
        match (sec, key) {
            (Section::Channel, "total_samples") => {
                trial.total_samples = parse_num(value, key, line_no)?
            }
            (Section::Channel, "train_fraction") => {
                trial.train_fraction = parse_num(value, key, line_no)?
            }
            (Section::Channel, "snr_db") => trial.snr_db = parse_num(value, key, line_no)?,
            (Section::Channel, "fd_max") => trial.max_doppler = parse_num(value, key, line_no)?,
            (Section::Channel, "ts") => trial.sample_interval = parse_num(value, key, line_no)?,
            (Section::Channel, "num_sinusoids") => {
                trial.num_sinusoids = parse_num(value, key, line_no)?
            }
            (Section::Channel, "white_diagnostic") => {
                trial.white_diagnostic = parse_bool(value, key, line_no)?
            }
            (Section::Predictor, "predictors") => {
                let kinds: Result<Vec<PredictorKind>> =
                    value.split(',').map(PredictorKind::parse).collect();
                let kinds = kinds.map_err(|e| {
                    Error::Config(format!("line {line_no}: {e}"))
                })?;
                if kinds.is_empty() {
                    return Err(Error::Config(format!(
                        "line {line_no}: 'predictors' must name at least one predictor"
                    )));
                }
                trial.predictors = kinds;
            }
            (Section::Predictor, "window") => trial.window = parse_num(value, key, line_no)?,
            (Section::Predictor, "horizon") => trial.horizon = parse_num(value, key, line_no)?,
            (Section::Predictor, "hidden_layers") => {
                trial.hidden_layers = parse_num(value, key, line_no)?
            }
            (Section::Predictor, "hidden_units") => {
                trial.hidden_units = parse_num(value, key, line_no)?
            }
            (Section::Predictor, "input_mode") => {
                trial.input_mode = match value {
                    "sequence" => InputMode::Sequence,
                    "flat" => InputMode::Flat,
                    other => {
                        return Err(Error::Config(format!(
                            "line {line_no}: input_mode expects sequence or flat, got '{other}'"
                        )))
                    }
                }
            }
            (Section::Predictor, "dropout_rate") => {
                trial.dropout_rate = parse_num(value, key, line_no)?
            }
            (Section::Train, "learning_rate") => {
                trial.train.learning_rate = parse_num(value, key, line_no)?
            }
            (Section::Train, "batch_size") => {
                trial.train.batch_size = parse_num(value, key, line_no)?
            }
            (Section::Train, "max_epochs") => {
                trial.train.max_epochs = parse_num(value, key, line_no)?
            }
            (Section::Train, "patience") => trial.train.patience = parse_num(value, key, line_no)?,
            (Section::Train, "min_delta") => {
                trial.train.min_delta = parse_num(value, key, line_no)?
            }
            (Section::Train, "val_fraction") => {
                trial.train.val_fraction = parse_num(value, key, line_no)?
            }
            (Section::Train, "lr_halving_epochs") => {
                trial.train.lr_halving_epochs = parse_num(value, key, line_no)?
            }
            (Section::Train, "lr_floor") => {
                trial.train.lr_floor = parse_num(value, key, line_no)?
            }
            (Section::Train, "warmup_epochs") => {
                trial.train.warmup_epochs = parse_num(value, key, line_no)?
            }
            (Section::Sweep, "axis") => {
                spec.sweep_axis = Some(SweepAxis::parse(value).map_err(|e| {
                    Error::Config(format!("line {line_no}: {e}"))
                })?)
            }
            (Section::Sweep, "values") => {
                let values: Result<Vec<f64>> = value
                    .split(',')
                    .map(|v| parse_num(v.trim(), key, line_no))
                    .collect();
                spec.sweep_values = values?;
            }
            (Section::Sweep, "trials") => spec.trials = parse_num(value, key, line_no)?,
            (Section::Sweep, "seed") => trial.seed = parse_num(value, key, line_no)?,
            (sec, key) => {
                return Err(Error::Config(format!(
                    "line {line_no}: unknown key '{key}' in section [{}]",
                    sec.name()
                )))
            }
        }
    }
    Ok(spec)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_yields_the_protocol_defaults() {
        let spec = parse_config("").unwrap();
        assert_eq!(spec, RunSpec::default());
        assert_eq!(spec.trial.total_samples, 1000);
        assert_eq!(spec.trial.train_fraction, 0.75);
        assert_eq!(spec.trial.window, 5);
        assert_eq!(spec.trial.horizon, 1);
        assert_eq!(spec.trial.num_sinusoids, 200);
        assert_eq!(spec.trial.hidden_units, 16);
        assert_eq!(spec.trial.train.batch_size, 16);
        assert_eq!(spec.trials, 100);
    }

    #[test]
    fn full_file_sets_every_knob() {
        let text = "\
# protocol overrides
[channel]
total_samples = 500
train_fraction = 0.8
snr_db = inf
fd_max = 50
ts = 0.002
num_sinusoids = 64
white_diagnostic = true

[predictor]
predictors = wiener, lstm
window = 4
horizon = 2
hidden_layers = 2
hidden_units = 8
input_mode = flat
dropout_rate = 0.1

[train]
learning_rate = 0.005
batch_size = 32
max_epochs = 50
patience = 3
min_delta = 0.0001
val_fraction = 0.2
lr_halving_epochs = 15
lr_floor = 0.0005
warmup_epochs = 30

[sweep]
axis = snr_db
values = 0, 5, 10
trials = 7
seed = 99
";
        let spec = parse_config(text).unwrap();
        let t = &spec.trial;
        assert_eq!(t.total_samples, 500);
        assert_eq!(t.train_fraction, 0.8);
        assert!(t.snr_db.is_infinite() && t.snr_db > 0.0);
        assert_eq!(t.max_doppler, 50.0);
        assert_eq!(t.sample_interval, 0.002);
        assert_eq!(t.num_sinusoids, 64);
        assert!(t.white_diagnostic);
        assert_eq!(t.predictors, vec![PredictorKind::Wiener, PredictorKind::Lstm]);
        assert_eq!((t.window, t.horizon), (4, 2));
        assert_eq!((t.hidden_layers, t.hidden_units), (2, 8));
        assert_eq!(t.input_mode, InputMode::Flat);
        assert_eq!(t.dropout_rate, 0.1);
        assert_eq!(t.train.learning_rate, 0.005);
        assert_eq!(t.train.batch_size, 32);
        assert_eq!(t.train.max_epochs, 50);
        assert_eq!(t.train.patience, 3);
        assert_eq!(t.train.min_delta, 0.0001);
        assert_eq!(t.train.val_fraction, 0.2);
        assert_eq!(t.train.lr_halving_epochs, 15);
        assert_eq!(t.train.lr_floor, 0.0005);
        assert_eq!(t.train.warmup_epochs, 30);
        assert_eq!(t.seed, 99);
        assert_eq!(spec.sweep_axis, Some(SweepAxis::SnrDb));
        assert_eq!(spec.sweep_values, vec![0.0, 5.0, 10.0]);
        assert_eq!(spec.trials, 7);
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        let err = parse_config("[channel]\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("bogus"), "{err}");
        assert!(parse_config("[nonsense]\n").is_err());
        // A known key in the wrong section is still unknown there.
        assert!(parse_config("[train]\nwindow = 4\n").is_err());
    }

    #[test]
    fn structural_mistakes_are_reported_with_line_numbers() {
        assert!(parse_config("window = 4\n").is_err());
        assert!(parse_config("[channel\n").is_err());
        assert!(parse_config("[channel]\ntotal_samples\n").is_err());
        let err = parse_config("[channel]\nsnr_db = ten\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = "[channel]\nsnr_db = 10\nsnr_db = 5\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        // The same key in two sections is fine only if both define it.
        assert!(parse_config("[channel]\nsnr_db = 10\n[predictor]\nwindow = 3\n").is_ok());
    }

    #[test]
    fn predictor_list_rejects_unknown_names() {
        assert!(parse_config("[predictor]\npredictors = wiener, kalman\n").is_err());
    }
}
