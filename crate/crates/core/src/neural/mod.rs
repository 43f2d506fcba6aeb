//! Shallow recurrent networks, trained from scratch, that predict the
//! fading gain from a window of noisy estimates.
//!
//! Two cell types are implemented directly (no framework): a vanilla
//! tanh RNN and an LSTM with the standard sigmoid input/forget/output
//! gates, tanh candidate, and tanh cell output.  A window of N complex
//! estimates enters either as N time steps of (re, im) — `sequence`
//! mode — or as one step of 2N features — `flat` mode.  The final
//! hidden state passes through inverted dropout (training only) and a
//! linear read-out to the predicted (re, im) pair.  Training minimizes
//! squared prediction error with exact backpropagation through time and
//! Adam, with early stopping on a tail validation split.

mod adam;
mod backprop;
mod mat;
mod train;

pub use adam::{adam_step, AdamState};
pub use backprop::{forward, gradients, loss, predict_nn, Gradients};
pub use mat::Mat;
pub use train::{dataset_loss, train, TrainConfig, TrainReport};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Recurrent cell family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Vanilla recurrent cell: s_t = tanh(W x_t + U s_{t-1} + b).
    Rnn,
    /// Long short-term memory cell with forget/input/output gates.
    Lstm,
}

impl CellKind {
    /// Weight rows per hidden unit (the LSTM stacks its four gates).
    fn row_factor(self) -> usize {
        match self {
            CellKind::Rnn => 1,
            CellKind::Lstm => 4,
        }
    }

    /// Name used in files and CSV columns.
    pub fn name(self) -> &'static str {
        match self {
            CellKind::Rnn => "rnn",
            CellKind::Lstm => "lstm",
        }
    }
}

/// How the window of N complex estimates is fed to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    /// N time steps of 2 features (re, im), oldest step first.
    Sequence,
    /// One time step of 2N interleaved features.
    Flat,
}

impl InputMode {
    /// Name used in files and configs.
    pub fn name(self) -> &'static str {
        match self {
            InputMode::Sequence => "sequence",
            InputMode::Flat => "flat",
        }
    }
}

/// Network shape and input convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Architecture {
    /// Cell family.
    pub cell: CellKind,
    /// Number of stacked recurrent layers.
    pub hidden_layers: usize,
    /// Hidden units per layer.
    pub hidden_units: usize,
    /// Window encoding.
    pub input_mode: InputMode,
    /// Window length N (complex samples per input).
    pub window: usize,
    /// Inverted-dropout rate on the final hidden state, in [0, 1).
    pub dropout_rate: f64,
}

impl Architecture {
    /// Checks the shape parameters.
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 {
            return Err(Error::Domain("at least one hidden layer is required".into()));
        }
        if self.hidden_units == 0 {
            return Err(Error::Domain("at least one hidden unit is required".into()));
        }
        if self.window == 0 {
            return Err(Error::Domain("window must be at least 1".into()));
        }
        if !(self.dropout_rate >= 0.0 && self.dropout_rate < 1.0) {
            return Err(Error::Domain(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// Time steps per sample under this encoding.
    pub(crate) fn steps(&self) -> usize {
        match self.input_mode {
            InputMode::Sequence => self.window,
            InputMode::Flat => 1,
        }
    }

    /// Features per time step.
    pub(crate) fn features(&self) -> usize {
        match self.input_mode {
            InputMode::Sequence => 2,
            InputMode::Flat => 2 * self.window,
        }
    }

    /// Input width of layer `l` (features for the first layer, hidden
    /// width above it).
    pub(crate) fn layer_input(&self, l: usize) -> usize {
        if l == 0 {
            self.features()
        } else {
            self.hidden_units
        }
    }
}

/// Weights of one recurrent layer (gate blocks stacked row-wise for the
/// LSTM in the order input, forget, candidate, output).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    /// Input map (rows x layer input width).
    pub w_in: Mat,
    /// Recurrent map (rows x hidden units).
    pub w_rec: Mat,
    /// Bias (rows).
    pub bias: Vec<f64>,
}

/// A complete network: stacked recurrent layers plus a linear read-out
/// from the final hidden state to (re, im).
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentModel {
    /// Shape and conventions.
    pub arch: Architecture,
    /// One entry per recurrent layer.
    pub layers: Vec<LayerWeights>,
    /// Read-out map (2 x hidden units).
    pub w_out: Mat,
    /// Read-out bias (2).
    pub b_out: Vec<f64>,
}

impl RecurrentModel {
    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        let mut n = 0;
        for lw in &self.layers {
            n += lw.w_in.data.len() + lw.w_rec.data.len() + lw.bias.len();
        }
        n + self.w_out.data.len() + self.b_out.len()
    }

    /// Copies all parameters into one flat vector (canonical order:
    /// per layer w_in, w_rec, bias; then read-out weights and bias).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for lw in &self.layers {
            v.extend_from_slice(&lw.w_in.data);
            v.extend_from_slice(&lw.w_rec.data);
            v.extend_from_slice(&lw.bias);
        }
        v.extend_from_slice(&self.w_out.data);
        v.extend_from_slice(&self.b_out);
        v
    }

    /// Overwrites all parameters from a flat vector in canonical order.
    pub fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "parameter count mismatch");
        let mut at = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[at..at + dst.len()]);
            at += dst.len();
        };
        for lw in &mut self.layers {
            take(&mut lw.w_in.data);
            take(&mut lw.w_rec.data);
            take(&mut lw.bias);
        }
        take(&mut self.w_out.data);
        take(&mut self.b_out);
    }

    /// Visits every parameter mutably in canonical order.
    pub(crate) fn visit_params_mut(&mut self, f: &mut impl FnMut(usize, &mut f64)) {
        let mut idx = 0;
        let mut run = |slice: &mut [f64], f: &mut dyn FnMut(usize, &mut f64)| {
            for p in slice {
                f(idx, p);
                idx += 1;
            }
        };
        for lw in &mut self.layers {
            run(&mut lw.w_in.data, f);
            run(&mut lw.w_rec.data, f);
            run(&mut lw.bias, f);
        }
        run(&mut self.w_out.data, f);
        run(&mut self.b_out, f);
    }
}

/// Supervised window/target pairs built from an estimate segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Interleaved (re, im) windows, oldest sample first, length 2N each.
    pub inputs: Vec<Vec<f64>>,
    /// Target gain `horizon` samples after each window, as (re, im).
    pub targets: Vec<(f64, f64)>,
    /// Window length N the inputs encode.
    pub window: usize,
    /// Prediction horizon in samples.
    pub horizon: usize,
}

impl Dataset {
    /// Number of (input, target) pairs.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    /// True when the dataset holds no pairs.
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Slides a window of `window` consecutive estimates over the segment;
/// each window becomes one interleaved input [re0, im0, re1, im1, ...]
/// (chronological) whose target is the estimate `horizon` samples past
/// the window end.
pub fn make_blocks(estimates: &[Complex64], window: usize, horizon: usize) -> Result<Dataset> {
    if window == 0 || horizon == 0 {
        return Err(Error::Domain("window and horizon must be at least 1".into()));
    }
    let needed = window + horizon;
    if estimates.len() < needed {
        return Err(Error::Domain(format!(
            "segment of {} estimates too short for window {window} + horizon {horizon}",
            estimates.len()
        )));
    }
    let count = estimates.len() - needed + 1;
    let mut inputs = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    for start in 0..count {
        let mut input = Vec::with_capacity(2 * window);
        for z in &estimates[start..start + window] {
            input.push(z.re);
            input.push(z.im);
        }
        inputs.push(input);
        let t = estimates[start + window - 1 + horizon];
        targets.push((t.re, t.im));
    }
    Ok(Dataset { inputs, targets, window, horizon })
}

/// Initializes a model: every weight uniform in (-1/sqrt(fan_in),
/// +1/sqrt(fan_in)) drawn from a ChaCha8 stream seeded by `seed`, biases
/// zero except the LSTM forget-gate block, which starts at 1.  The draw
/// order (per layer: input map row-major, recurrent map row-major; then
/// the read-out map) is fixed, so a (architecture, seed) pair always
/// yields the identical model.
pub fn init_model(arch: Architecture, seed: u64) -> Result<RecurrentModel> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_h = arch.hidden_units;
    let rows = n_h * arch.cell.row_factor();
    let fill = |rng: &mut ChaCha8Rng, m: &mut Mat, fan_in: usize| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for w in &mut m.data {
            *w = rng.gen_range(-bound..bound);
        }
    };
    let mut layers = Vec::with_capacity(arch.hidden_layers);
    for l in 0..arch.hidden_layers {
        let d_in = arch.layer_input(l);
        let mut w_in = Mat::zeros(rows, d_in);
        let mut w_rec = Mat::zeros(rows, n_h);
        fill(&mut rng, &mut w_in, d_in);
        fill(&mut rng, &mut w_rec, n_h);
        let mut bias = vec![0.0; rows];
        if arch.cell == CellKind::Lstm {
            // Forget gate opens wide at the start of training.
            bias[n_h..2 * n_h].fill(1.0);
        }
        layers.push(LayerWeights { w_in, w_rec, bias });
    }
    let mut w_out = Mat::zeros(2, n_h);
    fill(&mut rng, &mut w_out, n_h);
    Ok(RecurrentModel { arch, layers, w_out, b_out: vec![0.0; 2] })
}

/// Writes a model as flat `key = value` text: the architecture fields
/// followed by one line per weight row, 17 significant digits per value
/// so a reload reproduces every bit.
pub fn save_model(model: &RecurrentModel, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    let res: std::io::Result<()> = (|| {
        writeln!(out, "cell = {}", model.arch.cell.name())?;
        writeln!(out, "hidden_layers = {}", model.arch.hidden_layers)?;
        writeln!(out, "hidden_units = {}", model.arch.hidden_units)?;
        writeln!(out, "input_mode = {}", model.arch.input_mode.name())?;
        writeln!(out, "window = {}", model.arch.window)?;
        writeln!(out, "dropout_rate = {:.16e}", model.arch.dropout_rate)?;
        let row_line = |row: &[f64]| {
            row.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
        };
        for (l, lw) in model.layers.iter().enumerate() {
            for r in 0..lw.w_in.rows {
                writeln!(out, "layer{l}.w_in.row{r} = {}", row_line(lw.w_in.row(r)))?;
            }
            for r in 0..lw.w_rec.rows {
                writeln!(out, "layer{l}.w_rec.row{r} = {}", row_line(lw.w_rec.row(r)))?;
            }
            writeln!(out, "layer{l}.bias = {}", row_line(&lw.bias))?;
        }
        for r in 0..model.w_out.rows {
            writeln!(out, "output.w.row{r} = {}", row_line(model.w_out.row(r)))?;
        }
        writeln!(out, "output.bias = {}", row_line(&model.b_out))?;
        out.flush()
    })();
    res.map_err(io_err)
}

/// Reads a model saved by [`save_model`].  Unknown or missing keys are
/// errors.
pub fn load_model(path: &std::path::Path) -> Result<RecurrentModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let bad = |msg: String| Error::Domain(format!("model file {}: {msg}", path.display()));
    let mut map = std::collections::HashMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected 'key = value'", ln + 1)))?;
        if map.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
            return Err(bad(format!("duplicate key '{}'", key.trim())));
        }
    }
    let mut take = |key: &str| {
        map.remove(key).ok_or_else(|| bad(format!("missing key '{key}'")))
    };
    let cell = match take("cell")?.as_str() {
        "rnn" => CellKind::Rnn,
        "lstm" => CellKind::Lstm,
        other => return Err(bad(format!("unknown cell '{other}'"))),
    };
    let parse_usize = |s: String, key: &str| {
        s.parse::<usize>().map_err(|_| bad(format!("bad integer for '{key}': {s}")))
    };
    let hidden_layers = parse_usize(take("hidden_layers")?, "hidden_layers")?;
    let hidden_units = parse_usize(take("hidden_units")?, "hidden_units")?;
    let input_mode = match take("input_mode")?.as_str() {
        "sequence" => InputMode::Sequence,
        "flat" => InputMode::Flat,
        other => return Err(bad(format!("unknown input mode '{other}'"))),
    };
    let window = parse_usize(take("window")?, "window")?;
    let dropout_rate = take("dropout_rate")?
        .parse::<f64>()
        .map_err(|_| bad("bad dropout_rate".into()))?;
    let arch = Architecture { cell, hidden_layers, hidden_units, input_mode, window, dropout_rate };
    arch.validate()?;

    let parse_row = |s: &str, expect: usize, key: &str| -> Result<Vec<f64>> {
        let vals: std::result::Result<Vec<f64>, _> =
            s.split_whitespace().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|_| bad(format!("bad number in '{key}'")))?;
        if vals.len() != expect {
            return Err(bad(format!("'{key}' expects {expect} values, got {}", vals.len())));
        }
        Ok(vals)
    };
    let rows = hidden_units * cell.row_factor();
    let mut layers = Vec::with_capacity(hidden_layers);
    for l in 0..hidden_layers {
        let d_in = arch.layer_input(l);
        let mut w_in = Mat::zeros(rows, d_in);
        let mut w_rec = Mat::zeros(rows, hidden_units);
        for r in 0..rows {
            let key = format!("layer{l}.w_in.row{r}");
            let vals = parse_row(&take(&key)?, d_in, &key)?;
            w_in.data[r * d_in..(r + 1) * d_in].copy_from_slice(&vals);
        }
        for r in 0..rows {
            let key = format!("layer{l}.w_rec.row{r}");
            let vals = parse_row(&take(&key)?, hidden_units, &key)?;
            w_rec.data[r * hidden_units..(r + 1) * hidden_units].copy_from_slice(&vals);
        }
        let key = format!("layer{l}.bias");
        let bias = parse_row(&take(&key)?, rows, &key)?;
        layers.push(LayerWeights { w_in, w_rec, bias });
    }
    let mut w_out = Mat::zeros(2, hidden_units);
    for r in 0..2 {
        let key = format!("output.w.row{r}");
        let vals = parse_row(&take(&key)?, hidden_units, &key)?;
        w_out.data[r * hidden_units..(r + 1) * hidden_units].copy_from_slice(&vals);
    }
    let b_out = parse_row(&take("output.bias")?, 2, "output.bias")?;
    if !map.is_empty() {
        let mut keys: Vec<_> = map.keys().cloned().collect();
        keys.sort();
        return Err(bad(format!("unknown keys: {}", keys.join(", "))));
    }
    Ok(RecurrentModel { arch, layers, w_out, b_out })
}
