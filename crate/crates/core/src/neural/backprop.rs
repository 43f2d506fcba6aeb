//! Forward evaluation and exact backpropagation through time.
//!
//! One sample is a window of N complex estimates laid out as an
//! interleaved chronological vector [re0, im0, re1, im1, ...].  The
//! forward pass unrolls the stacked cells over the encoded time steps,
//! applies inverted dropout to the final hidden state (training only),
//! and reads out a (re, im) prediction.  The backward pass replays the
//! unrolled graph in reverse — steps descending, layers top to bottom —
//! accumulating the gradient of the mean squared prediction error.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CellKind, Dataset, LayerWeights, Mat, RecurrentModel};
use crate::rng::combine;
use crate::{Error, Result};

/// Parameter gradients, shaped exactly like the model they belong to
/// and flattened in the same canonical order.
#[derive(Debug, Clone)]
pub struct Gradients {
    /// Per-layer gradients for the input map, recurrent map, and bias.
    pub layers: Vec<LayerWeights>,
    /// Read-out weight gradient.
    pub w_out: Mat,
    /// Read-out bias gradient.
    pub b_out: Vec<f64>,
}

impl Gradients {
    /// Zero gradients matching `model`'s shapes.
    pub fn zeros_like(model: &RecurrentModel) -> Self {
        let layers = model
            .layers
            .iter()
            .map(|lw| LayerWeights {
                w_in: Mat::zeros(lw.w_in.rows, lw.w_in.cols),
                w_rec: Mat::zeros(lw.w_rec.rows, lw.w_rec.cols),
                bias: vec![0.0; lw.bias.len()],
            })
            .collect();
        Gradients {
            layers,
            w_out: Mat::zeros(model.w_out.rows, model.w_out.cols),
            b_out: vec![0.0; model.b_out.len()],
        }
    }

    /// Flattens in the model's canonical parameter order.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for lw in &self.layers {
            v.extend_from_slice(&lw.w_in.data);
            v.extend_from_slice(&lw.w_rec.data);
            v.extend_from_slice(&lw.bias);
        }
        v.extend_from_slice(&self.w_out.data);
        v.extend_from_slice(&self.b_out);
        v
    }
}

/// Reusable activation and scratch buffers for one sample's unrolled
/// forward/backward pass.  Allocated once and shared across a batch.
pub(crate) struct Workspace {
    steps: usize,
    n_h: usize,
    /// Hidden states, per layer, `steps * n_h` each.
    h: Vec<Vec<f64>>,
    /// Post-activation gate values (LSTM only), `steps * 4 * n_h`.
    gates: Vec<Vec<f64>>,
    /// Cell states (LSTM only), `steps * n_h`.
    cell: Vec<Vec<f64>>,
    /// tanh of the cell states (LSTM only), `steps * n_h`.
    tanh_c: Vec<Vec<f64>>,
    /// Pre-activation scratch, one step of one layer.
    z: Vec<f64>,
    /// Dropout mask over the final hidden state (1s when inactive).
    mask: Vec<f64>,
    /// Final hidden state after the mask.
    h_drop: Vec<f64>,
    /// Prediction (re, im).
    y: [f64; 2],
    dh: Vec<f64>,
    dz: Vec<f64>,
    /// Gradient flowing into each layer's hidden state from the next step.
    ds: Vec<Vec<f64>>,
    /// Gradient flowing into each layer's cell state from the next step.
    dc: Vec<Vec<f64>>,
    /// Gradient handed from a layer to the one below at the same step.
    pass: Vec<f64>,
    /// Gradient into the final hidden state from the read-out.
    dfinal: Vec<f64>,
    zeros: Vec<f64>,
}

impl Workspace {
    /// Prediction left behind by the latest forward pass.
    pub(crate) fn output(&self) -> (f64, f64) {
        (self.y[0], self.y[1])
    }

    pub(crate) fn new(model: &RecurrentModel) -> Self {
        let arch = &model.arch;
        let steps = arch.steps();
        let n_h = arch.hidden_units;
        let n_l = arch.hidden_layers;
        let rows = n_h * arch.cell.row_factor();
        let lstm = arch.cell == CellKind::Lstm;
        let per_layer = |len: usize| (0..n_l).map(|_| vec![0.0; len]).collect::<Vec<_>>();
        Workspace {
            steps,
            n_h,
            h: per_layer(steps * n_h),
            gates: if lstm { per_layer(steps * rows) } else { Vec::new() },
            cell: if lstm { per_layer(steps * n_h) } else { Vec::new() },
            tanh_c: if lstm { per_layer(steps * n_h) } else { Vec::new() },
            z: vec![0.0; rows],
            mask: vec![1.0; n_h],
            h_drop: vec![0.0; n_h],
            y: [0.0; 2],
            dh: vec![0.0; n_h],
            dz: vec![0.0; rows],
            ds: per_layer(n_h),
            dc: if lstm { per_layer(n_h) } else { Vec::new() },
            pass: vec![0.0; n_h],
            dfinal: vec![0.0; n_h],
            zeros: vec![0.0; n_h],
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Runs the unrolled forward pass into the workspace.  A dropout mask
/// is drawn from `mask_rng` only when one is supplied and the model's
/// rate is positive; otherwise the mask is all ones.
pub(crate) fn forward_into(
    model: &RecurrentModel,
    ws: &mut Workspace,
    input: &[f64],
    mask_rng: Option<&mut ChaCha8Rng>,
) {
    let arch = &model.arch;
    let n_h = ws.n_h;
    let feat = arch.features();
    debug_assert_eq!(input.len(), feat * ws.steps);
    let Workspace { h, gates, cell, tanh_c, z, mask, h_drop, y, zeros, .. } = ws;
    for t in 0..ws.steps {
        for (l, lw) in model.layers.iter().enumerate() {
            z.copy_from_slice(&lw.bias);
            let x: &[f64] =
                if l == 0 { &input[t * feat..(t + 1) * feat] } else { &h[l - 1][t * n_h..(t + 1) * n_h] };
            lw.w_in.matvec_add(x, z);
            let h_prev: &[f64] =
                if t == 0 { zeros } else { &h[l][(t - 1) * n_h..t * n_h] };
            lw.w_rec.matvec_add(h_prev, z);
            match arch.cell {
                CellKind::Rnn => {
                    for j in 0..n_h {
                        h[l][t * n_h + j] = z[j].tanh();
                    }
                }
                CellKind::Lstm => {
                    let base = t * 4 * n_h;
                    for j in 0..n_h {
                        let gi = sigmoid(z[j]);
                        let gf = sigmoid(z[n_h + j]);
                        let gg = z[2 * n_h + j].tanh();
                        let go = sigmoid(z[3 * n_h + j]);
                        gates[l][base + j] = gi;
                        gates[l][base + n_h + j] = gf;
                        gates[l][base + 2 * n_h + j] = gg;
                        gates[l][base + 3 * n_h + j] = go;
                        let c_prev = if t == 0 { 0.0 } else { cell[l][(t - 1) * n_h + j] };
                        let c_now = gf * c_prev + gi * gg;
                        cell[l][t * n_h + j] = c_now;
                        let tc = c_now.tanh();
                        tanh_c[l][t * n_h + j] = tc;
                        h[l][t * n_h + j] = go * tc;
                    }
                }
            }
        }
    }
    match mask_rng {
        Some(rng) if arch.dropout_rate > 0.0 => {
            let keep = 1.0 - arch.dropout_rate;
            for m in mask.iter_mut() {
                *m = if rng.gen::<f64>() < arch.dropout_rate { 0.0 } else { 1.0 / keep };
            }
        }
        _ => mask.fill(1.0),
    }
    let top = model.layers.len() - 1;
    let last = (ws.steps - 1) * n_h;
    for j in 0..n_h {
        h_drop[j] = h[top][last + j] * mask[j];
    }
    y[0] = model.b_out[0];
    y[1] = model.b_out[1];
    model.w_out.matvec_add(h_drop, &mut y[..]);
}

/// Replays the stored forward pass in reverse, adding this sample's
/// contribution (for output-error gradient `dy`) into `grads`.
fn backward_into(
    model: &RecurrentModel,
    ws: &mut Workspace,
    input: &[f64],
    dy: [f64; 2],
    grads: &mut Gradients,
) {
    let arch = &model.arch;
    let n_h = ws.n_h;
    let feat = arch.features();
    let n_l = model.layers.len();
    let Workspace { h, gates, cell, tanh_c, mask, h_drop, dh, dz, ds, dc, pass, dfinal, zeros, .. } =
        ws;

    for k in 0..2 {
        grads.b_out[k] += dy[k];
    }
    grads.w_out.add_outer(&dy, h_drop);
    // The final hidden state reaches the loss only through the mask and
    // the read-out, so its incoming gradient is mask-weighted.
    model.w_out.matvec_t_into(&dy, dfinal);
    for j in 0..n_h {
        dfinal[j] *= mask[j];
    }
    for s in ds.iter_mut() {
        s.fill(0.0);
    }
    for c in dc.iter_mut() {
        c.fill(0.0);
    }

    for t in (0..ws.steps).rev() {
        for l in (0..n_l).rev() {
            // Gradient into h[l] at step t: from step t+1's recurrence,
            // plus the layer above at this step (or the read-out, for
            // the top layer at the last step).
            dh.copy_from_slice(&ds[l]);
            if l == n_l - 1 {
                if t == ws.steps - 1 {
                    for j in 0..n_h {
                        dh[j] += dfinal[j];
                    }
                }
            } else {
                for j in 0..n_h {
                    dh[j] += pass[j];
                }
            }
            let lw = &model.layers[l];
            let x: &[f64] =
                if l == 0 { &input[t * feat..(t + 1) * feat] } else { &h[l - 1][t * n_h..(t + 1) * n_h] };
            let h_prev: &[f64] =
                if t == 0 { zeros } else { &h[l][(t - 1) * n_h..t * n_h] };
            match arch.cell {
                CellKind::Rnn => {
                    let ht = &h[l][t * n_h..(t + 1) * n_h];
                    for j in 0..n_h {
                        dz[j] = dh[j] * (1.0 - ht[j] * ht[j]);
                    }
                }
                CellKind::Lstm => {
                    let g4 = &gates[l][t * 4 * n_h..(t + 1) * 4 * n_h];
                    let tc = &tanh_c[l][t * n_h..(t + 1) * n_h];
                    for j in 0..n_h {
                        let gi = g4[j];
                        let gf = g4[n_h + j];
                        let gg = g4[2 * n_h + j];
                        let go = g4[3 * n_h + j];
                        let c_prev = if t == 0 { 0.0 } else { cell[l][(t - 1) * n_h + j] };
                        let d_o = dh[j] * tc[j];
                        let d_c = dc[l][j] + dh[j] * go * (1.0 - tc[j] * tc[j]);
                        let d_i = d_c * gg;
                        let d_f = d_c * c_prev;
                        let d_g = d_c * gi;
                        // What step t-1's cell state will receive.
                        dc[l][j] = d_c * gf;
                        dz[j] = d_i * gi * (1.0 - gi);
                        dz[n_h + j] = d_f * gf * (1.0 - gf);
                        dz[2 * n_h + j] = d_g * (1.0 - gg * gg);
                        dz[3 * n_h + j] = d_o * go * (1.0 - go);
                    }
                }
            }
            let gl = &mut grads.layers[l];
            for (gb, &d) in gl.bias.iter_mut().zip(dz.iter()) {
                *gb += d;
            }
            gl.w_in.add_outer(dz, x);
            gl.w_rec.add_outer(dz, h_prev);
            // ds[l] was consumed into dh above, so it can now carry the
            // gradient for this layer's previous step.
            lw.w_rec.matvec_t_into(dz, &mut ds[l]);
            if l > 0 {
                lw.w_in.matvec_t_into(dz, pass);
            }
        }
    }
}

/// Squared prediction error of one (re, im) pair.
pub fn loss(prediction: (f64, f64), target: (f64, f64)) -> f64 {
    let dr = prediction.0 - target.0;
    let di = prediction.1 - target.1;
    dr * dr + di * di
}

/// Evaluates one interleaved chronological window.  In training mode a
/// model with a positive dropout rate needs `dropout_rng` for its mask;
/// inference ignores the rng and applies no dropout.
pub fn forward(
    model: &RecurrentModel,
    input: &[f64],
    train_mode: bool,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, f64)> {
    if input.len() != 2 * model.arch.window {
        return Err(Error::Domain(format!(
            "input has {} values, window {} needs {}",
            input.len(),
            model.arch.window,
            2 * model.arch.window
        )));
    }
    if train_mode && model.arch.dropout_rate > 0.0 && dropout_rng.is_none() {
        return Err(Error::Domain(
            "training-mode forward with a positive dropout rate needs an rng".into(),
        ));
    }
    let mut ws = Workspace::new(model);
    forward_into(model, &mut ws, input, if train_mode { dropout_rng } else { None });
    Ok((ws.y[0], ws.y[1]))
}

/// Mean squared prediction error over the selected samples together
/// with the gradient of that mean.  Each sample's dropout mask comes
/// from a stream seeded by (dropout_seed, sample index), so a fixed
/// seed reproduces the exact same masks; `None` (or a zero rate)
/// disables dropout.
pub fn gradients(
    model: &RecurrentModel,
    data: &Dataset,
    indices: &[usize],
    dropout_seed: Option<u64>,
) -> Result<(Gradients, f64)> {
    if indices.is_empty() {
        return Err(Error::Domain("gradient batch must not be empty".into()));
    }
    if data.window != model.arch.window {
        return Err(Error::Domain(format!(
            "dataset window {} does not match the model window {}",
            data.window, model.arch.window
        )));
    }
    let mut grads = Gradients::zeros_like(model);
    let mut ws = Workspace::new(model);
    let batch = indices.len() as f64;
    let mut total = 0.0;
    for &idx in indices {
        let input = &data.inputs[idx];
        let target = data.targets[idx];
        let mut rng = match dropout_seed {
            Some(seed) if model.arch.dropout_rate > 0.0 => {
                Some(ChaCha8Rng::seed_from_u64(combine(seed, idx as u64)))
            }
            _ => None,
        };
        forward_into(model, &mut ws, input, rng.as_mut());
        let e0 = ws.y[0] - target.0;
        let e1 = ws.y[1] - target.1;
        total += e0 * e0 + e1 * e1;
        let dy = [2.0 * e0 / batch, 2.0 * e1 / batch];
        backward_into(model, &mut ws, input, dy, &mut grads);
    }
    Ok((grads, total / batch))
}

/// Predicts the gain one horizon ahead of a window given newest sample
/// first (the convention the linear predictor uses); the window is
/// re-ordered chronologically before entering the network.
pub fn predict_nn(model: &RecurrentModel, window_newest_first: &[Complex64]) -> Result<Complex64> {
    if window_newest_first.len() != model.arch.window {
        return Err(Error::Domain(format!(
            "window of {} samples given to a model expecting {}",
            window_newest_first.len(),
            model.arch.window
        )));
    }
    let mut input = Vec::with_capacity(2 * window_newest_first.len());
    for z in window_newest_first.iter().rev() {
        input.push(z.re);
        input.push(z.im);
    }
    let (re, im) = forward(model, &input, false, None)?;
    Ok(Complex64::new(re, im))
}
