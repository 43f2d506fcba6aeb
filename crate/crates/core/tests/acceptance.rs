//! End-to-end acceptance gate for the laboratory.
//!
//! Every test prints exactly one `[PASS]`/`[FAIL]` line and then
//! asserts, so the summary stays readable under
//! `cargo test --test acceptance -- --nocapture` while a red run still
//! fails the build.  All tolerances are fixed constants in this file;
//! the Monte Carlo checks run the full benchmark protocol (default
//! trial template, 100 seeded trials per axis point), which is why this
//! target takes hours on one core while everything else takes seconds.

use num_complex::Complex64;

use chanpred::channel::{generate_trace, jakes_acf};
use chanpred::harness::{
    run_sweep, write_results, PredictorKind, SweepAxis, SweepResult, TrialConfig,
};
use chanpred::neural::{
    forward, gradients, init_model, loss, make_blocks, Architecture, CellKind, Dataset, InputMode,
    RecurrentModel, TrainConfig,
};
use chanpred::wiener::{design, empirical_mse, sample_acf, AcfEstimate};

/// Prints the verdict line for one acceptance check, then enforces it.
fn check(name: &str, pass: bool, detail: &str) {
    println!("{} {name}: {detail}", if pass { "[PASS]" } else { "[FAIL]" });
    assert!(pass, "{name}: {detail}");
}

/// Looks up the row of one (axis value, predictor) cell.
fn cell(sweep: &SweepResult, value: f64, predictor: &str) -> f64 {
    sweep
        .rows
        .iter()
        .find(|r| r.axis_value == value && r.predictor == predictor)
        .unwrap_or_else(|| panic!("missing sweep cell ({value}, {predictor})"))
        .mse
}

/// The same lookup in dB.
fn cell_db(sweep: &SweepResult, value: f64, predictor: &str) -> f64 {
    sweep
        .rows
        .iter()
        .find(|r| r.axis_value == value && r.predictor == predictor)
        .unwrap_or_else(|| panic!("missing sweep cell ({value}, {predictor})"))
        .mse_db
}

/// The simulated channel's correlation structure: the sample
/// autocorrelation of long noiseless traces, averaged over independent
/// realizations, must track the analytic Bessel autocorrelation.  A
/// single realization's correlogram deviates O(M^-1/2) because it only
/// superposes M = 200 sinusoids, so the comparison averages the
/// correlogram over the seeds before taking the worst lag.
#[test]
fn sample_acf_of_long_traces_matches_the_bessel_model() {
    const SEEDS: u64 = 20;
    const MAX_LAG: usize = 20;
    const LENGTH: usize = 10_000;
    const MAX_DOPPLER: f64 = 100.0;
    const SAMPLE_INTERVAL: f64 = 1e-3;
    const TOLERANCE: f64 = 0.1;

    let mut mean = vec![Complex64::new(0.0, 0.0); MAX_LAG + 1];
    for seed in 0..SEEDS {
        let trace = generate_trace(LENGTH, SAMPLE_INTERVAL, MAX_DOPPLER, 200, seed).unwrap();
        let acf = sample_acf(&trace.samples, MAX_LAG).unwrap();
        for (m, v) in mean.iter_mut().zip(&acf.values) {
            *m += v;
        }
    }
    let mut worst = 0.0f64;
    for (lag, sum) in mean.iter().enumerate() {
        let avg = sum / SEEDS as f64;
        let model = jakes_acf(lag as f64, MAX_DOPPLER, SAMPLE_INTERVAL);
        worst = worst.max((avg - model).norm());
    }
    check(
        "autocorrelation fidelity",
        worst < TOLERANCE,
        &format!(
            "mean correlogram of {SEEDS} traces (L = {LENGTH}, fd*Ts = {}) deviates from the \
             Bessel model by at most {worst:.4} over lags 0..={MAX_LAG} (tolerance {TOLERANCE})",
            MAX_DOPPLER * SAMPLE_INTERVAL
        ),
    );
}

/// A predictor designed from the exact model autocorrelation is the
/// optimal linear filter, so its measured error on noiseless traces
/// must land on its own design residual.  100 fresh realizations per
/// horizon, each 250 samples long.
#[test]
fn exact_model_design_attains_its_predicted_error() {
    const TRIALS: u64 = 100;
    const TEST_LENGTH: usize = 250;
    const WINDOW: usize = 5;
    const MAX_DOPPLER: f64 = 100.0;
    const SAMPLE_INTERVAL: f64 = 1e-3;
    const RELATIVE_TOLERANCE: f64 = 0.15;

    let mut pass = true;
    let mut details = Vec::new();
    for &horizon in &[1usize, 3, 5] {
        let acf = AcfEstimate::from_model(MAX_DOPPLER, SAMPLE_INTERVAL, WINDOW - 1 + horizon);
        let predictor = design(&acf, WINDOW, horizon).unwrap();
        let mut sum = 0.0;
        for trial in 0..TRIALS {
            let trace =
                generate_trace(TEST_LENGTH, SAMPLE_INTERVAL, MAX_DOPPLER, 200, trial).unwrap();
            sum += empirical_mse(&predictor, &trace.samples, &trace.samples).unwrap();
        }
        let mean = sum / TRIALS as f64;
        let ratio = mean / predictor.theoretical_mmse;
        pass &= (ratio - 1.0).abs() <= RELATIVE_TOLERANCE;
        details.push(format!(
            "horizon {horizon}: measured {mean:.3e} vs predicted {:.3e} (ratio {ratio:.3})",
            predictor.theoretical_mmse
        ));
    }
    check(
        "linear optimality oracle",
        pass,
        &format!("{} (each ratio within 1 +- {RELATIVE_TOLERANCE})", details.join("; ")),
    );
}

/// Mean loss of a model over a whole dataset, evaluated the same way
/// the finite-difference probe sees it (inference mode, no dropout).
fn mean_loss(model: &RecurrentModel, data: &Dataset, indices: &[usize]) -> f64 {
    let total: f64 = indices
        .iter()
        .map(|&i| loss(forward(model, &data.inputs[i], false, None).unwrap(), data.targets[i]))
        .sum();
    total / indices.len() as f64
}

/// Backpropagation through time must agree with central finite
/// differences on every scalar parameter, for both cell families, one
/// and two stacked layers, and both window encodings.
#[test]
fn bptt_gradients_match_central_finite_differences() {
    const STEP: f64 = 1e-5;
    const MAX_RELATIVE_ERROR: f64 = 1e-4;
    // Guards the ratio when a component's true gradient is near zero;
    // the finite-difference noise floor is orders of magnitude below.
    const DENOMINATOR_FLOOR: f64 = 1e-6;

    let trace = generate_trace(16, 1e-3, 100.0, 200, 7).unwrap();
    let data = make_blocks(&trace.samples, 3, 1).unwrap();
    let indices: Vec<usize> = (0..data.len()).collect();

    let mut pass = true;
    let mut details = Vec::new();
    let mut seed = 100;
    for &cell in &[CellKind::Rnn, CellKind::Lstm] {
        for &hidden_layers in &[1usize, 2] {
            for &input_mode in &[InputMode::Sequence, InputMode::Flat] {
                seed += 1;
                let arch = Architecture {
                    cell,
                    hidden_layers,
                    hidden_units: 4,
                    input_mode,
                    window: 3,
                    dropout_rate: 0.0,
                };
                let mut model = init_model(arch, seed).unwrap();
                let (grads, _) = gradients(&model, &data, &indices, None).unwrap();
                let analytic = grads.flat();
                let theta = model.params_flat();
                let mut worst = 0.0f64;
                for i in 0..theta.len() {
                    let mut plus = theta.clone();
                    plus[i] += STEP;
                    model.set_params_flat(&plus);
                    let up = mean_loss(&model, &data, &indices);
                    let mut minus = theta.clone();
                    minus[i] -= STEP;
                    model.set_params_flat(&minus);
                    let down = mean_loss(&model, &data, &indices);
                    let numeric = (up - down) / (2.0 * STEP);
                    let denom = analytic[i].abs().max(numeric.abs()).max(DENOMINATOR_FLOOR);
                    worst = worst.max((analytic[i] - numeric).abs() / denom);
                }
                model.set_params_flat(&theta);
                pass &= worst < MAX_RELATIVE_ERROR;
                details.push(format!(
                    "{} {hidden_layers}x4 {}: {:.1e}",
                    cell.name(),
                    input_mode.name(),
                    worst
                ));
            }
        }
    }
    check(
        "backpropagation gradient check",
        pass,
        &format!(
            "worst relative error per shape (step {STEP:.0e}, bound {MAX_RELATIVE_ERROR:.0e}): {}",
            details.join(", ")
        ),
    );
}

/// Benchmark over the observation window length: the trained networks
/// must beat the sample-autocorrelation linear design by at least
/// 0.5 dB at the two shortest windows, and all three predictors must
/// agree within +-0.7 dB of each other's band at N = 6.
#[test]
fn window_sweep_advantage_and_agreement() {
    const TRIALS: usize = 100;
    const REQUIRED_GAIN_DB: f64 = 0.5;
    // Every predictor within +-0.7 dB of the band center, i.e. a
    // max-min spread of at most 1.4 dB.
    const MAX_SPREAD_DB: f64 = 1.4;

    let base = TrialConfig::default();
    let values = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let sweep = run_sweep(&base, SweepAxis::Window, &values, TRIALS).unwrap();

    let mut pass = true;
    let mut details = Vec::new();
    for &n in &[2.0, 3.0] {
        let gain = cell_db(&sweep, n, "wiener") - cell_db(&sweep, n, "rnn");
        let ok = gain >= REQUIRED_GAIN_DB;
        pass &= ok;
        details.push(format!(
            "N={n}: rnn {:.3} dB vs wiener {:.3} dB, gain {gain:+.3} dB ({})",
            cell_db(&sweep, n, "rnn"),
            cell_db(&sweep, n, "wiener"),
            if ok { "ok" } else { "below required +0.5" }
        ));
    }
    let trio = [
        cell_db(&sweep, 6.0, "wiener"),
        cell_db(&sweep, 6.0, "rnn"),
        cell_db(&sweep, 6.0, "lstm"),
    ];
    let spread = trio.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - trio.iter().cloned().fold(f64::INFINITY, f64::min);
    let agree = spread <= MAX_SPREAD_DB;
    pass &= agree;
    details.push(format!(
        "N=6: wiener {:.3} / rnn {:.3} / lstm {:.3} dB, spread {spread:.3} dB ({})",
        trio[0],
        trio[1],
        trio[2],
        if agree { "ok" } else { "exceeds 1.4" }
    ));
    check(
        "window sweep",
        pass,
        &format!("{TRIALS} trials per point over N = 2..=8; {}", details.join("; ")),
    );
}

/// Benchmark over the prediction horizon: past three steps ahead the
/// trained network must match or beat the linear design in mean error.
#[test]
fn horizon_sweep_advantage_beyond_three_steps() {
    const TRIALS: usize = 100;

    let base = TrialConfig::default();
    let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let sweep = run_sweep(&base, SweepAxis::Horizon, &values, TRIALS).unwrap();

    let mut pass = true;
    let mut details = Vec::new();
    for &h in &[4.0, 5.0, 6.0] {
        let rnn = cell(&sweep, h, "rnn");
        let wiener = cell(&sweep, h, "wiener");
        let ok = rnn <= wiener;
        pass &= ok;
        details.push(format!(
            "horizon {h}: rnn {:.3} dB vs wiener {:.3} dB ({})",
            cell_db(&sweep, h, "rnn"),
            cell_db(&sweep, h, "wiener"),
            if ok { "ok" } else { "worse" }
        ));
    }
    check(
        "horizon sweep",
        pass,
        &format!(
            "{TRIALS} trials per point over horizons 1..=6; mean rnn error must not exceed \
             wiener past horizon 3; {}",
            details.join("; ")
        ),
    );
}

/// Benchmark over the estimation SNR: at the two noisiest operating
/// points both trained networks must match or beat the linear design,
/// whose plug-in autocorrelation suffers most from the noise.
#[test]
fn snr_sweep_robustness_at_low_snr() {
    const TRIALS: usize = 100;

    let base = TrialConfig::default();
    let values = [0.0, 5.0, 10.0, 15.0, 20.0];
    let sweep = run_sweep(&base, SweepAxis::SnrDb, &values, TRIALS).unwrap();

    let mut pass = true;
    let mut details = Vec::new();
    for &snr in &[0.0, 5.0] {
        let wiener = cell(&sweep, snr, "wiener");
        for predictor in ["rnn", "lstm"] {
            let learned = cell(&sweep, snr, predictor);
            let ok = learned <= wiener;
            pass &= ok;
            details.push(format!(
                "{snr} dB: {predictor} {:.3} dB vs wiener {:.3} dB ({})",
                cell_db(&sweep, snr, predictor),
                cell_db(&sweep, snr, "wiener"),
                if ok { "ok" } else { "worse" }
            ));
        }
    }
    check(
        "snr sweep",
        pass,
        &format!("{TRIALS} trials per point over 0..20 dB; {}", details.join("; ")),
    );
}

/// Two runs of the same seeded sweep must agree bit for bit, including
/// the trained-network cells.
#[test]
fn seeded_sweeps_are_bit_reproducible() {
    let base = TrialConfig {
        total_samples: 300,
        window: 3,
        hidden_units: 8,
        train: TrainConfig { max_epochs: 25, warmup_epochs: 20, ..TrainConfig::default() },
        seed: 11,
        ..TrialConfig::default()
    };
    let values = [5.0, 10.0];
    let a = run_sweep(&base, SweepAxis::SnrDb, &values, 3).unwrap();
    let b = run_sweep(&base, SweepAxis::SnrDb, &values, 3).unwrap();
    let same = a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(x, y)| {
            x.axis_value.to_bits() == y.axis_value.to_bits()
                && x.predictor == y.predictor
                && x.trials == y.trials
                && x.mse.to_bits() == y.mse.to_bits()
                && x.mse_db.to_bits() == y.mse_db.to_bits()
        });
    check(
        "sweep determinism",
        same,
        &format!(
            "two identically-seeded runs of a {}-row sweep (all three predictors) {}",
            a.rows.len(),
            if same { "are bit-identical" } else { "differ" }
        ),
    );
}

/// The CSV writer's output for a pinned small sweep must stay byte
/// identical to the committed fixture, freezing both the numerical
/// results and the file format.
#[test]
fn results_csv_is_byte_identical_to_the_committed_fixture() {
    let base = TrialConfig {
        total_samples: 400,
        predictors: vec![PredictorKind::Wiener],
        ..TrialConfig::default()
    };
    let sweep = run_sweep(&base, SweepAxis::Window, &[2.0, 3.0], 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mini_sweep.csv");
    write_results(&sweep, &path).unwrap();
    let produced = std::fs::read_to_string(&path).unwrap();
    let committed = include_str!("fixtures/mini_sweep.csv");
    check(
        "golden results file",
        produced == committed,
        &format!(
            "regenerated mini sweep ({} bytes) {} the committed fixture",
            produced.len(),
            if produced == committed { "matches" } else { "differs from" }
        ),
    );
}

/// Removing the estimation noise can only help: for every predictor,
/// the mean error on noiseless estimates must not exceed the mean
/// error at 0 dB over the same channels.
#[test]
fn noiseless_estimates_never_predict_worse_than_noisy_ones() {
    let base = TrialConfig::default();
    let sweep = run_sweep(&base, SweepAxis::SnrDb, &[0.0, f64::INFINITY], 100).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for name in ["wiener", "rnn", "lstm"] {
        let noisy = cell(&sweep, 0.0, name);
        let clean = cell(&sweep, f64::INFINITY, name);
        pass &= clean <= noisy;
        details.push(format!("{name} noiseless {clean:.3e} vs 0 dB {noisy:.3e}"));
    }
    check(
        "noise monotonicity",
        pass,
        &format!("{} (100 trials each)", details.join("; ")),
    );
}

/// The recurrent state is squashed at every step, so even a window of
/// ten thousand samples must leave the read-out finite and inside the
/// bound its own weights imply (|state| <= 1 per unit).
#[test]
fn recurrent_outputs_stay_bounded_on_very_long_windows() {
    const WINDOW: usize = 10_000;

    let mut pass = true;
    let mut details = Vec::new();
    for &cell in &[CellKind::Rnn, CellKind::Lstm] {
        let arch = Architecture {
            cell,
            hidden_layers: 1,
            hidden_units: 8,
            input_mode: InputMode::Sequence,
            window: WINDOW,
            dropout_rate: 0.0,
        };
        let model = init_model(arch, 99).unwrap();
        // A bounded rotating input; magnitudes stay below one.
        let input: Vec<f64> = (0..WINDOW)
            .flat_map(|n| {
                let theta = 0.37 + 0.01 * n as f64;
                [0.9 * theta.cos(), 0.9 * theta.sin()]
            })
            .collect();
        let (re, im) = forward(&model, &input, false, None).unwrap();
        let bound: f64 = model.w_out.data.iter().map(|w| w.abs()).sum::<f64>()
            + model.b_out.iter().map(|b| b.abs()).sum::<f64>();
        let ok = re.is_finite() && im.is_finite() && re.abs() <= bound && im.abs() <= bound;
        pass &= ok;
        details.push(format!(
            "{}: output ({re:.3}, {im:.3}), weight-implied bound {bound:.3}",
            cell.name()
        ));
    }
    check("long-sequence stability", pass, &details.join("; "));
}
