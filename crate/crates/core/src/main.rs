//! Command-line front end for the prediction laboratory.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use chanpred::channel::{generate_trace, jakes_acf};
use chanpred::harness::config::{load_config, RunSpec};
use chanpred::harness::{
    architecture_sweep, mse_to_db, run_sweep, run_trial, write_results, PredictorKind,
};
use chanpred::wiener::sample_acf;
use chanpred::Error;

/// Shapes compared by the `arch-sweep` subcommand (layers, units).
const ARCH_GRID: [(usize, usize); 6] = [(1, 8), (1, 16), (2, 8), (2, 16), (3, 8), (3, 16)];

/// Default Doppler grid for `arch-sweep`, in Hz.
const ARCH_DOPPLER: [f64; 7] = [10.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0];

/// Maximum lag the `acf-check` diagnostic inspects.
const ACF_CHECK_LAGS: usize = 20;

/// Largest acceptable deviation from the analytic autocorrelation.
const ACF_CHECK_TOLERANCE: f64 = 0.1;

/// Realizations the `acf-check` diagnostic averages by default.  A
/// single sum-of-sinusoids realization carries its own correlogram
/// offset of order 1/sqrt(paths), so the tolerance applies to the
/// average over independent realizations.
const ACF_CHECK_TRACES: usize = 20;

#[derive(Parser)]
#[command(name = "chanpred", version, about = "Fading-channel prediction laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file with [channel]/[predictor]/[train]/[sweep] sections.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default results.csv).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Trials averaged per sweep point (realizations for acf-check).
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated predictors: wiener,rnn,lstm.
    #[arg(long)]
    predictors: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one Monte Carlo trial and print each predictor's MSE.
    Trial(CommonArgs),
    /// Sweep the axis named in the config and write a results CSV.
    Sweep(CommonArgs),
    /// Compare RNN shapes across Doppler shifts and write a results CSV.
    ArchSweep(CommonArgs),
    /// Compare the simulated autocorrelation against the analytic model.
    AcfCheck(CommonArgs),
}

fn load_spec(args: &CommonArgs) -> chanpred::Result<RunSpec> {
    let mut spec = match &args.config {
        Some(path) => load_config(path)?,
        None => RunSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.trial.seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(list) = &args.predictors {
        let kinds: chanpred::Result<Vec<PredictorKind>> =
            list.split(',').map(PredictorKind::parse).collect();
        spec.trial.predictors = kinds?;
    }
    Ok(spec)
}

fn out_path(args: &CommonArgs) -> PathBuf {
    args.out.clone().unwrap_or_else(|| PathBuf::from("results.csv"))
}

fn cmd_trial(args: &CommonArgs) -> chanpred::Result<()> {
    let spec = load_spec(args)?;
    let result = run_trial(&spec.trial)?;
    for o in &result.outcomes {
        let db = mse_to_db(o.mse)?;
        if o.epochs > 0 {
            println!(
                "{}: mse {:.6e} ({:.3} dB) over {} predictions, {} epochs",
                o.label, o.mse, db, o.predictions, o.epochs
            );
        } else {
            println!(
                "{}: mse {:.6e} ({:.3} dB) over {} predictions",
                o.label, o.mse, db, o.predictions
            );
        }
    }
    println!("wall time: {:.3} s", result.wall.as_secs_f64());
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> chanpred::Result<()> {
    let spec = load_spec(args)?;
    let axis = spec.sweep_axis.ok_or_else(|| {
        Error::Config("the sweep subcommand needs 'axis' in the [sweep] section".into())
    })?;
    if spec.sweep_values.is_empty() {
        return Err(Error::Config(
            "the sweep subcommand needs 'values' in the [sweep] section".into(),
        ));
    }
    let sweep = run_sweep(&spec.trial, axis, &spec.sweep_values, spec.trials)?;
    let path = out_path(args);
    write_results(&sweep, &path)?;
    println!("wrote {} ({} rows)", path.display(), sweep.rows.len());
    Ok(())
}

fn cmd_arch_sweep(args: &CommonArgs) -> chanpred::Result<()> {
    let mut spec = load_spec(args)?;
    if args.config.is_none() {
        // Shape-comparison protocol: shorter records, longer horizon.
        spec.trial.total_samples = 500;
        spec.trial.horizon = 5;
    }
    let doppler: Vec<f64> = if spec.sweep_values.is_empty() {
        ARCH_DOPPLER.to_vec()
    } else {
        spec.sweep_values.clone()
    };
    let sweep = architecture_sweep(&spec.trial, &ARCH_GRID, &doppler, spec.trials)?;
    let path = out_path(args);
    write_results(&sweep, &path)?;
    println!("wrote {} ({} rows)", path.display(), sweep.rows.len());
    Ok(())
}

/// Exit status of the autocorrelation diagnostic.
enum AcfVerdict {
    Ok,
    Deviates,
}

fn cmd_acf_check(args: &CommonArgs) -> chanpred::Result<AcfVerdict> {
    let mut spec = load_spec(args)?;
    if args.config.is_none() {
        // Long record so the sample autocorrelation settles.
        spec.trial.total_samples = 10_000;
    }
    if args.config.is_none() && args.trials.is_none() {
        spec.trials = ACF_CHECK_TRACES;
    }
    if spec.trials == 0 {
        return Err(Error::Config("acf-check needs at least one realization".into()));
    }
    let t = &spec.trial;
    let mut mean = vec![num_complex::Complex64::new(0.0, 0.0); ACF_CHECK_LAGS + 1];
    for i in 0..spec.trials {
        let trace = generate_trace(
            t.total_samples,
            t.sample_interval,
            t.max_doppler,
            t.num_sinusoids,
            t.seed.wrapping_add(i as u64),
        )?;
        let acf = sample_acf(&trace.samples, ACF_CHECK_LAGS)?;
        for (m, v) in mean.iter_mut().zip(&acf.values) {
            *m += v;
        }
    }
    println!(
        "autocorrelation averaged over {} realizations of {} samples (fd {} Hz, Ts {} s, {} paths, seeds {}..)",
        spec.trials, t.total_samples, t.max_doppler, t.sample_interval, t.num_sinusoids, t.seed
    );
    println!("{:>4}  {:>12}  {:>12}  {:>10}", "lag", "sample", "model", "|dev|");
    let mut worst = 0.0f64;
    for (lag, total) in mean.iter().enumerate() {
        let sample = total / spec.trials as f64;
        let model = jakes_acf(lag as f64, t.max_doppler, t.sample_interval);
        let dev = (sample - model).norm();
        worst = worst.max(dev);
        println!("{lag:>4}  {:>12.6}  {model:>12.6}  {dev:>10.6}", sample.re);
    }
    let ok = worst < ACF_CHECK_TOLERANCE;
    println!(
        "max |deviation| over lags 0..{ACF_CHECK_LAGS}: {worst:.6} (tolerance {ACF_CHECK_TOLERANCE}) -> {}",
        if ok { "OK" } else { "DEVIATES" }
    );
    Ok(if ok { AcfVerdict::Ok } else { AcfVerdict::Deviates })
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Trial(args) => cmd_trial(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::ArchSweep(args) => cmd_arch_sweep(args),
        Command::AcfCheck(args) => match cmd_acf_check(args) {
            Ok(AcfVerdict::Ok) => Ok(()),
            Ok(AcfVerdict::Deviates) => std::process::exit(1),
            Err(e) => Err(e),
        },
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
