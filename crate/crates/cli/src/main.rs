use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use log::info;
use proxsplit::experiment::{
    compare_diameters, run_experiment, ExperimentConfig, SweepSummary, Weights,
};
use proxsplit::{Error, Point, SpaceKind};

/// Runs relaxed cyclic prox sweeps for weighted Fréchet means and writes
/// per-τ traces and summaries.
#[derive(Debug, Parser)]
#[command(name = "proxsplit", version)]
struct Args {
    /// JSON config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// euclidean, sphere or spd
    #[arg(long)]
    space: Option<SpaceKind>,

    #[arg(long)]
    dim: Option<usize>,

    #[arg(long)]
    num_points: Option<usize>,

    /// Distance exponent (default 2).
    #[arg(long)]
    p: Option<f64>,

    #[arg(long)]
    lambda: Option<f64>,

    /// Relaxation parameter; repeat for a sweep.
    #[arg(long = "tau")]
    taus: Vec<f64>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    tol: Option<f64>,

    #[arg(long)]
    max_iters: Option<usize>,

    /// "uniform" or a JSON file holding a list of weights.
    #[arg(long)]
    weights: Option<String>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write full traces, including iterates, as JSON.
    #[arg(long)]
    emit_iterates: bool,

    /// Sample sphere data inside a cap of this radius around the last axis.
    #[arg(long)]
    cap_delta: Option<f64>,

    /// JSON file holding the data points.
    #[arg(long)]
    points: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("cannot parse {what} file {}: {e}", path.display())))
}

fn build_config(args: Args) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.space {
        config.space = v;
    }
    if let Some(v) = args.dim {
        config.dim = v;
    }
    if let Some(v) = args.p {
        config.p = v;
    }
    if let Some(v) = args.lambda {
        config.lambda = v;
    }
    if !args.taus.is_empty() {
        config.tau_values = args.taus;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.tol {
        config.tol = v;
    }
    if let Some(v) = args.max_iters {
        config.max_iters = v;
    }
    if let Some(w) = args.weights {
        config.weights = if w == "uniform" {
            Weights::Uniform
        } else {
            Weights::Explicit(read_json(Path::new(&w), "weights")?)
        };
    }
    if let Some(v) = args.out {
        config.output_dir = v;
    }
    if args.emit_iterates {
        config.emit_iterates = true;
    }
    if let Some(v) = args.cap_delta {
        config.cap_delta = Some(v);
    }
    if let Some(path) = args.points {
        let points: Vec<Point> = read_json(&path, "points")?;
        if let Some(first) = points.first() {
            config.space = first.kind();
            config.dim = first.dim();
        }
        config.num_points = points.len();
        config.points = Some(points);
    }
    if let Some(v) = args.num_points {
        config.num_points = v;
    }
    config.validate()?;
    Ok(config)
}

fn print_summary(summary: &SweepSummary) {
    println!(
        "{:>10} {:>8} {:>12} {:>10} {:>10} {:>14} {:>12}  stop",
        "tau", "iters", "residual", "rate", "r2", "cycle_diam", "diam/tau"
    );
    let opt = |v: Option<f64>, digits: usize| match v {
        Some(v) => format!("{v:.digits$}"),
        None => "-".to_string(),
    };
    for row in &summary.rows {
        println!(
            "{:>10} {:>8} {:>12.3e} {:>10} {:>10} {:>14.6e} {:>12.6}  {:?}",
            row.tau,
            row.iterations,
            row.final_residual,
            opt(row.fitted_rate, 6),
            opt(row.r_squared, 6),
            row.final_cycle_diameter,
            row.diameter_over_tau,
            row.stop_reason
        );
    }
    if summary.rows.len() >= 2 {
        match compare_diameters(summary) {
            Ok(report) => println!(
                "diameter/tau spread {:.4}, diameter monotone in tau: {}",
                report.spread, report.monotone_increasing
            ),
            Err(e) => println!("diameter comparison unavailable: {e}"),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() {
        2
    } else if e.is_io_error() {
        1
    } else {
        3
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = build_config(args).and_then(|config| {
        info!("writing results to {}", config.output_dir.display());
        run_experiment(&config)
    });
    match result {
        Ok(summary) => {
            print_summary(&summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
