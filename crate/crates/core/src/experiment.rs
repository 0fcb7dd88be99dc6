//! Fréchet-mean experiment runner: data generation, per-τ sweeps of the
//! relaxed cyclic prox iteration, CSV/JSON export and summary checks.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    fit_rate, prox_constants, regularity_report, sample_pairs, RegularityConstants,
    RegularityReport, TheoreticalConstants,
};
use crate::error::{Error, Result};
use crate::geometry::{Point, SpaceKind, SpaceParams};
use crate::prox::ProxTerm;
use crate::splitting::{fixed_point_gap_bound, CompositeMap, StopReason, Trace, Variant};

/// Data weights `ω_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightsRepr", into = "WeightsRepr")]
pub enum Weights {
    /// `ω_j = 1/m`
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WeightsRepr {
    Name(String),
    List(Vec<f64>),
}

impl TryFrom<WeightsRepr> for Weights {
    type Error = Error;

    fn try_from(repr: WeightsRepr) -> Result<Self> {
        match repr {
            WeightsRepr::Name(name) if name == "uniform" => Ok(Weights::Uniform),
            WeightsRepr::Name(name) => Err(Error::Config(format!("unknown weights `{name}`"))),
            WeightsRepr::List(list) => Ok(Weights::Explicit(list)),
        }
    }
}

impl From<Weights> for WeightsRepr {
    fn from(w: Weights) -> Self {
        match w {
            Weights::Uniform => WeightsRepr::Name("uniform".into()),
            Weights::Explicit(list) => WeightsRepr::List(list),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceKind,
    pub dim: usize,
    pub num_points: usize,
    pub p: f64,
    /// Prox parameter shared by every term.
    pub lambda: f64,
    pub weights: Weights,
    pub tau_values: Vec<f64>,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    pub output_dir: PathBuf,
    /// Also write full traces, including iterates, as JSON.
    pub emit_iterates: bool,
    /// Sphere only: draw data within this geodesic radius of the last basis vector.
    pub cap_delta: Option<f64>,
    /// Explicit data points; replaces random generation.
    pub points: Option<Vec<Point>>,
    /// Residuals skipped before the rate fit.
    pub burn_in: usize,
    /// Sampled pairs for the per-τ regularity report; 0 disables it.
    pub regularity_pairs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            space: SpaceKind::Spd,
            dim: 3,
            num_points: 20,
            p: 2.0,
            lambda: 1.0,
            weights: Weights::Uniform,
            tau_values: vec![0.9, 0.5, 0.1, 0.05, 0.005],
            seed: 0,
            tol: 1e-10,
            max_iters: 100_000,
            output_dir: PathBuf::from("out"),
            emit_iterates: false,
            cap_delta: None,
            points: None,
            burn_in: 5,
            regularity_pairs: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("cannot parse {}: {e}", path.display())))
    }

    pub fn space_params(&self) -> Result<SpaceParams> {
        SpaceParams::new(self.space, self.p, 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.space_params()?;
        if self.num_points == 0 {
            return Err(Error::Config("num_points must be at least 1".into()));
        }
        if self.dim == 0 || (self.space == SpaceKind::Sphere && self.dim < 2) {
            return Err(Error::Config(format!(
                "dim {} is too small for {}",
                self.dim, self.space
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.tau_values.is_empty() {
            return Err(Error::Config("at least one tau value is required".into()));
        }
        for (i, &tau) in self.tau_values.iter().enumerate() {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::Config(format!("tau {tau} is outside (0, 1]")));
            }
            if self.tau_values[..i].contains(&tau) {
                return Err(Error::Config(format!("tau {tau} is listed twice")));
            }
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config(format!(
                "tol must be nonnegative, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if let Weights::Explicit(w) = &self.weights {
            if w.len() != self.num_points {
                return Err(Error::Config(format!(
                    "{} weights given for {} points",
                    w.len(),
                    self.num_points
                )));
            }
            if w.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Config("weights must be positive".into()));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("weights sum to {total}, not 1")));
            }
        }
        if let Some(delta) = self.cap_delta {
            if self.space != SpaceKind::Sphere {
                return Err(Error::Config("cap_delta applies to the sphere only".into()));
            }
            if !(delta > 0.0 && delta < std::f64::consts::PI) {
                return Err(Error::Config(format!(
                    "cap_delta {delta} is outside (0, π)"
                )));
            }
        }
        if let Some(points) = &self.points {
            if points.len() != self.num_points {
                return Err(Error::Config(format!(
                    "{} points given but num_points = {}",
                    points.len(),
                    self.num_points
                )));
            }
            if let Some(bad) = points
                .iter()
                .find(|pt| pt.kind() != self.space || pt.dim() != self.dim)
            {
                return Err(Error::Config(format!(
                    "point of kind {} and dim {} does not match {} with dim {}",
                    bad.kind(),
                    bad.dim(),
                    self.space,
                    self.dim
                )));
            }
        }
        Ok(())
    }

    pub fn weight_values(&self) -> Vec<f64> {
        match &self.weights {
            Weights::Uniform => vec![1.0 / self.num_points as f64; self.num_points],
            Weights::Explicit(w) => w.clone(),
        }
    }
}

/// The data set of a config: explicit points, or `num_points` draws from one
/// RNG stream seeded by `config.seed`.
pub fn generate_points(config: &ExperimentConfig) -> Result<Vec<Point>> {
    if let Some(points) = &config.points {
        return Ok(points.clone());
    }
    let space = config.space_params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pole = match (config.space, config.cap_delta) {
        (SpaceKind::Sphere, Some(_)) => {
            let mut v = vec![0.0; config.dim];
            v[config.dim - 1] = 1.0;
            Some(Point::sphere(v)?)
        }
        _ => None,
    };
    (0..config.num_points)
        .map(|index| {
            let point = match (&pole, config.cap_delta) {
                (Some(pole), Some(delta)) => space.random_cap_point_with(&mut rng, pole, delta),
                _ => space.random_point_with(&mut rng, config.dim),
            };
            point.map_err(|e| e.context(format!("generating point {index} (seed {})", config.seed)))
        })
        .collect()
}

/// The relaxed cyclic map for one τ over the config's data.
pub fn build_map(config: &ExperimentConfig, points: &[Point], tau: f64) -> Result<CompositeMap> {
    let terms = points
        .iter()
        .zip(config.weight_values())
        .map(|(a, w)| ProxTerm::new(a.clone(), w, config.p, config.lambda, tau))
        .collect::<Result<Vec<_>>>()?;
    CompositeMap::new(config.space_params()?, terms, Variant::Relaxed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauRun {
    pub tau: f64,
    pub trace: Trace,
}

/// Runs every τ of the config from `x⁰ = first data point`, one thread per τ.
pub fn run_sweep(config: &ExperimentConfig) -> Result<(Vec<Point>, Vec<TauRun>)> {
    config.validate()?;
    let points = generate_points(config)?;
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .tau_values
            .iter()
            .map(|&tau| {
                let points = &points;
                scope.spawn(move || -> Result<TauRun> {
                    let map = build_map(config, points, tau)?;
                    let trace = map
                        .iterate(&points[0], config.tol, config.max_iters)
                        .map_err(|e| e.context(format!("tau {tau} (seed {})", config.seed)))?;
                    Ok(TauRun { tau, trace })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((points, runs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub iterations: usize,
    pub final_residual: f64,
    pub fitted_rate: Option<f64>,
    pub r_squared: Option<f64>,
    pub final_cycle_diameter: f64,
    pub diameter_over_tau: f64,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
}

impl SweepRow {
    pub fn from_run(run: &TauRun, burn_in: usize) -> Result<Self> {
        let fit = fit_rate(&run.trace.residuals, burn_in).ok();
        let diameter = fixed_point_gap_bound(&run.trace)?;
        Ok(SweepRow {
            tau: run.tau,
            iterations: run.trace.iterations(),
            final_residual: run.trace.final_residual().unwrap_or(0.0),
            fitted_rate: fit.map(|f| f.rate),
            r_squared: fit.map(|f| f.r_squared),
            final_cycle_diameter: diameter,
            diameter_over_tau: diameter / run.tau,
            stop_reason: run.trace.stop_reason,
        })
    }
}

pub fn summarize(runs: &[TauRun], burn_in: usize) -> Result<SweepSummary> {
    Ok(SweepSummary {
        rows: runs
            .iter()
            .map(|r| SweepRow::from_run(r, burn_in))
            .collect::<Result<_>>()?,
    })
}

#[derive(Serialize)]
struct TraceRow {
    k: usize,
    residual: f64,
    frechet_value: f64,
    cycle_diameter: f64,
    dist_to_final: f64,
}

/// Writes one row per cycle: `k, residual, frechet_value, cycle_diameter, dist_to_final`,
/// where the Fréchet value and distance refer to `x^k`.
pub fn write_trace_csv(space: &SpaceParams, trace: &Trace, path: &Path) -> Result<()> {
    let distances = trace.distances_to_final(space)?;
    let mut writer = csv::Writer::from_path(path)?;
    for k in 0..trace.iterations() {
        writer.serialize(TraceRow {
            k,
            residual: trace.residuals[k],
            frechet_value: trace.frechet_values[k],
            cycle_diameter: trace.cycle_diameters[k],
            dist_to_final: distances[k],
        })?;
    }
    writer.flush()?;
    Ok(())
}

fn tau_label(tau: f64) -> String {
    format!("tau_{tau}")
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config: &'a ExperimentConfig,
    rows: &'a [SweepRow],
    diameters: Option<DiameterReport>,
}

/// Runs the sweep and writes `trace_tau_<τ>.csv` per τ, `summary.csv`,
/// `summary.json` and, when enabled, `trace_tau_<τ>.json` and
/// `regularity_tau_<τ>.json` into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepSummary> {
    let (points, runs) = run_sweep(config)?;
    let space = config.space_params()?;
    let out = &config.output_dir;
    fs::create_dir_all(out)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", out.display())))?;

    for run in &runs {
        let label = tau_label(run.tau);
        write_trace_csv(&space, &run.trace, &out.join(format!("trace_{label}.csv")))?;
        if config.emit_iterates {
            let file = fs::File::create(out.join(format!("trace_{label}.json")))?;
            serde_json::to_writer(std::io::BufWriter::new(file), &run.trace)?;
        }
        if config.regularity_pairs > 0 {
            let report = regularity_for_run(config, &space, &points, run)?;
            let file = fs::File::create(out.join(format!("regularity_{label}.json")))?;
            serde_json::to_writer_pretty(std::io::BufWriter::new(file), &report)?;
        }
    }

    let summary = summarize(&runs, config.burn_in)?;
    let mut writer = csv::Writer::from_path(out.join("summary.csv"))?;
    for row in &summary.rows {
        writer.serialize(row)?;
    }
    writer.flush()?;

    let diameters = compare_diameters(&summary).ok();
    let file = fs::File::create(out.join("summary.json"))?;
    serde_json::to_writer_pretty(
        std::io::BufWriter::new(file),
        &SummaryFile {
            config,
            rows: &summary.rows,
            diameters,
        },
    )?;
    Ok(summary)
}

/// Regularity report for one τ: the composite map is checked with the prox
/// constants for `c = 2` on pairs drawn around the final iterate within twice
/// the data diameter.
pub fn regularity_for_run(
    config: &ExperimentConfig,
    space: &SpaceParams,
    points: &[Point],
    run: &TauRun,
) -> Result<RegularityReport> {
    let map = build_map(config, points, run.tau)?;
    let radius = (2.0 * space.set_diameter(points)?).max(1e-3);
    let pairs = sample_pairs(
        space,
        run.trace.final_iterate(),
        radius,
        config.regularity_pairs,
        config.seed,
    )?;
    let constants: RegularityConstants = prox_constants(space.c)?;
    let theory =
        TheoreticalConstants::for_relaxed_composite(space.c, &vec![run.tau; points.len()])?;
    regularity_report(
        space,
        map.as_fn(),
        &pairs,
        &constants,
        theory,
        &run.trace,
        config.burn_in,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterReport {
    /// `(τ, diameter/τ)` sorted by increasing τ.
    pub ratios: Vec<(f64, f64)>,
    /// `max(diameter/τ) / min(diameter/τ)`.
    pub spread: f64,
    /// Final cycle diameter strictly increases with τ.
    pub monotone_increasing: bool,
}

pub fn compare_diameters(summary: &SweepSummary) -> Result<DiameterReport> {
    if summary.rows.len() < 2 {
        return Err(Error::InsufficientData(
            "diameter comparison needs at least two tau values".into(),
        ));
    }
    let mut rows: Vec<&SweepRow> = summary.rows.iter().collect();
    rows.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let ratios: Vec<(f64, f64)> = rows.iter().map(|r| (r.tau, r.diameter_over_tau)).collect();
    let max = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let monotone_increasing = rows
        .windows(2)
        .all(|w| w[1].final_cycle_diameter > w[0].final_cycle_diameter);
    Ok(DiameterReport {
        ratios,
        spread: max / min,
        monotone_increasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRow {
    pub tau: f64,
    pub dist_to_mean: f64,
    pub cycle_diameter: f64,
    /// `d(final, mean) ≤ cycle diameter + 1e−8`.
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthReport {
    pub mean: Point,
    pub rows: Vec<GroundTruthRow>,
}

impl GroundTruthReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.bound_holds)
    }

    /// `d(final, mean)` decreases as τ decreases.
    pub fn decreasing_with_tau(&self) -> bool {
        let mut rows: Vec<&GroundTruthRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.tau.total_cmp(&b.tau));
        rows.windows(2)
            .all(|w| w[0].dist_to_mean < w[1].dist_to_mean)
    }
}

pub const GROUND_TRUTH_SLACK: f64 = 1e-8;

/// Compares each τ run against the exact Euclidean Fréchet mean for `p = 2`,
/// the weighted average of the data.
pub fn euclidean_ground_truth(config: &ExperimentConfig) -> Result<GroundTruthReport> {
    if config.space != SpaceKind::Euclidean || config.p != 2.0 {
        return Err(Error::Config(
            "ground truth is only available for euclidean space with p = 2".into(),
        ));
    }
    let (points, runs) = run_sweep(config)?;
    let space = config.space_params()?;
    let weights = config.weight_values();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; config.dim];
    for (pt, w) in points.iter().zip(&weights) {
        for (m, v) in mean.iter_mut().zip(pt.data()) {
            *m += w / total * v;
        }
    }
    let mean = Point::euclidean(mean)?;
    let rows = runs
        .iter()
        .map(|run| {
            let dist_to_mean = space.distance(run.trace.final_iterate(), &mean)?;
            let cycle_diameter = fixed_point_gap_bound(&run.trace)?;
            Ok(GroundTruthRow {
                tau: run.tau,
                dist_to_mean,
                cycle_diameter,
                bound_holds: dist_to_mean <= cycle_diameter + GROUND_TRUTH_SLACK,
            })
        })
        .collect::<Result<_>>()?;
    Ok(GroundTruthReport { mean, rows })
}
