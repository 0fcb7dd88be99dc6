//! Numerical checks of the regularity theory behind the splitting iterations:
//! regularity constants of prox mappings and their relaxations, the almost
//! α-firmly nonexpansive inequality on sampled pairs, Fejér monotonicity,
//! linear gauges, and empirical R-linear rate estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourpoint::{psi, Quadruple};
use crate::geometry::{Point, SpaceKind, SpaceParams};
use crate::splitting::Trace;

/// Excess above this counts as a violation of the α-fne inequality.
pub const AFNE_TOLERANCE: f64 = 1e-8;
/// Slack for gauge sequence checks.
pub const GAUGE_TOLERANCE: f64 = 1e-10;
/// Residuals at or below this are treated as converged to the rounding floor.
pub const RESIDUAL_FLOOR: f64 = 1e-14;
pub const MIN_FIT_POINTS: usize = 10;

/// Constant `α` and violation `ε` of an almost α-firmly nonexpansive mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityConstants {
    pub alpha: f64,
    pub epsilon: f64,
}

impl RegularityConstants {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::out_of_range("alpha", alpha, "(0, 1)"));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::out_of_range("epsilon", epsilon, "[0, ∞)"));
        }
        Ok(RegularityConstants { alpha, epsilon })
    }

    /// `(1 − α)/α`, the weight on the transport discrepancy.
    pub fn psi_weight(&self) -> f64 {
        (1.0 - self.alpha) / self.alpha
    }
}

/// Constants of a prox mapping in a p-uniformly convex space with constant `c`:
/// `α_c = c(c−1)/(c(c−1)+2)` and `ε_c = (2−c)/(c−1)`.
pub fn prox_constants(c: f64) -> Result<RegularityConstants> {
    if !(c > 1.5 && c <= 2.0) {
        return Err(Error::out_of_range("c", c, "(3/2, 2]"));
    }
    let k = c * (c - 1.0);
    RegularityConstants::new(k / (k + 2.0), (2.0 - c) / (c - 1.0))
}

/// Violation of the relaxation `τT ⊕ (1 − τ)Id` of a mapping with violation `ε`:
/// `ε_τ = τ(2τ + (1−τ)c + ε(τ + (c/2)(1−τ)) − 2)`.
///
/// At `c = 2` this is exactly `ετ`.
pub fn relaxed_violation(tau: f64, epsilon: f64, c: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&tau));
    if c == 2.0 {
        return epsilon * tau;
    }
    tau * (2.0 * tau + (1.0 - tau) * c + epsilon * (tau + 0.5 * c * (1.0 - tau)) - 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeViolation {
    pub value: f64,
    /// The convergence theory needs the composite violation to be at most one.
    pub exceeds_one: bool,
}

/// `∏(1 + ε_j) − 1`.
pub fn composite_violation(violations: &[f64]) -> Result<CompositeViolation> {
    let mut product = 1.0;
    for &eps in violations {
        if !(eps >= 0.0) {
            return Err(Error::out_of_range("violation", eps, "[0, ∞)"));
        }
        product *= 1.0 + eps;
    }
    let value = product - 1.0;
    Ok(CompositeViolation {
        value,
        exceeds_one: value > 1.0,
    })
}

/// Linear gauge `θ(t) = γt` for a mapping with constants `(α, ε)` and error
/// bound modulus `ρ`, where `γ = (1 + ε − (1−α)/(ρ^p α))^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGauge {
    pub rho: f64,
    pub p: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl LinearGauge {
    pub fn theta(&self, t: f64) -> f64 {
        self.gamma * t
    }

    /// Admissible `ρ` interval `[((1−α)/((1+ε)α))^{1/p}, ((1−α)/(εα))^{1/p}]`;
    /// the upper end is `+∞` when `ε = 0`.
    pub fn admissible_rho(p: f64, constants: &RegularityConstants) -> (f64, f64) {
        let RegularityConstants { alpha, epsilon } = *constants;
        let ratio = (1.0 - alpha) / alpha;
        let lower = (ratio / (1.0 + epsilon)).powf(1.0 / p);
        let upper = if epsilon == 0.0 {
            f64::INFINITY
        } else {
            (ratio / epsilon).powf(1.0 / p)
        };
        (lower, upper)
    }
}

pub fn linear_gauge(rho: f64, p: f64, constants: &RegularityConstants) -> Result<LinearGauge> {
    if !(rho > 0.0 && p > 1.0) {
        return Err(Error::out_of_range("rho", rho, "(0, ∞) with p > 1"));
    }
    let RegularityConstants { alpha, epsilon } = *constants;
    let radicand = 1.0 + epsilon - (1.0 - alpha) / (rho.powf(p) * alpha);
    if !(radicand > 0.0 && radicand < 1.0) {
        return Err(Error::out_of_range(
            "gauge radicand",
            radicand,
            "(0, 1); rho is not admissible",
        ));
    }
    Ok(LinearGauge {
        rho,
        p,
        alpha,
        epsilon,
        gamma: radicand.powf(1.0 / p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfneReport {
    /// `max d(Tx,Ty)^p − (1+ε)d(x,y)^p + ((1−α)/α)ψ(x,y,Tx,Ty)` over the sample.
    pub max_excess: f64,
    pub violating_pairs: usize,
    pub pairs: usize,
}

impl AfneReport {
    pub fn holds(&self) -> bool {
        self.violating_pairs == 0
    }
}

/// Evaluates the almost α-fne inequality
/// `d(Tx,Ty)^p ≤ (1+ε)d(x,y)^p − ((1−α)/α)ψ(x,y,Tx,Ty)` on each pair.
pub fn check_afne<F>(
    space: &SpaceParams,
    map: F,
    pairs: &[(Point, Point)],
    constants: &RegularityConstants,
) -> Result<AfneReport>
where
    F: Fn(&Point) -> Result<Point>,
{
    let images = pairs
        .iter()
        .map(|(x, y)| Ok((map(x)?, map(y)?)))
        .collect::<Result<Vec<_>>>()?;
    afne_excess_report(space, pairs, &images, constants)
}

fn afne_excess(
    space: &SpaceParams,
    (x, y): &(Point, Point),
    (tx, ty): &(Point, Point),
    constants: &RegularityConstants,
) -> Result<f64> {
    let lhs = space.distance_pow(tx, ty)?;
    let discrepancy = psi(space, &Quadruple::new(x, y, tx, ty))?;
    Ok(lhs - (1.0 + constants.epsilon) * space.distance_pow(x, y)?
        + constants.psi_weight() * discrepancy)
}

fn afne_excess_report(
    space: &SpaceParams,
    pairs: &[(Point, Point)],
    images: &[(Point, Point)],
    constants: &RegularityConstants,
) -> Result<AfneReport> {
    let mut report = AfneReport {
        max_excess: f64::NEG_INFINITY,
        violating_pairs: 0,
        pairs: pairs.len(),
    };
    for (pair, image) in pairs.iter().zip(images) {
        let excess = afne_excess(space, pair, image, constants)?;
        report.max_excess = report.max_excess.max(excess);
        if excess > AFNE_TOLERANCE {
            report.violating_pairs += 1;
        }
    }
    Ok(report)
}

/// Smallest `α` for which `map` passes [`check_afne`] with violation `epsilon`,
/// located by 40 bisection steps on `(0, 1)`.
///
/// Returns `None` when the inequality fails even as `α → 1`.
pub fn find_alpha<F>(
    space: &SpaceParams,
    map: F,
    pairs: &[(Point, Point)],
    epsilon: f64,
) -> Result<Option<f64>>
where
    F: Fn(&Point) -> Result<Point>,
{
    let images = pairs
        .iter()
        .map(|(x, y)| Ok((map(x)?, map(y)?)))
        .collect::<Result<Vec<_>>>()?;
    let passes = |alpha: f64| -> Result<bool> {
        let constants = RegularityConstants::new(alpha, epsilon)?;
        Ok(afne_excess_report(space, pairs, &images, &constants)?.holds())
    };
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
    if !passes(hi)? {
        return Ok(None);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Random pairs inside the geodesic ball `B(center, radius)`.
///
/// Each point is `center ⊕ t·u` for a random point `u` of the space, scaled so
/// its distance from `center` is uniform on `[0, radius)` (capped at `d(center, u)`).
pub fn sample_pairs(
    space: &SpaceParams,
    center: &Point,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<(Point, Point)>> {
    if !(radius > 0.0) {
        return Err(Error::out_of_range("radius", radius, "(0, ∞)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<Point> {
        loop {
            let u = space.random_point_with(rng, center.dim())?;
            let d = space.distance(center, &u)?;
            let near_antipodal = space.kind == SpaceKind::Sphere && d > std::f64::consts::PI - 1e-6;
            if d < 1e-12 || near_antipodal {
                continue;
            }
            let target: f64 = radius * rng.random::<f64>();
            return space.geodesic(center, &u, (target / d).min(1.0));
        }
    };
    (0..count)
        .map(|_| Ok((draw(&mut rng)?, draw(&mut rng)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FejerReport {
    /// `max_k d(x^{k+1}, y) − d(x^k, y)`.
    pub max_increase: f64,
}

pub fn check_fejer(space: &SpaceParams, trace: &Trace, reference: &Point) -> Result<FejerReport> {
    let distances = trace
        .iterates
        .iter()
        .map(|x| space.distance(x, reference))
        .collect::<Result<Vec<_>>>()?;
    let max_increase = distances
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(FejerReport {
        max_increase: if distances.len() < 2 {
            0.0
        } else {
            max_increase
        },
    })
}

/// Least-squares fit `log r_k ≈ intercept + k log(rate)` after `burn_in`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub burn_in: usize,
    /// Residuals used in the fit.
    pub points: usize,
}

/// Fits a geometric decay to `residuals[burn_in..]`, truncated at the first
/// residual at or below the rounding floor.
pub fn fit_rate(residuals: &[f64], burn_in: usize) -> Result<RateFit> {
    if let Some(bad) = residuals.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::out_of_range("residual", *bad, "[0, ∞)"));
    }
    let window: Vec<(f64, f64)> = residuals
        .iter()
        .enumerate()
        .skip(burn_in)
        .take_while(|(_, &r)| r > RESIDUAL_FLOOR)
        .map(|(k, &r)| (k as f64, r.ln()))
        .collect();
    if window.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} positive residuals after burn-in {burn_in}, need {MIN_FIT_POINTS}",
            window.len()
        )));
    }
    let n = window.len() as f64;
    let mean_k = window.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = window.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(k, y) in &window {
        sxx += (k - mean_k) * (k - mean_k);
        sxy += (k - mean_k) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_k;
    let ss_res: f64 = window
        .iter()
        .map(|&(k, y)| (y - intercept - slope * k).powi(2))
        .sum();
    // a flat sequence is fitted exactly by the zero-slope line
    let r_squared = if syy <= f64::EPSILON * n * mean_y.abs().max(1.0) {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        rate: slope.exp(),
        intercept,
        r_squared,
        burn_in,
        points: window.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub holds: bool,
    pub first_violation: Option<usize>,
}

/// Checks `d_{k+1} ≤ γ d_k + 1e−10` along a distance sequence.
pub fn check_gauge_sequence(distances: &[f64], gauge: &LinearGauge) -> GaugeReport {
    let first_violation = distances
        .windows(2)
        .position(|w| w[1] > gauge.theta(w[0]) + GAUGE_TOLERANCE);
    GaugeReport {
        holds: first_violation.is_none(),
        first_violation,
    }
}

/// Empirical error-bound ratios `d(x^k, x*) / d(x^k, x^{k+1})` along a run,
/// skipping steps with vanishing residual.
pub fn error_bound_ratios(
    space: &SpaceParams,
    trace: &Trace,
    reference: &Point,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(trace.residuals.len());
    for (x, &r) in trace.iterates.iter().zip(&trace.residuals) {
        if r > RESIDUAL_FLOOR {
            out.push(space.distance(x, reference)? / r);
        }
    }
    Ok(out)
}

/// Machine-readable summary of the regularity checks for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub constants: TheoreticalConstants,
    pub max_excess: f64,
    pub violating_pairs: usize,
    pub fitted_rate: Option<f64>,
    pub r_squared: Option<f64>,
    pub gauge_holds: Option<bool>,
}

/// Theoretical constants for an `m`-term relaxed prox composite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalConstants {
    pub alpha_c: f64,
    pub epsilon_c: f64,
    /// Composite violation `∏(1 + ε_{τ_j}) − 1`.
    pub epsilon_bar: f64,
    /// Rate `γ` of the linear gauge built from the fitted contraction, when admissible.
    pub gamma: Option<f64>,
}

impl TheoreticalConstants {
    pub fn for_relaxed_composite(c: f64, taus: &[f64]) -> Result<Self> {
        let prox = prox_constants(c)?;
        let violations: Vec<f64> = taus
            .iter()
            .map(|&tau| relaxed_violation(tau, prox.epsilon, c))
            .collect();
        Ok(TheoreticalConstants {
            alpha_c: prox.alpha,
            epsilon_c: prox.epsilon,
            epsilon_bar: composite_violation(&violations)?.value,
            gamma: None,
        })
    }
}

/// Assembles a [`RegularityReport`] for a map and a finished run.
pub fn regularity_report<F>(
    space: &SpaceParams,
    map: F,
    pairs: &[(Point, Point)],
    constants: &RegularityConstants,
    theory: TheoreticalConstants,
    trace: &Trace,
    burn_in: usize,
) -> Result<RegularityReport>
where
    F: Fn(&Point) -> Result<Point>,
{
    let afne = check_afne(space, map, pairs, constants)?;
    let fit = fit_rate(&trace.residuals, burn_in).ok();
    let distances = trace.distances_to_final(space)?;
    let gauge_holds = fit.map(|f| {
        let gauge = LinearGauge {
            rho: f64::NAN,
            p: space.p,
            alpha: constants.alpha,
            epsilon: constants.epsilon,
            gamma: f.rate,
        };
        let tail = &distances[burn_in.min(distances.len())..];
        // the last distances are zero by construction
        let tail = &tail[..tail.len().saturating_sub(1)];
        check_gauge_sequence(tail, &gauge).holds
    });
    Ok(RegularityReport {
        constants: TheoreticalConstants {
            gamma: fit.map(|f| f.rate),
            ..theory
        },
        max_excess: afne.max_excess,
        violating_pairs: afne.violating_pairs,
        fitted_rate: fit.map(|f| f.rate),
        r_squared: fit.map(|f| f.r_squared),
        gauge_holds,
    })
}
