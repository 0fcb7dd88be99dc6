//! Closed-form proximal mappings of weighted distance powers and ball
//! indicators, geodesic relaxation, and a brute-force one-dimensional prox
//! oracle used to validate the closed forms.
//!
//! The p-prox of `f` with parameter `λ` is
//! `argmin_y f(y) + d(y, x)^p / (p λ^{p−1})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, SpaceKind, SpaceParams};

/// How a term's weight enters its objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightConvention {
    /// `f(y) = (ω/p) d(y, a)^p`
    #[default]
    Scaled,
    /// `f(y) = ω d(y, a)^p`
    Unscaled,
}

/// One summand `f_j` of the objective with its prox parameter `λ_j` and
/// relaxation `τ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxTerm {
    pub anchor: Point,
    pub weight: f64,
    pub power: f64,
    pub lambda: f64,
    pub tau: f64,
}

impl ProxTerm {
    pub fn new(anchor: Point, weight: f64, power: f64, lambda: f64, tau: f64) -> Result<Self> {
        let term = ProxTerm {
            anchor,
            weight,
            power,
            lambda,
            tau,
        };
        term.validate()?;
        Ok(term)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::out_of_range("weight", self.weight, "(0, ∞)"));
        }
        if !(self.power > 1.0 && self.power.is_finite()) {
            return Err(Error::out_of_range("power", self.power, "(1, ∞)"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::out_of_range("lambda", self.lambda, "(0, ∞)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::out_of_range("tau", self.tau, "(0, 1]"));
        }
        Ok(())
    }

    fn check_space(&self, space: &SpaceParams) -> Result<()> {
        if (self.power - space.p).abs() > 0.0 {
            return Err(Error::out_of_range(
                "power",
                self.power,
                "the ambient space exponent p",
            ));
        }
        Ok(())
    }

    /// Weight multiplying `d(·, a)^p / p` under `convention`.
    fn effective_weight(&self, convention: WeightConvention) -> f64 {
        match convention {
            WeightConvention::Scaled => self.weight,
            WeightConvention::Unscaled => self.power * self.weight,
        }
    }

    /// Geodesic fraction `t* = λω^{1/(p−1)} / (1 + λω^{1/(p−1)})` of the prox
    /// step from `x` toward the anchor.
    pub fn step_fraction(&self, convention: WeightConvention) -> f64 {
        let w = self.effective_weight(convention);
        let s = self.lambda * w.powf(1.0 / (self.power - 1.0));
        s / (1.0 + s)
    }

    /// `f(y)` under `convention`.
    pub fn value(
        &self,
        space: &SpaceParams,
        y: &Point,
        convention: WeightConvention,
    ) -> Result<f64> {
        let w = self.effective_weight(convention);
        Ok(w / self.power * space.distance(y, &self.anchor)?.powf(self.power))
    }
}

/// Indicator of the closed geodesic ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallIndicator {
    pub center: Point,
    pub radius: f64,
}

impl BallIndicator {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::out_of_range("radius", radius, "(0, ∞)"));
        }
        if center.kind() == SpaceKind::Sphere && radius >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::out_of_range(
                "radius",
                radius,
                "(0, π/2) on the sphere",
            ));
        }
        Ok(BallIndicator { center, radius })
    }

    /// `d(y, B)`.
    pub fn distance_to(&self, space: &SpaceParams, y: &Point) -> Result<f64> {
        Ok((space.distance(y, &self.center)? - self.radius).max(0.0))
    }
}

/// Prox of `(ω/p) d(·, a)^p` at `x`.
pub fn prox_distance_power(space: &SpaceParams, term: &ProxTerm, x: &Point) -> Result<Point> {
    prox_distance_power_with(space, term, x, WeightConvention::Scaled)
}

pub fn prox_distance_power_with(
    space: &SpaceParams,
    term: &ProxTerm,
    x: &Point,
    convention: WeightConvention,
) -> Result<Point> {
    term.check_space(space)?;
    space.geodesic(x, &term.anchor, term.step_fraction(convention))
}

/// Metric projection onto a geodesic ball.
pub fn project_ball(space: &SpaceParams, ball: &BallIndicator, x: &Point) -> Result<Point> {
    let d = space.distance(&ball.center, x)?;
    if d <= ball.radius {
        return Ok(x.clone());
    }
    space.geodesic(&ball.center, x, ball.radius / d)
}

/// Prox of `(1/p) d(·, B)^p` for a ball `B`: the point `λ/(1+λ)` of the way
/// from `x` to its projection onto `B`.
pub fn prox_ball_distance(
    space: &SpaceParams,
    ball: &BallIndicator,
    lambda: f64,
    x: &Point,
) -> Result<Point> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::out_of_range("lambda", lambda, "(0, ∞)"));
    }
    let projection = project_ball(space, ball, x)?;
    space.geodesic(x, &projection, lambda / (1.0 + lambda))
}

/// `τ·inner(x) ⊕ (1 − τ)x`.
pub fn relax<F>(space: &SpaceParams, inner: F, tau: f64, x: &Point) -> Result<Point>
where
    F: Fn(&Point) -> Result<Point>,
{
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::out_of_range("tau", tau, "(0, 1]"));
    }
    let target = inner(x)?;
    if tau == 1.0 {
        return Ok(target);
    }
    space.geodesic(x, &target, tau)
}

const ORACLE_GRID: usize = 10_000;
const ORACLE_WIDTH: f64 = 1e-10;

/// Brute-force prox: minimizes `objective(y) + d(y, x)^p / (p λ^{p−1})` over
/// the geodesic from `x` to `search_anchor`.
///
/// A uniform grid of 10⁴ + 1 samples brackets the minimum, then ternary
/// search shrinks the bracket to width 1e−10. Comparing values alone cannot
/// resolve the minimizer much below √ε, so a final parabolic step through
/// three points 1e−5 apart sharpens the estimate.
pub fn prox_oracle<F>(
    space: &SpaceParams,
    objective: F,
    x: &Point,
    lambda: f64,
    p: f64,
    search_anchor: &Point,
) -> Result<Point>
where
    F: Fn(&Point) -> Result<f64>,
{
    if !(lambda > 0.0 && p > 1.0) {
        return Err(Error::out_of_range("lambda", lambda, "(0, ∞) with p > 1"));
    }
    let segment = space.segment(x, search_anchor)?;
    let scale = 1.0 / (p * lambda.powf(p - 1.0));
    let total = |t: f64| -> Result<f64> {
        let y = segment.point_at(space, t)?;
        let value = objective(&y)? + scale * space.distance(&y, x)?.powf(p);
        if !value.is_finite() {
            return Err(Error::NonFinite { iteration: 0 });
        }
        Ok(value)
    };

    let mut best = (0usize, f64::INFINITY);
    for i in 0..=ORACLE_GRID {
        let v = total(i as f64 / ORACLE_GRID as f64)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let step = 1.0 / ORACLE_GRID as f64;
    let mut lo = (best.0 as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best.0 + 1) as f64 * step).min(1.0);
    while hi - lo > ORACLE_WIDTH {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if total(m1)? <= total(m2)? {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mid = 0.5 * (lo + hi);
    segment.point_at(space, parabolic_polish(&total, mid)?)
}

const POLISH_SPACING: f64 = 1e-5;

fn parabolic_polish<F>(total: &F, t: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let h = POLISH_SPACING;
    if t - h < 0.0 || t + h > 1.0 {
        return Ok(t);
    }
    let (fl, f0, fr) = (total(t - h)?, total(t)?, total(t + h)?);
    let curvature = fl - 2.0 * f0 + fr;
    if !(curvature > 0.0) {
        return Ok(t);
    }
    let shift = 0.5 * h * (fl - fr) / curvature;
    if shift.abs() > h {
        return Ok(t);
    }
    Ok(t + shift)
}
