//! Cyclic (relaxed) proximal splitting for sums of distance-power terms.
//!
//! One application of the composite map runs through the terms in order,
//! replacing the current point by `τ_j prox_j(x) ⊕ (1 − τ_j) x`. The
//! [`CompositeMap::iterate`] driver repeats full cycles until the residual
//! `d(x^k, x^{k+1})` drops below the tolerance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, SpaceParams};
use crate::prox::{prox_distance_power_with, relax, ProxTerm, WeightConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Plain composition of prox mappings; every `τ_j` is treated as 1.
    Cyclic,
    /// Composition of relaxed prox mappings with the terms' own `τ_j`.
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Tolerance,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeMap {
    pub space: SpaceParams,
    terms: Vec<ProxTerm>,
    pub variant: Variant,
    pub convention: WeightConvention,
    /// Reorders the terms at the start of every cycle when set.
    pub shuffle_seed: Option<u64>,
}

impl CompositeMap {
    pub fn new(space: SpaceParams, terms: Vec<ProxTerm>, variant: Variant) -> Result<Self> {
        space.validate()?;
        if terms.is_empty() {
            return Err(Error::Empty("composite map terms"));
        }
        let first = &terms[0].anchor;
        for term in &terms {
            term.validate()?;
            if term.anchor.kind() != space.kind {
                return Err(Error::SpaceMismatch {
                    expected: space.kind,
                    found: term.anchor.kind(),
                });
            }
            if term.anchor.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: term.anchor.dim(),
                });
            }
        }
        Ok(CompositeMap {
            space,
            terms,
            variant,
            convention: WeightConvention::Scaled,
            shuffle_seed: None,
        })
    }

    pub fn with_convention(mut self, convention: WeightConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_shuffle(mut self, seed: u64) -> Self {
        self.shuffle_seed = Some(seed);
        self
    }

    pub fn terms(&self) -> &[ProxTerm] {
        &self.terms
    }

    fn tau(&self, term: &ProxTerm) -> f64 {
        match self.variant {
            Variant::Cyclic => 1.0,
            Variant::Relaxed => term.tau,
        }
    }

    /// Relaxed prox step of a single term.
    pub fn step(&self, term: &ProxTerm, x: &Point) -> Result<Point> {
        relax(
            &self.space,
            |z| prox_distance_power_with(&self.space, term, z, self.convention),
            self.tau(term),
            x,
        )
    }

    /// One full cycle in list order; returns `x_m` and `(x_1, …, x_m)`.
    pub fn apply_once(&self, x: &Point) -> Result<(Point, Vec<Point>)> {
        let order: Vec<usize> = (0..self.terms.len()).collect();
        self.apply_in_order(x, &order)
    }

    fn apply_in_order(&self, x: &Point, order: &[usize]) -> Result<(Point, Vec<Point>)> {
        let mut intermediates = Vec::with_capacity(order.len());
        let mut current = x.clone();
        for &j in order {
            current = self.step(&self.terms[j], &current)?;
            intermediates.push(current.clone());
        }
        Ok((current, intermediates))
    }

    /// The composite map as a closure, for the regularity checkers.
    pub fn as_fn(&self) -> impl Fn(&Point) -> Result<Point> + '_ {
        move |x| self.apply_once(x).map(|(next, _)| next)
    }

    /// Runs cycles from `x0` until `d(x^k, x^{k+1}) < tol` or `max_iters` cycles.
    pub fn iterate(&self, x0: &Point, tol: f64, max_iters: usize) -> Result<Trace> {
        if !(tol >= 0.0) {
            return Err(Error::out_of_range("tol", tol, "[0, ∞)"));
        }
        if max_iters == 0 {
            return Err(Error::out_of_range("max_iters", 0.0, "[1, ∞)"));
        }
        if x0.kind() != self.space.kind {
            return Err(Error::SpaceMismatch {
                expected: self.space.kind,
                found: x0.kind(),
            });
        }
        let mut rng = self.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
        let mut order: Vec<usize> = (0..self.terms.len()).collect();

        let mut trace = Trace {
            iterates: vec![x0.clone()],
            residuals: Vec::new(),
            frechet_values: vec![frechet_value(&self.space, &self.terms, x0)?],
            cycle_points: Vec::new(),
            cycle_diameters: Vec::new(),
            stop_reason: StopReason::MaxIters,
        };
        let mut current = x0.clone();
        for k in 0..max_iters {
            if let Some(rng) = rng.as_mut() {
                order.shuffle(rng);
            }
            let (next, intermediates) = self.apply_in_order(&current, &order)?;
            if !next.is_finite() {
                return Err(Error::NonFinite { iteration: k });
            }
            let residual = self.space.distance(&current, &next)?;
            let diameter = self.space.set_diameter(&intermediates)?;
            let value = frechet_value(&self.space, &self.terms, &next)?;
            if !(residual.is_finite() && diameter.is_finite() && value.is_finite()) {
                return Err(Error::NonFinite { iteration: k });
            }
            trace.residuals.push(residual);
            trace.cycle_diameters.push(diameter);
            trace.cycle_points.push(intermediates);
            trace.frechet_values.push(value);
            trace.iterates.push(next.clone());
            current = next;
            if residual < tol {
                trace.stop_reason = StopReason::Tolerance;
                break;
            }
        }
        Ok(trace)
    }
}

/// Full record of a run.
///
/// `iterates` and `frechet_values` hold `K + 1` entries (`x^0 … x^K`); the
/// per-cycle fields hold `K` entries, entry `k` describing the cycle that
/// maps `x^k` to `x^{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub iterates: Vec<Point>,
    pub residuals: Vec<f64>,
    pub frechet_values: Vec<f64>,
    pub cycle_points: Vec<Vec<Point>>,
    pub cycle_diameters: Vec<f64>,
    pub stop_reason: StopReason,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_iterate(&self) -> &Point {
        self.iterates.last().expect("trace always holds x0")
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }

    /// `d(x^k, x^K)` for every iterate.
    pub fn distances_to_final(&self, space: &SpaceParams) -> Result<Vec<f64>> {
        let last = self.final_iterate();
        self.iterates
            .iter()
            .map(|x| space.distance(x, last))
            .collect()
    }
}

/// `F(x) = Σ ω̂_j d(x, a_j)^p` with weights normalized to sum to one.
pub fn frechet_value(space: &SpaceParams, terms: &[ProxTerm], x: &Point) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::Empty("frechet terms"));
    }
    let total: f64 = terms.iter().map(|t| t.weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        log::warn!("frechet weights sum to {total}; normalizing");
    }
    let mut value = 0.0;
    for term in terms {
        value += term.weight / total * space.distance(x, &term.anchor)?.powf(space.p);
    }
    Ok(value)
}

/// Final cycle diameter, an upper bound for the distance between the
/// iteration's limit and the minimizer of the Fréchet function.
pub fn fixed_point_gap_bound(trace: &Trace) -> Result<f64> {
    trace
        .cycle_diameters
        .last()
        .copied()
        .ok_or(Error::Empty("trace has no cycles"))
}
