//! Four-point quantities used by every regularity check.
//!
//! For a quadruple `(x, y, u, v)`:
//!
//! ```text
//! Δ(x,y,u,v) = (c/4)(d(x,v)^p + d(y,u)^p − d(x,u)^p − d(y,v)^p)
//! ψ(x,y,u,v) = (c/2)(d(x,u)^p + d(y,v)^p + d(u,v)^p + d(x,y)^p − d(y,u)^p − d(x,v)^p)
//! ```
//!
//! `ψ` is the transport discrepancy when `u = T(x)` and `v = T(y)`.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::geometry::{Point, SpaceParams};

/// Four points of one common space.
#[derive(Debug, Clone, Copy)]
pub struct Quadruple<'a> {
    pub x: &'a Point,
    pub y: &'a Point,
    pub u: &'a Point,
    pub v: &'a Point,
}

impl<'a> Quadruple<'a> {
    pub fn new(x: &'a Point, y: &'a Point, u: &'a Point, v: &'a Point) -> Self {
        Quadruple { x, y, u, v }
    }
}

/// The six pairwise `d(·,·)^p` values of a quadruple.
#[derive(Debug, Clone, Copy)]
struct PairPowers {
    xy: f64,
    uv: f64,
    xu: f64,
    yv: f64,
    xv: f64,
    yu: f64,
}

impl PairPowers {
    fn new(space: &SpaceParams, q: &Quadruple<'_>) -> Result<Self> {
        let dp = |a: &Point, b: &Point| space.distance_pow(a, b);
        Ok(PairPowers {
            xy: dp(q.x, q.y)?,
            uv: dp(q.u, q.v)?,
            xu: dp(q.x, q.u)?,
            yv: dp(q.y, q.v)?,
            xv: dp(q.x, q.v)?,
            yu: dp(q.y, q.u)?,
        })
    }
}

pub fn delta(space: &SpaceParams, q: &Quadruple<'_>) -> Result<f64> {
    let d = PairPowers::new(space, q)?;
    Ok(0.25 * space.c * (d.xv + d.yu - d.xu - d.yv))
}

pub fn psi(space: &SpaceParams, q: &Quadruple<'_>) -> Result<f64> {
    let d = PairPowers::new(space, q)?;
    Ok(0.5 * space.c * (d.xu + d.yv + d.uv + d.xy - d.yu - d.xv))
}

/// Both quantities from one set of distance evaluations.
pub fn delta_and_psi(space: &SpaceParams, q: &Quadruple<'_>) -> Result<(f64, f64)> {
    let d = PairPowers::new(space, q)?;
    Ok((
        0.25 * space.c * (d.xv + d.yu - d.xu - d.yv),
        0.5 * space.c * (d.xu + d.yv + d.uv + d.xy - d.yu - d.xv),
    ))
}

/// Uniform-convexity constant `c_δ = 4δ√κ tan(π/2 − 2δ√κ)` of a geodesic ball of
/// radius `delta` in a CAT(κ) space, valid for `0 < δ < π/(4√κ)`.
pub fn cap_convexity_constant(kappa: f64, delta: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::out_of_range("kappa", kappa, "(0, ∞)"));
    }
    let s = delta * kappa.sqrt();
    if !(s > 0.0 && s < FRAC_PI_4) {
        return Err(Error::out_of_range("delta", delta, "(0, π/(4√κ))"));
    }
    // tan(π/2 − 2s) = 1 / tan(2s)
    Ok(4.0 * s / (2.0 * s).tan())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pt(v: [f64; 2]) -> Point {
        Point::euclidean(v.to_vec()).unwrap()
    }

    #[test]
    fn delta_fixtures() {
        let s = SpaceParams::euclidean();
        let (x, y, u, v) = (
            pt([0.0, 0.0]),
            pt([1.0, 0.0]),
            pt([0.0, 1.0]),
            pt([1.0, 1.0]),
        );
        assert!((delta(&s, &Quadruple::new(&x, &y, &u, &v)).unwrap() - 1.0).abs() < 1e-15);
        // u = x, v = y
        let d = delta(&s, &Quadruple::new(&x, &v, &x, &v)).unwrap();
        assert!((d - 0.5 * 2.0 * 2.0).abs() < 1e-15);
        // x = y, u = v
        assert_eq!(delta(&s, &Quadruple::new(&x, &x, &u, &u)).unwrap(), 0.0);
    }

    #[test]
    fn psi_fixtures() {
        let s = SpaceParams::euclidean();
        let (x, y, u, v) = (
            pt([0.0, 0.0]),
            pt([1.0, 0.0]),
            pt([0.0, 1.0]),
            pt([1.0, 1.0]),
        );
        assert!(psi(&s, &Quadruple::new(&x, &y, &u, &v)).unwrap().abs() < 1e-14);
        assert!(psi(&s, &Quadruple::new(&x, &y, &x, &y)).unwrap().abs() < 1e-14);
        // y = v gives (c/2) d(u, x)^p
        let w = pt([3.0, -1.0]);
        let val = psi(&s, &Quadruple::new(&x, &y, &w, &y)).unwrap();
        assert!((val - 10.0).abs() < 1e-12);
    }

    #[test]
    fn psi_fixed_point_pattern_on_sphere_cap() {
        let s = SpaceParams::sphere_cap(1.0, 0.5).unwrap();
        let sp = SpaceParams::sphere();
        let x = sp.random_point(3, 1).unwrap();
        let y = sp.random_point(3, 2).unwrap();
        let u = sp.random_point(3, 3).unwrap();
        let val = psi(&s, &Quadruple::new(&x, &y, &u, &y)).unwrap();
        let expected = 0.5 * s.c * s.distance(&u, &x).unwrap().powi(2);
        assert!((val - expected).abs() < 1e-12);
    }

    #[test]
    fn cap_constant_fixtures() {
        assert!((cap_convexity_constant(1.0, PI / 8.0).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!((cap_convexity_constant(4.0, PI / 16.0).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!((cap_convexity_constant(1.0, 1e-6).unwrap() - 2.0).abs() < 1e-4);
    }

    #[test]
    fn cap_constant_domain() {
        assert!(cap_convexity_constant(1.0, 0.0).is_err());
        assert!(cap_convexity_constant(1.0, PI / 4.0).is_err());
        assert!(cap_convexity_constant(0.0, 0.1).is_err());
    }

    #[test]
    fn cap_constant_decreasing() {
        let grid: Vec<f64> = (1..100).map(|i| i as f64 * (PI / 4.0) / 100.0).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&d| cap_convexity_constant(1.0, d).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals.iter().all(|&c| c > 0.0 && c < 2.0));
    }

    #[test]
    fn mixed_spaces_rejected() {
        let s = SpaceParams::euclidean();
        let x = pt([0.0, 0.0]);
        let y = Point::spd_identity(2);
        assert!(delta(&s, &Quadruple::new(&x, &x, &x, &y)).is_err());
        assert!(psi(&s, &Quadruple::new(&x, &y, &x, &x)).is_err());
    }
}
