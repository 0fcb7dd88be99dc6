//! Uniquely geodesic model spaces: Euclidean `ℝ^d`, the unit sphere `S^{d−1}`
//! with its great-circle metric, and the SPD cone `S_{++}^d` with the
//! affine-invariant metric `d(A, B) = ‖log(A^{−1/2} B A^{−1/2})‖_F`.
//!
//! A [`Point`] is a tagged flat array. [`SpaceParams`] carries the space kind
//! together with the uniform-convexity exponent `p` and constant `c` that the
//! four-point quantities and regularity checks are evaluated with.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourpoint::cap_convexity_constant;
use crate::linalg::{self, SymmetricEigen};

/// Unit-norm tolerance for sphere points.
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Symmetry tolerance for SPD points, relative to `max(1, ‖A‖_F)`.
pub const SPD_SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues at or below this are rejected; the matrix logarithm diverges at 0.
pub const SPD_EIGEN_FLOOR: f64 = 1e-12;
/// Sphere pairs farther apart than `π − ANTIPODAL_MARGIN` have no unique geodesic.
pub const ANTIPODAL_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Euclidean,
    Sphere,
    Spd,
}

impl std::fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpaceKind::Euclidean => "euclidean",
            SpaceKind::Sphere => "sphere",
            SpaceKind::Spd => "spd",
        })
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(SpaceKind::Euclidean),
            "sphere" => Ok(SpaceKind::Sphere),
            "spd" => Ok(SpaceKind::Spd),
            other => Err(Error::Config(format!("unknown space `{other}`"))),
        }
    }
}

/// An element of one of the model spaces.
///
/// `dim` is the ambient dimension `d`: vectors hold `d` entries, SPD matrices
/// hold `d × d` entries in row-major order. Fields are private so every
/// `Point` in circulation has passed validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct Point {
    kind: SpaceKind,
    dim: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPoint {
    kind: SpaceKind,
    dim: usize,
    data: Vec<f64>,
}

impl TryFrom<RawPoint> for Point {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        let point = match raw.kind {
            SpaceKind::Euclidean => Point::euclidean(raw.data)?,
            SpaceKind::Sphere => Point::sphere(raw.data)?,
            SpaceKind::Spd => Point::spd(raw.dim, raw.data)?,
        };
        if point.dim != raw.dim {
            return Err(Error::DimensionMismatch {
                expected: raw.dim,
                found: point.dim,
            });
        }
        Ok(point)
    }
}

impl Point {
    pub fn euclidean(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("euclidean point"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: 0 });
        }
        Ok(Point {
            kind: SpaceKind::Euclidean,
            dim: data.len(),
            data,
        })
    }

    /// A sphere point; `data` must already have unit norm.
    pub fn sphere(data: Vec<f64>) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: data.len(),
            });
        }
        let norm = linalg::frobenius_norm(&data);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotUnitNorm { norm });
        }
        Ok(Point {
            kind: SpaceKind::Sphere,
            dim: data.len(),
            data,
        })
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn sphere_normalized(mut data: Vec<f64>) -> Result<Self> {
        let norm = linalg::frobenius_norm(&data);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotUnitNorm { norm });
        }
        data.iter_mut().for_each(|v| *v /= norm);
        Point::sphere(data)
    }

    /// An SPD matrix given as `dim × dim` row-major entries.
    pub fn spd(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: 0 });
        }
        let scale = linalg::frobenius_norm(&data).max(1.0);
        let asymmetry = linalg::asymmetry(dim, &data);
        if asymmetry > SPD_SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let eig = linalg::symmetric_eig(dim, &data)?;
        let min_eigenvalue = eig.min_value();
        if min_eigenvalue <= SPD_EIGEN_FLOOR {
            return Err(Error::NotPositiveDefinite { min_eigenvalue });
        }
        Ok(Point {
            kind: SpaceKind::Spd,
            dim,
            data,
        })
    }

    pub fn spd_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            data[i * n + i] = d;
        }
        Point::spd(n, data)
    }

    pub fn spd_identity(dim: usize) -> Self {
        Point {
            kind: SpaceKind::Spd,
            dim,
            data: linalg::identity(dim),
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Skips validation; only for values produced by the geometry kernels.
    fn from_parts(kind: SpaceKind, dim: usize, data: Vec<f64>) -> Self {
        Point { kind, dim, data }
    }
}

/// Space kind plus uniform-convexity parameters `(p, c)`.
///
/// On the sphere, `kappa` and `delta` describe a cap of radius `delta` in a
/// space of curvature `kappa`; when both are set, `c` is the cap constant
/// `4δ√κ tan(π/2 − 2δ√κ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpaceParams")]
pub struct SpaceParams {
    pub kind: SpaceKind,
    pub p: f64,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Deserialize)]
struct RawSpaceParams {
    kind: SpaceKind,
    #[serde(default = "default_exponent")]
    p: f64,
    #[serde(default = "default_exponent")]
    c: f64,
    #[serde(default)]
    kappa: Option<f64>,
    #[serde(default)]
    delta: Option<f64>,
}

fn default_exponent() -> f64 {
    2.0
}

impl TryFrom<RawSpaceParams> for SpaceParams {
    type Error = Error;

    fn try_from(raw: RawSpaceParams) -> Result<Self> {
        let params = SpaceParams {
            kind: raw.kind,
            p: raw.p,
            c: raw.c,
            kappa: raw.kappa,
            delta: raw.delta,
        };
        params.validate()?;
        Ok(params)
    }
}

impl SpaceParams {
    pub fn new(kind: SpaceKind, p: f64, c: f64) -> Result<Self> {
        let params = SpaceParams {
            kind,
            p,
            c,
            kappa: None,
            delta: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn euclidean() -> Self {
        SpaceParams {
            kind: SpaceKind::Euclidean,
            p: 2.0,
            c: 2.0,
            kappa: None,
            delta: None,
        }
    }

    pub fn spd() -> Self {
        SpaceParams {
            kind: SpaceKind::Spd,
            ..SpaceParams::euclidean()
        }
    }

    /// The whole sphere with the nominal constants `p = c = 2`.
    ///
    /// The sphere is not globally 2-uniformly convex; use [`SpaceParams::sphere_cap`]
    /// when the four-point constants must be valid.
    pub fn sphere() -> Self {
        SpaceParams {
            kind: SpaceKind::Sphere,
            ..SpaceParams::euclidean()
        }
    }

    /// A cap of radius `delta` on a sphere of curvature `kappa`, with `c = c_δ`.
    pub fn sphere_cap(kappa: f64, delta: f64) -> Result<Self> {
        let c = cap_convexity_constant(kappa, delta)?;
        let params = SpaceParams {
            kind: SpaceKind::Sphere,
            p: 2.0,
            c,
            kappa: Some(kappa),
            delta: Some(delta),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_p(self, p: f64) -> Result<Self> {
        let params = SpaceParams { p, ..self };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::out_of_range("p", self.p, "(1, ∞)"));
        }
        if !(self.c > 0.0 && self.c <= 2.0) {
            return Err(Error::out_of_range("c", self.c, "(0, 2]"));
        }
        if let (Some(kappa), Some(delta)) = (self.kappa, self.delta) {
            if self.kind != SpaceKind::Sphere {
                return Err(Error::Config(
                    "curvature cap parameters only apply to the sphere".into(),
                ));
            }
            let expected = cap_convexity_constant(kappa, delta)?;
            if (expected - self.c).abs() > 1e-12 {
                return Err(Error::out_of_range(
                    "c",
                    self.c,
                    "the cap constant c_δ implied by (kappa, delta)",
                ));
            }
        }
        Ok(())
    }

    fn check(&self, x: &Point) -> Result<()> {
        if x.kind != self.kind {
            return Err(Error::SpaceMismatch {
                expected: self.kind,
                found: x.kind,
            });
        }
        Ok(())
    }

    fn check_pair(&self, x: &Point, y: &Point) -> Result<()> {
        self.check(x)?;
        self.check(y)?;
        if x.dim != y.dim {
            return Err(Error::DimensionMismatch {
                expected: x.dim,
                found: y.dim,
            });
        }
        Ok(())
    }

    /// Geodesic distance `d(x, y)`, bitwise symmetric in its arguments.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_pair(x, y)?;
        match self.kind {
            SpaceKind::Euclidean => Ok(euclidean_distance(&x.data, &y.data)),
            SpaceKind::Sphere => Ok(sphere_distance(&x.data, &y.data)),
            SpaceKind::Spd if x.data == y.data => Ok(0.0),
            SpaceKind::Spd => {
                let (base, other) = if x.data <= y.data { (x, y) } else { (y, x) };
                SpdFrame::new(base)?.distance_to(other)
            }
        }
    }

    /// `d(x, y)^p` with this space's exponent.
    pub fn distance_pow(&self, x: &Point, y: &Point) -> Result<f64> {
        Ok(self.distance(x, y)?.powf(self.p))
    }

    /// The point `(1 − t)x ⊕ t y` on the unique geodesic from `x` to `y`.
    pub fn geodesic(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        self.check_pair(x, y)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::out_of_range("t", t, "[0, 1]"));
        }
        if self.kind == SpaceKind::Sphere {
            let d = sphere_distance(&x.data, &y.data);
            if d > PI - ANTIPODAL_MARGIN {
                return Err(Error::Antipodal { distance: d });
            }
        }
        if t == 0.0 || x.data == y.data {
            return Ok(x.clone());
        }
        if t == 1.0 {
            return Ok(y.clone());
        }
        let data = match self.kind {
            SpaceKind::Euclidean => x
                .data
                .iter()
                .zip(&y.data)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
            SpaceKind::Sphere => slerp(&x.data, &y.data, t),
            SpaceKind::Spd => SpdFrame::new(x)?.geodesic_to(y, t)?,
        };
        Ok(Point::from_parts(self.kind, x.dim, data))
    }

    pub fn segment(&self, x: &Point, y: &Point) -> Result<GeodesicSegment> {
        GeodesicSegment::new(self, x.clone(), y.clone())
    }

    /// Diameter `max_{i<j} d(p_i, p_j)` of a finite set.
    pub fn set_diameter(&self, points: &[Point]) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::Empty("point set"));
        }
        let mut diameter: f64 = 0.0;
        match self.kind {
            SpaceKind::Spd => {
                let frames = points
                    .iter()
                    .map(|p| {
                        self.check_pair(&points[0], p)?;
                        SpdFrame::new(p)
                    })
                    .collect::<Result<Vec<_>>>()?;
                for i in 0..points.len() {
                    for j in (i + 1)..points.len() {
                        diameter = diameter.max(frames[i].distance_to(&points[j])?);
                    }
                }
            }
            _ => {
                for i in 0..points.len() {
                    for j in (i + 1)..points.len() {
                        diameter = diameter.max(self.distance(&points[i], &points[j])?);
                    }
                }
            }
        }
        Ok(diameter)
    }

    /// Deterministic random point for `seed`.
    pub fn random_point(&self, dim: usize, seed: u64) -> Result<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.random_point_with(&mut rng, dim)
    }

    /// Draws a random point from `rng`.
    ///
    /// Euclidean: i.i.d. standard normals. Sphere: normalized standard normal
    /// vector. SPD: `L Lᵀ` with `L` lower triangular, `L_ij ~ N(0, 1)` below the
    /// diagonal and `L_ii = |N(0, 1)| + 0.1`.
    pub fn random_point_with<R: Rng + ?Sized>(&self, rng: &mut R, dim: usize) -> Result<Point> {
        match self.kind {
            SpaceKind::Euclidean => Point::euclidean(normal_vector(rng, dim)),
            SpaceKind::Sphere => {
                if dim < 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: dim,
                    });
                }
                loop {
                    let v = normal_vector(rng, dim);
                    if linalg::frobenius_norm(&v) > 1e-8 {
                        return Point::sphere_normalized(v);
                    }
                }
            }
            SpaceKind::Spd => {
                if dim == 0 {
                    return Err(Error::Empty("spd dimension"));
                }
                let mut l = vec![0.0; dim * dim];
                for i in 0..dim {
                    for j in 0..i {
                        l[i * dim + j] = rng.sample(StandardNormal);
                    }
                    let diag: f64 = rng.sample(StandardNormal);
                    l[i * dim + i] = diag.abs() + 0.1;
                }
                let mut a = linalg::matmul(dim, &l, &linalg::transpose(dim, &l));
                linalg::symmetrize(dim, &mut a);
                Point::spd(dim, a)
            }
        }
    }

    /// Random sphere point within geodesic distance `delta` of `pole`.
    ///
    /// A uniform sphere point `u` is pulled toward the pole along the geodesic,
    /// `pole ⊕ (δ/π) u`, so its distance `d(pole, u)·δ/π` stays below `delta`.
    pub fn random_cap_point_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        pole: &Point,
        delta: f64,
    ) -> Result<Point> {
        if self.kind != SpaceKind::Sphere {
            return Err(Error::Config("cap sampling is sphere-only".into()));
        }
        if !(delta > 0.0 && delta < PI) {
            return Err(Error::out_of_range("cap delta", delta, "(0, π)"));
        }
        self.check(pole)?;
        loop {
            let u = self.random_point_with(rng, pole.dim)?;
            if sphere_distance(&pole.data, &u.data) < PI - 1e-6 {
                return self.geodesic(pole, &u, delta / PI);
            }
        }
    }
}

/// A geodesic between two points with its length.
///
/// On the SPD cone the whitened spectral factors are computed once, so
/// evaluating many points along the segment costs one congruence each.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSegment {
    pub start: Point,
    pub end: Point,
    pub length: f64,
    spd: Option<(Vec<f64>, SymmetricEigen)>,
}

impl GeodesicSegment {
    pub fn new(space: &SpaceParams, start: Point, end: Point) -> Result<Self> {
        let length = space.distance(&start, &end)?;
        if space.kind == SpaceKind::Sphere && length > PI - ANTIPODAL_MARGIN {
            return Err(Error::Antipodal { distance: length });
        }
        let spd = match space.kind {
            SpaceKind::Spd => {
                let frame = SpdFrame::new(&start)?;
                let whitened = frame.whitened(&end)?;
                Some((frame.sqrt, whitened))
            }
            _ => None,
        };
        Ok(GeodesicSegment {
            start,
            end,
            length,
            spd,
        })
    }

    pub fn point_at(&self, space: &SpaceParams, t: f64) -> Result<Point> {
        match &self.spd {
            Some((sqrt, whitened)) if space.kind == SpaceKind::Spd && t > 0.0 && t < 1.0 => {
                let power = whitened.map_values(|l| l.powf(t));
                let data = linalg::congruence(self.start.dim, sqrt, &power);
                Ok(Point::from_parts(SpaceKind::Spd, self.start.dim, data))
            }
            _ => space.geodesic(&self.start, &self.end, t),
        }
    }
}

fn normal_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn euclidean_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `arccos⟨x, y⟩`, evaluated as `2·atan2(‖x − y‖, ‖x + y‖)` for accuracy near 0 and π.
fn sphere_distance(x: &[f64], y: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (a, b) in x.iter().zip(y) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

fn slerp(x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    let theta = sphere_distance(x, y);
    let (wx, wy) = if theta < 1e-9 {
        (1.0 - t, t)
    } else {
        let s = theta.sin();
        (((1.0 - t) * theta).sin() / s, (t * theta).sin() / s)
    };
    let mut z: Vec<f64> = x.iter().zip(y).map(|(a, b)| wx * a + wy * b).collect();
    let norm = linalg::frobenius_norm(&z);
    z.iter_mut().for_each(|v| *v /= norm);
    z
}

/// `A^{1/2}` and `A^{−1/2}` of an SPD base point, reused across evaluations.
struct SpdFrame {
    n: usize,
    sqrt: Vec<f64>,
    inv_sqrt: Vec<f64>,
}

impl SpdFrame {
    fn new(a: &Point) -> Result<Self> {
        let eig = spd_eig(a.dim, &a.data)?;
        Ok(SpdFrame {
            n: a.dim,
            sqrt: eig.map_values(f64::sqrt),
            inv_sqrt: eig.map_values(|l| 1.0 / l.sqrt()),
        })
    }

    /// Eigendecomposition of `A^{−1/2} B A^{−1/2}`.
    fn whitened(&self, b: &Point) -> Result<SymmetricEigen> {
        let m = linalg::congruence(self.n, &self.inv_sqrt, &b.data);
        spd_eig(self.n, &m)
    }

    fn distance_to(&self, b: &Point) -> Result<f64> {
        let eig = self.whitened(b)?;
        Ok(eig
            .values
            .iter()
            .map(|l| l.ln().powi(2))
            .sum::<f64>()
            .sqrt())
    }

    fn geodesic_to(&self, b: &Point, t: f64) -> Result<Vec<f64>> {
        let power = self.whitened(b)?.map_values(|l| l.powf(t));
        Ok(linalg::congruence(self.n, &self.sqrt, &power))
    }
}

fn spd_eig(n: usize, m: &[f64]) -> Result<SymmetricEigen> {
    let eig = linalg::symmetric_eig(n, m)?;
    let min_eigenvalue = eig.min_value();
    if min_eigenvalue <= SPD_EIGEN_FLOOR {
        return Err(Error::NotPositiveDefinite { min_eigenvalue });
    }
    Ok(eig)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn spd_symmetric_eig(n: usize, m: &[f64]) -> Result<SymmetricEigen> {
    linalg::symmetric_eig(n, m)
}
