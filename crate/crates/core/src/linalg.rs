//! Small dense row-major matrix kernels used by the SPD model space.
//!
//! Matrices here are at most a few dozen rows, so everything is plain loops
//! over `Vec<f64>` storage.

use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm must drop below this fraction of `‖m‖_F`.
const JACOBI_RELATIVE_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
/// Absolute symmetry tolerance accepted by [`symmetric_eig`], scaled by `max(1, ‖m‖_F)`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition `m = V · diag(values) · Vᵀ` of a symmetric matrix.
///
/// `values` are sorted in descending order; column `k` of the row-major
/// `vectors` matrix is the eigenvector for `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    /// Rebuilds `V · diag(f(λ)) · Vᵀ`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.vectors[i * n + k] * mapped[k] * self.vectors[j * n + k];
                }
                out[i * n + j] = acc;
                out[j * n + i] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        self.map_values(|l| l)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::INFINITY)
    }
}

pub fn frobenius_norm(m: &[f64]) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest `|m_ij − m_ji|`.
pub fn asymmetry(n: usize, m: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[i * n + j] - m[j * n + i]).abs());
        }
    }
    worst
}

pub fn symmetrize(n: usize, m: &mut [f64]) {
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
}

pub fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn transpose(n: usize, a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
    out
}

/// `S · B · S` for symmetric `S`, symmetrized to remove rounding asymmetry.
pub fn congruence(n: usize, s: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = matmul(n, &matmul(n, s, b), s);
    symmetrize(n, &mut out);
    out
}

pub fn identity(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        out[i * n + i] = 1.0;
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric `n × n` row-major matrix.
pub fn symmetric_eig(n: usize, m: &[f64]) -> Result<SymmetricEigen> {
    if m.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: m.len(),
        });
    }
    let norm = frobenius_norm(m);
    let asym = asymmetry(n, m);
    if asym > SYMMETRY_TOL * norm.max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    let mut a = m.to_vec();
    symmetrize(n, &mut a);
    let mut v = identity(n);
    let threshold = JACOBI_RELATIVE_TOL * norm;

    let mut converged = false;
    for _ in 0..=JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(n, &a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(n, &mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = v[row * n + k];
        }
    }
    Ok(SymmetricEigen { n, values, vectors })
}

fn off_diagonal_norm(n: usize, a: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j] * a[i * n + j];
            }
        }
    }
    acc.sqrt()
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate(n: usize, a: &mut [f64], v: &mut [f64], p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn orthogonality_defect(e: &SymmetricEigen) -> f64 {
        let vt = transpose(e.n, &e.vectors);
        let g = matmul(e.n, &vt, &e.vectors);
        let id = identity(e.n);
        g.iter()
            .zip(&id)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn diagonal_input() {
        let e = symmetric_eig(2, &[1.0, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert!((e.vectors[1].abs() - 1.0).abs() < 1e-15);
        assert!((e.vectors[2].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classic_two_by_two() {
        let e = symmetric_eig(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // first column ∝ (1, 1), second ∝ (1, −1)
        assert!((e.vectors[0].abs() - h).abs() < 1e-14);
        assert!((e.vectors[0] - e.vectors[2]).abs() < 1e-14);
        assert!((e.vectors[1] + e.vectors[3]).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_symmetric() {
        let err = symmetric_eig(2, &[1.0, 2.0, 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn zero_matrix() {
        let e = symmetric_eig(3, &[0.0; 9]).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
    }

    #[test]
    fn repeated_eigenvalues() {
        let e = symmetric_eig(3, &identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0; 3]);
        assert!(orthogonality_defect(&e) < 1e-15);
    }

    fn symmetric_matrix(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, n * n).prop_map(move |mut m| {
            symmetrize(n, &mut m);
            m
        })
    }

    proptest! {
        #[test]
        fn reconstructs_random_symmetric(
            (n, m) in (1usize..8).prop_flat_map(|n| (Just(n), symmetric_matrix(n)))
        ) {
            let e = symmetric_eig(n, &m).unwrap();
            let r = e.reconstruct();
            let resid: Vec<f64> = r.iter().zip(&m).map(|(a, b)| a - b).collect();
            prop_assert!(frobenius_norm(&resid) <= 1e-9 * frobenius_norm(&m).max(1e-300));
            prop_assert!(orthogonality_defect(&e) < 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn reconstructs_random_5x5(m in symmetric_matrix(5)) {
            let e = symmetric_eig(5, &m).unwrap();
            let r = e.reconstruct();
            let resid: Vec<f64> = r.iter().zip(&m).map(|(a, b)| a - b).collect();
            prop_assert!(frobenius_norm(&resid) <= 1e-9 * frobenius_norm(&m));
        }
    }
}
