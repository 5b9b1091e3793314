//! Small dense symmetric linear algebra: a cyclic Jacobi eigensolver and a
//! few quadratic-form helpers. Everything here assumes n is small (tens, not
//! thousands), so robustness wins over speed.

use nalgebra::{DMatrix, DVector};

/// Relative off-diagonal mass below which a Jacobi sweep is considered
/// converged.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues and the matching unit eigenvectors (columns). The
/// ordering is whatever the sweeps leave behind: for an already-diagonal
/// input no rotation is applied, so the original axis order is preserved
/// (callers rely on this for deterministic tie-breaking).
pub fn sym_eigen(a: &DMatrix<f64>) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    if n <= 1 {
        return Some((vec![if n == 1 { m[(0, 0)] } else { 0.0 }; n], v));
    }

    let norm = m.norm().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if (2.0 * off).sqrt() <= JACOBI_TOL * norm {
            let vals = (0..n).map(|i| m[(i, i)]).collect();
            return Some((vals, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                // Stable tangent of the rotation angle.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    None
}

/// Eigenvalues only, unsorted.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    sym_eigen(a).map(|(vals, _)| vals)
}

/// xᵀ A x for symmetric A.
pub fn quad_form(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(a * x))
}

/// Index of the largest value, first index winning ties within a relative
/// slack of 1e-12.
pub fn argmax_with_ties(vals: &[f64]) -> usize {
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * max.abs().max(1.0);
    vals.iter().position(|&v| v >= max - slack).unwrap_or(0)
}
