//! Ellipsoids over coefficient space: extremal linear functionals, central
//! and shallow cuts with minimum-volume enclosing updates, containment and
//! spectral diagnostics.
//!
//! An ellipsoid is stored as `E(A, c) = {a : (a-c)ᵀ A⁻¹ (a-c) <= 1}` with `A`
//! symmetric positive definite. Halfspaces are canonicalized to the form
//! `{a : uᵀa <= b}`; the `>=` orientation is converted by negating both
//! sides, so the cut update has a single code path.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;

/// Containment slack absorbing accumulated rounding across many cuts.
const CONTAINS_SLACK: f64 = 1e-9;
/// Relative asymmetry tolerated by the shape-matrix invariant.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("direction vector must be nonzero")]
    ZeroDirection,
    #[error("cut depth exceeds the shallow-cut limit (alpha = {alpha:.6} < -1/{n})")]
    CutTooShallow { alpha: f64, n: usize },
    #[error("halfspace does not intersect the ellipsoid (alpha = {alpha:.6} >= 1)")]
    EmptyIntersection { alpha: f64 },
    #[error("cut updates require dimension >= 2, got {n}")]
    DimensionTooSmall { n: usize },
    #[error("shape matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("shape matrix is not symmetric")]
    Asymmetric,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver failed to converge")]
    EigenFailure,
}

/// Halfspace `{a : uᵀa <= b}` with `u != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: DVector<f64>,
    offset: f64,
}

impl Halfspace {
    /// `{a : normalᵀ a <= offset}`.
    pub fn below(normal: DVector<f64>, offset: f64) -> Result<Self, GeometryError> {
        if normal.iter().all(|&v| v == 0.0) {
            return Err(GeometryError::ZeroDirection);
        }
        Ok(Self { normal, offset })
    }

    /// `{a : normalᵀ a >= offset}`, stored in the canonical `<=` form.
    pub fn above(normal: DVector<f64>, offset: f64) -> Result<Self, GeometryError> {
        Self::below(-normal, -offset)
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Exact membership test (no slack).
    pub fn contains(&self, a: &DVector<f64>) -> bool {
        self.normal.dot(a) <= self.offset
    }
}

/// Uncertainty ellipsoid `E(A, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    shape: DMatrix<f64>,
    center: DVector<f64>,
}

impl Ellipsoid {
    /// Validates symmetry and positive definiteness of the shape matrix.
    pub fn new(shape: DMatrix<f64>, center: DVector<f64>) -> Result<Self, GeometryError> {
        let n = shape.nrows();
        if shape.ncols() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: shape.ncols(),
            });
        }
        if center.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        let scale = shape.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                if (shape[(i, j)] - shape[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(GeometryError::Asymmetric);
                }
            }
        }
        if nalgebra::Cholesky::new(shape.clone()).is_none() {
            return Err(GeometryError::NotPositiveDefinite);
        }
        Ok(Self { shape, center })
    }

    /// Initial isotropic ellipsoid `E(r_a I, 0)`.
    pub fn initial(n: usize, r_a: f64) -> Result<Self, GeometryError> {
        if r_a <= 0.0 {
            return Err(GeometryError::NotPositiveDefinite);
        }
        Self::new(DMatrix::identity(n, n) * r_a, DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// xᵀ A x.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        linalg::quad_form(&self.shape, x)
    }

    /// The points of `E` that maximize and minimize `xᵀa`, plus the offset
    /// vector `b = A x / sqrt(xᵀ A x)`; the extremes are `c + b` and `c - b`.
    pub fn extremal_points(
        &self,
        x: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>), GeometryError> {
        if x.iter().all(|&v| v == 0.0) {
            return Err(GeometryError::ZeroDirection);
        }
        let b = (&self.shape * x) / self.quad_form(x).sqrt();
        Ok((&self.center + &b, &self.center - &b, b))
    }

    /// Range of `xᵀa` over the ellipsoid: `xᵀc ± sqrt(xᵀ A x)`.
    pub fn value_interval(&self, x: &DVector<f64>) -> Result<(f64, f64), GeometryError> {
        if x.iter().all(|&v| v == 0.0) {
            return Err(GeometryError::ZeroDirection);
        }
        let mid = x.dot(&self.center);
        let half = self.quad_form(x).sqrt();
        Ok((mid - half, mid + half))
    }

    /// Signed cut depth of a halfspace in the ellipsoid norm:
    /// `alpha = (uᵀc - b) / sqrt(uᵀ A u)`. Zero means a central cut,
    /// negative a shallow cut, `>= 1` an empty intersection.
    pub fn cut_depth(&self, h: &Halfspace) -> f64 {
        (h.normal().dot(&self.center) - h.offset()) / self.quad_form(h.normal()).sqrt()
    }

    /// Minimum-volume ellipsoid enclosing `E ∩ H`.
    ///
    /// With `alpha` as in [`Ellipsoid::cut_depth`] and
    /// `b = A u / sqrt(uᵀ A u)`:
    ///
    /// ```text
    /// A' = n²/(n²-1) (1-alpha²) (A - 2(1+n alpha)/((n+1)(1+alpha)) b bᵀ)
    /// c' = c - (1+n alpha)/(n+1) b
    /// ```
    ///
    /// `alpha = -1/n` is accepted and returns `E` unchanged; anything deeper
    /// on the shallow side is an error, as is `alpha >= 1`.
    pub fn cut(&self, h: &Halfspace) -> Result<Ellipsoid, GeometryError> {
        let n = self.dim();
        if n < 2 {
            return Err(GeometryError::DimensionTooSmall { n });
        }
        let nf = n as f64;
        let u = h.normal();
        let denom_sq = self.quad_form(u);
        if denom_sq <= 0.0 {
            return Err(GeometryError::NotPositiveDefinite);
        }
        let denom = denom_sq.sqrt();
        let alpha = (u.dot(&self.center) - h.offset()) / denom;
        if alpha >= 1.0 {
            return Err(GeometryError::EmptyIntersection { alpha });
        }
        if alpha < -1.0 / nf {
            return Err(GeometryError::CutTooShallow { alpha, n });
        }
        // Degenerate shallow cut: the update is the identity.
        if 1.0 + nf * alpha <= 0.0 {
            return Ok(self.clone());
        }

        let b = (&self.shape * u) / denom;
        let scale = nf * nf / (nf * nf - 1.0) * (1.0 - alpha * alpha);
        let rank1 = 2.0 * (1.0 + nf * alpha) / ((nf + 1.0) * (1.0 + alpha));
        let shape = (&self.shape - rank1 * (&b * b.transpose())) * scale;
        let center = &self.center - (1.0 + nf * alpha) / (nf + 1.0) * &b;
        Ellipsoid::new(shape, center)
    }

    /// Membership with a small relative slack for accumulated rounding:
    /// `(a-c)ᵀ A⁻¹ (a-c) <= 1 + 1e-9`.
    pub fn contains(&self, a: &DVector<f64>) -> bool {
        let chol = match nalgebra::Cholesky::new(self.shape.clone()) {
            Some(c) => c,
            // Unreachable for a validated ellipsoid.
            None => return false,
        };
        let d = a - &self.center;
        let y = chol.solve(&d);
        d.dot(&y) <= 1.0 + CONTAINS_SLACK
    }

    /// Extreme eigenvalues of `A` and the volume factor `sqrt(det A)`.
    pub fn spectral_bounds(&self) -> Result<(f64, f64, f64), GeometryError> {
        let vals = linalg::sym_eigenvalues(&self.shape).ok_or(GeometryError::EigenFailure)?;
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min <= 0.0 {
            return Err(GeometryError::NotPositiveDefinite);
        }
        let volume_factor = (0.5 * vals.iter().map(|v| v.ln()).sum::<f64>()).exp();
        Ok((min, max, volume_factor))
    }

    /// Image of a point of the closed unit ball under the affine map onto
    /// this ellipsoid (`c + L u` with `A = L Lᵀ`). Handy for sampling.
    pub fn point_from_ball(&self, u: &DVector<f64>) -> DVector<f64> {
        let chol = nalgebra::Cholesky::new(self.shape.clone())
            .expect("validated ellipsoid has a Cholesky factor");
        &self.center + chol.l() * u
    }
}
