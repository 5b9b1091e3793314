//! Domain model of the marketplace: feasible bundle sets, the realistic
//! price orthotope, the ground-truth buyer, and the seller-facing
//! interaction oracle.
//!
//! Bundles are fractions of goods, so the feasible set is always the
//! quadratic set `{x : xᵀPx + 2qᵀx + r <= 0}` intersected with `[0,1]ⁿ` and
//! the nonnegative orthant. The buyer maximizes
//! `aᵀx + (4/mu) Σ sqrt(x_i) - pᵀx` over that set; the square-root
//! perturbation makes the objective strictly concave, so the response is
//! unique and the response map is single-valued.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;

/// Default objective-accuracy contract of the buyer oracle.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

/// Coordinates are solved on `[BUNDLE_FLOOR, 1]`; the square-root term keeps
/// true responses strictly positive, so the floor only guards the bracket.
const BUNDLE_FLOOR: f64 = 1e-12;

const PROJECTION_MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketError {
    #[error("price lies outside the realistic price space")]
    UnrealisticPrice,
    #[error("buyer response solver failed: {0}")]
    SolverFailure(String),
    #[error("bundle has a negative component")]
    NegativeBundle,
    #[error("feasibility projection did not converge")]
    ProjectionFailure,
    #[error("degenerate price space: the lowest price ceiling is nonpositive")]
    DegeneratePriceSpace,
    #[error("Hölder exponent beta must lie in (0,1), got {0}")]
    BetaOutOfRange(f64),
    #[error("invalid market parameter: {0}")]
    InvalidParameter(String),
}

/// Feasible bundle set `{x : xᵀPx + 2qᵀx + r <= 0} ∩ [0,1]ⁿ ∩ {x >= 0}`
/// with norm bounds `gamma1 >= max ||x||_1` and `gamma2 >= max ||x||_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    quad: DMatrix<f64>,
    lin: DVector<f64>,
    constant: f64,
    /// Intersection with the box is always applied; kept as a field so the
    /// clipping choice is visible in reports.
    pub box_clip: bool,
    gamma1: f64,
    gamma2: f64,
    quad_is_diagonal: bool,
}

impl FeasibleSet {
    pub fn new(
        quad: DMatrix<f64>,
        lin: DVector<f64>,
        constant: f64,
        gamma1: f64,
        gamma2: f64,
    ) -> Result<Self, MarketError> {
        let n = quad.nrows();
        if quad.ncols() != n || lin.len() != n {
            return Err(MarketError::InvalidParameter(
                "quadratic form dimensions disagree".into(),
            ));
        }
        let scale = quad.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (quad[(i, j)] - quad[(j, i)]).abs() > 1e-12 * scale {
                    return Err(MarketError::InvalidParameter(
                        "quadratic form must be symmetric".into(),
                    ));
                }
            }
        }
        let eigvals = linalg::sym_eigenvalues(&quad)
            .ok_or_else(|| MarketError::SolverFailure("eigensolver did not converge".into()))?;
        let min_eig = eigvals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * scale {
            return Err(MarketError::InvalidParameter(
                "quadratic form must be positive semidefinite".into(),
            ));
        }
        if gamma1 <= 0.0 || gamma2 <= 0.0 {
            return Err(MarketError::InvalidParameter(
                "norm bounds gamma1, gamma2 must be positive".into(),
            ));
        }
        let set = Self {
            quad,
            lin,
            constant,
            box_clip: true,
            gamma1,
            gamma2,
            quad_is_diagonal: false,
        };
        let set = Self {
            quad_is_diagonal: set.check_diagonal(),
            ..set
        };
        // Nonemptiness: the origin is a bundle (buy nothing), so r <= 0 is
        // the practical check once the box is always intersected.
        if !set.quad_feasible(&DVector::zeros(n), 1e-12) && min_eig > 0.0 {
            // Fall back to the unconstrained minimizer of the quadratic.
            let chol = nalgebra::Cholesky::new(set.quad.clone())
                .ok_or_else(|| MarketError::InvalidParameter("quadratic form singular".into()))?;
            let minimizer = -chol.solve(&set.lin);
            let value = set.quad_value(&minimizer);
            if value > 0.0 {
                return Err(MarketError::InvalidParameter(
                    "feasible set is empty: the quadratic has no nonpositive value".into(),
                ));
            }
        }
        Ok(set)
    }

    /// `{x : ||x||_2 <= radius} ∩ [0,1]ⁿ ∩ {x >= 0}`.
    pub fn ball(n: usize, radius: f64) -> Result<Self, MarketError> {
        if radius <= 0.0 {
            return Err(MarketError::InvalidParameter(
                "ball radius must be positive".into(),
            ));
        }
        let nf = n as f64;
        let gamma2 = radius.min(nf.sqrt());
        let gamma1 = (nf.sqrt() * radius).min(nf);
        Self::new(
            DMatrix::identity(n, n),
            DVector::zeros(n),
            -radius * radius,
            gamma1,
            gamma2,
        )
    }

    /// Unit ball preset.
    pub fn unit_ball(n: usize) -> Result<Self, MarketError> {
        Self::ball(n, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn quad(&self) -> &DMatrix<f64> {
        &self.quad
    }

    pub fn lin(&self) -> &DVector<f64> {
        &self.lin
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    fn check_diagonal(&self) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.quad[(i, j)] != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// xᵀPx + 2qᵀx + r.
    pub fn quad_value(&self, x: &DVector<f64>) -> f64 {
        linalg::quad_form(&self.quad, x) + 2.0 * self.lin.dot(x) + self.constant
    }

    fn quad_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.quad_value(x) <= tol
    }

    /// Membership in the full set (quadratic and box) with a small slack.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.iter().all(|&v| v >= -tol && v <= 1.0 + tol) && self.quad_feasible(x, tol)
    }

    /// Box-constrained minimizer of `½||x - y||² + (theta/2)(xᵀPx + 2qᵀx)`,
    /// written into `x`. Separable for diagonal `P`; swept to stationarity
    /// otherwise (the objective is strongly convex, so cyclic coordinate
    /// descent converges).
    fn project_inner(
        &self,
        y: &DVector<f64>,
        theta: f64,
        x: &mut DVector<f64>,
    ) -> Result<(), MarketError> {
        let n = self.dim();
        let sweeps = if self.quad_is_diagonal || theta == 0.0 {
            1
        } else {
            500
        };
        for sweep in 0..sweeps {
            let mut max_change = 0.0f64;
            for i in 0..n {
                let mut coupling = self.lin[i];
                if theta != 0.0 && !self.quad_is_diagonal {
                    for j in 0..n {
                        if j != i {
                            coupling += self.quad[(i, j)] * x[j];
                        }
                    }
                }
                let new = ((y[i] - theta * coupling) / (1.0 + theta * self.quad[(i, i)]))
                    .clamp(0.0, 1.0);
                max_change = max_change.max((new - x[i]).abs());
                x[i] = new;
            }
            if max_change <= 1e-15 {
                return Ok(());
            }
            if sweep + 1 == sweeps && sweeps > 1 {
                return Err(MarketError::ProjectionFailure);
            }
        }
        Ok(())
    }

    /// Euclidean projection onto the full set (quadratic, box and orthant),
    /// by bracketed bisection on the quadratic-constraint multiplier. The
    /// box is handled inside the inner solve, so the result is the exact
    /// nearest point.
    pub fn project(&self, y: &DVector<f64>) -> Result<DVector<f64>, MarketError> {
        if self.contains(y, 0.0) {
            return Ok(y.clone());
        }
        let mut x = y.map(|v| v.clamp(0.0, 1.0));
        self.project_inner(y, 0.0, &mut x)?;
        let slack = 1e-14 * (1.0 + self.constant.abs());
        if self.quad_value(&x) <= slack {
            return Ok(x);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut guard = 0;
        loop {
            self.project_inner(y, hi, &mut x)?;
            if self.quad_value(&x) <= 0.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > PROJECTION_MAX_DOUBLINGS {
                return Err(MarketError::ProjectionFailure);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            self.project_inner(y, mid, &mut x)?;
            if self.quad_value(&x) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= 1e-15 * hi {
                break;
            }
        }
        self.project_inner(y, hi, &mut x)?;
        Ok(x)
    }
}

/// Realistic price orthotope: `p` is admissible iff
/// `|p_i - p0_i| <= delta_i` for every item.
#[derive(Debug, Clone, PartialEq)]
pub struct RealisticPriceSpace {
    p0: DVector<f64>,
    delta: DVector<f64>,
    radius: f64,
}

impl RealisticPriceSpace {
    pub fn new(p0: DVector<f64>, delta: DVector<f64>, radius: f64) -> Result<Self, MarketError> {
        if p0.len() != delta.len() {
            return Err(MarketError::InvalidParameter(
                "price median and half-width dimensions disagree".into(),
            ));
        }
        if delta.iter().any(|&d| d < 0.0) {
            return Err(MarketError::InvalidParameter(
                "price half-widths must be nonnegative".into(),
            ));
        }
        if p0
            .iter()
            .zip(delta.iter())
            .any(|(&p, &d)| p - d < -1e-12 * p.abs().max(1.0))
        {
            return Err(MarketError::InvalidParameter(
                "prices must stay nonnegative: p0 - delta >= 0 is required".into(),
            ));
        }
        if radius < delta.norm() * (1.0 - 1e-12) {
            return Err(MarketError::InvalidParameter(
                "enclosing radius must be at least the half-width norm".into(),
            ));
        }
        Ok(Self { p0, delta, radius })
    }

    pub fn dim(&self) -> usize {
        self.p0.len()
    }

    pub fn median(&self) -> &DVector<f64> {
        &self.p0
    }

    pub fn half_widths(&self) -> &DVector<f64> {
        &self.delta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Membership with rounding slack.
    pub fn contains(&self, p: &DVector<f64>) -> bool {
        p.len() == self.dim()
            && (0..self.dim()).all(|i| {
                let tol = 1e-12 * (1.0 + self.p0[i].abs() + self.delta[i]);
                (p[i] - self.p0[i]).abs() <= self.delta[i] + tol
            })
    }

    /// Componentwise clamp onto the orthotope; exact because the projection
    /// is separable.
    pub fn project(&self, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            p[i].clamp(self.p0[i] - self.delta[i], self.p0[i] + self.delta[i])
        })
    }

    /// `(L_bar, L_under)` where `L_bar = min_i (p0_i + delta_i)` is the
    /// lowest price ceiling and `L_under = max_i (p0_i - delta_i)` the
    /// highest price floor.
    pub fn price_bounds(&self) -> Result<(f64, f64), MarketError> {
        let l_bar = (0..self.dim())
            .map(|i| self.p0[i] + self.delta[i])
            .fold(f64::INFINITY, f64::min);
        let l_under = (0..self.dim())
            .map(|i| (self.p0[i] - self.delta[i]).max(0.0))
            .fold(f64::NEG_INFINITY, f64::max);
        if l_bar <= 0.0 {
            return Err(MarketError::DegeneratePriceSpace);
        }
        Ok((l_bar, l_under))
    }
}

/// What the seller knows a priori: bounds on the tie-break parameter, the
/// value-continuity constants of the utility, the feasible set and the
/// admissible prices.
#[derive(Debug, Clone)]
pub struct SellerKnowledge {
    pub mu1: f64,
    pub mu2: f64,
    pub lambda_val: f64,
    pub beta: f64,
    pub feasible: FeasibleSet,
    pub prices: RealisticPriceSpace,
}

impl SellerKnowledge {
    pub fn new(
        mu1: f64,
        mu2: f64,
        lambda_val: f64,
        beta: f64,
        feasible: FeasibleSet,
        prices: RealisticPriceSpace,
    ) -> Result<Self, MarketError> {
        if !(mu1 > 0.0 && mu1 <= mu2) {
            return Err(MarketError::InvalidParameter(
                "tie-break bounds must satisfy 0 < mu1 <= mu2".into(),
            ));
        }
        if lambda_val < 0.0 {
            return Err(MarketError::InvalidParameter(
                "value-continuity constant must be nonnegative".into(),
            ));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(MarketError::BetaOutOfRange(beta));
        }
        if feasible.dim() != prices.dim() {
            return Err(MarketError::InvalidParameter(
                "feasible set and price space dimensions disagree".into(),
            ));
        }
        Ok(Self {
            mu1,
            mu2,
            lambda_val,
            beta,
            feasible,
            prices,
        })
    }

    /// Value-estimation error budget induced by the price restriction:
    ///
    /// ```text
    /// tau = max{ lambda (2 L_under gamma1 / L_bar)^beta,
    ///            lambda^(1/(1-beta)) (2 / L_bar)^(beta/(1-beta)) }
    ///       + L_under gamma1
    /// ```
    pub fn tau_bound(&self) -> Result<f64, MarketError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(MarketError::BetaOutOfRange(self.beta));
        }
        let (l_bar, l_under) = self.prices.price_bounds()?;
        let g1 = self.feasible.gamma1();
        let b = self.beta;
        let branch_near = self.lambda_val * (2.0 * l_under * g1 / l_bar).powf(b);
        let branch_root = self.lambda_val.powf(1.0 / (1.0 - b)) * (2.0 / l_bar).powf(b / (1.0 - b));
        Ok(branch_near.max(branch_root) + l_under * g1)
    }
}

/// Ground-truth buyer: true coefficients, tie-break parameter, feasible set.
#[derive(Debug, Clone)]
pub struct BuyerModel {
    a_star: DVector<f64>,
    mu: f64,
    feasible: FeasibleSet,
}

impl BuyerModel {
    pub fn new(a_star: DVector<f64>, mu: f64, feasible: FeasibleSet) -> Result<Self, MarketError> {
        if a_star.len() != feasible.dim() {
            return Err(MarketError::InvalidParameter(
                "coefficient vector dimension disagrees with the feasible set".into(),
            ));
        }
        if a_star.iter().any(|&v| v < 0.0) {
            return Err(MarketError::InvalidParameter(
                "utility coefficients must be nonnegative".into(),
            ));
        }
        if mu <= 0.0 {
            return Err(MarketError::InvalidParameter(
                "tie-break parameter must be positive".into(),
            ));
        }
        Ok(Self {
            a_star,
            mu,
            feasible,
        })
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.a_star
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    /// `aᵀx + (4/mu) Σ sqrt(x_i)`. Simulation and test side only.
    pub fn perturbed_utility(&self, x: &DVector<f64>) -> Result<f64, MarketError> {
        if x.iter().any(|&v| v < -1e-12) {
            return Err(MarketError::NegativeBundle);
        }
        let tie_break: f64 = x.iter().map(|&v| v.max(0.0).sqrt()).sum();
        Ok(self.a_star.dot(x) + 4.0 / self.mu * tie_break)
    }

    /// The buyer's unique utility-maximizing bundle at prices `p`,
    /// simulation side (no interaction is recorded).
    pub fn utility_maximizer(&self, price: &DVector<f64>) -> Result<DVector<f64>, MarketError> {
        solve_response(self, price, None).map(|(x, _)| x)
    }
}

#[derive(Debug, Clone)]
struct WarmStart {
    nu: f64,
    x: DVector<f64>,
}

/// Seller-facing interaction channel. The learner sees only the
/// price-to-bundle map and the interaction counter; the model inside is
/// not exposed.
#[derive(Debug)]
pub struct BuyerOracle {
    model: BuyerModel,
    prices: RealisticPriceSpace,
    solver_tol: f64,
    count: u64,
    warm: Option<WarmStart>,
}

impl BuyerOracle {
    pub fn new(model: BuyerModel, prices: RealisticPriceSpace, solver_tol: f64) -> Self {
        Self {
            model,
            prices,
            solver_tol,
            count: 0,
            warm: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.model.feasible.dim()
    }

    pub fn interaction_count(&self) -> u64 {
        self.count
    }

    pub fn solver_tol(&self) -> f64 {
        self.solver_tol
    }

    /// Post a realistic price, observe the purchased bundle. Each call is
    /// one buyer interaction.
    pub fn post_price(&mut self, price: &DVector<f64>) -> Result<DVector<f64>, MarketError> {
        if !self.prices.contains(price) {
            return Err(MarketError::UnrealisticPrice);
        }
        let (x, nu) = solve_response(&self.model, price, self.warm.as_ref())?;
        self.warm = Some(WarmStart { nu, x: x.clone() });
        self.count += 1;
        Ok(x)
    }
}

/// Buyer's best response. Posting goes through the oracle so every
/// interaction is counted.
pub fn best_response(
    oracle: &mut BuyerOracle,
    price: &DVector<f64>,
) -> Result<DVector<f64>, MarketError> {
    oracle.post_price(price)
}

/// Solve `max aᵀx + (4/mu) Σ sqrt(x_i) - pᵀx` over the feasible set.
///
/// The square-root term keeps the maximizer strictly inside the orthant, so
/// only the quadratic constraint (multiplier `nu`) and the upper bounds are
/// ever active. For a fixed `nu` the stationarity condition decouples per
/// coordinate (up to the off-diagonal quadratic coupling, handled by cyclic
/// sweeps); `nu` itself is found by bracketed bisection on the constraint
/// residual, which is monotone.
fn solve_response(
    model: &BuyerModel,
    price: &DVector<f64>,
    warm: Option<&WarmStart>,
) -> Result<(DVector<f64>, f64), MarketError> {
    let set = &model.feasible;
    let n = set.dim();
    if price.len() != n {
        return Err(MarketError::InvalidParameter(
            "price dimension disagrees with the feasible set".into(),
        ));
    }
    let gain = model.coefficients() - price;
    let t = 4.0 / model.mu();

    let mut x = warm
        .map(|w| w.x.clone())
        .unwrap_or_else(|| DVector::from_element(n, 0.5));

    // nu = 0 first: if the unconstrained-over-the-box solution already
    // satisfies the quadratic constraint we are done.
    solve_coordinates(set, &gain, t, 0.0, &mut x)?;
    let slack_tol = 1e-13 * (1.0 + set.constant().abs());
    if set.quad_value(&x) <= slack_tol {
        return Ok((x, 0.0));
    }

    // Bracket the multiplier.
    let mut lo = 0.0;
    let mut hi = warm.map(|w| w.nu.max(1e-6)).unwrap_or(1.0);
    let mut x_hi = x.clone();
    let mut guard = 0;
    loop {
        solve_coordinates(set, &gain, t, hi, &mut x_hi)?;
        if set.quad_value(&x_hi) <= 0.0 {
            break;
        }
        lo = hi;
        hi *= 4.0;
        guard += 1;
        if guard > 300 {
            return Err(MarketError::SolverFailure(
                "failed to bracket the quadratic-constraint multiplier".into(),
            ));
        }
    }

    // Bisection on the monotone residual.
    let mut x_mid = x_hi.clone();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        solve_coordinates(set, &gain, t, mid, &mut x_mid)?;
        let v = set.quad_value(&x_mid);
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    solve_coordinates(set, &gain, t, hi, &mut x_mid)?;
    Ok((x_mid, hi))
}

/// Inner maximization at a fixed multiplier: coordinatewise scalar solves,
/// swept until stationary when the quadratic couples coordinates.
fn solve_coordinates(
    set: &FeasibleSet,
    gain: &DVector<f64>,
    t: f64,
    nu: f64,
    x: &mut DVector<f64>,
) -> Result<(), MarketError> {
    let n = set.dim();
    let sweeps = if set.quad_is_diagonal || nu == 0.0 {
        1
    } else {
        300
    };
    for sweep in 0..sweeps {
        let mut max_change = 0.0f64;
        for i in 0..n {
            // Effective linear coefficient includes the off-diagonal
            // coupling at the current sweep values.
            let mut coupling = set.lin()[i];
            if nu != 0.0 && !set.quad_is_diagonal {
                for j in 0..n {
                    if j != i {
                        coupling += set.quad()[(i, j)] * x[j];
                    }
                }
            }
            let c_eff = gain[i] - 2.0 * nu * coupling;
            let k = 2.0 * nu * set.quad()[(i, i)];
            let new = solve_coordinate(c_eff, t, k);
            max_change = max_change.max((new - x[i]).abs());
            x[i] = new;
        }
        if max_change <= 1e-15 {
            return Ok(());
        }
        if sweep + 1 == sweeps && sweeps > 1 {
            return Err(MarketError::SolverFailure(
                "coordinate sweeps did not converge".into(),
            ));
        }
    }
    Ok(())
}

/// Maximize `c x + t sqrt(x) - (k/2) x²` over `[0, 1]`, i.e. find the root
/// of `f(x) = c + (t/2) x^(-1/2) - k x`, which is strictly decreasing.
fn solve_coordinate(c: f64, t: f64, k: f64) -> f64 {
    debug_assert!(t > 0.0 && k >= 0.0);
    // f(1) >= 0: the upper bound is active.
    if c + 0.5 * t - k >= 0.0 {
        return 1.0;
    }
    if k == 0.0 {
        // Closed form: sqrt(x) = t / (-2c).
        let root = (t / (-2.0 * c)).powi(2);
        return root.min(1.0);
    }
    // Safeguarded Newton on a bracket [lo, hi] with f(lo) > 0 > f(hi).
    let mut lo = BUNDLE_FLOOR.min(1e-12);
    let mut hi = 1.0;
    let f = |x: f64| c + 0.5 * t / x.sqrt() - k * x;
    let mut x = if c < 0.0 {
        ((t / (-2.0 * c)).powi(2)).clamp(lo, hi)
    } else {
        (c / k).clamp(lo, hi)
    };
    for _ in 0..100 {
        let fx = f(x);
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dfx = -0.25 * t / (x * x.sqrt()) - k;
        let newton = x - fx / dfx;
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= 1e-16 + 1e-15 * x {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    fn oracle_on_unit_ball(a: DVector<f64>, mu: f64, p0: DVector<f64>, delta: f64) -> BuyerOracle {
        let n = a.len();
        let set = FeasibleSet::unit_ball(n).unwrap();
        let model = BuyerModel::new(a, mu, set).unwrap();
        let delta = DVector::from_element(n, delta);
        let radius = delta.norm();
        let prices = RealisticPriceSpace::new(p0, delta, radius).unwrap();
        BuyerOracle::new(model, prices, DEFAULT_SOLVER_TOL)
    }

    #[test]
    fn best_response_points_along_net_gain() {
        // a = (2, 0.5), p = (0.1, 0.1), mu = 1e6: the response sits on the
        // ball boundary along a - p, the tie-break shift is O(1/mu).
        let mut oracle = oracle_on_unit_ball(vec2(2.0, 0.5), 1e6, vec2(1.0, 1.0), 1.0);
        let x = oracle.post_price(&vec2(0.1, 0.1)).unwrap();
        let c = vec2(1.9, 0.4);
        let expected = &c / c.norm();
        assert_relative_eq!(x.norm(), 1.0, max_relative = 1e-9);
        assert!((x - expected).amax() < 1e-4);
        assert_eq!(oracle.interaction_count(), 1);
    }

    #[test]
    fn best_response_collapses_when_prices_dominate() {
        let mut oracle = oracle_on_unit_ball(vec2(1.0, 1.0), 1e6, vec2(10.0, 10.0), 10.0);
        let x = oracle.post_price(&vec2(10.0, 10.0)).unwrap();
        assert!(x.iter().all(|&v| v <= 1e-8), "bundle {x:?}");
        assert!(x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn tie_break_selects_symmetric_bundle_at_equal_prices() {
        let a = vec2(0.7, 0.7);
        let mut oracle = oracle_on_unit_ball(a.clone(), 1e6, a.clone(), 0.5);
        let x = oracle.post_price(&a).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert_relative_eq!(x[0], s, max_relative = 1e-6);
        assert_relative_eq!(x[1], s, max_relative = 1e-6);
    }

    #[test]
    fn unrealistic_price_is_rejected_and_uncounted() {
        let mut oracle = oracle_on_unit_ball(vec2(1.0, 1.0), 1e4, vec2(1.0, 1.0), 0.25);
        let err = oracle.post_price(&vec2(2.0, 1.0)).unwrap_err();
        assert_eq!(err, MarketError::UnrealisticPrice);
        assert_eq!(oracle.interaction_count(), 0);
    }

    #[test]
    fn response_objective_beats_feasible_competitors() {
        // The returned bundle must dominate a cloud of feasible points.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..30 {
            let n = 2 + (trial % 3);
            let a = DVector::from_fn(n, |_, _| rng.random_range(0.1..1.4));
            let p = DVector::from_fn(n, |_, _| rng.random_range(0.05..1.2));
            let mu = 10f64.powf(rng.random_range(1.5..6.0));
            let set = FeasibleSet::unit_ball(n).unwrap();
            let model = BuyerModel::new(a.clone(), mu, set.clone()).unwrap();
            let x = model.utility_maximizer(&p).unwrap();
            assert!(set.contains(&x, 1e-9));
            let objective =
                |v: &DVector<f64>| model.perturbed_utility(v).unwrap() - p.dot(v);
            let best = objective(&x);
            for _ in 0..200 {
                let raw = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0f64));
                let cand = if set.contains(&raw, 0.0) {
                    raw
                } else {
                    set.project(&raw).unwrap()
                };
                assert!(
                    objective(&cand) <= best + 1e-9,
                    "feasible point beats the solver response"
                );
            }
        }
    }

    #[test]
    fn perturbed_utility_examples() {
        let set = FeasibleSet::unit_ball(2).unwrap();
        let m = BuyerModel::new(vec2(1.0, 1.0), 4.0, set.clone()).unwrap();
        assert_relative_eq!(
            m.perturbed_utility(&vec2(0.0, 0.0)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            m.perturbed_utility(&vec2(1.0, 1.0)).unwrap(),
            4.0,
            max_relative = 1e-14
        );
        let m = BuyerModel::new(vec2(2.0, 0.0), 2.0, set).unwrap();
        assert_relative_eq!(
            m.perturbed_utility(&vec2(0.25, 0.0)).unwrap(),
            1.5,
            max_relative = 1e-14
        );
        assert_eq!(
            m.perturbed_utility(&vec2(-0.5, 0.0)).unwrap_err(),
            MarketError::NegativeBundle
        );
    }

    #[test]
    fn strong_concavity_of_the_perturbed_objective() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let set = FeasibleSet::unit_ball(3).unwrap();
        let mu = 50.0;
        let model = BuyerModel::new(DVector::from_vec(vec![1.0, 0.4, 0.8]), mu, set.clone()).unwrap();
        for _ in 0..200 {
            let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
                let raw = DVector::from_fn(3, |_, _| rng.random_range(0.0..1.0f64));
                set.project(&raw).unwrap()
            };
            let x = sample(&mut rng);
            let y = sample(&mut rng);
            let theta: f64 = rng.random_range(0.01..0.99);
            let mid = &x * theta + &y * (1.0 - theta);
            let f = |v: &DVector<f64>| model.perturbed_utility(v).unwrap();
            let lhs = f(&mid);
            let rhs = theta * f(&x) + (1.0 - theta) * f(&y)
                + theta * (1.0 - theta) / (2.0 * mu) * (&x - &y).norm_squared();
            assert!(lhs >= rhs - 1e-9, "strong concavity violated");
        }
    }

    #[test]
    fn project_feasible_examples() {
        let set = FeasibleSet::unit_ball(2).unwrap();
        let inside = vec2(0.3, 0.4);
        assert_relative_eq!(set.project(&inside).unwrap(), inside, epsilon = 1e-12);
        assert_relative_eq!(
            set.project(&vec2(2.0, 0.0)).unwrap(),
            vec2(1.0, 0.0),
            epsilon = 1e-9
        );
        assert_relative_eq!(
            set.project(&vec2(-1.0, -1.0)).unwrap(),
            vec2(0.0, 0.0),
            epsilon = 1e-9
        );
    }

    #[test]
    fn project_feasible_is_euclidean_nearest_point() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let set = FeasibleSet::unit_ball(2).unwrap();
        for _ in 0..50 {
            let y = DVector::from_fn(2, |_, _| rng.random_range(-2.0..2.0f64));
            let proj = set.project(&y).unwrap();
            assert!(set.contains(&proj, 1e-9));
            let d = (&y - &proj).norm();
            for _ in 0..200 {
                let raw = DVector::from_fn(2, |_, _| rng.random_range(0.0..1.0f64));
                let cand = set.project(&raw).unwrap();
                assert!((y.clone() - cand).norm() >= d - 1e-7);
            }
        }
    }

    #[test]
    fn project_price_examples() {
        let ps = RealisticPriceSpace::new(vec2(5.0, 5.0), vec2(1.0, 2.0), 3.0).unwrap();
        let inside = vec2(5.5, 4.0);
        assert_eq!(ps.project(&inside), inside);
        assert_eq!(ps.project(&vec2(7.0, 1.0)), vec2(6.0, 3.0));
        assert_eq!(ps.project(&vec2(-3.0, 5.0)), vec2(4.0, 5.0));
    }

    #[test]
    fn project_price_idempotent_and_nonexpansive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let ps = RealisticPriceSpace::new(vec2(5.0, 5.0), vec2(1.0, 2.0), 3.0).unwrap();
        for _ in 0..1000 {
            let p = DVector::from_fn(2, |_, _| rng.random_range(-10.0..20.0f64));
            let q = DVector::from_fn(2, |_, _| rng.random_range(-10.0..20.0f64));
            let pp = ps.project(&p);
            let pq = ps.project(&q);
            assert_eq!(ps.project(&pp), pp);
            assert!((pp - pq).norm() <= (p - q).norm() + 1e-15);
        }
    }

    #[test]
    fn price_bounds_examples() {
        let ps = RealisticPriceSpace::new(vec2(5.0, 5.0), vec2(1.0, 2.0), 3.0).unwrap();
        assert_eq!(ps.price_bounds().unwrap(), (6.0, 4.0));

        let ps = RealisticPriceSpace::new(
            DVector::from_vec(vec![1.0, 1.0, 1.0]),
            DVector::zeros(3),
            0.0,
        )
        .unwrap();
        assert_eq!(ps.price_bounds().unwrap(), (1.0, 1.0));

        let ps = RealisticPriceSpace::new(vec2(2.0, 10.0), vec2(2.0, 1.0), 3.0).unwrap();
        assert_eq!(ps.price_bounds().unwrap(), (4.0, 9.0));
    }

    #[test]
    fn tau_bound_examples() {
        // lambda = 1, beta = 1/2, gamma1 = 1, L_bar = 6, L_under = 4.
        let prices = RealisticPriceSpace::new(vec2(5.0, 5.0), vec2(1.0, 2.0), 3.0).unwrap();
        let set = FeasibleSet::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            -1.0,
            1.0,
            1.0,
        )
        .unwrap();
        let know = SellerKnowledge::new(1.0, 2.0, 1.0, 0.5, set.clone(), prices).unwrap();
        let tau = know.tau_bound().unwrap();
        let expected = (8.0f64 / 6.0).sqrt().max(2.0 / 6.0) + 4.0;
        assert_relative_eq!(tau, expected, max_relative = 1e-12);

        // lambda = 0 and L_under = 0 kill every term.
        let prices = RealisticPriceSpace::new(vec2(1.0, 1.0), vec2(1.0, 1.0), 1.5).unwrap();
        let know = SellerKnowledge::new(1.0, 2.0, 0.0, 0.25, set.clone(), prices).unwrap();
        assert_eq!(know.tau_bound().unwrap(), 0.0);

        // lambda = 2, beta = 1/2, gamma1 = 0.1, L_bar = 10, L_under = 0.1.
        let prices =
            RealisticPriceSpace::new(vec2(5.05, 5.05), vec2(4.95, 4.95), 7.1).unwrap();
        let set = FeasibleSet::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            -1.0,
            0.1,
            1.0,
        )
        .unwrap();
        let know = SellerKnowledge::new(1.0, 2.0, 2.0, 0.5, set, prices).unwrap();
        let tau = know.tau_bound().unwrap();
        assert_relative_eq!(tau, 0.81, max_relative = 1e-10);
    }

    #[test]
    fn knowledge_validation() {
        let set = FeasibleSet::unit_ball(2).unwrap();
        let prices = RealisticPriceSpace::new(vec2(1.0, 1.0), vec2(0.5, 0.5), 1.0).unwrap();
        assert!(matches!(
            SellerKnowledge::new(1.0, 2.0, 1.0, 1.0, set.clone(), prices.clone()).unwrap_err(),
            MarketError::BetaOutOfRange(_)
        ));
        assert!(SellerKnowledge::new(2.0, 1.0, 1.0, 0.5, set, prices).is_err());
    }

    #[test]
    fn price_space_validation() {
        // p0 - delta < 0.
        assert!(RealisticPriceSpace::new(vec2(1.0, 1.0), vec2(2.0, 0.5), 3.0).is_err());
        // radius below the half-width norm.
        assert!(RealisticPriceSpace::new(vec2(5.0, 5.0), vec2(3.0, 4.0), 4.9).is_err());
        assert!(RealisticPriceSpace::new(vec2(5.0, 5.0), vec2(3.0, 4.0), 5.0).is_ok());
    }

    #[test]
    fn monotone_response_regression() {
        // The demand map is monotone: (p - p')ᵀ(x*(p) - x*(p')) <= 0, and in
        // particular raising one price never increases the quantity bought
        // of that item. (Total spend is not monotone for this buyer class.)
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let set = FeasibleSet::unit_ball(2).unwrap();
        for _ in 0..50 {
            let a = DVector::from_fn(2, |_, _| rng.random_range(0.4..1.2));
            let model = BuyerModel::new(a.clone(), 1e4, set.clone()).unwrap();
            let p = DVector::from_fn(2, |_, _| rng.random_range(0.2..0.9f64));
            let i = rng.random_range(0..2);
            let mut p_hi = p.clone();
            p_hi[i] += rng.random_range(0.05..0.3);
            let x_lo = model.utility_maximizer(&p).unwrap();
            let x_hi = model.utility_maximizer(&p_hi).unwrap();
            assert!(x_hi[i] <= x_lo[i] + 1e-9, "own demand rose with the price");
            assert!((&p_hi - &p).dot(&(&x_hi - &x_lo)) <= 1e-9);
        }
    }
}
