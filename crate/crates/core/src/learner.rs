//! The outer learning loop: pick a probe bundle by maximizing the ellipsoid
//! quadratic over the feasible set, learn the probe's value through priced
//! interactions, choose the cutting halfspace, shrink the uncertainty
//! ellipsoid, and terminate once every bundle's value interval is narrower
//! than the target accuracy.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dual::{
    interaction_counts, learn_value, DualError, DualProblem, InitialDualValueProvider,
    InteractionBudget, InteractionCounts, LearnValueParams,
};
use crate::geometry::{Ellipsoid, GeometryError, Halfspace};
use crate::linalg;
use crate::market::{BuyerOracle, FeasibleSet, MarketError, SellerKnowledge};

/// Allowed dual/primal disagreement in the probe objective (square-root
/// scale), relative to the larger of 1 and the objective.
const PROBE_AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),
    #[error("outer iteration cap {cap} exceeded before termination")]
    IterationCapExceeded { cap: usize },
    #[error("probe selection failed: {0}")]
    SolverFailure(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Market(#[from] MarketError),
}

/// Everything the outer loop needs to run, validated as a whole by
/// [`validate`].
#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub epsilon: f64,
    /// Initial shape scale: the loop starts from `E(r_a I, 0)`.
    pub r_a: f64,
    pub knowledge: SellerKnowledge,
    pub max_outer_iterations: usize,
    pub max_interactions: u64,
    pub budget: InteractionBudget,
}

/// Outputs of parameter validation: the error budget, the per-probe
/// interaction counts and the outer-iteration cap.
#[derive(Debug, Clone, Copy)]
pub struct ValidationSummary {
    pub tau: f64,
    pub interactions: InteractionCounts,
    pub outer_cap: u64,
}

/// `ceil(20 n² ln(20 r_a (n+1) / epsilon))`, the worst-case number of cuts.
pub fn outer_iteration_cap(n: usize, r_a: f64, epsilon: f64) -> u64 {
    let nf = n as f64;
    let arg = 20.0 * r_a * (nf + 1.0) / epsilon;
    let cap = 20.0 * nf * nf * arg.ln();
    cap.ceil().max(1.0) as u64
}

/// Check the feasibility chain `R² gamma2 < tau <= epsilon/(4n)` and the
/// interaction caps; returns the derived budget quantities.
pub fn validate(config: &LearnerConfig) -> Result<ValidationSummary, LearnerError> {
    let n = config.knowledge.feasible.dim();
    if n < 2 {
        return Err(LearnerError::InfeasibleParameters(format!(
            "dimension n = {n} violates n >= 2"
        )));
    }
    if config.epsilon <= 0.0 {
        return Err(LearnerError::InfeasibleParameters(
            "epsilon must be positive".into(),
        ));
    }
    if config.r_a <= 0.0 {
        return Err(LearnerError::InfeasibleParameters(
            "initial radius r_a must be positive".into(),
        ));
    }
    let tau = config.knowledge.tau_bound()?;
    let gamma2 = config.knowledge.feasible.gamma2();
    let radius = config.knowledge.prices.radius();
    let r2g2 = radius * radius * gamma2;
    if tau <= r2g2 {
        return Err(LearnerError::InfeasibleParameters(format!(
            "tau = {tau:.6e} violates R^2 gamma2 < tau (R^2 gamma2 = {r2g2:.6e})"
        )));
    }
    let ceiling = config.epsilon / (4.0 * n as f64);
    if tau > ceiling {
        return Err(LearnerError::InfeasibleParameters(format!(
            "tau = {tau:.6e} violates tau <= epsilon/(4n) = {ceiling:.6e}"
        )));
    }
    let interactions = interaction_counts(
        tau,
        gamma2,
        config.knowledge.mu2,
        radius,
        config.budget,
        config.max_interactions,
    )?;
    Ok(ValidationSummary {
        tau,
        interactions,
        outer_cap: outer_iteration_cap(n, config.r_a, config.epsilon),
    })
}

/// A selected probe: the feasible maximizer of `xᵀAx`, its objective on the
/// square-root scale, and the dual/primal agreement gap.
#[derive(Debug, Clone)]
pub struct ProbeSelection {
    pub bundle: DVector<f64>,
    /// `sqrt(bundleᵀ A bundle)`.
    pub objective: f64,
    /// Upper bound on `sqrt(max xᵀAx)` over the quadratic set, from the
    /// dual route.
    pub dual_bound: f64,
    pub agreement_gap: f64,
}

/// Maximize `xᵀAx` over the feasible set.
///
/// Two independent routes are run every call: a dual route over the
/// quadratic constraint alone (a generalized eigenvalue problem when the
/// linear term vanishes, otherwise bisection on the constraint multiplier
/// of the bordered certificate), and multistart projected ascent over the
/// full clipped set. Their objectives must agree within 1e-6 on the
/// square-root scale or the call fails.
pub fn select_bundle(
    ellipsoid: &Ellipsoid,
    set: &FeasibleSet,
) -> Result<ProbeSelection, LearnerError> {
    if ellipsoid.dim() != set.dim() {
        return Err(LearnerError::InfeasibleParameters(
            "ellipsoid and feasible set dimensions disagree".into(),
        ));
    }
    let a = ellipsoid.shape();
    let (quad_opt, quad_best) = maximize_quad_over_constraint(a, set)?;
    let primal = multistart_ascent(a, set, &quad_opt)?;
    let primal_obj = linalg::quad_form(a, &primal).max(0.0).sqrt();
    let dual_obj = quad_best.max(0.0).sqrt();
    let gap = (dual_obj - primal_obj).abs();
    if gap > PROBE_AGREEMENT_TOL * dual_obj.max(1.0) {
        return Err(LearnerError::SolverFailure(format!(
            "dual bound {dual_obj:.9e} and projected ascent {primal_obj:.9e} disagree"
        )));
    }
    Ok(ProbeSelection {
        bundle: primal,
        objective: primal_obj,
        dual_bound: dual_obj,
        agreement_gap: gap,
    })
}

/// Exact maximization of `xᵀAx` subject to the quadratic constraint alone.
/// Returns the maximizer and the objective value `xᵀAx`.
fn maximize_quad_over_constraint(
    a: &DMatrix<f64>,
    set: &FeasibleSet,
) -> Result<(DVector<f64>, f64), LearnerError> {
    let n = set.dim();
    let p_chol = nalgebra::Cholesky::new(set.quad().clone()).ok_or_else(|| {
        LearnerError::SolverFailure("quadratic form must be positive definite for probing".into())
    })?;
    // B = L^-1 A L^-T shares generalized eigenvalues with (A, P).
    let l = p_chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| LearnerError::SolverFailure("singular Cholesky factor".into()))?;
    let b = &l_inv * a * l_inv.transpose();
    let (vals, vecs) =
        linalg::sym_eigen(&b).ok_or_else(|| LearnerError::SolverFailure("eigensolver".into()))?;
    let top = linalg::argmax_with_ties(&vals);
    let lam_max = vals[top];
    let mut w = vecs.column(top).into_owned();
    // Deterministic sign: the largest-magnitude entry is positive.
    let lead = (0..n).fold(0, |best, i| {
        if w[i].abs() > w[best].abs() {
            i
        } else {
            best
        }
    });
    if w[lead] < 0.0 {
        w = -w;
    }

    if set.lin().iter().all(|&v| v == 0.0) {
        // Pure generalized eigenvalue problem: the optimum sits on the
        // boundary along the top eigenvector.
        let neg_r = -set.constant();
        if neg_r < 0.0 {
            return Err(LearnerError::SolverFailure(
                "quadratic set has empty interior".into(),
            ));
        }
        let x = l_inv.transpose() * w * neg_r.sqrt();
        return Ok((x, lam_max * neg_r));
    }

    // Bisection on the multiplier of max xᵀAx - lam (xᵀPx + 2qᵀx + r).
    // x(lam) = -lam (lam P - A)^-1 q; the constraint residual is monotone
    // decreasing in lam on (lam_max, inf).
    let solve_at = |lam: f64| -> Option<DVector<f64>> {
        let m = set.quad() * lam - a;
        nalgebra::Cholesky::new(m).map(|c| c.solve(&(set.lin() * (-lam))))
    };
    let scale = lam_max.abs().max(1.0);
    let mut lo = lam_max + 1e-14 * scale;
    let mut hi = lo;
    // The residual at lo may already be negative (degenerate direction);
    // handled by the boundary-mix below.
    let mut bracketed = false;
    for _ in 0..200 {
        match solve_at(hi) {
            Some(x) if set.quad_value(&x) > 0.0 => {
                lo = hi;
                hi *= 2.0;
            }
            Some(_) => {
                bracketed = true;
                break;
            }
            None => {
                lo = hi;
                hi *= 2.0;
            }
        }
    }
    if !bracketed {
        return Err(LearnerError::SolverFailure(
            "multiplier bracketing failed".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi || (hi - lo) <= 1e-10 * hi.max(1.0) {
            break;
        }
        match solve_at(mid) {
            Some(x) if set.quad_value(&x) > 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => lo = mid,
        }
    }
    let mut x = solve_at(hi).ok_or_else(|| LearnerError::SolverFailure("multiplier solve".into()))?;
    let residual = set.quad_value(&x);
    if residual < -1e-12 * set.constant().abs().max(1.0) {
        // Degenerate direction: move along the top generalized eigenvector
        // until the boundary is reached.
        let v = l_inv.transpose() * &w;
        let aa = linalg::quad_form(set.quad(), &v);
        let bb = 2.0 * (v.dot(&(set.quad() * &x)) + set.lin().dot(&v));
        let cc = residual;
        let disc = (bb * bb - 4.0 * aa * cc).max(0.0).sqrt();
        let s1 = (-bb + disc) / (2.0 * aa);
        let s2 = (-bb - disc) / (2.0 * aa);
        let cand1 = &x + &v * s1;
        let cand2 = &x + &v * s2;
        x = if linalg::quad_form(a, &cand1) >= linalg::quad_form(a, &cand2) {
            cand1
        } else {
            cand2
        };
    }
    let obj = linalg::quad_form(a, &x);
    Ok((x, obj))
}

/// Monotone projected gradient ascent on `xᵀAx` over the full feasible set
/// from several deterministic starts.
fn multistart_ascent(
    a: &DMatrix<f64>,
    set: &FeasibleSet,
    quad_opt: &DVector<f64>,
) -> Result<DVector<f64>, LearnerError> {
    let n = set.dim();
    let mut starts: Vec<DVector<f64>> = Vec::with_capacity(n + 3);
    starts.push(quad_opt.map(f64::abs));
    starts.push(quad_opt.clone());
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        starts.push(e);
    }
    starts.push(DVector::from_element(n, 1.0 / (n as f64).sqrt()));

    let lam_scale = linalg::sym_eigenvalues(a)
        .map(|v| v.into_iter().fold(1e-12f64, f64::max))
        .unwrap_or(1.0);

    let mut best: Option<(f64, DVector<f64>)> = None;
    for start in starts {
        let mut x = set.project(&start)?;
        let mut step = 0.45 / lam_scale;
        let mut fx = linalg::quad_form(a, &x);
        for _ in 0..200 {
            let grad = a * &x * 2.0;
            let cand = set.project(&(&x + &grad * step))?;
            let fc = linalg::quad_form(a, &cand);
            if fc > fx + 1e-16 * fx.abs().max(1e-30) {
                let moved = (&cand - &x).norm();
                x = cand;
                fx = fc;
                if moved <= 1e-13 {
                    break;
                }
            } else {
                step *= 0.5;
                if step * lam_scale < 1e-12 {
                    break;
                }
            }
        }
        // Strict relative improvement only, so numerically-tied later
        // starts cannot displace an earlier exact one (ties resolve to the
        // first start, which is axis-aligned when the top direction is).
        if best
            .as_ref()
            .map_or(true, |(bf, _)| fx > *bf * (1.0 + 1e-12) + 1e-300)
        {
            best = Some((fx, x));
        }
    }
    Ok(best.expect("at least one start").1)
}

/// Which cut the value estimate produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutBranch {
    /// Estimate at or below the center value: cut through the center.
    Central,
    /// Estimate above the center value: keep a slab below the center of
    /// depth `delta`.
    Shallow,
}

impl CutBranch {
    pub fn as_str(&self) -> &'static str {
        match self {
            CutBranch::Central => "central",
            CutBranch::Shallow => "shallow",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChosenCut {
    pub halfspace: Halfspace,
    pub branch: CutBranch,
    /// Depth of the shallow cut (0 for central cuts).
    pub depth: f64,
}

/// Turn a value estimate for the probe into a halfspace certified to
/// contain the true coefficient vector.
///
/// If `g_tilde <= x_tᵀc` the true value is certified below the center value
/// and the cut is central. Otherwise the kept side is
/// `{a : x_tᵀa >= x_tᵀc - delta}` with
/// `delta = (4/mu1) Σ sqrt(x_t_i) + 2 tau`, discounting both the unknown
/// tie-break contribution and the estimation budget. Ties resolve to the
/// central cut.
pub fn choose_halfspace(
    ellipsoid: &Ellipsoid,
    x_t: &DVector<f64>,
    g_tilde: f64,
    mu1: f64,
    tau: f64,
) -> Result<ChosenCut, LearnerError> {
    let mid = x_t.dot(ellipsoid.center());
    if g_tilde <= mid {
        Ok(ChosenCut {
            halfspace: Halfspace::below(x_t.clone(), mid)?,
            branch: CutBranch::Central,
            depth: 0.0,
        })
    } else {
        let tie_break: f64 = x_t.iter().map(|&v| v.max(0.0).sqrt()).sum();
        let depth = 4.0 / mu1 * tie_break + 2.0 * tau;
        Ok(ChosenCut {
            halfspace: Halfspace::above(x_t.clone(), mid - depth)?,
            branch: CutBranch::Shallow,
            depth,
        })
    }
}

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// Every feasible bundle's value interval is at most epsilon wide.
    Converged,
}

/// One outer iteration as recorded by the loop.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iter: usize,
    /// Cumulative interactions after this iteration.
    pub interactions: u64,
    pub probe: DVector<f64>,
    pub g_tilde: f64,
    pub branch: CutBranch,
    pub depth: f64,
    pub alpha: f64,
    pub vol_factor: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `2 sqrt(x'ᵀ A' x')` for the freshly selected probe, the loop's
    /// continuation test.
    pub term_lhs: f64,
    pub agreement_gap: f64,
}

/// Full per-run record: iteration rows plus every intermediate ellipsoid
/// (`E_0` first), so ground-truth containment can be audited afterwards.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub iterations: Vec<IterationRecord>,
    pub ellipsoids: Vec<Ellipsoid>,
    pub termination: TerminationReason,
    pub tau: f64,
    pub counts: InteractionCounts,
    pub outer_cap: u64,
}

/// The outer loop: repeatedly probe, learn the probe's value, cut.
///
/// Starts from `E(r_a I, 0)` and loops while the widest value interval
/// `2 sqrt(xᵀAx)` over the feasible set exceeds `epsilon`. Each iteration
/// spends exactly the validated per-probe interaction count.
pub fn learn_utility(
    config: &LearnerConfig,
    oracle: &mut BuyerOracle,
    provider: &dyn InitialDualValueProvider,
) -> Result<(Ellipsoid, RunLog), LearnerError> {
    let summary = validate(config)?;
    let set = &config.knowledge.feasible;
    let prices = &config.knowledge.prices;
    let n = set.dim();

    let mut ellipsoid = Ellipsoid::initial(n, config.r_a)?;
    let mut probe = select_bundle(&ellipsoid, set)?;
    let mut log = RunLog {
        iterations: Vec::new(),
        ellipsoids: vec![ellipsoid.clone()],
        termination: TerminationReason::Converged,
        tau: summary.tau,
        counts: summary.interactions,
        outer_cap: summary.outer_cap,
    };
    let params = LearnValueParams {
        tau: summary.tau,
        gamma2: set.gamma2(),
        mu2: config.knowledge.mu2,
        radius: prices.radius(),
        budget: config.budget,
        max_interactions: config.max_interactions,
        record_trajectory: false,
    };

    for iter in 0.. {
        if iter >= config.max_outer_iterations {
            return Err(LearnerError::IterationCapExceeded {
                cap: config.max_outer_iterations,
            });
        }
        let g_p1 = provider.initial_dual_value(&probe.bundle, prices.median())?;
        let problem = DualProblem::new(probe.bundle.clone(), set, g_p1)?;
        let value = learn_value(&problem, oracle, prices, &params)?;

        let chosen = choose_halfspace(
            &ellipsoid,
            &probe.bundle,
            value.g_tilde,
            config.knowledge.mu1,
            summary.tau,
        )?;
        let alpha = ellipsoid.cut_depth(&chosen.halfspace);
        let next = ellipsoid.cut(&chosen.halfspace)?;
        let (lambda_min, lambda_max, vol_factor) = next.spectral_bounds()?;
        let next_probe = select_bundle(&next, set)?;
        let term_lhs = 2.0 * next_probe.objective;

        log.iterations.push(IterationRecord {
            iter,
            interactions: oracle.interaction_count(),
            probe: probe.bundle.clone(),
            g_tilde: value.g_tilde,
            branch: chosen.branch,
            depth: chosen.depth,
            alpha,
            vol_factor,
            lambda_min,
            lambda_max,
            term_lhs,
            agreement_gap: probe.agreement_gap,
        });
        log.ellipsoids.push(next.clone());

        ellipsoid = next;
        probe = next_probe;
        if term_lhs <= config.epsilon {
            break;
        }
    }
    Ok((ellipsoid, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::RealisticPriceSpace;
    use approx::assert_relative_eq;

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn outer_cap_matches_hand_computation() {
        // n = 2, r_a = 1, eps = 0.1: ceil(80 ln 600) = 512.
        assert_eq!(outer_iteration_cap(2, 1.0, 0.1), 512);
    }

    #[test]
    fn select_bundle_on_anisotropic_ball() {
        let e = Ellipsoid::new(DMatrix::from_diagonal(&vec2(4.0, 1.0)), vec2(0.0, 0.0)).unwrap();
        let set = FeasibleSet::unit_ball(2).unwrap();
        let probe = select_bundle(&e, &set).unwrap();
        assert_relative_eq!(probe.bundle, vec2(1.0, 0.0), epsilon = 1e-9);
        assert_relative_eq!(probe.objective, 2.0, max_relative = 1e-9);
        assert!(probe.agreement_gap <= 1e-6);
    }

    #[test]
    fn select_bundle_breaks_ties_to_the_first_axis() {
        let e = Ellipsoid::initial(3, 1.0).unwrap();
        let set = FeasibleSet::unit_ball(3).unwrap();
        let probe = select_bundle(&e, &set).unwrap();
        assert_relative_eq!(
            probe.bundle,
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            epsilon = 1e-9
        );
        assert_relative_eq!(probe.objective, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn select_bundle_with_offset_ball() {
        // Ball of radius 0.2 centered at (0.5, 0.4): nonzero linear term
        // exercises the multiplier bisection.
        let center = vec2(0.5, 0.4);
        let rho = 0.2;
        let set = FeasibleSet::new(
            DMatrix::identity(2, 2),
            -center.clone(),
            center.norm_squared() - rho * rho,
            1.2,
            0.75,
        )
        .unwrap();
        let e = Ellipsoid::new(DMatrix::from_diagonal(&vec2(3.0, 1.0)), vec2(0.0, 0.0)).unwrap();
        let probe = select_bundle(&e, &set).unwrap();
        // Independent check: dense boundary sweep of the circle.
        let mut best = 0.0f64;
        for k in 0..200_000 {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / 200_000.0;
            let x = vec2(center[0] + rho * th.cos(), center[1] + rho * th.sin());
            if x.iter().all(|&v| (0.0..=1.0).contains(&v)) {
                best = best.max(3.0 * x[0] * x[0] + x[1] * x[1]);
            }
        }
        assert_relative_eq!(probe.objective, best.sqrt(), max_relative = 1e-5);
    }

    #[test]
    fn choose_halfspace_branches() {
        let e = Ellipsoid::new(DMatrix::identity(2, 2), vec2(1.0, 1.0)).unwrap();
        // Estimate below the center value: central cut {a1 <= 1}.
        let cut = choose_halfspace(&e, &vec2(1.0, 0.0), 0.5, 1e6, 0.1).unwrap();
        assert_eq!(cut.branch, CutBranch::Central);
        assert_eq!(cut.depth, 0.0);
        assert_relative_eq!(cut.halfspace.normal().clone(), vec2(1.0, 0.0));
        assert_relative_eq!(cut.halfspace.offset(), 1.0);

        // Estimate above: keep {a1 >= 1 - (4e-6 + 0.2)}.
        let cut = choose_halfspace(&e, &vec2(1.0, 0.0), 1.5, 1e6, 0.1).unwrap();
        assert_eq!(cut.branch, CutBranch::Shallow);
        assert_relative_eq!(cut.depth, 0.200004, max_relative = 1e-12);
        // Canonical form flips the normal.
        assert_relative_eq!(cut.halfspace.normal().clone(), vec2(-1.0, 0.0));
        assert_relative_eq!(cut.halfspace.offset(), -(1.0 - 0.200004), max_relative = 1e-12);

        // Tie resolves to the central branch.
        let cut = choose_halfspace(&e, &vec2(1.0, 0.0), 1.0, 1e6, 0.1).unwrap();
        assert_eq!(cut.branch, CutBranch::Central);
    }

    fn knowledge_with_tau(target_tau: f64, delta: f64) -> SellerKnowledge {
        // Price box [p0 - delta, p0 + delta]^2 with p0 = delta (floor at
        // zero), beta = 1/2 and lambda chosen so the root branch hits the
        // target exactly: lambda^2 (2 / (2 delta)) = tau.
        let p0 = DVector::from_element(2, delta);
        let dv = DVector::from_element(2, delta);
        let radius = dv.norm();
        let prices = RealisticPriceSpace::new(p0, dv, radius).unwrap();
        let lambda = (target_tau * delta).sqrt();
        SellerKnowledge::new(
            1000.0,
            1000.0,
            lambda,
            0.5,
            FeasibleSet::unit_ball(2).unwrap(),
            prices,
        )
        .unwrap()
    }

    #[test]
    fn validate_accepts_a_consistent_chain() {
        // tau = 0.01, R^2 gamma2 = 2 delta^2 small, epsilon/(4n) = 0.0125.
        let knowledge = knowledge_with_tau(0.01, 0.02);
        let config = LearnerConfig {
            epsilon: 0.1,
            r_a: 1.0,
            knowledge,
            max_outer_iterations: 10_000,
            max_interactions: u64::MAX,
            budget: InteractionBudget::Statement,
        };
        let summary = validate(&config).unwrap();
        assert_relative_eq!(summary.tau, 0.01, max_relative = 1e-12);
        assert_eq!(summary.outer_cap, 512);
    }

    #[test]
    fn validate_rejects_an_empty_tau_window() {
        // R^2 gamma2 = 0.05 leaves no room below epsilon/(4n) = 0.0125.
        let p0 = DVector::from_element(2, 0.2);
        let dv = DVector::from_element(2, 0.158);
        let prices = RealisticPriceSpace::new(p0, dv, 0.05f64.sqrt()).unwrap();
        let knowledge = SellerKnowledge::new(
            1000.0,
            1000.0,
            0.05,
            0.5,
            FeasibleSet::unit_ball(2).unwrap(),
            prices,
        )
        .unwrap();
        let config = LearnerConfig {
            epsilon: 0.1,
            r_a: 1.0,
            knowledge,
            max_outer_iterations: 10_000,
            max_interactions: u64::MAX,
            budget: InteractionBudget::Statement,
        };
        let err = validate(&config).unwrap_err();
        assert!(matches!(err, LearnerError::InfeasibleParameters(_)));
        let msg = err.to_string();
        assert!(msg.contains("tau"), "message should name the inequality: {msg}");
    }

    #[test]
    fn validate_rejects_dimension_one() {
        let p0 = DVector::from_element(1, 0.05);
        let dv = DVector::from_element(1, 0.05);
        let prices = RealisticPriceSpace::new(p0, dv, 0.05).unwrap();
        let set = FeasibleSet::new(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            -1.0,
            1.0,
            1.0,
        )
        .unwrap();
        let knowledge = SellerKnowledge::new(1000.0, 1000.0, 0.01, 0.5, set, prices).unwrap();
        let config = LearnerConfig {
            epsilon: 0.1,
            r_a: 1.0,
            knowledge,
            max_outer_iterations: 10,
            max_interactions: u64::MAX,
            budget: InteractionBudget::Statement,
        };
        let err = validate(&config).unwrap_err();
        assert!(err.to_string().contains("n >= 2"));
    }
}
