//! Learning the value of a target bundle through prices.
//!
//! For a feasible target `x_hat` the dual function
//! `g(p) = max_{x in C} U'(x) - pᵀx + pᵀx_hat` is convex, smooth, and its
//! gradient at `p` is `x_hat - x*(p)` where `x*(p)` is the bundle the buyer
//! actually purchases. [`learn_value`] minimizes `g` over the realistic
//! price box with constant-step-length projected gradient descent, driven
//! purely by posted prices and observed purchases, and returns a
//! second-order-corrected telescoping estimate of the final dual value.

use nalgebra::DVector;
use thiserror::Error;

use crate::market::{BuyerModel, BuyerOracle, FeasibleSet, MarketError, RealisticPriceSpace};

/// Gradient norms below this are treated as stationary: the price is not
/// moved and a zero step is recorded.
const ZERO_GRADIENT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error("interaction budget infeasible: {0}")]
    InfeasibleBudget(String),
    #[error("target bundle is not feasible")]
    InfeasibleTarget,
    #[error(transparent)]
    Market(#[from] MarketError),
}

/// Ground-truth evaluation of the dual `g(p)`. Simulation and test side
/// only: it reads the model directly and does not touch any interaction
/// counter.
pub fn dual_value(
    model: &BuyerModel,
    x_hat: &DVector<f64>,
    price: &DVector<f64>,
) -> Result<f64, MarketError> {
    let x = model.utility_maximizer(price)?;
    Ok(model.perturbed_utility(&x)? - price.dot(&x) + price.dot(x_hat))
}

/// Gradient of the dual read off an observed purchase: `x_hat - x*(p)`.
pub fn dual_gradient(x_hat: &DVector<f64>, purchased: &DVector<f64>) -> DVector<f64> {
    x_hat - purchased
}

/// Source of the dual value at the starting price `p_1`. The procedure
/// assumes this quantity is known; the shipped implementation is
/// simulation-backed (it evaluates the ground-truth model), which is a
/// simulation privilege rather than seller-realizable knowledge.
pub trait InitialDualValueProvider {
    fn initial_dual_value(
        &self,
        x_hat: &DVector<f64>,
        p1: &DVector<f64>,
    ) -> Result<f64, MarketError>;
}

/// Simulation-backed provider over a copy of the ground truth.
#[derive(Debug, Clone)]
pub struct SimulationDualValue {
    model: BuyerModel,
}

impl SimulationDualValue {
    pub fn new(model: BuyerModel) -> Self {
        Self { model }
    }
}

impl InitialDualValueProvider for SimulationDualValue {
    fn initial_dual_value(
        &self,
        x_hat: &DVector<f64>,
        p1: &DVector<f64>,
    ) -> Result<f64, MarketError> {
        dual_value(&self.model, x_hat, p1)
    }
}

/// How many buyer interactions one value-learning call spends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionBudget {
    /// `ceil(50 gamma2 mu2 / (tau - R² gamma2))`, the stated bound.
    Statement,
    /// `ceil((gamma2 + mu2) / (2 (tau - R² gamma2)))`, the bound the
    /// accuracy argument actually derives; much smaller, same guarantee.
    ProofBound,
    /// Fixed number of interactions. The accuracy guarantee then has to be
    /// checked externally (the experiment harness verifies the value
    /// sandwich against ground truth on every probe).
    Explicit(u64),
}

impl Default for InteractionBudget {
    fn default() -> Self {
        InteractionBudget::Statement
    }
}

/// Both interaction-count formulas plus the one a run will actually use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteractionCounts {
    pub statement: u64,
    pub proof_bound: u64,
    pub effective: u64,
}

/// Evaluate the interaction-count formulas, requiring `tau > R² gamma2`
/// (strict, so the counts are finite) and `effective <= max_interactions`.
pub fn interaction_counts(
    tau: f64,
    gamma2: f64,
    mu2: f64,
    radius: f64,
    budget: InteractionBudget,
    max_interactions: u64,
) -> Result<InteractionCounts, DualError> {
    let margin = tau - radius * radius * gamma2;
    if margin <= 0.0 {
        return Err(DualError::InfeasibleBudget(format!(
            "tau = {tau:.6e} must strictly exceed R^2 gamma2 = {:.6e}",
            radius * radius * gamma2
        )));
    }
    let to_count = |v: f64, label: &str| -> Result<u64, DualError> {
        if !v.is_finite() || v > 1e18 {
            return Err(DualError::InfeasibleBudget(format!(
                "{label} interaction count overflows ({v:.3e})"
            )));
        }
        Ok((v.ceil() as u64).max(1))
    };
    let statement = to_count(50.0 * gamma2 * mu2 / margin, "statement")?;
    let proof_bound = to_count((gamma2 + mu2) / (2.0 * margin), "proof-bound")?;
    let effective = match budget {
        InteractionBudget::Statement => statement,
        InteractionBudget::ProofBound => proof_bound,
        InteractionBudget::Explicit(k) => k.max(1),
    };
    if effective > max_interactions {
        return Err(DualError::InfeasibleBudget(format!(
            "required {effective} interactions exceed the cap {max_interactions}"
        )));
    }
    Ok(InteractionCounts {
        statement,
        proof_bound,
        effective,
    })
}

/// A value-learning task: the target bundle and the known dual value at the
/// starting price.
#[derive(Debug, Clone)]
pub struct DualProblem {
    x_hat: DVector<f64>,
    g_p1: f64,
}

impl DualProblem {
    pub fn new(
        x_hat: DVector<f64>,
        feasible: &FeasibleSet,
        g_p1: f64,
    ) -> Result<Self, DualError> {
        if !feasible.contains(&x_hat, 1e-9) {
            return Err(DualError::InfeasibleTarget);
        }
        Ok(Self { x_hat, g_p1 })
    }

    pub fn x_hat(&self) -> &DVector<f64> {
        &self.x_hat
    }

    pub fn g_p1(&self) -> f64 {
        self.g_p1
    }
}

#[derive(Debug, Clone)]
pub struct LearnValueParams {
    pub tau: f64,
    pub gamma2: f64,
    pub mu2: f64,
    /// Radius of a Euclidean ball enclosing the price box.
    pub radius: f64,
    pub budget: InteractionBudget,
    pub max_interactions: u64,
    /// Keep the full (price, bundle, step-length) trajectory. Off by
    /// default: budgets run to hundreds of thousands of steps.
    pub record_trajectory: bool,
}

/// One projected-gradient step as recorded in a trajectory.
#[derive(Debug, Clone)]
pub struct PriceStep {
    pub price: DVector<f64>,
    pub bundle: DVector<f64>,
    pub step_len: f64,
}

#[derive(Debug, Clone)]
pub struct LearnValueResult {
    /// Telescoping estimate of the dual value at the final price.
    pub g_tilde: f64,
    pub p_final: DVector<f64>,
    pub iterations_used: u64,
    pub trajectory: Option<Vec<PriceStep>>,
}

/// Walk the dual with projected gradient descent and estimate its final
/// value.
///
/// Starts at the median price `p_1 = p0`. At step `t` the buyer is shown
/// `p_t` and buys `x*(p_t)`; the price moves by a constant step length
/// `gamma = 1/T` along the negative gradient and is clamped back into the
/// box. The returned estimate is
///
/// ```text
/// g~ = g(p_1) + Σ ∇g(p_t)ᵀ(p_{t+1} - p_t) + (mu2/2) Σ ||p_{t+1} - p_t||²
/// ```
///
/// with both sums over the `T - 1` moves.
pub fn learn_value(
    problem: &DualProblem,
    oracle: &mut BuyerOracle,
    prices: &RealisticPriceSpace,
    params: &LearnValueParams,
) -> Result<LearnValueResult, DualError> {
    let counts = interaction_counts(
        params.tau,
        params.gamma2,
        params.mu2,
        params.radius,
        params.budget,
        params.max_interactions,
    )?;
    let total = counts.effective;
    let gamma = 1.0 / total as f64;

    let mut p = prices.median().clone();
    let mut g_tilde = problem.g_p1;
    let mut trajectory = params.record_trajectory.then(Vec::new);

    for step in 0..total {
        let bundle = oracle.post_price(&p)?;
        let grad = dual_gradient(&problem.x_hat, &bundle);
        let last = step + 1 == total;
        let gnorm = grad.norm();
        if last || gnorm < ZERO_GRADIENT {
            if let Some(traj) = trajectory.as_mut() {
                traj.push(PriceStep {
                    price: p.clone(),
                    bundle,
                    step_len: 0.0,
                });
            }
            continue;
        }
        let eta = gamma / gnorm;
        let p_next = prices.project(&(&p - &grad * eta));
        let dp = &p_next - &p;
        g_tilde += grad.dot(&dp) + 0.5 * params.mu2 * dp.norm_squared();
        if let Some(traj) = trajectory.as_mut() {
            traj.push(PriceStep {
                price: p.clone(),
                bundle,
                step_len: dp.norm(),
            });
        }
        p = p_next;
    }

    Ok(LearnValueResult {
        g_tilde,
        p_final: p,
        iterations_used: total,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{FeasibleSet, SellerKnowledge, DEFAULT_SOLVER_TOL};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn gradient_is_plain_difference() {
        let g = dual_gradient(&vec2(0.5, 0.5), &vec2(0.25, 0.75));
        assert_eq!(g, vec2(0.25, -0.25));
        let g = dual_gradient(&vec2(0.3, 0.3), &vec2(0.3, 0.3));
        assert_eq!(g, vec2(0.0, 0.0));
    }

    #[test]
    fn statement_budget_matches_formula() {
        let counts = interaction_counts(
            0.1,
            1.0,
            10.0,
            0.05f64.sqrt(),
            InteractionBudget::Statement,
            1_000_000,
        )
        .unwrap();
        assert_eq!(counts.statement, 10_000);
        assert_eq!(counts.effective, 10_000);
        // Proof-level bound is far smaller.
        assert_eq!(counts.proof_bound, 110);
    }

    #[test]
    fn budget_requires_strict_margin() {
        let err = interaction_counts(0.05, 1.0, 10.0, 0.05f64.sqrt(), Default::default(), 100)
            .unwrap_err();
        assert!(matches!(err, DualError::InfeasibleBudget(_)));
        let err =
            interaction_counts(0.1, 1.0, 10.0, 0.05f64.sqrt(), Default::default(), 100).unwrap_err();
        assert!(matches!(err, DualError::InfeasibleBudget(_)));
    }

    #[test]
    fn dual_value_at_zero_price_is_the_maximal_utility() {
        let set = FeasibleSet::unit_ball(2).unwrap();
        let model = BuyerModel::new(vec2(1.0, 1.0), 1e6, set.clone()).unwrap();
        // With p = 0 and x_hat the utility maximizer, the price terms vanish
        // and g equals U' exactly.
        let x_hat = model.utility_maximizer(&vec2(0.0, 0.0)).unwrap();
        let g0 = dual_value(&model, &x_hat, &vec2(0.0, 0.0)).unwrap();
        let direct = model.perturbed_utility(&x_hat).unwrap();
        assert_relative_eq!(g0, direct, max_relative = 1e-12);
        assert_relative_eq!(g0, 2f64.sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn weak_duality_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let set = FeasibleSet::unit_ball(2).unwrap();
        for _ in 0..50 {
            let a = DVector::from_fn(2, |_, _| rng.random_range(0.2..1.2));
            let mu = 10f64.powf(rng.random_range(1.0..5.0));
            let model = BuyerModel::new(a, mu, set.clone()).unwrap();
            let x_hat = set
                .project(&DVector::from_fn(2, |_, _| rng.random_range(0.0..1.0f64)))
                .unwrap();
            let p = DVector::from_fn(2, |_, _| rng.random_range(0.0..2.0f64));
            let g = dual_value(&model, &x_hat, &p).unwrap();
            let u = model.perturbed_utility(&x_hat).unwrap();
            assert!(g >= u - 1e-8, "weak duality violated: g={g}, U'={u}");
        }
    }

    #[test]
    fn finite_differences_match_the_purchase_gradient() {
        // Central differences of g against x_hat - x*(p) on a box-dominant
        // feasible set, where the response varies smoothly.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let set = FeasibleSet::ball(2, 2.0).unwrap();
        for _ in 0..10 {
            let a = DVector::from_fn(2, |_, _| rng.random_range(0.4..1.0));
            let mu = rng.random_range(40.0..120.0);
            let model = BuyerModel::new(a.clone(), mu, set.clone()).unwrap();
            let x_hat = set
                .project(&DVector::from_fn(2, |_, _| rng.random_range(0.1..0.9f64)))
                .unwrap();
            let p = &a + DVector::from_fn(2, |_, _| rng.random_range(0.02..0.1f64));
            let x_star = model.utility_maximizer(&p).unwrap();
            let analytic = dual_gradient(&x_hat, &x_star);
            let h = 1e-5;
            for i in 0..2 {
                let mut hi = p.clone();
                hi[i] += h;
                let mut lo = p.clone();
                lo[i] -= h;
                let fd = (dual_value(&model, &x_hat, &hi).unwrap()
                    - dual_value(&model, &x_hat, &lo).unwrap())
                    / (2.0 * h);
                assert!(
                    (fd - analytic[i]).abs() <= 1e-4 * analytic[i].abs().max(1.0),
                    "fd {fd} vs analytic {}",
                    analytic[i]
                );
            }
        }
    }

    #[test]
    fn dual_is_convex_and_smooth_on_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let set = FeasibleSet::unit_ball(2).unwrap();
        let mu = 200.0;
        let model = BuyerModel::new(vec2(0.8, 0.6), mu, set.clone()).unwrap();
        let x_hat = vec2(0.4, 0.3);
        let sample_p =
            |rng: &mut rand_chacha::ChaCha8Rng| DVector::from_fn(2, |_, _| rng.random_range(0.1..1.5f64));
        for _ in 0..40 {
            let p = sample_p(&mut rng);
            let q = sample_p(&mut rng);
            let theta: f64 = rng.random_range(0.0..1.0);
            let g = |v: &DVector<f64>| dual_value(&model, &x_hat, v).unwrap();
            // Convexity.
            let mid = &p * theta + &q * (1.0 - theta);
            assert!(g(&mid) <= theta * g(&p) + (1.0 - theta) * g(&q) + 1e-8);
            // mu-strong smoothness.
            let x_at_p = model.utility_maximizer(&p).unwrap();
            let grad = dual_gradient(&x_hat, &x_at_p);
            let upper =
                g(&p) + grad.dot(&(&q - &p)) + 0.5 * mu * (&q - &p).norm_squared() + 1e-8;
            assert!(g(&q) <= upper);
        }
    }

    #[test]
    fn learn_value_sandwiches_the_target_value() {
        // Small self-contained run with the stated budget formula.
        let set = FeasibleSet::unit_ball(2).unwrap();
        let a = vec2(1.0, 0.5);
        let mu = 100.0;
        let model = BuyerModel::new(a.clone(), mu, set.clone()).unwrap();
        let delta = DVector::from_element(2, 0.05);
        let prices = RealisticPriceSpace::new(a.clone(), delta.clone(), delta.norm()).unwrap();
        let knowledge =
            SellerKnowledge::new(mu, mu, 1.6, 0.5, set.clone(), prices.clone()).unwrap();
        let tau = knowledge.tau_bound().unwrap();
        assert!(tau > 1.0, "desk instance should have a generous budget");

        let x_hat = vec2(0.6, 0.3);
        let provider = SimulationDualValue::new(model.clone());
        let g_p1 = provider
            .initial_dual_value(&x_hat, prices.median())
            .unwrap();
        let problem = DualProblem::new(x_hat.clone(), &set, g_p1).unwrap();
        let mut oracle = BuyerOracle::new(model.clone(), prices.clone(), DEFAULT_SOLVER_TOL);
        let params = LearnValueParams {
            tau,
            gamma2: set.gamma2(),
            mu2: mu,
            radius: prices.radius(),
            budget: InteractionBudget::Statement,
            max_interactions: 10_000_000,
            record_trajectory: true,
        };
        let result = learn_value(&problem, &mut oracle, &prices, &params).unwrap();

        assert_eq!(oracle.interaction_count(), result.iterations_used);
        let traj = result.trajectory.as_ref().unwrap();
        assert_eq!(traj.len() as u64, result.iterations_used);
        let gamma = 1.0 / result.iterations_used as f64;
        for step in traj {
            assert!(prices.contains(&step.price));
            assert!(step.step_len <= gamma + 1e-15);
        }

        let u_hat = model.perturbed_utility(&x_hat).unwrap();
        assert!(result.g_tilde >= u_hat - 1e-8);
        assert!(result.g_tilde <= u_hat + 2.0 * tau + 1e-8);
    }

    #[test]
    fn infeasible_target_is_rejected() {
        let set = FeasibleSet::unit_ball(2).unwrap();
        assert!(matches!(
            DualProblem::new(vec2(1.0, 1.0), &set, 0.0).unwrap_err(),
            DualError::InfeasibleTarget
        ));
    }
}
