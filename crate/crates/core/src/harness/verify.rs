//! Oracle-backed property checks for a configured instance, driven by the
//! `verify` CLI command. Each check compares learner-facing behavior
//! against ground truth or an independent reference.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{brute_force_buyer, brute_force_ropt, build_instance, ExperimentConfig, HarnessError};
use crate::dual::{dual_gradient, dual_value};
use crate::market::{BuyerOracle, DEFAULT_SOLVER_TOL};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

/// Run the property suite on one configured instance.
pub fn verify_instance(cfg: &ExperimentConfig) -> Result<Vec<CheckOutcome>, HarnessError> {
    let instance = build_instance(cfg)?;
    let model = &instance.model;
    let set = model.feasible().clone();
    let prices = instance.learner.knowledge.prices.clone();
    let n = set.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut out = Vec::new();

    let sample_price = |rng: &mut ChaCha8Rng| {
        DVector::from_fn(n, |i, _| {
            let lo = prices.median()[i] - prices.half_widths()[i];
            let hi = prices.median()[i] + prices.half_widths()[i];
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        })
    };

    // Price projection: idempotent and nonexpansive.
    {
        let mut worst = 0.0f64;
        let mut ok = true;
        for _ in 0..500 {
            let p = DVector::from_fn(n, |_, _| rng.random_range(-2.0..4.0f64));
            let q = DVector::from_fn(n, |_, _| rng.random_range(-2.0..4.0f64));
            let pp = prices.project(&p);
            let pq = prices.project(&q);
            if prices.project(&pp) != pp {
                ok = false;
            }
            let expansion = (&pp - &pq).norm() - (&p - &q).norm();
            worst = worst.max(expansion);
            if expansion > 1e-12 {
                ok = false;
            }
        }
        out.push(check(
            "price-projection",
            ok,
            format!("max expansion {worst:.2e}"),
        ));
    }

    // Buyer solver against the exhaustive grid.
    if n <= 3 {
        let resolution = if n == 3 { 0.02 } else { 0.005 };
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let p = sample_price(&mut rng);
            let fast = model.utility_maximizer(&p)?;
            let slow = brute_force_buyer(model, &p, resolution)?;
            worst = worst.max((&fast - &slow).amax());
        }
        let tol = resolution + 1e-2;
        out.push(check(
            "buyer-grid-agreement",
            worst <= tol,
            format!("max deviation {worst:.3e} (tolerance {tol:.3e})"),
        ));
    }

    // Weak duality of the value dual.
    {
        let mut worst = f64::INFINITY;
        let mut ok = true;
        for _ in 0..50 {
            let x_hat = set.project(&DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0f64)))?;
            let p = sample_price(&mut rng);
            let gap = dual_value(model, &x_hat, &p)? - model.perturbed_utility(&x_hat)?;
            worst = worst.min(gap);
            if gap < -1e-8 {
                ok = false;
            }
        }
        out.push(check("weak-duality", ok, format!("min gap {worst:.2e}")));
    }

    // Purchase gradient against central differences of the dual.
    {
        let h = 1e-5;
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let x_hat = set.project(&DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0f64)))?;
            let p = sample_price(&mut rng);
            let analytic = dual_gradient(&x_hat, &model.utility_maximizer(&p)?);
            for i in 0..n {
                let mut hi = p.clone();
                hi[i] += h;
                let mut lo = p.clone();
                lo[i] -= h;
                let fd = (dual_value(model, &x_hat, &hi)? - dual_value(model, &x_hat, &lo)?)
                    / (2.0 * h);
                worst = worst.max((fd - analytic[i]).abs() / analytic[i].abs().max(1.0));
            }
        }
        out.push(check(
            "dual-gradient",
            worst <= 1e-4,
            format!("max relative deviation {worst:.3e}"),
        ));
    }

    // Value sandwich against the grid reference (small instances).
    if n <= 2 {
        let tau = instance.learner.knowledge.tau_bound()?;
        let x_hat = model.utility_maximizer(prices.median())?;
        let est = brute_force_ropt(model, &x_hat, &prices, 0.01)?;
        let u_hat = model.perturbed_utility(&x_hat)?;
        let ok = est.value >= u_hat - 1e-8 && est.value <= u_hat + tau + est.grid_slack;
        out.push(check(
            "value-sandwich",
            ok,
            format!(
                "restricted optimum {:.6} vs value {:.6} (budget {:.3e}, grid slack {:.1e})",
                est.value, u_hat, tau, est.grid_slack
            ),
        ));
    }

    // Interaction accounting through the oracle.
    {
        let mut oracle = BuyerOracle::new(model.clone(), prices.clone(), DEFAULT_SOLVER_TOL);
        let before = oracle.interaction_count();
        for _ in 0..25 {
            let p = prices.project(&sample_price(&mut rng));
            oracle.post_price(&p)?;
        }
        let counted = oracle.interaction_count() - before;
        out.push(check(
            "interaction-accounting",
            counted == 25,
            format!("25 posts counted as {counted}"),
        ));
    }

    Ok(out)
}
