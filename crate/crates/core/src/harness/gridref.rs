//! Brute-force grid references. Test oracles only: nothing in the learner's
//! call path touches these (the learner sees the market through
//! [`crate::market::BuyerOracle`] alone).

use nalgebra::DVector;

use super::HarnessError;
use crate::dual::dual_value;
use crate::market::{BuyerModel, RealisticPriceSpace};

const GRID_CAP: u128 = 100_000_000;

/// Exhaustive grid argmax of `U'(x) - pᵀx` over the feasible lattice.
/// Ties keep the first point in odometer order.
pub fn brute_force_buyer(
    model: &BuyerModel,
    price: &DVector<f64>,
    resolution: f64,
) -> Result<DVector<f64>, HarnessError> {
    let n = model.feasible().dim();
    if n > 3 {
        return Err(HarnessError::Config(
            "brute-force buyer supports n <= 3".into(),
        ));
    }
    if resolution < 1e-3 {
        return Err(HarnessError::Config(
            "brute-force resolution must be at least 1e-3".into(),
        ));
    }
    let steps = (1.0 / resolution).round() as usize + 1;
    let total = (steps as u128).pow(n as u32);
    if total > GRID_CAP {
        return Err(HarnessError::GridTooLarge { points: total });
    }

    let set = model.feasible();
    let mut idx = vec![0usize; n];
    let mut x = DVector::zeros(n);
    let mut best: Option<(f64, DVector<f64>)> = None;
    loop {
        for i in 0..n {
            x[i] = (idx[i] as f64 * resolution).min(1.0);
        }
        if set.contains(&x, 1e-12) {
            let objective = model.perturbed_utility(&x)? - price.dot(&x);
            if best.as_ref().map_or(true, |(b, _)| objective > *b) {
                best = Some((objective, x.clone()));
            }
        }
        // Odometer increment.
        let mut carry = 0;
        loop {
            idx[carry] += 1;
            if idx[carry] < steps {
                break;
            }
            idx[carry] = 0;
            carry += 1;
            if carry == n {
                let (_, arg) = best.ok_or_else(|| {
                    HarnessError::Config("no feasible grid point found".into())
                })?;
                return Ok(arg);
            }
        }
    }
}

/// A grid estimate of the restricted dual optimum, with the Lipschitz slack
/// by which it can overshoot the true minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoptEstimate {
    pub value: f64,
    /// `||∇g|| <= 2 gamma2` times half the grid-cell diagonal.
    pub grid_slack: f64,
    pub grid_points: u64,
}

/// Grid minimization of the dual over the realistic price box: the
/// reference for the restricted optimum on small instances.
pub fn brute_force_ropt(
    model: &BuyerModel,
    x_hat: &DVector<f64>,
    prices: &RealisticPriceSpace,
    resolution: f64,
) -> Result<RoptEstimate, HarnessError> {
    let n = prices.dim();
    if n > 2 {
        return Err(HarnessError::Config(
            "brute-force restricted optimum supports n <= 2".into(),
        ));
    }
    // Per-dimension lattice p0 - delta, ..., p0 + delta (endpoint always
    // included).
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut total: u128 = 1;
    for i in 0..n {
        let lo = prices.median()[i] - prices.half_widths()[i];
        let hi = prices.median()[i] + prices.half_widths()[i];
        let mut pts = Vec::new();
        let mut v = lo;
        while v < hi - 1e-15 {
            pts.push(v);
            v += resolution;
        }
        pts.push(hi);
        total = total.saturating_mul(pts.len() as u128);
        axes.push(pts);
    }
    if total > GRID_CAP {
        return Err(HarnessError::GridTooLarge { points: total });
    }

    let mut idx = vec![0usize; n];
    let mut p = DVector::zeros(n);
    let mut best = f64::INFINITY;
    'outer: loop {
        for i in 0..n {
            p[i] = axes[i][idx[i]];
        }
        let g = dual_value(model, x_hat, &p)?;
        if g < best {
            best = g;
        }
        let mut carry = 0;
        loop {
            idx[carry] += 1;
            if idx[carry] < axes[carry].len() {
                break;
            }
            idx[carry] = 0;
            carry += 1;
            if carry == n {
                break 'outer;
            }
        }
    }
    let gamma2 = model.feasible().gamma2();
    let half_diag = 0.5 * resolution * (n as f64).sqrt();
    Ok(RoptEstimate {
        value: best,
        grid_slack: 2.0 * gamma2 * half_diag,
        grid_points: total as u64,
    })
}
