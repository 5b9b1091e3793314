//! Experiment runner and verification oracles: config ingestion, seeded
//! instance generation, end-to-end runs, brute-force references for small
//! instances, CSV emission, and the checks behind the `verify` CLI command.
//!
//! Randomness policy: every draw comes from a ChaCha8 stream seeded with the
//! config's 64-bit seed, so published seeds reproduce at the distribution
//! level. Coefficients are drawn uniformly from the nonnegative part of the
//! initial-radius ball (by rejection from the enclosing cube); the tie-break
//! parameter uniformly from `[mu1, mu2]`.

pub mod config;
mod gridref;
mod verify;

pub use config::ExperimentConfig;
pub use gridref::{brute_force_buyer, brute_force_ropt, RoptEstimate};
pub use verify::{verify_instance, CheckOutcome};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

use crate::dual::{DualError, SimulationDualValue};
use crate::geometry::Ellipsoid;
use crate::learner::{
    learn_utility, validate, LearnerConfig, LearnerError, RunLog, TerminationReason,
};
use crate::market::{
    BuyerModel, BuyerOracle, FeasibleSet, MarketError, RealisticPriceSpace, SellerKnowledge,
    DEFAULT_SOLVER_TOL,
};

use self::config::VectorSpec;

/// Slack used when auditing value sandwiches against ground truth.
const AUDIT_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("grid would need {points} points (cap 1e8)")]
    GridTooLarge { points: u128 },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// A fully materialized instance: ground truth plus the learner-side
/// configuration derived from one [`ExperimentConfig`].
#[derive(Debug, Clone)]
pub struct Instance {
    pub a_star: DVector<f64>,
    pub model: BuyerModel,
    pub learner: LearnerConfig,
}

fn build_feasible(cfg: &ExperimentConfig) -> Result<FeasibleSet, HarnessError> {
    let n = cfg.n;
    let fs = &cfg.feasible_set;
    match fs.preset.as_deref() {
        Some("ball") => Ok(FeasibleSet::ball(n, fs.radius)?),
        Some(other) => Err(HarnessError::Config(format!(
            "unknown feasible-set preset \"{other}\""
        ))),
        None => {
            let (p, q, r) = match (&fs.p, &fs.q, &fs.r) {
                (Some(p), Some(q), Some(r)) => (p, q, *r),
                _ => {
                    return Err(HarnessError::Config(
                        "feasible_set needs either a preset or explicit p, q, r".into(),
                    ))
                }
            };
            if p.len() != n || p.iter().any(|row| row.len() != n) || q.len() != n {
                return Err(HarnessError::Config(
                    "feasible-set dimensions disagree with n".into(),
                ));
            }
            let quad = DMatrix::from_fn(n, n, |i, j| p[i][j]);
            let lin = DVector::from_vec(q.clone());
            let gamma1 = fs
                .gamma1
                .ok_or_else(|| HarnessError::Config("explicit feasible sets need gamma1".into()))?;
            let gamma2 = fs
                .gamma2
                .ok_or_else(|| HarnessError::Config("explicit feasible sets need gamma2".into()))?;
            Ok(FeasibleSet::new(quad, lin, r, gamma1, gamma2)?)
        }
    }
}

/// Uniform draw from the nonnegative part of a coefficient ball, optionally
/// floored per component.
fn draw_coefficients(
    rng: &mut ChaCha8Rng,
    n: usize,
    radius: f64,
    min_component: f64,
) -> Result<DVector<f64>, HarnessError> {
    if min_component * (n as f64).sqrt() >= radius {
        return Err(HarnessError::Config(
            "min_component leaves no room inside the coefficient ball".into(),
        ));
    }
    for _ in 0..100_000 {
        let v = DVector::from_fn(n, |_, _| rng.random_range(0.0..radius));
        if v.norm() <= radius && v.iter().all(|&c| c >= min_component) {
            return Ok(v);
        }
    }
    Err(HarnessError::Config(
        "rejection sampling of coefficients failed; loosen min_component".into(),
    ))
}

/// Solve the error-budget equation for the value-continuity constant so the
/// budget lands at (or just under) `target`. Both budget branches increase
/// with the constant; the smaller solution keeps each at or below target.
fn calibrate_lambda(
    target_tau: f64,
    beta: f64,
    prices: &RealisticPriceSpace,
    feasible: &FeasibleSet,
) -> Result<f64, HarnessError> {
    let (l_bar, l_under) = prices.price_bounds()?;
    let additive = l_under * feasible.gamma1();
    let headroom = target_tau - additive;
    if headroom <= 0.0 {
        return Err(HarnessError::Config(format!(
            "tau_target {target_tau:.3e} is below the additive floor {additive:.3e}; \
             widen the price box downwards"
        )));
    }
    let lambda_root = headroom.powf(1.0 - beta) * (l_bar / 2.0).powf(beta);
    let near_base = 2.0 * l_under * feasible.gamma1() / l_bar;
    let lambda_near = if near_base > 0.0 {
        headroom / near_base.powf(beta)
    } else {
        f64::INFINITY
    };
    Ok(lambda_root.min(lambda_near))
}

/// Materialize ground truth and learner configuration from a config. Pure
/// given the config (the seed fixes every draw).
pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance, HarnessError> {
    let n = cfg.n;
    if n == 0 {
        return Err(HarnessError::Config("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let feasible = build_feasible(cfg)?;

    let a_star = match &cfg.buyer.a_star {
        VectorSpec::Values(v) => {
            if v.len() != n {
                return Err(HarnessError::Config(
                    "a_star length disagrees with n".into(),
                ));
            }
            DVector::from_vec(v.clone())
        }
        VectorSpec::Mode(mode) if mode == "random" => {
            let certified = cfg.learner.r_a.min(cfg.learner.r_a.sqrt()) * 0.999;
            let radius = cfg
                .buyer
                .max_norm
                .map_or(certified, |m| m.min(certified));
            draw_coefficients(&mut rng, n, radius, cfg.buyer.min_component.unwrap_or(0.0))?
        }
        VectorSpec::Mode(other) => {
            return Err(HarnessError::Config(format!(
                "unknown a_star mode \"{other}\" (expected \"random\" or values)"
            )))
        }
    };

    let k = &cfg.knowledge;
    let mu = match cfg.buyer.mu {
        Some(mu) => mu,
        None if k.mu1 == k.mu2 => k.mu1,
        None => rng.random_range(k.mu1..k.mu2),
    };
    if !(k.mu1 <= mu && mu <= k.mu2) {
        return Err(HarnessError::Config(format!(
            "buyer mu = {mu} lies outside the knowledge band [{}, {}]",
            k.mu1, k.mu2
        )));
    }

    let jitter = cfg.prices.jitter;
    let explicit_p0 = match &cfg.prices.p0 {
        VectorSpec::Values(v) => {
            if v.len() != n {
                return Err(HarnessError::Config("p0 length disagrees with n".into()));
            }
            Some(DVector::from_vec(v.clone()))
        }
        VectorSpec::Mode(mode) if mode == "near-buyer" => None,
        VectorSpec::Mode(other) => {
            return Err(HarnessError::Config(format!(
                "unknown p0 mode \"{other}\" (expected \"near-buyer\" or values)"
            )))
        }
    };
    let (p0, delta) = match (&cfg.prices.delta, cfg.prices.floor) {
        (Some(spec), None) => {
            let delta = DVector::from_vec(spec.expand(n)?);
            let p0 = match explicit_p0 {
                Some(p0) => p0,
                // Median at the coefficient (floored so prices stay
                // nonnegative), jittered, then clamped so the box still
                // contains the coefficient.
                None => DVector::from_fn(n, |i, _| {
                    let wobble = if jitter != 0.0 {
                        jitter * delta[i] * rng.random_range(-1.0..1.0)
                    } else {
                        0.0
                    };
                    (a_star[i].max(delta[i]) + wobble).clamp(delta[i], a_star[i] + delta[i])
                }),
            };
            (p0, delta)
        }
        (None, Some(floor)) => {
            if floor <= 0.0 {
                return Err(HarnessError::Config("price floor must be positive".into()));
            }
            let p0 = match explicit_p0 {
                Some(p0) => p0,
                // Median at the coefficient, wobbled, kept high enough that
                // the box [floor, 2 p0 - floor] still contains it.
                None => DVector::from_fn(n, |i, _| {
                    let span = (a_star[i] - floor).max(0.0);
                    let wobble = if jitter != 0.0 {
                        jitter * span * rng.random_range(-1.0..1.0)
                    } else {
                        0.0
                    };
                    let lo = 0.5 * (a_star[i] + floor) + 0.01 * span;
                    (a_star[i] + wobble).clamp(lo, a_star[i] + span)
                }),
            };
            let delta = DVector::from_fn(n, |i, _| p0[i] - floor);
            if delta.iter().any(|&d| d <= 0.0) {
                return Err(HarnessError::Config(
                    "price floor must sit strictly below every median".into(),
                ));
            }
            (p0, delta)
        }
        _ => {
            return Err(HarnessError::Config(
                "prices need exactly one of delta and floor".into(),
            ))
        }
    };
    let radius = cfg.prices.radius.unwrap_or_else(|| delta.norm());
    let prices = RealisticPriceSpace::new(p0, delta, radius)?;

    let lambda_val = match (k.lambda_val, k.tau_target) {
        (Some(l), None) => l,
        (None, Some(t)) => calibrate_lambda(t, k.beta, &prices, &feasible)?,
        _ => {
            return Err(HarnessError::Config(
                "knowledge needs exactly one of lambda_val and tau_target".into(),
            ))
        }
    };
    let knowledge =
        SellerKnowledge::new(k.mu1, k.mu2, lambda_val, k.beta, feasible.clone(), prices)?;

    let budget = match &cfg.learner.budget {
        Some(spec) => spec.to_budget()?,
        None => Default::default(),
    };
    let learner = LearnerConfig {
        epsilon: cfg.learner.epsilon,
        r_a: cfg.learner.r_a,
        knowledge,
        max_outer_iterations: cfg.learner.max_outer_iterations,
        max_interactions: cfg.learner.max_interactions,
        budget,
    };
    let model = BuyerModel::new(a_star.clone(), mu, feasible)?;
    Ok(Instance {
        a_star,
        model,
        learner,
    })
}

/// The report of one experiment: learner outputs plus ground-truth audits.
/// Audits compare against the true coefficients, never against
/// learner-internal state. Wall-clock time is kept out of serialization so
/// identical configs produce byte-identical report files.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub n: usize,
    pub seed: u64,
    pub termination: String,
    pub outer_iterations: usize,
    pub total_interactions: u64,
    pub tau: f64,
    pub interactions_per_probe: u64,
    pub t_statement: u64,
    pub t_proof_bound: u64,
    pub outer_cap: u64,
    /// `outer_cap * interactions_per_probe`, the a-priori interaction bound.
    pub interaction_bound: u64,
    /// Exact accounting: total interactions == outer * per-probe count.
    pub interaction_accounting_exact: bool,
    pub containment_final: bool,
    pub containment_every_iteration: bool,
    pub sandwich_violations: usize,
    pub sandwich_max_excess: f64,
    pub volume_strictly_decreasing: bool,
    /// Final `||a* - c||_inf` against ground truth.
    pub accuracy_linf: f64,
    pub final_center: Vec<f64>,
    pub final_shape_rows: Vec<Vec<f64>>,
    pub csv_path: Option<String>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// Everything an in-memory run produces.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub log: RunLog,
    pub final_ellipsoid: Ellipsoid,
    pub instance: Instance,
}

/// Run one experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let instance = build_instance(cfg)?;
    let summary = validate(&instance.learner)?;
    let started = Instant::now();
    let mut oracle = BuyerOracle::new(
        instance.model.clone(),
        instance.learner.knowledge.prices.clone(),
        DEFAULT_SOLVER_TOL,
    );
    let provider = SimulationDualValue::new(instance.model.clone());
    let (final_ellipsoid, log) = learn_utility(&instance.learner, &mut oracle, &provider)?;
    let wall = started.elapsed().as_secs_f64();

    let containment_every = log.ellipsoids.iter().all(|e| e.contains(&instance.a_star));
    let containment_final = final_ellipsoid.contains(&instance.a_star);

    let mut sandwich_violations = 0usize;
    let mut sandwich_max_excess = 0.0f64;
    for rec in &log.iterations {
        let u_hat = instance.model.perturbed_utility(&rec.probe)?;
        let low_excess = u_hat - rec.g_tilde;
        let high_excess = rec.g_tilde - (u_hat + 2.0 * log.tau);
        let excess = low_excess.max(high_excess);
        if excess > AUDIT_SLACK {
            sandwich_violations += 1;
        }
        sandwich_max_excess = sandwich_max_excess.max(excess);
    }

    let volume_strictly_decreasing = {
        let mut prev = log.ellipsoids[0].spectral_bounds()?.2;
        let mut ok = true;
        for rec in &log.iterations {
            if rec.alpha > -1.0 / (cfg.n as f64) && rec.vol_factor >= prev {
                ok = false;
            }
            prev = rec.vol_factor;
        }
        ok
    };

    let outer = log.iterations.len();
    let per_probe = summary.interactions.effective;
    let total = oracle.interaction_count();
    let accuracy = (&instance.a_star - final_ellipsoid.center()).amax();

    let report = ExperimentReport {
        n: cfg.n,
        seed: cfg.seed,
        termination: match log.termination {
            TerminationReason::Converged => "converged".into(),
        },
        outer_iterations: outer,
        total_interactions: total,
        tau: summary.tau,
        interactions_per_probe: per_probe,
        t_statement: summary.interactions.statement,
        t_proof_bound: summary.interactions.proof_bound,
        outer_cap: summary.outer_cap,
        interaction_bound: summary.outer_cap.saturating_mul(per_probe),
        interaction_accounting_exact: total == per_probe * outer as u64,
        containment_final,
        containment_every_iteration: containment_every,
        sandwich_violations,
        sandwich_max_excess,
        volume_strictly_decreasing,
        accuracy_linf: accuracy,
        final_center: final_ellipsoid.center().iter().cloned().collect(),
        final_shape_rows: (0..cfg.n)
            .map(|i| final_ellipsoid.shape().row(i).iter().cloned().collect())
            .collect(),
        csv_path: None,
        wall_clock_seconds: wall,
    };
    Ok(ExperimentOutcome {
        report,
        log,
        final_ellipsoid,
        instance,
    })
}

/// Run one experiment and write its CSV log and report file under the
/// configured output directory. The config itself is never modified.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let mut outcome = execute(cfg)?;
    let dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&dir)?;
    let base = format!("run-n{}-seed{}", cfg.n, cfg.seed);
    let csv_path = dir.join(format!("{base}.csv"));
    emit_csv(&outcome.log, &csv_path)?;
    outcome.report.csv_path = Some(csv_path.to_string_lossy().into_owned());
    let report_path = dir.join(format!("{base}.report.toml"));
    let text = toml::to_string(&outcome.report)
        .map_err(|e| HarnessError::Config(format!("report serialization: {e}")))?;
    std::fs::write(report_path, text)?;
    Ok(outcome.report)
}

/// Format a float with 17 significant digits (round-trip exact for f64).
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write the per-iteration log. One row per outer iteration; LF newlines;
/// floats carry 17 significant digits so a re-parse is bit-exact.
pub fn emit_csv(log: &RunLog, path: &Path) -> Result<(), HarnessError> {
    let mut out = String::new();
    out.push_str(
        "iter,interactions,g_tilde,branch,delta,alpha,vol_factor,lambda_min,lambda_max,term_lhs\n",
    );
    for rec in &log.iterations {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            rec.iter,
            rec.interactions,
            fmt17(rec.g_tilde),
            rec.branch.as_str(),
            fmt17(rec.depth),
            fmt17(rec.alpha),
            fmt17(rec.vol_factor),
            fmt17(rec.lambda_min),
            fmt17(rec.lambda_max),
            fmt17(rec.term_lhs),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One parsed CSV row; mirrors the emitted fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub iter: usize,
    pub interactions: u64,
    pub g_tilde: f64,
    pub branch: String,
    pub delta: f64,
    pub alpha: f64,
    pub vol_factor: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub term_lhs: f64,
}

/// Parse a file produced by [`emit_csv`].
pub fn parse_csv(path: &Path) -> Result<Vec<CsvRow>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Config("empty csv".into()))?;
    if header
        != "iter,interactions,g_tilde,branch,delta,alpha,vol_factor,lambda_min,lambda_max,term_lhs"
    {
        return Err(HarnessError::Config("unexpected csv header".into()));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 10 {
            return Err(HarnessError::Config(format!(
                "expected 10 csv fields, got {}",
                parts.len()
            )));
        }
        let f = |s: &str| -> Result<f64, HarnessError> {
            s.parse()
                .map_err(|e| HarnessError::Config(format!("bad float {s:?}: {e}")))
        };
        rows.push(CsvRow {
            iter: parts[0]
                .parse()
                .map_err(|e| HarnessError::Config(format!("bad iter: {e}")))?,
            interactions: parts[1]
                .parse()
                .map_err(|e| HarnessError::Config(format!("bad count: {e}")))?,
            g_tilde: f(parts[2])?,
            branch: parts[3].to_string(),
            delta: f(parts[4])?,
            alpha: f(parts[5])?,
            vol_factor: f(parts[6])?,
            lambda_min: f(parts[7])?,
            lambda_max: f(parts[8])?,
            term_lhs: f(parts[9])?,
        });
    }
    Ok(rows)
}
