//! Profiling sweep for end-to-end run parameters (dev tool).

use rayon::prelude::*;
use revpref::dual::InteractionBudget;
use revpref::harness::config::*;
use revpref::harness::{execute, ExperimentConfig};
use std::time::Instant;

fn profile_config(n: usize, seed: u64, tau_frac: f64, mu_frac: f64, budget: BudgetSpec) -> ExperimentConfig {
    let eps = 0.1f64;
    let nf = n as f64;
    let gamma1 = nf.sqrt();
    let tau = tau_frac * eps / (4.0 * nf);
    let mu1 = 4.0 / (mu_frac * eps / (2.0 * nf));
    let floor = 0.2 * tau / gamma1;
    let max_norm = 0.9 * (0.5 * tau).sqrt();
    let min_component = (3.0 * floor).max(0.22 * max_norm);
    ExperimentConfig {
        n,
        seed,
        buyer: BuyerSection {
            a_star: VectorSpec::Mode("random".into()),
            mu: None,
            min_component: Some(min_component),
            max_norm: Some(max_norm),
        },
        knowledge: KnowledgeSection {
            mu1,
            mu2: mu1,
            lambda_val: None,
            tau_target: Some(tau),
            beta: 0.5,
        },
        feasible_set: FeasibleSection {
            preset: Some("ball".into()),
            radius: 1.0,
            p: None,
            q: None,
            r: None,
            gamma1: None,
            gamma2: None,
        },
        prices: PriceSection {
            p0: VectorSpec::Mode("near-buyer".into()),
            delta: None,
            floor: Some(floor),
            radius: None,
            jitter: 0.1,
        },
        learner: LearnerSection {
            epsilon: eps,
            r_a: 1.0,
            max_outer_iterations: 100_000,
            max_interactions: 50_000_000,
            budget: Some(budget),
        },
        output: OutputSection::default(),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(2);
    let seeds: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(3);
    let tau_frac: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.7);
    let mu_frac: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.15);
    let budget = match args.get(5).map(|s| s.as_str()) {
        None | Some("proof") => BudgetSpec::Name("proof-bound".into()),
        Some("statement") => BudgetSpec::Name("statement".into()),
        Some(k) => BudgetSpec::Count(k.parse().unwrap()),
    };

    let t0 = Instant::now();
    let results: Vec<_> = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let cfg = profile_config(n, seed + 1, tau_frac, mu_frac, budget.clone());
            let wall = Instant::now();
            let out = execute(&cfg);
            (seed + 1, out, wall.elapsed().as_secs_f64())
        })
        .collect();
    for (seed, out, wall) in &results {
        match out {
            Ok(o) => {
                let r = &o.report;
                let min_alpha_margin = o
                    .log
                    .iterations
                    .iter()
                    .map(|it| it.alpha + 1.0 / (n as f64))
                    .fold(f64::INFINITY, f64::min);
                println!(
                    "seed {seed}: outer={} T={} total={} contain={}/{} sandwich_excess={:.2e} (2tau={:.2e}) acc={:.3e} (eps/2={:.2e}) alpha_margin={:.3e} {:.2}s",
                    r.outer_iterations,
                    r.interactions_per_probe,
                    r.total_interactions,
                    r.containment_every_iteration,
                    r.containment_final,
                    r.sandwich_max_excess,
                    2.0 * r.tau,
                    r.accuracy_linf,
                    0.05,
                    min_alpha_margin,
                    wall
                );
            }
            Err(e) => println!("seed {seed}: ERROR {e}"),
        }
    }
    let worst = results
        .iter()
        .filter_map(|(_, o, _)| o.as_ref().ok())
        .map(|o| o.report.sandwich_max_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "n={n} tau_frac={tau_frac} mu_frac={mu_frac}: {} seeds in {:.1}s wall; worst sandwich excess {:.3e}",
        seeds,
        t0.elapsed().as_secs_f64(),
        worst
    );
}
