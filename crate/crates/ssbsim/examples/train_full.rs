//! Desk-scale training of the codebook policy followed by a held-out
//! comparison against every baseline.
//!
//! Expect roughly fifteen minutes on a laptop at the default 3000
//! iterations. Pass a smaller iteration count as the first argument for a
//! quick look, e.g. `cargo run --release --example train_full -- 300`.

use ssbsim::agent::TrainConfig;
use ssbsim::beams::{build_expert_codebooks, build_pool, ArrayGeometry, PoolConfig};
use ssbsim::evaluation::{evaluate_suite, Method};
use ssbsim::propagation::RadioConfig;
use ssbsim::scenario::{ScenarioConfig, SiteLayout};
use ssbsim::trainer::{init_state, manifest_for, train, Environment};

fn main() {
    let iterations: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3000);

    let geometry = ArrayGeometry::default();
    let pool = build_pool(&geometry, &PoolConfig::default()).unwrap();
    let experts = build_expert_codebooks(&pool).unwrap();
    let layout = SiteLayout::default();
    let scenario_cfg = ScenarioConfig {
        num_ues: 500,
        ..ScenarioConfig::default()
    };
    let radio_cfg = RadioConfig::default();
    let env = Environment {
        pool: &pool,
        expert_codebooks: &experts,
        layout: &layout,
        scenario_cfg: &scenario_cfg,
        radio_cfg: &radio_cfg,
        codebook_size: 24,
    };

    let cfg = TrainConfig {
        iterations,
        ..TrainConfig::default()
    };
    let mut state = init_state(&env, &cfg).unwrap();
    let mut log = Vec::new();

    let t0 = std::time::Instant::now();
    let summary = train(&env, &cfg, &mut state, None, &mut log).unwrap();
    println!(
        "trained {} iterations in {:.0} s ({})",
        summary.iterations_run,
        t0.elapsed().as_secs_f64(),
        if summary.converged { "converged" } else { "max iterations" }
    );
    for chunk in log.chunks(250) {
        let mean: f64 = chunk.iter().map(|r| r.mean_reward).sum::<f64>() / chunk.len() as f64;
        println!(
            "iter {:>5}..{:>5}: mean sampled reward {:.1}",
            chunk.first().unwrap().iteration,
            chunk.last().unwrap().iteration,
            mean
        );
    }

    let manifest = manifest_for(&env, &cfg, state.iteration);
    let report = evaluate_suite(
        &env,
        &Method::standard_set(),
        100,
        5_000_000,
        Some((&state.actor, &manifest)),
    )
    .unwrap();
    println!("\nheld-out suite (100 instances, isd 200):");
    for (m, f) in report.covered_fraction_stats() {
        println!("  {:<16} mean covered fraction {:.4}", m.label(), f);
    }
    for (m, unique, tied) in report.win_rates() {
        println!("  {:<16} wins: unique {:>5.1}%, tie-inclusive {:>5.1}%", m.label(), unique, tied);
    }
    let h = report
        .relative_improvement_hist(Method::ExpertC1, Method::Neural, 2.0)
        .unwrap();
    println!("  mean improvement over c1: {:+.2}%", h.mean);
    if let Ok(r) = report.rediscovery() {
        println!(
            "  rediscovered {:.2}% of expert-union coverage, newly discovered {:.2}%",
            r.rediscovered_pct, r.newly_discovered_pct
        );
    }
}
