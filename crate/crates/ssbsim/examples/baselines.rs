//! Every non-learning solver on one instance, printed side by side.

use ssbsim::beams::{build_expert_codebooks, build_pool, ArrayGeometry, PoolConfig};
use ssbsim::propagation::{build_gain_matrix, RadioConfig};
use ssbsim::scenario::{generate_scenario, ScenarioConfig, SiteLayout};
use ssbsim::solvers::{
    expert_baseline, greedy_codebook, max_of_experts, random_deployment, GreedyVariant,
};

fn main() {
    let geometry = ArrayGeometry::default();
    let pool = build_pool(&geometry, &PoolConfig::default()).unwrap();
    let experts = build_expert_codebooks(&pool).unwrap();
    let layout = SiteLayout::default();
    let scenario = generate_scenario(
        &ScenarioConfig {
            num_ues: 1000,
            seed: 11,
            ..ScenarioConfig::default()
        },
        &layout,
    )
    .unwrap();
    let radio = RadioConfig::default();
    let gains = build_gain_matrix(&scenario, &pool, &radio).unwrap();
    let tau = radio.detection_threshold_dbm;
    let n = experts[0].len();
    let candidates: Vec<usize> = experts
        .iter()
        .flat_map(|c| c.beam_indices.iter().copied())
        .collect();

    let mut runs = vec![
        expert_baseline(&gains, &experts[0], tau).unwrap(),
        expert_baseline(&gains, &experts[1], tau).unwrap(),
        max_of_experts(&gains, &experts, tau).unwrap(),
        greedy_codebook(&gains, &candidates, n, tau, GreedyVariant::TopK).unwrap(),
        greedy_codebook(&gains, &candidates, n, tau, GreedyVariant::Marginal).unwrap(),
        random_deployment(&gains, n, tau, 1).unwrap(),
    ];
    runs.sort_by(|a, b| b.coverage.cmp(&a.coverage));

    println!("{} users, tau {tau:.1} dBm", gains.num_ues);
    for run in &runs {
        println!(
            "{:<16} {:>4} covered ({:.1}%)",
            run.label,
            run.coverage,
            100.0 * run.coverage as f64 / gains.num_ues as f64
        );
    }
    println!("\nfull structured line of the winner:\n{}", runs[0]);
}
