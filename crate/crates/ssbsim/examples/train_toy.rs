//! Train the policy on one frozen toy world (8 beams, pick 2, 30 users,
//! one sector) and compare the greedy-decoded codebook with the exact
//! brute-force optimum.

use ssbsim::agent::{act_deploy, TrainConfig};
use ssbsim::beams::{build_expert_codebooks, build_pool, ArrayGeometry, PoolConfig};
use ssbsim::cellsearch::{coverage, observe};
use ssbsim::propagation::{build_gain_matrix, RadioConfig};
use ssbsim::scenario::{generate_scenario, ScenarioConfig, SiteLayout};
use ssbsim::solvers::brute_force_oracle;
use ssbsim::trainer::{init_state, train, Environment};

fn main() {
    let seeds: Vec<u64> = std::env::args()
        .nth(1)
        .map(|s| vec![s.parse().unwrap()])
        .unwrap_or_else(|| (0..5).collect());

    let geometry = ArrayGeometry {
        e1: 2,
        e2: 2,
        ..ArrayGeometry::default()
    };
    let pool = build_pool(&geometry, &PoolConfig::toy()).unwrap();
    let experts = build_expert_codebooks(&pool).unwrap();
    let layout = SiteLayout {
        sector_azimuths: vec![0.0],
        ..SiteLayout::default()
    };
    let scenario_cfg = ScenarioConfig {
        num_ues: 30,
        num_clusters: 2,
        cluster_stddev: 12.0,
        seed: 77,
        ..ScenarioConfig::default()
    };
    let radio_cfg = RadioConfig {
        // The toy 2x2 array has 12 dB less aperture gain than the default
        // 8x8; relax the threshold accordingly.
        detection_threshold_dbm: -78.0,
        ..RadioConfig::default()
    };
    let env = Environment {
        pool: &pool,
        expert_codebooks: &experts,
        layout: &layout,
        scenario_cfg: &scenario_cfg,
        radio_cfg: &radio_cfg,
        codebook_size: 2,
    };

    // The frozen world and its exact optimum.
    let fixed_seed = 77u64;
    let scenario = generate_scenario(
        &ScenarioConfig {
            seed: fixed_seed,
            ..scenario_cfg.clone()
        },
        &layout,
    )
    .unwrap();
    let gains = build_gain_matrix(&scenario, &pool, &radio_cfg).unwrap();
    let tau = radio_cfg.detection_threshold_dbm;
    let oracle = brute_force_oracle(&gains, 2, tau).unwrap();
    println!("oracle coverage {} / 30 with {}", oracle.coverage, oracle.deployment.codebooks[0].label);

    for seed in seeds {
        let cfg = TrainConfig {
            batch_size: 8,
            iterations: 3000,
            actor_hidden: vec![32, 32, 16],
            critic_hidden: vec![16, 8],
            entropy_bonus: 0.02,
            seed,
            fixed_scenario_seed: Some(fixed_seed),
            convergence_window: 0,
            checkpoint_interval: 0,
            ..TrainConfig::default()
        };
        let mut state = init_state(&env, &cfg).unwrap();
        let mut log = Vec::new();
        let t0 = std::time::Instant::now();
        train(&env, &cfg, &mut state, None, &mut log).unwrap();

        let observations = observe(&gains, &experts, tau).unwrap();
        let deployment = act_deploy(&state.actor, &observations, 2).unwrap();
        let cov = coverage(&gains, &deployment, tau).unwrap();
        println!(
            "seed {seed}: decoded coverage {cov} ({:.1}% of oracle) beams {:?} in {:.1} s",
            100.0 * cov as f64 / oracle.coverage as f64,
            deployment.codebooks[0].beam_indices,
            t0.elapsed().as_secs_f64()
        );
    }
}
