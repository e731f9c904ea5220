//! Rough timing of the per-episode hot path: scenario generation, channel
//! realization, and the full gain-matrix build at benchmark scale.

use std::time::Instant;

use ssbsim::beams::{build_pool, ArrayGeometry, PoolConfig};
use ssbsim::propagation::{build_gain_matrix, RadioConfig};
use ssbsim::scenario::{generate_scenario, ScenarioConfig, SiteLayout};

fn main() {
    let geometry = ArrayGeometry::default();
    let pool = build_pool(&geometry, &PoolConfig::default()).unwrap();
    let layout = SiteLayout::default();
    let radio = RadioConfig::default();

    for &num_ues in &[500usize, 2000] {
        let cfg = ScenarioConfig {
            num_ues,
            ..ScenarioConfig::default()
        };
        let reps = if num_ues <= 500 { 20 } else { 5 };
        let start = Instant::now();
        let mut sink = 0usize;
        for seed in 0..reps {
            let sc = generate_scenario(
                &ScenarioConfig {
                    seed,
                    ..cfg.clone()
                },
                &layout,
            )
            .unwrap();
            let gains = build_gain_matrix(&sc, &pool, &radio).unwrap();
            sink += gains.num_beams;
        }
        let dt = start.elapsed().as_secs_f64() / reps as f64;
        println!("U={num_ues}: {:.1} ms/episode (sink {sink})", dt * 1e3);
    }
}
