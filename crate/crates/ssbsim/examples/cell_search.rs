//! One cell-search pass: realize channels, sweep both expert codebooks,
//! and print the association and observation summaries.

use ssbsim::beams::{build_expert_codebooks, build_pool, ArrayGeometry, PoolConfig};
use ssbsim::cellsearch::{associate, observe, per_sector_coverage, Deployment};
use ssbsim::propagation::{build_gain_matrix, RadioConfig};
use ssbsim::scenario::{generate_scenario, ScenarioConfig, SiteLayout};

fn main() {
    let geometry = ArrayGeometry::default();
    let pool = build_pool(&geometry, &PoolConfig::default()).unwrap();
    let experts = build_expert_codebooks(&pool).unwrap();
    let layout = SiteLayout::default();
    let scenario = generate_scenario(
        &ScenarioConfig {
            num_ues: 1000,
            seed: 3,
            ..ScenarioConfig::default()
        },
        &layout,
    )
    .unwrap();
    let radio = RadioConfig::default();
    let gains = build_gain_matrix(&scenario, &pool, &radio).unwrap();
    let tau = radio.detection_threshold_dbm;
    println!(
        "gain matrix: {} sectors x {} users x {} beams, noise {:.1} dBm, tau {:.1} dBm",
        gains.num_sectors(),
        gains.num_ues,
        gains.num_beams,
        gains.noise_dbm,
        tau
    );

    for cb in &experts {
        let deployment = Deployment::uniform(cb, gains.num_sectors());
        let assoc = associate(&gains, &deployment, tau).unwrap();
        let per_sector = per_sector_coverage(&gains, &deployment, tau).unwrap();
        println!(
            "sweep {}: {} of {} users covered, per sector {:?}",
            cb.label,
            assoc.covered_count(),
            gains.num_ues,
            per_sector
        );
    }

    let observations = observe(&gains, &experts, tau).unwrap();
    for o in &observations {
        let hot: Vec<(usize, u32)> = o
            .counts
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect();
        let total: u32 = o.counts.iter().sum();
        println!(
            "sector {} observation: {} slots, {} users counted, busiest {:?}",
            o.sector,
            o.len(),
            total,
            hot.iter().max_by_key(|&&(_, c)| c)
        );
    }
}
