//! Generate a clustered deployment and summarize it: cluster geometry,
//! indoor split, per-sector user counts, and the text round trip.

use ssbsim::scenario::{
    generate_scenario, scenario_from_str, scenario_to_string, sector_of, ScenarioConfig,
    SiteLayout,
};

fn main() {
    let layout = SiteLayout::default();
    let cfg = ScenarioConfig {
        num_ues: 2000,
        seed: 7,
        ..ScenarioConfig::default()
    };
    let sc = generate_scenario(&cfg, &layout).unwrap();

    let indoor = sc.ues.indoor.iter().filter(|&&b| b).count();
    println!(
        "{} users in a {:.0} m disc, {} indoor ({:.0}%)",
        sc.num_ues(),
        layout.cell_radius(),
        indoor,
        100.0 * indoor as f64 / sc.num_ues() as f64
    );

    for ci in -1..cfg.num_clusters as i32 {
        let members: Vec<usize> = (0..sc.num_ues())
            .filter(|&i| sc.ues.cluster_ids[i] == ci)
            .collect();
        if members.is_empty() {
            continue;
        }
        let cx = members.iter().map(|&i| sc.ues.positions[i][0]).sum::<f64>()
            / members.len() as f64;
        let cy = members.iter().map(|&i| sc.ues.positions[i][1]).sum::<f64>()
            / members.len() as f64;
        let label = if ci < 0 { "background".into() } else { format!("cluster {ci}") };
        println!(
            "{label:<11} {:>4} users around ({cx:>7.1}, {cy:>7.1}) m",
            members.len()
        );
    }

    let mut per_sector = vec![0usize; layout.num_sectors()];
    for p in &sc.ues.positions {
        per_sector[sector_of(*p, &layout)] += 1;
    }
    println!("geometric sector split: {per_sector:?}");

    let text = scenario_to_string(&sc);
    let back = scenario_from_str(&text).unwrap();
    assert_eq!(scenario_to_string(&back), text);
    println!("document round trip ok ({} bytes)", text.len());
}
