//! Synthesize the expert-style beam pool and print each family's shape:
//! steering span, measured 3 dB azimuth width, and peak array gain.

use ssbsim::beams::{
    array_gain_db, beamwidth_3db_az, build_expert_codebooks, build_pool, ArrayGeometry,
    PoolConfig,
};

fn main() {
    let geometry = ArrayGeometry::default();
    let cfg = PoolConfig::default();
    let pool = build_pool(&geometry, &cfg).unwrap();
    println!(
        "pool of {} beams on a {}x{} dual-polarized array at {:.0} GHz",
        pool.len(),
        geometry.e1,
        geometry.e2,
        geometry.carrier_frequency / 1e9
    );
    println!("pool hash {}", &pool.content_hash()[..16]);

    for (fid, fam) in cfg.families.iter().enumerate() {
        let beams: Vec<_> = pool.beams.iter().filter(|b| b.family_id == fid).collect();
        let first = beams.first().unwrap();
        let peak = array_gain_db(&geometry, first, first.steer_azimuth, first.steer_elevation);
        let width = beamwidth_3db_az(&geometry, first);
        println!(
            "family {fid}: {:>6} x{:>2} @ elevation {:>6.1} deg, azimuth {:>5.1}..{:>4.1}, \
             3 dB width {width:>4.1} deg, peak gain {peak:>5.2} dB",
            fam.class.as_str(),
            beams.len(),
            fam.elevation_deg,
            beams.first().unwrap().steer_azimuth,
            beams.last().unwrap().steer_azimuth,
        );
    }

    let experts = build_expert_codebooks(&pool).unwrap();
    for cb in &experts {
        println!(
            "expert {}: beams {}..{}",
            cb.label,
            cb.beam_indices.first().unwrap(),
            cb.beam_indices.last().unwrap()
        );
    }
}
