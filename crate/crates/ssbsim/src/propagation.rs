//! Radio model: per-(sector, user, beam) received powers.
//!
//! The channel is a single-path far-field model. Path gain is free-space
//! loss at the carrier frequency, log-normal shadowing, and a flat indoor
//! penetration loss. Line-of-sight state selects the shadowing spread and
//! is derived from the user's position alone, so the blockage environment
//! is stable across measurements; the radio seed drives only shadowing.
//! Users behind a sector's array (|local azimuth| > 90 deg) see an extra
//! fixed front-to-back attenuation.
//!
//! Powers land in a [`GainMatrix`]: one `U x m` block of dBm values per
//! sector, stored as 32-bit floats (also the cache-file precision, so
//! cached and in-memory answers can never diverge).

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beams::{ArrayGeometry, BeamPool, PrecodingVector};
use crate::error::{Error, Result};
use crate::kernels::{cdot_conj, geometric_sum_mag};
use crate::rng::{splitmix64, stream, StreamKind};
use crate::scenario::Scenario;

/// Received powers below this floor count as no signal at all.
pub const POWER_FLOOR_DBM: f64 = -400.0;

/// Front-to-back attenuation for users behind a sector's array, dB.
pub const BACK_ATTENUATION_DB: f64 = 30.0;

/// LOS probability distance constant: `p = exp(-d / 144 m)`, floored at
/// 0.05 outdoors; indoor users are NLOS beyond 5 m.
const LOS_DECAY_M: f64 = 144.0;
const LOS_FLOOR_OUTDOOR: f64 = 0.05;
const LOS_INDOOR_RANGE_M: f64 = 5.0;

/// Link-budget knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioConfig {
    /// Transmit power per SSB beam, dBm.
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Broadcast reference-symbol amplitude; unit power by convention.
    pub reference_symbol_power: f64,
    /// Association threshold tau, dBm.
    pub detection_threshold_dbm: f64,
    pub shadowing_stddev_los_db: f64,
    pub shadowing_stddev_nlos_db: f64,
    pub indoor_penetration_db: f64,
    /// Offered traffic metadata; carried in reports, never simulated.
    pub traffic_volume_bps: f64,
    pub seed: u64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 30.0,
            bandwidth_hz: 100.0e6,
            noise_figure_db: 9.0,
            reference_symbol_power: 1.0,
            // Calibrated so expert codebook c1 connects ~41.4% of users on
            // the default deployment mix at ISD 200 m, averaged over 50
            // seeded scenarios (the calibrate_tau example reproduces it).
            detection_threshold_dbm: -70.12,
            shadowing_stddev_los_db: 4.0,
            shadowing_stddev_nlos_db: 8.0,
            indoor_penetration_db: 25.0,
            traffic_volume_bps: 3.0e8,
            seed: 0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Invalid("bandwidth must be positive".into()));
        }
        if !self.detection_threshold_dbm.is_finite() {
            return Err(Error::Invalid("detection threshold must be finite".into()));
        }
        if self.shadowing_stddev_los_db < 0.0 || self.shadowing_stddev_nlos_db < 0.0 {
            return Err(Error::Invalid("shadowing stddev must be nonnegative".into()));
        }
        Ok(())
    }

    /// Thermal noise power over the configured bandwidth, dBm.
    pub fn noise_power_dbm(&self) -> f64 {
        -174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// One sector-to-user link.
#[derive(Debug, Clone)]
pub struct ChannelEntry {
    /// Total large-scale gain, dB (negative).
    pub path_gain_db: f64,
    /// Ideal far-field response toward the user, unit modulus per entry.
    pub array_response: Vec<Complex64>,
    pub los: bool,
    /// User bearing in the sector frame, degrees.
    pub local_azimuth_deg: f64,
    pub local_elevation_deg: f64,
}

/// Large-scale link state before the array response is materialized.
#[derive(Debug, Clone, Copy)]
struct LinkGeometry {
    path_gain_db: f64,
    az_local_deg: f64,
    el_local_deg: f64,
    los: bool,
}

/// All sector-to-user links of one scenario: `entries[sector][user]`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub entries: Vec<Vec<ChannelEntry>>,
}

/// Free-space path loss at distance `d` metres and wavelength `lambda`, dB.
pub fn fspl_db(distance_m: f64, wavelength_m: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m / wavelength_m).log10()
}

/// Position-keyed LOS draw: stable per location, independent of any seed.
fn los_state(x: f64, y: f64, distance_2d_m: f64, indoor: bool) -> bool {
    let p = if indoor {
        if distance_2d_m > LOS_INDOOR_RANGE_M {
            0.0
        } else {
            (-distance_2d_m / LOS_DECAY_M).exp()
        }
    } else {
        (-distance_2d_m / LOS_DECAY_M).exp().max(LOS_FLOOR_OUTDOOR)
    };
    let key = splitmix64(x.to_bits() ^ y.to_bits().rotate_left(32));
    let u = (key >> 11) as f64 / (1u64 << 53) as f64;
    u < p
}

/// Large-scale budget for every sector-to-user link.
fn link_budget(
    scenario: &Scenario,
    wavelength_m: f64,
    radio_cfg: &RadioConfig,
) -> Result<Vec<Vec<LinkGeometry>>> {
    radio_cfg.validate()?;
    let layout = &scenario.layout;
    let antenna = [
        layout.site_position[0],
        layout.site_position[1],
        layout.site_position[2] + layout.bs_height,
    ];

    let mut links = Vec::with_capacity(layout.num_sectors());
    for (s, &sector_az) in layout.sector_azimuths.iter().enumerate() {
        let mut sector_links = Vec::with_capacity(scenario.num_ues());
        for u in 0..scenario.num_ues() {
            let p = scenario.ues.positions[u];
            let dx = p[0] - antenna[0];
            let dy = p[1] - antenna[1];
            let dz = p[2] - antenna[2];
            let d2 = dx.hypot(dy);
            let d3 = (dx * dx + dy * dy + dz * dz).sqrt();
            if d3 <= 0.0 {
                return Err(Error::Invalid(format!("user {u} colocated with the antenna")));
            }

            let indoor = scenario.ues.indoor[u];
            let los = los_state(p[0], p[1], d2, indoor);

            let stddev = if los {
                radio_cfg.shadowing_stddev_los_db
            } else {
                radio_cfg.shadowing_stddev_nlos_db
            };
            let shadow = if stddev > 0.0 {
                let normal = Normal::new(0.0, stddev).expect("validated stddev");
                normal.sample(&mut stream(radio_cfg.seed, StreamKind::Shadowing, &[
                    s as u64, u as u64,
                ]))
            } else {
                0.0
            };

            let az_global = dy.atan2(dx).to_degrees();
            let az_local = wrap_deg(az_global - sector_az);
            let el_global = dz.atan2(d2).to_degrees();
            let el_local = el_global + layout.sector_downtilt;

            let mut path_gain_db = -fspl_db(d3, wavelength_m) + shadow;
            if indoor {
                path_gain_db -= radio_cfg.indoor_penetration_db;
            }
            if az_local.abs() > 90.0 {
                path_gain_db -= BACK_ATTENUATION_DB;
            }

            sector_links.push(LinkGeometry {
                path_gain_db,
                az_local_deg: az_local,
                el_local_deg: el_local,
                los,
            });
        }
        links.push(sector_links);
    }
    Ok(links)
}

/// Realize every sector-to-user link. Deterministic given
/// `(scenario, geometry, radio_cfg)`.
pub fn realize_channels(
    scenario: &Scenario,
    geometry: &ArrayGeometry,
    radio_cfg: &RadioConfig,
) -> Result<ChannelRealization> {
    geometry.validate()?;
    let links = link_budget(scenario, geometry.wavelength(), radio_cfg)?;
    let entries = links
        .into_iter()
        .map(|sector| {
            sector
                .into_iter()
                .map(|l| ChannelEntry {
                    path_gain_db: l.path_gain_db,
                    array_response: geometry.steering_vector(l.az_local_deg, l.el_local_deg),
                    los: l.los,
                    local_azimuth_deg: l.az_local_deg,
                    local_elevation_deg: l.el_local_deg,
                })
                .collect()
        })
        .collect();
    Ok(ChannelRealization { entries })
}

fn wrap_deg(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Received power for one link-beam pair, dBm:
/// `tx + path_gain + 20 log10(|a^H w|)`, floored at [`POWER_FLOOR_DBM`].
pub fn received_power(
    entry: &ChannelEntry,
    beam: &PrecodingVector,
    radio_cfg: &RadioConfig,
) -> Result<f64> {
    if entry.array_response.is_empty() || beam.weights.is_empty() {
        return Err(Error::Invalid("zero-length channel or beam vector".into()));
    }
    if entry.array_response.len() != beam.weights.len() {
        return Err(Error::Invalid(format!(
            "response length {} does not match beam length {}",
            entry.array_response.len(),
            beam.weights.len()
        )));
    }
    let g = cdot_conj(&entry.array_response, &beam.weights).norm();
    if g <= 1e-20 {
        return Ok(POWER_FLOOR_DBM);
    }
    let p = radio_cfg.tx_power_dbm + entry.path_gain_db + 20.0 * g.log10();
    Ok(p.max(POWER_FLOOR_DBM))
}

/// Per-sector received-power table, the one precomputation every coverage
/// query reads. Values are dBm as 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    /// `powers[sector][user * num_beams + beam]`.
    powers: Vec<Vec<f32>>,
    pub num_ues: usize,
    pub num_beams: usize,
    pub noise_dbm: f64,
}

impl GainMatrix {
    pub fn num_sectors(&self) -> usize {
        self.powers.len()
    }

    #[inline]
    pub fn power_dbm(&self, sector: usize, ue: usize, beam: usize) -> f64 {
        self.powers[sector][ue * self.num_beams + beam] as f64
    }

    /// One user's row of beam powers in `sector`.
    #[inline]
    pub fn row(&self, sector: usize, ue: usize) -> &[f32] {
        &self.powers[sector][ue * self.num_beams..(ue + 1) * self.num_beams]
    }

    pub fn snr_db(&self, sector: usize, ue: usize, beam: usize) -> f64 {
        self.power_dbm(sector, ue, beam) - self.noise_dbm
    }

    /// SHA-256 over dims and raw values, hex-encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.num_sectors() as u32).to_le_bytes());
        h.update((self.num_ues as u32).to_le_bytes());
        h.update((self.num_beams as u32).to_le_bytes());
        for sector in &self.powers {
            for v in sector {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize()
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                use std::fmt::Write as _;
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

/// Compute the full gain matrix. Rows are independent, so the result does
/// not depend on the worker-thread count.
///
/// Canonical pools (beams verified against their steered pattern) use an
/// exact factorized evaluation: the inner product of two steered patterns
/// over an `R x C` block splits into two geometric phase sums. Opaque
/// pools fall back to the dense inner product.
pub fn build_gain_matrix(
    scenario: &Scenario,
    pool: &BeamPool,
    radio_cfg: &RadioConfig,
) -> Result<GainMatrix> {
    if !pool.is_canonical() {
        let channels = realize_channels(scenario, &pool.geometry, radio_cfg)?;
        return build_gain_matrix_from_channels(&channels, pool, radio_cfg);
    }
    let geometry = &pool.geometry;
    geometry.validate()?;
    let links = link_budget(scenario, geometry.wavelength(), radio_cfg)?;
    let m = pool.len();
    if m == 0 {
        return Err(Error::Invalid("empty beam pool".into()));
    }

    let k = 2.0 * std::f64::consts::PI * geometry.element_spacing;
    // Aperture sizes per class: [narrow, wide].
    let class_rows = [geometry.e1, (geometry.e1 / 2).max(1)];
    let class_cols = [geometry.e2, (geometry.e2 / 2).max(1)];

    // Half-angle terms per beam. With A = k u / 2, the column phase sum is
    // |sin(n (A_beam - A_link)) / sin(A_beam - A_link)|, expanded via the
    // angle-addition identity against per-link terms (rows likewise).
    struct BeamFactors {
        class: usize,
        scale: f64,
        u_comp: f64,
        v_comp: f64,
        col: [f64; 4], // sin A, cos A, sin nA, cos nA
        row: [f64; 4],
    }
    let factors: Vec<BeamFactors> = pool
        .beams
        .iter()
        .map(|b| {
            let class = match b.beamwidth_class {
                crate::beams::BeamwidthClass::Narrow => 0,
                crate::beams::BeamwidthClass::Wide => 1,
            };
            let az = b.steer_azimuth.to_radians();
            let el = b.steer_elevation.to_radians();
            let u_comp = az.sin() * el.cos();
            let v_comp = el.sin();
            let half = |x: f64, n: usize| {
                let a = 0.5 * k * x;
                let (sa, ca) = a.sin_cos();
                let (sna, cna) = (n as f64 * a).sin_cos();
                [sa, ca, sna, cna]
            };
            BeamFactors {
                class,
                scale: 1.0 / (2.0 * (class_rows[class] * class_cols[class]) as f64).sqrt(),
                u_comp,
                v_comp,
                col: half(u_comp, class_cols[class]),
                row: half(v_comp, class_rows[class]),
            }
        })
        .collect();

    let mut powers = Vec::with_capacity(links.len());
    for sector_links in &links {
        let u_count = sector_links.len();
        let mut block = vec![0.0f32; u_count * m];
        block
            .par_chunks_mut(m)
            .zip(sector_links.par_iter())
            .for_each(|(row, link)| {
                let az = link.az_local_deg.to_radians();
                let el = link.el_local_deg.to_radians();
                let ua = az.sin() * el.cos();
                let va = el.sin();
                // Per-link half-angle terms for both aperture classes.
                let link_terms = |x: f64, ns: [usize; 2]| {
                    let a = 0.5 * k * x;
                    let (sa, ca) = a.sin_cos();
                    let (sn0, cn0) = (ns[0] as f64 * a).sin_cos();
                    let (sn1, cn1) = (ns[1] as f64 * a).sin_cos();
                    [sa, ca, sn0, cn0, sn1, cn1]
                };
                let lc = link_terms(ua, class_cols);
                let lr = link_terms(va, class_rows);

                for (f, out) in factors.iter().zip(row.iter_mut()) {
                    let ci = f.class;
                    // sin(A_b - A_l) and sin(n A_b - n A_l).
                    let den_c = f.col[0] * lc[1] - f.col[1] * lc[0];
                    let col_mag = if den_c.abs() < 1e-9 {
                        geometric_sum_mag(class_cols[ci], k * (f.u_comp - ua))
                    } else {
                        let num_c = f.col[2] * lc[3 + 2 * ci] - f.col[3] * lc[2 + 2 * ci];
                        (num_c / den_c).abs()
                    };
                    let den_r = f.row[0] * lr[1] - f.row[1] * lr[0];
                    let row_mag = if den_r.abs() < 1e-9 {
                        geometric_sum_mag(class_rows[ci], k * (f.v_comp - va))
                    } else {
                        let num_r = f.row[2] * lr[3 + 2 * ci] - f.row[3] * lr[2 + 2 * ci];
                        (num_r / den_r).abs()
                    };
                    let g = 2.0 * f.scale * row_mag * col_mag;
                    let p = if g <= 1e-20 {
                        POWER_FLOOR_DBM
                    } else {
                        (radio_cfg.tx_power_dbm + link.path_gain_db + 20.0 * g.log10())
                            .max(POWER_FLOOR_DBM)
                    };
                    *out = p as f32;
                }
            });
        powers.push(block);
    }

    Ok(GainMatrix {
        powers,
        num_ues: links.first().map_or(0, |s| s.len()),
        num_beams: m,
        noise_dbm: radio_cfg.noise_power_dbm(),
    })
}

/// Gain matrix from already-realized channels.
pub fn build_gain_matrix_from_channels(
    channels: &ChannelRealization,
    pool: &BeamPool,
    radio_cfg: &RadioConfig,
) -> Result<GainMatrix> {
    let m = pool.len();
    if m == 0 {
        return Err(Error::Invalid("empty beam pool".into()));
    }
    let nw = pool.geometry.num_weights();
    // Flatten beam weights for cache-friendly scanning.
    let mut flat = Vec::with_capacity(m * nw);
    for b in &pool.beams {
        if b.weights.len() != nw {
            return Err(Error::Invalid("beam length does not match geometry".into()));
        }
        flat.extend_from_slice(&b.weights);
    }

    let mut powers = Vec::with_capacity(channels.entries.len());
    for sector_entries in &channels.entries {
        let u_count = sector_entries.len();
        let mut block = vec![0.0f32; u_count * m];
        block
            .par_chunks_mut(m)
            .zip(sector_entries.par_iter())
            .for_each(|(row, entry)| {
                for (b, out) in row.iter_mut().enumerate() {
                    let g = cdot_conj(&entry.array_response, &flat[b * nw..(b + 1) * nw]).norm();
                    let p = if g <= 1e-20 {
                        POWER_FLOOR_DBM
                    } else {
                        (radio_cfg.tx_power_dbm + entry.path_gain_db + 20.0 * g.log10())
                            .max(POWER_FLOOR_DBM)
                    };
                    *out = p as f32;
                }
            });
        powers.push(block);
    }

    Ok(GainMatrix {
        powers,
        num_ues: channels.entries.first().map_or(0, |s| s.len()),
        num_beams: m,
        noise_dbm: radio_cfg.noise_power_dbm(),
    })
}

/// Build a gain matrix directly from per-sector dBm tables. Test and
/// synthetic-instance helper.
pub fn gain_matrix_from_powers(per_sector: Vec<Vec<f32>>, num_beams: usize, noise_dbm: f64) -> GainMatrix {
    let num_ues = per_sector.first().map_or(0, |s| s.len() / num_beams.max(1));
    GainMatrix {
        powers: per_sector,
        num_ues,
        num_beams,
        noise_dbm,
    }
}

// ── GMX1 binary cache ────────────────────────────────────────────────────────

/// Write the `GMX1` cache: magic, little-endian u32 dims
/// (sectors, users, beams), then f32 dBm values sector-major, row-major.
pub fn write_gmx(gains: &GainMatrix, w: &mut impl Write) -> Result<()> {
    w.write_all(b"GMX1")?;
    w.write_all(&(gains.num_sectors() as u32).to_le_bytes())?;
    w.write_all(&(gains.num_ues as u32).to_le_bytes())?;
    w.write_all(&(gains.num_beams as u32).to_le_bytes())?;
    for sector in &gains.powers {
        for v in sector {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a `GMX1` cache. Noise power is not stored; it is recomputed from
/// the radio config the matrix will be used with.
pub fn read_gmx(r: &mut impl Read, noise_dbm: f64) -> Result<GainMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != b"GMX1" {
        return Err(Error::Incompatible("not a GMX1 cache".into()));
    }
    let mut buf4 = [0u8; 4];
    let mut dim = || -> Result<usize> {
        r.read_exact(&mut buf4)?;
        Ok(u32::from_le_bytes(buf4) as usize)
    };
    let sectors = dim()?;
    let num_ues = dim()?;
    let num_beams = dim()?;
    let mut powers = Vec::with_capacity(sectors);
    for _ in 0..sectors {
        let mut block = vec![0.0f32; num_ues * num_beams];
        for v in &mut block {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *v = f32::from_le_bytes(b);
        }
        powers.push(block);
    }
    Ok(GainMatrix {
        powers,
        num_ues,
        num_beams,
        noise_dbm,
    })
}

/// Uniform-random synthetic gain matrix for solver studies: powers drawn
/// in `[lo, hi]` dBm per (sector, user, beam).
pub fn random_gain_matrix(
    sectors: usize,
    num_ues: usize,
    num_beams: usize,
    lo_dbm: f64,
    hi_dbm: f64,
    seed: u64,
) -> GainMatrix {
    let mut powers = Vec::with_capacity(sectors);
    for s in 0..sectors {
        let mut rng = stream(seed, StreamKind::Shadowing, &[0xbeef, s as u64]);
        let block: Vec<f32> = (0..num_ues * num_beams)
            .map(|_| (lo_dbm + (hi_dbm - lo_dbm) * rng.gen::<f64>()) as f32)
            .collect();
        powers.push(block);
    }
    GainMatrix {
        powers,
        num_ues,
        num_beams,
        noise_dbm: -85.0,
    }
}
