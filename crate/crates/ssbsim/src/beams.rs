//! Beam pool synthesis and codebook definitions.
//!
//! The pool holds `m` steered DFT beams for a dual-polarized planar array,
//! organized in families that share an elevation tilt and a beamwidth
//! class and span the sector in azimuth. Narrow beams excite the full
//! aperture; wide beams excite a half-size sub-aperture, roughly doubling
//! the main-lobe width per axis at the cost of peak gain. The first two
//! families are the expert codebooks: narrow low-tilt beams for distant
//! users and wide higher-tilt beams for nearby ones.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::cdot_conj;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planar dual-polarized array: `e1` rows (elevation) by `e2` columns
/// (azimuth), two polarizations per element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub e1: usize,
    pub e2: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    /// Carrier frequency, Hz.
    pub carrier_frequency: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self {
            e1: 8,
            e2: 8,
            element_spacing: 0.5,
            carrier_frequency: 28.0e9,
        }
    }
}

impl ArrayGeometry {
    /// Weights per precoding vector: two polarizations per element.
    pub fn num_weights(&self) -> usize {
        2 * self.e1 * self.e2
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn validate(&self) -> Result<()> {
        if self.e1 == 0 || self.e2 == 0 {
            return Err(Error::Invalid("array needs at least one element per axis".into()));
        }
        if !(self.element_spacing > 0.0) {
            return Err(Error::Invalid("element spacing must be positive".into()));
        }
        if !(self.carrier_frequency > 0.0) {
            return Err(Error::Invalid("carrier frequency must be positive".into()));
        }
        Ok(())
    }

    /// Far-field steering phases toward `(azimuth, elevation)` in degrees,
    /// one unit-modulus entry per weight. Polarizations carry identical
    /// phases; element order is (polarization, row, column), row-major.
    pub fn steering_vector(&self, azimuth_deg: f64, elevation_deg: f64) -> Vec<Complex64> {
        let az = azimuth_deg.to_radians();
        let el = elevation_deg.to_radians();
        let k = 2.0 * std::f64::consts::PI * self.element_spacing;
        let mut v = Vec::with_capacity(self.num_weights());
        for _pol in 0..2 {
            for r in 0..self.e1 {
                for c in 0..self.e2 {
                    let phase = k * (c as f64 * az.sin() * el.cos() + r as f64 * el.sin());
                    v.push(Complex64::from_polar(1.0, phase));
                }
            }
        }
        v
    }
}

/// Main-lobe width class of a pool beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeamwidthClass {
    Narrow,
    Wide,
}

impl BeamwidthClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BeamwidthClass::Narrow => "narrow",
            BeamwidthClass::Wide => "wide",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "narrow" => Ok(BeamwidthClass::Narrow),
            "wide" => Ok(BeamwidthClass::Wide),
            other => Err(Error::Config(format!("unknown beamwidth class '{other}'"))),
        }
    }
}

/// One transmit beam: unit-norm complex weights plus steering metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingVector {
    pub weights: Vec<Complex64>,
    pub steer_azimuth: f64,
    pub steer_elevation: f64,
    pub beamwidth_class: BeamwidthClass,
    pub family_id: usize,
}

/// The shared beam pool: `m` beams over one array geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPool {
    pub beams: Vec<PrecodingVector>,
    pub geometry: ArrayGeometry,
    /// Every beam's weights bit-match the canonical steered pattern of its
    /// metadata, so factorized gain evaluation is exact. Checked once at
    /// construction.
    canonical: bool,
}

impl BeamPool {
    /// Assemble a pool, verifying each beam against the canonical steered
    /// pattern of its metadata. Pools that do not verify still work; gain
    /// evaluation just uses the dense inner-product path.
    pub fn from_parts(beams: Vec<PrecodingVector>, geometry: ArrayGeometry) -> Self {
        let canonical = beams.iter().all(|b| {
            synthesize_beam(&geometry, b.steer_azimuth, b.steer_elevation, b.beamwidth_class)
                .map(|canon| canon.weights == b.weights)
                .unwrap_or(false)
        });
        Self {
            beams,
            geometry,
            canonical,
        }
    }

    /// Whether beams carry their canonical steered-DFT structure.
    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// SHA-256 of the canonical text serialization, hex-encoded. Used by
    /// checkpoints and caches to refuse mismatched pools.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(pool_to_string(self).as_bytes());
        let out = h.finalize();
        out.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// An ordered selection of `n` distinct pool beams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    pub beam_indices: Vec<usize>,
    pub label: String,
}

impl Codebook {
    pub fn new(beam_indices: Vec<usize>, label: impl Into<String>) -> Self {
        Self {
            beam_indices,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.beam_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beam_indices.is_empty()
    }

    /// Check distinctness and range against a pool of `m` beams.
    pub fn validate(&self, m: usize) -> Result<()> {
        let mut seen = vec![false; m];
        for &b in &self.beam_indices {
            if b >= m {
                return Err(Error::Invalid(format!("beam index {b} out of range (m={m})")));
            }
            if seen[b] {
                return Err(Error::Invalid(format!("beam index {b} repeated in codebook")));
            }
            seen[b] = true;
        }
        Ok(())
    }
}

/// One pool family: `count` beams of one class and tilt spanning the
/// sector in azimuth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub class: BeamwidthClass,
    pub elevation_deg: f64,
    pub count: usize,
}

/// Pool generation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolConfig {
    /// Total number of beams `m`; must equal the sum of family counts.
    pub total_beams: usize,
    pub families: Vec<FamilySpec>,
    /// Azimuth steering span covered by each family, degrees.
    pub azimuth_span_deg: [f64; 2],
}

impl Default for PoolConfig {
    fn default() -> Self {
        // Families 0 and 1 are the expert codebooks: narrow low-tilt beams
        // for the far band and wide higher-tilt beams reaching the near
        // band. The remaining four repeat both classes at tilts no expert
        // codebook uses (mid and deep-near bands).
        let fam = |class, elevation_deg| FamilySpec {
            class,
            elevation_deg,
            count: 24,
        };
        Self {
            total_beams: 144,
            families: vec![
                fam(BeamwidthClass::Narrow, -9.5),
                fam(BeamwidthClass::Wide, -26.0),
                fam(BeamwidthClass::Narrow, -28.0),
                fam(BeamwidthClass::Wide, -28.0),
                fam(BeamwidthClass::Narrow, -45.0),
                fam(BeamwidthClass::Wide, -45.0),
            ],
            azimuth_span_deg: [-55.0, 55.0],
        }
    }
}

impl PoolConfig {
    /// Small pool for quick experiments: four families of two beams.
    pub fn toy() -> Self {
        let fam = |class, elevation_deg| FamilySpec {
            class,
            elevation_deg,
            count: 2,
        };
        Self {
            total_beams: 8,
            families: vec![
                fam(BeamwidthClass::Narrow, -9.5),
                fam(BeamwidthClass::Wide, -20.0),
                fam(BeamwidthClass::Narrow, -15.0),
                fam(BeamwidthClass::Wide, -38.0),
            ],
            azimuth_span_deg: [-45.0, 45.0],
        }
    }
}

/// Synthesize one steered DFT beam. Narrow beams use the full aperture;
/// wide beams excite only the first `max(1, e1/2) x max(1, e2/2)` block.
pub fn synthesize_beam(
    geometry: &ArrayGeometry,
    azimuth_deg: f64,
    elevation_deg: f64,
    class: BeamwidthClass,
) -> Result<PrecodingVector> {
    geometry.validate()?;
    if !(-90.0..=90.0).contains(&azimuth_deg) {
        return Err(Error::Invalid(format!("steering azimuth {azimuth_deg} out of [-90, 90]")));
    }
    if !(-90.0..=90.0).contains(&elevation_deg) {
        return Err(Error::Invalid(format!(
            "steering elevation {elevation_deg} out of [-90, 90]"
        )));
    }

    let (rows, cols) = match class {
        BeamwidthClass::Narrow => (geometry.e1, geometry.e2),
        BeamwidthClass::Wide => ((geometry.e1 / 2).max(1), (geometry.e2 / 2).max(1)),
    };
    let steer = geometry.steering_vector(azimuth_deg, elevation_deg);
    let active = 2 * rows * cols;
    let scale = 1.0 / (active as f64).sqrt();

    let mut weights = vec![Complex64::new(0.0, 0.0); geometry.num_weights()];
    for pol in 0..2 {
        for r in 0..rows {
            for c in 0..cols {
                let idx = pol * geometry.e1 * geometry.e2 + r * geometry.e2 + c;
                weights[idx] = steer[idx] * scale;
            }
        }
    }

    Ok(PrecodingVector {
        weights,
        steer_azimuth: azimuth_deg,
        steer_elevation: elevation_deg,
        beamwidth_class: class,
        family_id: 0,
    })
}

/// Build the full pool: families in order, each spanning the azimuth range
/// on an even grid. Beam index = family offset + azimuth position.
pub fn build_pool(geometry: &ArrayGeometry, cfg: &PoolConfig) -> Result<BeamPool> {
    geometry.validate()?;
    let total: usize = cfg.families.iter().map(|f| f.count).sum();
    if total != cfg.total_beams {
        return Err(Error::Config(format!(
            "family sizes sum to {total} but the pool declares {} beams",
            cfg.total_beams
        )));
    }
    let [az_lo, az_hi] = cfg.azimuth_span_deg;
    if !(az_lo < az_hi) {
        return Err(Error::Config("azimuth span must be a nonempty interval".into()));
    }

    let mut beams = Vec::with_capacity(total);
    for (fid, fam) in cfg.families.iter().enumerate() {
        for k in 0..fam.count {
            let az = if fam.count == 1 {
                0.5 * (az_lo + az_hi)
            } else {
                az_lo + (az_hi - az_lo) * k as f64 / (fam.count - 1) as f64
            };
            let mut beam = synthesize_beam(geometry, az, fam.elevation_deg, fam.class)?;
            beam.family_id = fid;
            beams.push(beam);
        }
    }

    Ok(BeamPool::from_parts(beams, geometry.clone()))
}

/// The two expert codebooks: the pool's first two families.
pub fn build_expert_codebooks(pool: &BeamPool) -> Result<Vec<Codebook>> {
    let mut boundaries = Vec::new();
    let mut start = 0usize;
    let mut fid = 0usize;
    for (i, b) in pool.beams.iter().enumerate() {
        if b.family_id != fid {
            boundaries.push((start, i));
            start = i;
            fid = b.family_id;
        }
    }
    boundaries.push((start, pool.len()));
    if boundaries.len() < 2 {
        return Err(Error::Invalid(
            "pool too small: expert codebooks need at least two families".into(),
        ));
    }
    Ok(vec![
        Codebook::new((boundaries[0].0..boundaries[0].1).collect(), "c1"),
        Codebook::new((boundaries[1].0..boundaries[1].1).collect(), "c2"),
    ])
}

/// Array gain of `beam` against the ideal response at `(az, el)`, in dB
/// relative to a single element.
pub fn array_gain_db(
    geometry: &ArrayGeometry,
    beam: &PrecodingVector,
    azimuth_deg: f64,
    elevation_deg: f64,
) -> f64 {
    let a = geometry.steering_vector(azimuth_deg, elevation_deg);
    let g = cdot_conj(&a, &beam.weights).norm();
    if g <= 1e-20 {
        -400.0
    } else {
        20.0 * g.log10()
    }
}

/// Measured 3 dB azimuth beamwidth, degrees, by dense scan at the beam's
/// steering elevation.
pub fn beamwidth_3db_az(geometry: &ArrayGeometry, beam: &PrecodingVector) -> f64 {
    let step = 0.05;
    let n = (180.0 / step) as usize + 1;
    let gains: Vec<f64> = (0..n)
        .map(|i| {
            let az = -90.0 + i as f64 * step;
            array_gain_db(geometry, beam, az, beam.steer_elevation)
        })
        .collect();
    let (peak_idx, peak) = gains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, &g)| (i, g))
        .unwrap();
    let thresh = peak - 3.0;
    let mut left = peak_idx;
    while left > 0 && gains[left] >= thresh {
        left -= 1;
    }
    let mut right = peak_idx;
    while right < n - 1 && gains[right] >= thresh {
        right += 1;
    }
    (right - left) as f64 * step
}

// ── Pool document (structured text) ──────────────────────────────────────────

/// Serialize a pool to the `ssbsim-pool v1` text format: geometry header,
/// then one record per beam with interleaved re/im weights.
pub fn pool_to_string(pool: &BeamPool) -> String {
    let g = &pool.geometry;
    let mut s = String::new();
    s.push_str("ssbsim-pool v1\n");
    let _ = writeln!(
        s,
        "geometry = {} {} {:?} {:?}",
        g.e1, g.e2, g.element_spacing, g.carrier_frequency
    );
    let _ = writeln!(s, "count = {}", pool.len());
    for (i, b) in pool.beams.iter().enumerate() {
        let _ = write!(
            s,
            "{i} {} {:?} {:?} {}",
            b.family_id,
            b.steer_azimuth,
            b.steer_elevation,
            b.beamwidth_class.as_str()
        );
        for w in &b.weights {
            let _ = write!(s, " {:?} {:?}", w.re, w.im);
        }
        s.push('\n');
    }
    s
}

/// Parse the `ssbsim-pool v1` text format.
pub fn pool_from_str(text: &str) -> Result<BeamPool> {
    let mut lines = text.lines().enumerate();
    let bad = |ln: usize, msg: &str| Error::Config(format!("pool line {}: {msg}", ln + 1));

    let (ln, header) = lines.next().ok_or_else(|| Error::Config("empty pool file".into()))?;
    if header.trim() != "ssbsim-pool v1" {
        return Err(bad(ln, "expected header 'ssbsim-pool v1'"));
    }

    let mut geometry: Option<ArrayGeometry> = None;
    let mut count = 0usize;
    let mut beams = Vec::new();

    for (ln, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, val)) = line.split_once('=') {
            match key.trim() {
                "geometry" => {
                    let t: Vec<&str> = val.split_whitespace().collect();
                    if t.len() != 4 {
                        return Err(bad(ln, "geometry needs 'e1 e2 spacing freq'"));
                    }
                    geometry = Some(ArrayGeometry {
                        e1: t[0].parse().map_err(|_| bad(ln, "bad e1"))?,
                        e2: t[1].parse().map_err(|_| bad(ln, "bad e2"))?,
                        element_spacing: t[2].parse().map_err(|_| bad(ln, "bad spacing"))?,
                        carrier_frequency: t[3].parse().map_err(|_| bad(ln, "bad frequency"))?,
                    });
                }
                "count" => count = val.trim().parse().map_err(|_| bad(ln, "bad count"))?,
                other => return Err(bad(ln, &format!("unknown key '{other}'"))),
            }
            continue;
        }
        let g = geometry.as_ref().ok_or_else(|| bad(ln, "beam record before geometry"))?;
        let t: Vec<&str> = line.split_whitespace().collect();
        let expect = 5 + 2 * g.num_weights();
        if t.len() != expect {
            return Err(bad(ln, &format!("expected {expect} fields, got {}", t.len())));
        }
        let idx: usize = t[0].parse().map_err(|_| bad(ln, "bad index"))?;
        if idx != beams.len() {
            return Err(bad(ln, "beam indices must be consecutive from 0"));
        }
        let family_id: usize = t[1].parse().map_err(|_| bad(ln, "bad family"))?;
        let steer_azimuth: f64 = t[2].parse().map_err(|_| bad(ln, "bad azimuth"))?;
        let steer_elevation: f64 = t[3].parse().map_err(|_| bad(ln, "bad elevation"))?;
        let class = BeamwidthClass::parse(t[4]).map_err(|_| bad(ln, "bad class"))?;
        let mut weights = Vec::with_capacity(g.num_weights());
        for w in t[5..].chunks(2) {
            let re: f64 = w[0].parse().map_err(|_| bad(ln, "bad weight"))?;
            let im: f64 = w[1].parse().map_err(|_| bad(ln, "bad weight"))?;
            weights.push(Complex64::new(re, im));
        }
        beams.push(PrecodingVector {
            weights,
            steer_azimuth,
            steer_elevation,
            beamwidth_class: class,
            family_id,
        });
    }

    if beams.len() != count {
        return Err(Error::Config(format!(
            "pool declares {count} beams but carries {}",
            beams.len()
        )));
    }
    let geometry = geometry.ok_or_else(|| Error::Config("pool missing geometry".into()))?;
    Ok(BeamPool::from_parts(beams, geometry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn broadside_small_array_is_uniform() {
        let g = ArrayGeometry {
            e1: 2,
            e2: 2,
            ..ArrayGeometry::default()
        };
        let b = synthesize_beam(&g, 0.0, 0.0, BeamwidthClass::Narrow).unwrap();
        assert_eq!(b.weights.len(), 8);
        let expect = 1.0 / 8.0_f64.sqrt();
        for w in &b.weights {
            assert_relative_eq!(w.re, expect, max_relative = 1e-12);
            assert_relative_eq!(w.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn beams_are_unit_norm() {
        let g = ArrayGeometry::default();
        for (az, el, class) in [
            (0.0, 0.0, BeamwidthClass::Narrow),
            (30.0, -10.0, BeamwidthClass::Narrow),
            (-55.0, -24.0, BeamwidthClass::Wide),
            (17.3, -2.0, BeamwidthClass::Wide),
        ] {
            let b = synthesize_beam(&g, az, el, class).unwrap();
            assert!((norm(&b.weights) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn steered_beam_peaks_at_steering_angle() {
        let g = ArrayGeometry::default();
        let b = synthesize_beam(&g, 30.0, 0.0, BeamwidthClass::Narrow).unwrap();
        // Dense angular scan oracle: the gain peak must land within 1 deg
        // of the steering azimuth.
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut az = -90.0;
        while az <= 90.0 {
            let gain = array_gain_db(&g, &b, az, 0.0);
            if gain > best.0 {
                best = (gain, az);
            }
            az += 0.05;
        }
        assert!((best.1 - 30.0).abs() < 1.0, "peak at {} deg", best.1);
        // Peak gain of the full 128-weight aperture.
        assert_relative_eq!(best.0, 10.0 * 128.0_f64.log10(), epsilon = 0.05);
    }

    #[test]
    fn rejects_invalid_angles() {
        let g = ArrayGeometry::default();
        assert!(synthesize_beam(&g, 100.0, 0.0, BeamwidthClass::Narrow).is_err());
        assert!(synthesize_beam(&g, 0.0, -95.0, BeamwidthClass::Narrow).is_err());
    }

    #[test]
    fn default_pool_structure() {
        let g = ArrayGeometry::default();
        let pool = build_pool(&g, &PoolConfig::default()).unwrap();
        assert_eq!(pool.len(), 144);
        for fid in 0..6 {
            let fam: Vec<&PrecodingVector> =
                pool.beams.iter().filter(|b| b.family_id == fid).collect();
            assert_eq!(fam.len(), 24);
            // Strictly increasing azimuths covering the span.
            for pair in fam.windows(2) {
                assert!(pair[0].steer_azimuth < pair[1].steer_azimuth);
            }
            assert_relative_eq!(fam[0].steer_azimuth, -55.0);
            assert_relative_eq!(fam[23].steer_azimuth, 55.0);
        }
    }

    #[test]
    fn single_beam_pool() {
        let g = ArrayGeometry::default();
        let cfg = PoolConfig {
            total_beams: 1,
            families: vec![FamilySpec {
                class: BeamwidthClass::Narrow,
                elevation_deg: 0.0,
                count: 1,
            }],
            azimuth_span_deg: [-55.0, 55.0],
        };
        let pool = build_pool(&g, &cfg).unwrap();
        assert_eq!(pool.len(), 1);
        assert_relative_eq!(pool.beams[0].steer_azimuth, 0.0);
    }

    #[test]
    fn rejects_family_sum_mismatch() {
        let g = ArrayGeometry::default();
        let mut cfg = PoolConfig::default();
        cfg.total_beams = 100;
        assert!(build_pool(&g, &cfg).is_err());
    }

    #[test]
    fn expert_codebooks_are_first_two_families() {
        let g = ArrayGeometry::default();
        let pool = build_pool(&g, &PoolConfig::default()).unwrap();
        let experts = build_expert_codebooks(&pool).unwrap();
        assert_eq!(experts.len(), 2);
        assert_eq!(experts[0].beam_indices, (0..24).collect::<Vec<_>>());
        assert_eq!(experts[1].beam_indices, (24..48).collect::<Vec<_>>());
        assert_eq!(experts[0].label, "c1");
        // Disjoint by construction.
        for b in &experts[0].beam_indices {
            assert!(!experts[1].beam_indices.contains(b));
        }
        // Class split follows the generation config.
        for &b in &experts[0].beam_indices {
            assert_eq!(pool.beams[b].beamwidth_class, BeamwidthClass::Narrow);
        }
        for &b in &experts[1].beam_indices {
            assert_eq!(pool.beams[b].beamwidth_class, BeamwidthClass::Wide);
        }
    }

    #[test]
    fn wide_beams_are_wider() {
        let g = ArrayGeometry::default();
        for az in [-40.0, 0.0, 40.0] {
            let narrow = synthesize_beam(&g, az, -7.0, BeamwidthClass::Narrow).unwrap();
            let wide = synthesize_beam(&g, az, -7.0, BeamwidthClass::Wide).unwrap();
            let bn = beamwidth_3db_az(&g, &narrow);
            let bw = beamwidth_3db_az(&g, &wide);
            assert!(
                bw > 1.5 * bn,
                "wide {bw} deg vs narrow {bn} deg at azimuth {az}"
            );
        }
    }

    #[test]
    fn pool_document_round_trip() {
        let g = ArrayGeometry {
            e1: 2,
            e2: 4,
            ..ArrayGeometry::default()
        };
        let cfg = PoolConfig {
            total_beams: 6,
            families: vec![
                FamilySpec {
                    class: BeamwidthClass::Narrow,
                    elevation_deg: -2.0,
                    count: 3,
                },
                FamilySpec {
                    class: BeamwidthClass::Wide,
                    elevation_deg: -14.0,
                    count: 3,
                },
            ],
            azimuth_span_deg: [-50.0, 50.0],
        };
        let pool = build_pool(&g, &cfg).unwrap();
        let text = pool_to_string(&pool);
        let back = pool_from_str(&text).unwrap();
        assert_eq!(back, pool);
        assert_eq!(back.content_hash(), pool.content_hash());
    }

    #[test]
    fn pool_determinism() {
        let g = ArrayGeometry::default();
        let a = build_pool(&g, &PoolConfig::default()).unwrap();
        let b = build_pool(&g, &PoolConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
