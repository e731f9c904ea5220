//! Deployment generation: one site, several sectors, clustered users.
//!
//! A scenario is a snapshot of the hidden environment state: the site
//! layout plus user positions with indoor flags and cluster labels. Users
//! are placed inside the coverage disc of radius `isd / 2` around the
//! site, with a configurable share concentrated in Gaussian hotspots and
//! the remainder uniform.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, StreamKind};

/// Site geometry shared by every sector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SiteLayout {
    /// Site reference point in metres; antennas sit at `bs_height` above it.
    pub site_position: [f64; 3],
    /// Boresight azimuth of each sector, degrees counterclockwise from +x.
    pub sector_azimuths: Vec<f64>,
    /// Mechanical downtilt applied to every sector, degrees below horizontal.
    pub sector_downtilt: f64,
    /// Antenna height above the site reference point, metres.
    pub bs_height: f64,
    /// Inter-site distance, metres. Users are placed within `isd / 2`.
    pub isd: f64,
}

impl Default for SiteLayout {
    fn default() -> Self {
        Self {
            site_position: [0.0, 0.0, 0.0],
            sector_azimuths: vec![0.0, 120.0, 240.0],
            sector_downtilt: 6.0,
            bs_height: 25.0,
            isd: 200.0,
        }
    }
}

impl SiteLayout {
    pub fn num_sectors(&self) -> usize {
        self.sector_azimuths.len()
    }

    /// Radius of the deployment disc, metres.
    pub fn cell_radius(&self) -> f64 {
        self.isd / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.sector_azimuths.is_empty() {
            return Err(Error::Invalid("layout needs at least one sector".into()));
        }
        if !(self.isd > 0.0) {
            return Err(Error::Invalid(format!("isd must be positive, got {}", self.isd)));
        }
        for (i, &a) in self.sector_azimuths.iter().enumerate() {
            for &b in &self.sector_azimuths[..i] {
                if angular_distance_deg(a, b) < 1e-9 {
                    return Err(Error::Invalid(format!(
                        "sector azimuths {a} and {b} coincide modulo 360"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// User placement summary. `cluster_ids[i] == -1` marks a background user.
#[derive(Debug, Clone, PartialEq)]
pub struct UePopulation {
    pub positions: Vec<[f64; 3]>,
    pub indoor: Vec<bool>,
    pub cluster_ids: Vec<i32>,
}

impl UePopulation {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Knobs for one generated deployment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub num_ues: usize,
    pub num_clusters: usize,
    /// Per-axis spread of cluster members around their center, metres.
    pub cluster_stddev: f64,
    /// Share of users placed in clusters; the rest are uniform background.
    pub cluster_fraction: f64,
    /// Share of users marked indoor (assigned as an exact count).
    pub indoor_fraction: f64,
    pub ue_height: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_ues: 2000,
            num_clusters: 5,
            cluster_stddev: 10.0,
            cluster_fraction: 0.7,
            indoor_fraction: 0.8,
            ue_height: 1.5,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_ues == 0 {
            return Err(Error::Invalid("num_ues must be positive".into()));
        }
        if self.num_clusters > 0 && !(self.cluster_stddev > 0.0) {
            return Err(Error::Invalid(format!(
                "cluster_stddev must be positive with clusters, got {}",
                self.cluster_stddev
            )));
        }
        if !(0.0..=1.0).contains(&self.indoor_fraction) {
            return Err(Error::Invalid(format!(
                "indoor_fraction must lie in [0,1], got {}",
                self.indoor_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.cluster_fraction) {
            return Err(Error::Invalid(format!(
                "cluster_fraction must lie in [0,1], got {}",
                self.cluster_fraction
            )));
        }
        Ok(())
    }
}

/// One generated environment instance: the hidden state of the decision
/// problem. Immutable after creation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub layout: SiteLayout,
    pub ues: UePopulation,
}

impl Scenario {
    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }
}

/// Uniform point in the disc of `radius` around `(cx, cy)`.
fn uniform_in_disc(rng: &mut impl Rng, cx: f64, cy: f64, radius: f64) -> (f64, f64) {
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    let r = radius * u.sqrt();
    let theta = 2.0 * std::f64::consts::PI * v;
    (cx + r * theta.cos(), cy + r * theta.sin())
}

/// Generate a deployment. Identical `(cfg, layout)` produce identical
/// output, bit for bit; all randomness comes from streams keyed by
/// `cfg.seed`.
pub fn generate_scenario(cfg: &ScenarioConfig, layout: &SiteLayout) -> Result<Scenario> {
    cfg.validate()?;
    layout.validate()?;

    let radius = layout.cell_radius();
    let (sx, sy) = (layout.site_position[0], layout.site_position[1]);
    let n = cfg.num_ues;

    let clustered_total = if cfg.num_clusters > 0 {
        ((cfg.cluster_fraction * n as f64).round() as usize).min(n)
    } else {
        0
    };

    let mut centers = Vec::with_capacity(cfg.num_clusters);
    if cfg.num_clusters > 0 {
        let mut rng = stream(cfg.seed, StreamKind::ClusterCenters, &[]);
        for _ in 0..cfg.num_clusters {
            centers.push(uniform_in_disc(&mut rng, sx, sy, radius));
        }
    }

    let mut positions = Vec::with_capacity(n);
    let mut cluster_ids = Vec::with_capacity(n);

    if clustered_total > 0 {
        let k = cfg.num_clusters;
        let base = clustered_total / k;
        let extra = clustered_total % k;
        let normal = Normal::new(0.0, cfg.cluster_stddev)
            .map_err(|e| Error::Invalid(format!("bad cluster stddev: {e}")))?;
        for (ci, &(cx, cy)) in centers.iter().enumerate() {
            let count = base + usize::from(ci < extra);
            let mut rng = stream(cfg.seed, StreamKind::ClusterMembers, &[ci as u64]);
            for _ in 0..count {
                // Redraw members that fall outside the disc; after 64
                // rejections project the last draw back onto the rim.
                let mut placed = None;
                for _ in 0..64 {
                    let dx = normal.sample(&mut rng);
                    let dy = normal.sample(&mut rng);
                    let (x, y) = (cx + dx, cy + dy);
                    if (x - sx).hypot(y - sy) <= radius {
                        placed = Some((x, y));
                        break;
                    }
                    placed = Some((x, y));
                }
                let (x, y) = placed.unwrap();
                let d = (x - sx).hypot(y - sy);
                let (x, y) = if d > radius {
                    let scale = radius * 0.999 / d;
                    (sx + (x - sx) * scale, sy + (y - sy) * scale)
                } else {
                    (x, y)
                };
                positions.push([x, y, cfg.ue_height]);
                cluster_ids.push(ci as i32);
            }
        }
    }

    let background = n - positions.len();
    if background > 0 {
        let mut rng = stream(cfg.seed, StreamKind::BackgroundUes, &[]);
        for _ in 0..background {
            let (x, y) = uniform_in_disc(&mut rng, sx, sy, radius);
            positions.push([x, y, cfg.ue_height]);
            cluster_ids.push(-1);
        }
    }

    // Exact-count indoor assignment: shuffle indices, mark the first k.
    let indoor_count = ((cfg.indoor_fraction * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream(cfg.seed, StreamKind::IndoorShuffle, &[]);
    order.shuffle(&mut rng);
    let mut indoor = vec![false; n];
    for &i in order.iter().take(indoor_count) {
        indoor[i] = true;
    }

    Ok(Scenario {
        layout: layout.clone(),
        ues: UePopulation {
            positions,
            indoor,
            cluster_ids,
        },
    })
}

/// Smallest absolute angular difference between two bearings, degrees.
pub fn angular_distance_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Index of the sector whose boresight is angularly closest to `position`
/// as seen from the site. Ties go to the lower index.
pub fn sector_of(position: [f64; 3], layout: &SiteLayout) -> usize {
    let az = (position[1] - layout.site_position[1])
        .atan2(position[0] - layout.site_position[0])
        .to_degrees();
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, &sa) in layout.sector_azimuths.iter().enumerate() {
        let d = angular_distance_deg(az, sa);
        if d < best_dist {
            best_dist = d;
            best = i;
        }
    }
    best
}

// ── Scenario document (structured text) ─────────────────────────────────────

/// Serialize a scenario to the `ssbsim-scenario v1` text format: a layout
/// block followed by one `x y z indoor cluster` record per user.
pub fn scenario_to_string(sc: &Scenario) -> String {
    let mut s = String::new();
    s.push_str("ssbsim-scenario v1\n[layout]\n");
    let _ = writeln!(
        s,
        "site = {:?} {:?} {:?}",
        sc.layout.site_position[0], sc.layout.site_position[1], sc.layout.site_position[2]
    );
    let azs: Vec<String> = sc.layout.sector_azimuths.iter().map(|a| format!("{a:?}")).collect();
    let _ = writeln!(s, "azimuths_deg = {}", azs.join(" "));
    let _ = writeln!(s, "downtilt_deg = {:?}", sc.layout.sector_downtilt);
    let _ = writeln!(s, "bs_height_m = {:?}", sc.layout.bs_height);
    let _ = writeln!(s, "isd_m = {:?}", sc.layout.isd);
    s.push_str("[ues]\n");
    let _ = writeln!(s, "count = {}", sc.ues.len());
    for i in 0..sc.ues.len() {
        let p = sc.ues.positions[i];
        let _ = writeln!(
            s,
            "{:?} {:?} {:?} {} {}",
            p[0],
            p[1],
            p[2],
            u8::from(sc.ues.indoor[i]),
            sc.ues.cluster_ids[i]
        );
    }
    s
}

/// Parse the `ssbsim-scenario v1` text format.
pub fn scenario_from_str(text: &str) -> Result<Scenario> {
    let mut lines = text.lines().enumerate();
    let bad = |ln: usize, msg: &str| Error::Config(format!("scenario line {}: {msg}", ln + 1));

    let (ln, header) = lines.next().ok_or_else(|| Error::Config("empty scenario file".into()))?;
    if header.trim() != "ssbsim-scenario v1" {
        return Err(bad(ln, "expected header 'ssbsim-scenario v1'"));
    }

    let mut layout = SiteLayout::default();
    let mut count = 0usize;
    let mut ues = UePopulation {
        positions: Vec::new(),
        indoor: Vec::new(),
        cluster_ids: Vec::new(),
    };
    let mut in_ues = false;

    for (ln, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "[layout]" {
            in_ues = false;
            continue;
        }
        if line == "[ues]" {
            in_ues = true;
            continue;
        }
        if let Some((key, val)) = line.split_once('=') {
            let (key, val) = (key.trim(), val.trim());
            let floats = || -> Result<Vec<f64>> {
                val.split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| bad(ln, "bad number")))
                    .collect()
            };
            match key {
                "site" => {
                    let v = floats()?;
                    if v.len() != 3 {
                        return Err(bad(ln, "site needs 3 coordinates"));
                    }
                    layout.site_position = [v[0], v[1], v[2]];
                }
                "azimuths_deg" => layout.sector_azimuths = floats()?,
                "downtilt_deg" => layout.sector_downtilt = floats()?[0],
                "bs_height_m" => layout.bs_height = floats()?[0],
                "isd_m" => layout.isd = floats()?[0],
                "count" => {
                    count = val.parse().map_err(|_| bad(ln, "bad count"))?;
                }
                _ => return Err(bad(ln, "unknown key")),
            }
            continue;
        }
        if !in_ues {
            return Err(bad(ln, "record outside [ues] section"));
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 5 {
            return Err(bad(ln, "expected 'x y z indoor cluster'"));
        }
        let x: f64 = tok[0].parse().map_err(|_| bad(ln, "bad x"))?;
        let y: f64 = tok[1].parse().map_err(|_| bad(ln, "bad y"))?;
        let z: f64 = tok[2].parse().map_err(|_| bad(ln, "bad z"))?;
        let ind: u8 = tok[3].parse().map_err(|_| bad(ln, "bad indoor flag"))?;
        let cid: i32 = tok[4].parse().map_err(|_| bad(ln, "bad cluster id"))?;
        ues.positions.push([x, y, z]);
        ues.indoor.push(ind != 0);
        ues.cluster_ids.push(cid);
    }

    if ues.len() != count {
        return Err(Error::Config(format!(
            "scenario declares {count} users but carries {}",
            ues.len()
        )));
    }
    let sc = Scenario { layout, ues };
    sc.layout.validate()?;
    Ok(sc)
}
