//! Cell-search sweep: association, coverage counting, observations.
//!
//! A deployment assigns one codebook per sector. Each user associates with
//! the (sector, beam) pair of maximum received power and counts as covered
//! when that power clears the detection threshold. Observations summarize
//! the expert sweeps as per-beam associated-user counts, the only state
//! the selection policy ever sees.

use std::fmt::Write as _;

use crate::beams::Codebook;
use crate::error::{Error, Result};
use crate::propagation::{GainMatrix, POWER_FLOOR_DBM};

/// One codebook per sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deployment {
    pub codebooks: Vec<Codebook>,
}

impl Deployment {
    pub fn new(codebooks: Vec<Codebook>) -> Self {
        Self { codebooks }
    }

    /// Every sector deploys the same codebook.
    pub fn uniform(codebook: &Codebook, num_sectors: usize) -> Self {
        Self {
            codebooks: vec![codebook.clone(); num_sectors],
        }
    }

    pub fn validate(&self, gains: &GainMatrix) -> Result<()> {
        if self.codebooks.len() != gains.num_sectors() {
            return Err(Error::Invalid(format!(
                "deployment has {} codebooks for {} sectors",
                self.codebooks.len(),
                gains.num_sectors()
            )));
        }
        if self.codebooks.iter().all(|c| c.is_empty()) {
            return Err(Error::Invalid("empty deployment".into()));
        }
        for c in &self.codebooks {
            c.validate(gains.num_beams)?;
        }
        Ok(())
    }

    fn beam_sets(&self) -> Vec<&[usize]> {
        self.codebooks.iter().map(|c| c.beam_indices.as_slice()).collect()
    }
}

/// Per-user association outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct UeAssociation {
    pub best_sector: Option<usize>,
    pub best_beam: Option<usize>,
    pub best_power_dbm: f64,
    pub covered: bool,
}

/// Association outcomes for every user of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationResult {
    pub per_ue: Vec<UeAssociation>,
}

impl AssociationResult {
    pub fn covered_count(&self) -> usize {
        self.per_ue.iter().filter(|a| a.covered).count()
    }

    /// Comma-separated dump: `ue_id,sector,beam,power_dbm,covered`;
    /// unassociated users carry -1 indices.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("ue_id,sector,beam,power_dbm,covered\n");
        for (i, a) in self.per_ue.iter().enumerate() {
            let sector = a.best_sector.map_or(-1, |v| v as i64);
            let beam = a.best_beam.map_or(-1, |v| v as i64);
            let _ = writeln!(
                s,
                "{i},{sector},{beam},{:?},{}",
                a.best_power_dbm,
                u8::from(a.covered)
            );
        }
        s
    }
}

/// Best (sector, beam) for one user over arbitrary per-sector beam sets.
/// Ties break to the lower sector index, then the lower beam index.
#[inline]
fn best_pair_for_ue(
    gains: &GainMatrix,
    sets: &[&[usize]],
    ue: usize,
) -> (f64, Option<(usize, usize)>) {
    let mut best_p = f64::NEG_INFINITY;
    let mut best: Option<(usize, usize)> = None;
    for (s, beams) in sets.iter().enumerate() {
        let row = gains.row(s, ue);
        for &b in beams.iter() {
            let p = row[b] as f64;
            let better = match best {
                None => true,
                Some(pair) => p > best_p || (p == best_p && (s, b) < pair),
            };
            if better {
                best_p = p;
                best = Some((s, b));
            }
        }
    }
    if best_p <= POWER_FLOOR_DBM {
        (best_p, None)
    } else {
        (best_p, best)
    }
}

/// Run one sweep and associate every user (Section "cell search" of the
/// pipeline): maximum received power over all deployed (sector, beam)
/// pairs, covered when it reaches `tau`.
pub fn associate(gains: &GainMatrix, deployment: &Deployment, tau: f64) -> Result<AssociationResult> {
    deployment.validate(gains)?;
    let sets = deployment.beam_sets();
    let per_ue = (0..gains.num_ues)
        .map(|u| {
            let (p, pair) = best_pair_for_ue(gains, &sets, u);
            UeAssociation {
                best_sector: pair.map(|(s, _)| s),
                best_beam: pair.map(|(_, b)| b),
                best_power_dbm: p,
                covered: pair.is_some() && p >= tau,
            }
        })
        .collect();
    Ok(AssociationResult { per_ue })
}

/// Number of covered users under `deployment`.
pub fn coverage(gains: &GainMatrix, deployment: &Deployment, tau: f64) -> Result<usize> {
    deployment.validate(gains)?;
    Ok(coverage_sets(gains, &deployment.beam_sets(), tau))
}

/// Coverage over arbitrary per-sector beam sets (no size-n constraint);
/// the building block for solvers and property checks.
pub fn coverage_sets(gains: &GainMatrix, sets: &[&[usize]], tau: f64) -> usize {
    (0..gains.num_ues)
        .filter(|&u| {
            sets.iter().enumerate().any(|(s, beams)| {
                let row = gains.row(s, u);
                beams.iter().any(|&b| row[b] as f64 >= tau)
            })
        })
        .count()
}

/// Covered-user bitmask (one bool per user) under per-sector beam sets.
pub fn covered_mask_sets(gains: &GainMatrix, sets: &[&[usize]], tau: f64) -> Vec<bool> {
    (0..gains.num_ues)
        .map(|u| {
            sets.iter().enumerate().any(|(s, beams)| {
                let row = gains.row(s, u);
                beams.iter().any(|&b| row[b] as f64 >= tau)
            })
        })
        .collect()
}

/// Covered users attributed to the sector their best pair lives in;
/// entries sum to [`coverage`].
pub fn per_sector_coverage(
    gains: &GainMatrix,
    deployment: &Deployment,
    tau: f64,
) -> Result<Vec<usize>> {
    deployment.validate(gains)?;
    let sets = deployment.beam_sets();
    let mut counts = vec![0usize; gains.num_sectors()];
    for u in 0..gains.num_ues {
        let (p, pair) = best_pair_for_ue(gains, &sets, u);
        if let Some((s, _)) = pair {
            if p >= tau {
                counts[s] += 1;
            }
        }
    }
    Ok(counts)
}

/// What one sector learned from the expert sweeps: associated-user counts
/// per expert beam, concatenated codebook by codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub sector: usize,
    pub counts: Vec<u32>,
    /// `counts` scaled by 1 / num_ues (fixed-scale normalization).
    pub normalized: Vec<f64>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Sweep each expert codebook in turn (all sectors deploying it
/// simultaneously, users starting unassociated each time) and count, per
/// sector, the users whose best pair lands on each beam.
pub fn observe(
    gains: &GainMatrix,
    expert_codebooks: &[Codebook],
    tau: f64,
) -> Result<Vec<Observation>> {
    if expert_codebooks.is_empty() {
        return Err(Error::Invalid("need at least one expert codebook".into()));
    }
    let num_sectors = gains.num_sectors();
    let total_len: usize = expert_codebooks.iter().map(|c| c.len()).sum();
    let mut counts = vec![vec![0u32; total_len]; num_sectors];

    let mut offset = 0usize;
    for cb in expert_codebooks {
        let deployment = Deployment::uniform(cb, num_sectors);
        let assoc = associate(gains, &deployment, tau)?;
        for a in &assoc.per_ue {
            if !a.covered {
                continue;
            }
            let (s, b) = (a.best_sector.unwrap(), a.best_beam.unwrap());
            let k = cb.beam_indices.iter().position(|&x| x == b).expect("beam in codebook");
            counts[s][offset + k] += 1;
        }
        offset += cb.len();
    }

    let num_ues = gains.num_ues;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(sector, counts)| {
            let normalized = counts
                .iter()
                .map(|&c| if num_ues > 0 { c as f64 / num_ues as f64 } else { 0.0 })
                .collect();
            Observation {
                sector,
                counts,
                normalized,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{gain_matrix_from_powers, random_gain_matrix};

    fn cb(indices: &[usize]) -> Codebook {
        Codebook::new(indices.to_vec(), "t")
    }

    /// Matrix with one sector; powers[u][b].
    fn single_sector(powers: &[&[f32]]) -> GainMatrix {
        let m = powers[0].len();
        let flat: Vec<f32> = powers.iter().flat_map(|r| r.iter().copied()).collect();
        gain_matrix_from_powers(vec![flat], m, -85.0)
    }

    #[test]
    fn unreachable_threshold_covers_nobody() {
        let g = random_gain_matrix(2, 10, 4, -120.0, -60.0, 1);
        let d = Deployment::new(vec![cb(&[0, 1]), cb(&[2, 3])]);
        assert_eq!(coverage(&g, &d, 0.0).unwrap(), 0);
        let assoc = associate(&g, &d, 0.0).unwrap();
        assert!(assoc.per_ue.iter().all(|a| !a.covered));
        // Powers are above the absolute floor, so best pairs still exist.
        assert!(assoc.per_ue.iter().all(|a| a.best_sector.is_some()));
    }

    #[test]
    fn direct_max_association() {
        let g = single_sector(&[&[-70.0, -60.0, -90.0]]);
        let d = Deployment::new(vec![cb(&[0, 1, 2])]);
        let assoc = associate(&g, &d, -80.0).unwrap();
        assert_eq!(assoc.per_ue[0].best_beam, Some(1));
        assert!(assoc.per_ue[0].covered);
        assert_eq!(assoc.per_ue[0].best_power_dbm, -60.0);
    }

    #[test]
    fn association_matches_bruteforce_scan() {
        // Exhaustive per-user scan oracle on a random 6x4 instance.
        let g = random_gain_matrix(1, 6, 4, -100.0, -70.0, 3);
        let d = Deployment::new(vec![cb(&[0, 1, 2, 3])]);
        let tau = -85.0;
        let assoc = associate(&g, &d, tau).unwrap();
        for u in 0..6 {
            let mut best = (f64::NEG_INFINITY, 0usize);
            for b in 0..4 {
                let p = g.power_dbm(0, u, b);
                if p > best.0 {
                    best = (p, b);
                }
            }
            assert_eq!(assoc.per_ue[u].best_beam, Some(best.1));
            assert_eq!(assoc.per_ue[u].covered, best.0 >= tau);
        }
    }

    #[test]
    fn tie_breaking_prefers_low_sector_then_low_beam() {
        let flat0 = vec![-70.0f32, -70.0];
        let flat1 = vec![-70.0f32, -70.0];
        let g = gain_matrix_from_powers(vec![flat0, flat1], 2, -85.0);
        let d = Deployment::new(vec![cb(&[1, 0]), cb(&[0, 1])]);
        let assoc = associate(&g, &d, -80.0).unwrap();
        assert_eq!(assoc.per_ue[0].best_sector, Some(0));
        assert_eq!(assoc.per_ue[0].best_beam, Some(0));
    }

    #[test]
    fn disjoint_coverage_counts() {
        let g = single_sector(&[
            &[-60.0, -200.0, -200.0],
            &[-200.0, -60.0, -200.0],
            &[-200.0, -200.0, -60.0],
        ]);
        let d = Deployment::new(vec![cb(&[0, 1, 2])]);
        assert_eq!(coverage(&g, &d, -80.0).unwrap(), 3);
    }

    #[test]
    fn coverage_agrees_with_full_enumeration() {
        // All 15 two-beam codebooks of a 6-beam pool, against a per-user
        // max oracle.
        let g = random_gain_matrix(1, 8, 6, -100.0, -70.0, 7);
        let tau = -85.0;
        for b0 in 0..6 {
            for b1 in (b0 + 1)..6 {
                let d = Deployment::new(vec![cb(&[b0, b1])]);
                let got = coverage(&g, &d, tau).unwrap();
                let expect = (0..8)
                    .filter(|&u| {
                        g.power_dbm(0, u, b0).max(g.power_dbm(0, u, b1)) >= tau
                    })
                    .count();
                assert_eq!(got, expect);
            }
        }
    }

    #[test]
    fn per_sector_counts_partition_total() {
        for seed in 0..20 {
            let g = random_gain_matrix(3, 25, 6, -100.0, -70.0, seed);
            let d = Deployment::new(vec![cb(&[0, 1]), cb(&[2, 3]), cb(&[4, 5])]);
            let tau = -82.0;
            let per = per_sector_coverage(&g, &d, tau).unwrap();
            assert_eq!(per.iter().sum::<usize>(), coverage(&g, &d, tau).unwrap());
        }
    }

    #[test]
    fn per_sector_hand_worked_example() {
        // Two sectors, four users, powers set by hand.
        let s0 = vec![
            -60.0f32, -200.0, // u0: sector 0 beam 0 wins
            -200.0, -90.0, // u1: below tau everywhere
            -70.0, -200.0, // u2: sector 0 wins over sector 1 (-75)
            -200.0, -200.0, // u3: only sector 1 reaches it
        ];
        let s1 = vec![
            -200.0f32, -200.0, //
            -200.0, -200.0, //
            -75.0, -200.0, //
            -65.0, -200.0, //
        ];
        let g = gain_matrix_from_powers(vec![s0, s1], 2, -85.0);
        let d = Deployment::new(vec![cb(&[0, 1]), cb(&[0, 1])]);
        let per = per_sector_coverage(&g, &d, -80.0).unwrap();
        assert_eq!(per, vec![2, 1]);
    }

    #[test]
    fn monotone_and_submodular_on_random_instances() {
        for seed in 0..200u64 {
            let g = random_gain_matrix(1, 12, 6, -100.0, -70.0, seed);
            let tau = -84.0;
            // Monotone: adding a beam never reduces coverage.
            let a = coverage_sets(&g, &[&[0, 2]], tau);
            let a_plus = coverage_sets(&g, &[&[0, 2, 4]], tau);
            assert!(a_plus >= a);
            // Diminishing returns for A subset of B, x outside B.
            let small = coverage_sets(&g, &[&[0]], tau);
            let small_x = coverage_sets(&g, &[&[0, 5]], tau);
            let big = coverage_sets(&g, &[&[0, 1, 2, 3]], tau);
            let big_x = coverage_sets(&g, &[&[0, 1, 2, 3, 5]], tau);
            assert!(small_x - small >= big_x - big);
        }
    }

    #[test]
    fn observation_layout_and_consistency() {
        let g = random_gain_matrix(3, 40, 6, -100.0, -70.0, 11);
        let experts = vec![cb(&[0, 1]), cb(&[2, 3])];
        let tau = -82.0;
        let obs = observe(&g, &experts, tau).unwrap();
        assert_eq!(obs.len(), 3);
        for o in &obs {
            assert_eq!(o.len(), 4);
            for (c, n) in o.counts.iter().zip(&o.normalized) {
                assert_eq!(*n, *c as f64 / 40.0);
            }
        }
        // Counts for each sweep sum to that sweep's coverage.
        for (i, cbk) in experts.iter().enumerate() {
            let d = Deployment::uniform(cbk, 3);
            let cov = coverage(&g, &d, tau).unwrap();
            let total: u32 = obs
                .iter()
                .map(|o| o.counts[i * 2..(i + 1) * 2].iter().sum::<u32>())
                .sum();
            assert_eq!(total as usize, cov);
        }
    }

    #[test]
    fn observation_hand_instance() {
        // Three users: two land on (s0, b3), one stays below tau.
        let s0 = vec![
            -200.0f32, -200.0, -200.0, -60.0, //
            -200.0, -200.0, -200.0, -61.0, //
            -200.0, -200.0, -200.0, -95.0, //
        ];
        let s1 = vec![-200.0f32; 12];
        let s2 = vec![-200.0f32; 12];
        let g = gain_matrix_from_powers(vec![s0, s1, s2], 4, -85.0);
        let experts = vec![cb(&[2, 3])];
        let obs = observe(&g, &experts, -80.0).unwrap();
        assert_eq!(obs[0].counts, vec![0, 2]);
        assert_eq!(obs[1].counts, vec![0, 0]);
        assert_eq!(obs[2].counts, vec![0, 0]);
    }

    #[test]
    fn zero_ues_give_zero_vectors() {
        let g = gain_matrix_from_powers(vec![Vec::new(), Vec::new()], 4, -85.0);
        let obs = observe(&g, &[cb(&[0, 1])], -80.0).unwrap();
        assert!(obs.iter().all(|o| o.counts.iter().all(|&c| c == 0)));
    }

    #[test]
    fn empty_deployment_rejected() {
        let g = random_gain_matrix(1, 4, 4, -100.0, -70.0, 2);
        let d = Deployment::new(vec![Codebook::new(vec![], "empty")]);
        assert!(associate(&g, &d, -80.0).is_err());
    }

    #[test]
    fn csv_dump_shape() {
        let g = single_sector(&[&[-70.0, -60.0]]);
        let d = Deployment::new(vec![cb(&[0, 1])]);
        let assoc = associate(&g, &d, -65.0).unwrap();
        let csv = assoc.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "ue_id,sector,beam,power_dbm,covered");
        assert_eq!(lines[1], "0,0,1,-60.0,1");
    }
}
