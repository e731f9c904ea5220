//! Non-learning codebook solvers and the exact oracle.
//!
//! Besides the expert sweeps themselves these cover: per-sector best
//! expert, two greedy flavors (the plain count ranking that real networks
//! could run from sweep feedback, and true marginal-gain greedy with the
//! classic (1 - 1/e) guarantee), uniform random selection, and exhaustive
//! enumeration for instances small enough to afford it.

use std::fmt;

use rand::Rng;

use crate::beams::Codebook;
use crate::cellsearch::{coverage, per_sector_coverage, Deployment};
use crate::error::{Error, Result};
use crate::propagation::GainMatrix;
use crate::rng::{stream, StreamKind};

/// Joint-enumeration budget for [`brute_force_oracle`].
pub const BRUTE_FORCE_GUARD: f64 = 1.0e6;

/// A labelled solver outcome.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub label: String,
    pub deployment: Deployment,
    pub coverage: usize,
}

impl fmt::Display for SolverRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} coverage={}", self.label, self.coverage)?;
        for (s, cb) in self.deployment.codebooks.iter().enumerate() {
            let idx: Vec<String> = cb.beam_indices.iter().map(|b| b.to_string()).collect();
            write!(f, " sector{}=[{}]", s, idx.join(","))?;
        }
        Ok(())
    }
}

/// Deploy one expert codebook in every sector.
pub fn expert_baseline(gains: &GainMatrix, codebook: &Codebook, tau: f64) -> Result<SolverRun> {
    let deployment = Deployment::uniform(codebook, gains.num_sectors());
    let cov = coverage(gains, &deployment, tau)?;
    Ok(SolverRun {
        label: codebook.label.clone(),
        deployment,
        coverage: cov,
    })
}

/// Per sector, keep the expert codebook with the larger per-sector count
/// measured under the all-sectors-same-codebook sweeps. Ties keep the
/// lower codebook index.
pub fn max_of_experts(
    gains: &GainMatrix,
    expert_codebooks: &[Codebook],
    tau: f64,
) -> Result<SolverRun> {
    if expert_codebooks.is_empty() {
        return Err(Error::Invalid("need at least one expert codebook".into()));
    }
    let num_sectors = gains.num_sectors();
    let mut per_sector: Vec<Vec<usize>> = Vec::with_capacity(expert_codebooks.len());
    for cb in expert_codebooks {
        let d = Deployment::uniform(cb, num_sectors);
        per_sector.push(per_sector_coverage(gains, &d, tau)?);
    }

    let mut chosen = Vec::with_capacity(num_sectors);
    for s in 0..num_sectors {
        let mut best = 0usize;
        for i in 1..expert_codebooks.len() {
            if per_sector[i][s] > per_sector[best][s] {
                best = i;
            }
        }
        chosen.push(expert_codebooks[best].clone());
    }
    let deployment = Deployment::new(chosen);
    let cov = coverage(gains, &deployment, tau)?;
    Ok(SolverRun {
        label: "max-of-experts".into(),
        deployment,
        coverage: cov,
    })
}

/// Greedy flavor: plain standalone-count ranking or true marginal gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyVariant {
    /// Rank candidates by standalone associated-user count, keep the top n.
    TopK,
    /// Iteratively add the beam with the largest marginal coverage gain.
    Marginal,
}

/// Users a lone beam would associate to each sector: deploy only `beam`
/// in every sector and attribute by best power (ties to lower sector).
fn standalone_counts(gains: &GainMatrix, beam: usize, tau: f64) -> Vec<usize> {
    let mut counts = vec![0usize; gains.num_sectors()];
    for u in 0..gains.num_ues {
        let mut best_p = f64::NEG_INFINITY;
        let mut best_s = usize::MAX;
        for s in 0..gains.num_sectors() {
            let p = gains.power_dbm(s, u, beam);
            if p > best_p {
                best_p = p;
                best_s = s;
            }
        }
        if best_s != usize::MAX && best_p >= tau {
            counts[best_s] += 1;
        }
    }
    counts
}

/// Build one codebook per sector from `candidate_beams`.
///
/// `TopK` ranks each sector's candidates by standalone associated-user
/// count (ties to the lower beam index). `Marginal` runs classic greedy on
/// the sector's own coverage function. Both return exactly `n` beams.
pub fn greedy_codebook(
    gains: &GainMatrix,
    candidate_beams: &[usize],
    n: usize,
    tau: f64,
    variant: GreedyVariant,
) -> Result<SolverRun> {
    if candidate_beams.len() < n {
        return Err(Error::Invalid(format!(
            "greedy needs at least n={n} candidates, got {}",
            candidate_beams.len()
        )));
    }
    let num_sectors = gains.num_sectors();
    let mut codebooks = Vec::with_capacity(num_sectors);

    match variant {
        GreedyVariant::TopK => {
            // counts[b][s]: standalone per-sector count of candidate b.
            let counts: Vec<Vec<usize>> = candidate_beams
                .iter()
                .map(|&b| standalone_counts(gains, b, tau))
                .collect();
            for s in 0..num_sectors {
                let mut ranked: Vec<(usize, usize)> = candidate_beams
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| (counts[i][s], b))
                    .collect();
                ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                let mut picks: Vec<usize> = ranked.iter().take(n).map(|&(_, b)| b).collect();
                picks.sort_unstable();
                codebooks.push(Codebook::new(picks, format!("greedy-topk-s{s}")));
            }
        }
        GreedyVariant::Marginal => {
            for s in 0..num_sectors {
                let mut chosen: Vec<usize> = Vec::with_capacity(n);
                let mut covered = vec![false; gains.num_ues];
                for _ in 0..n {
                    let mut best: Option<(usize, usize)> = None; // (gain, beam)
                    for &b in candidate_beams {
                        if chosen.contains(&b) {
                            continue;
                        }
                        let gain = (0..gains.num_ues)
                            .filter(|&u| !covered[u] && gains.power_dbm(s, u, b) >= tau)
                            .count();
                        let better = match best {
                            None => true,
                            Some((bg, bb)) => gain > bg || (gain == bg && b < bb),
                        };
                        if better {
                            best = Some((gain, b));
                        }
                    }
                    let (_, b) = best.expect("candidates remain");
                    for u in 0..gains.num_ues {
                        if gains.power_dbm(s, u, b) >= tau {
                            covered[u] = true;
                        }
                    }
                    chosen.push(b);
                }
                codebooks.push(Codebook::new(chosen, format!("greedy-marginal-s{s}")));
            }
        }
    }

    let deployment = Deployment::new(codebooks);
    let cov = coverage(gains, &deployment, tau)?;
    Ok(SolverRun {
        label: match variant {
            GreedyVariant::TopK => "greedy".into(),
            GreedyVariant::Marginal => "greedy-marginal".into(),
        },
        deployment,
        coverage: cov,
    })
}

/// Uniform random n-subset of the m pool beams, ascending order.
pub fn random_codebook(m: usize, n: usize, seed: u64) -> Result<Codebook> {
    if n > m {
        return Err(Error::Invalid(format!("cannot draw {n} beams from a pool of {m}")));
    }
    // Partial Fisher-Yates over the index array.
    let mut idx: Vec<usize> = (0..m).collect();
    let mut rng = stream(seed, StreamKind::RandomCodebook, &[]);
    for i in 0..n {
        let j = i + rng.gen_range(0..m - i);
        idx.swap(i, j);
    }
    let mut picks: Vec<usize> = idx[..n].to_vec();
    picks.sort_unstable();
    Ok(Codebook::new(picks, "random"))
}

/// Independent random codebook per sector, seeds derived per sector.
pub fn random_deployment(gains: &GainMatrix, n: usize, tau: f64, seed: u64) -> Result<SolverRun> {
    let mut codebooks = Vec::with_capacity(gains.num_sectors());
    for s in 0..gains.num_sectors() {
        let mut cb = random_codebook(gains.num_beams, n, seed ^ ((s as u64 + 1) << 32))?;
        cb.label = format!("random-s{s}");
        codebooks.push(cb);
    }
    let deployment = Deployment::new(codebooks);
    let cov = coverage(gains, &deployment, tau)?;
    Ok(SolverRun {
        label: "random".into(),
        deployment,
        coverage: cov,
    })
}

/// Exact optimum by joint enumeration over all per-sector n-subsets.
/// Guarded: the joint combination count must not exceed
/// [`BRUTE_FORCE_GUARD`].
pub fn brute_force_oracle(gains: &GainMatrix, n: usize, tau: f64) -> Result<SolverRun> {
    let m = gains.num_beams;
    if n > m {
        return Err(Error::Invalid(format!("n={n} exceeds pool size m={m}")));
    }
    let per_sector = binomial(m, n);
    let joint = per_sector.powf(gains.num_sectors() as f64);
    if !(joint <= BRUTE_FORCE_GUARD) {
        return Err(Error::Numeric(format!(
            "brute force guard: {joint:.3e} joint combinations exceed {BRUTE_FORCE_GUARD:.0e}"
        )));
    }

    // Per-(sector, beam) coverage bitsets; a deployment's coverage is the
    // popcount of the union.
    let blocks = gains.num_ues.div_ceil(64);
    let mut beam_bits: Vec<Vec<Vec<u64>>> = Vec::with_capacity(gains.num_sectors());
    for s in 0..gains.num_sectors() {
        let mut per_beam = Vec::with_capacity(m);
        for b in 0..m {
            let mut bits = vec![0u64; blocks];
            for u in 0..gains.num_ues {
                if gains.power_dbm(s, u, b) >= tau {
                    bits[u / 64] |= 1u64 << (u % 64);
                }
            }
            per_beam.push(bits);
        }
        beam_bits.push(per_beam);
    }

    let combos = combinations(m, n);
    let num_sectors = gains.num_sectors();
    let mut pick = vec![0usize; num_sectors];
    let mut best_cov = 0usize;
    let mut best_pick = pick.clone();
    let mut union = vec![0u64; blocks];

    loop {
        for w in union.iter_mut() {
            *w = 0;
        }
        for s in 0..num_sectors {
            for &b in &combos[pick[s]] {
                for (w, bb) in union.iter_mut().zip(&beam_bits[s][b]) {
                    *w |= bb;
                }
            }
        }
        let cov: usize = union.iter().map(|w| w.count_ones() as usize).sum();
        if cov > best_cov {
            best_cov = cov;
            best_pick = pick.clone();
        }

        // Advance the mixed-radix counter over per-sector combinations.
        let mut s = num_sectors;
        loop {
            if s == 0 {
                break;
            }
            s -= 1;
            pick[s] += 1;
            if pick[s] < combos.len() {
                break;
            }
            pick[s] = 0;
            if s == 0 {
                let codebooks = best_pick
                    .iter()
                    .enumerate()
                    .map(|(s, &i)| Codebook::new(combos[i].clone(), format!("oracle-s{s}")))
                    .collect();
                return Ok(SolverRun {
                    label: "brute-force".into(),
                    deployment: Deployment::new(codebooks),
                    coverage: best_cov,
                });
            }
        }
    }
}

fn binomial(m: usize, n: usize) -> f64 {
    let mut v = 1.0f64;
    for i in 0..n.min(m - n) {
        v = v * (m - i) as f64 / (i + 1) as f64;
    }
    v
}

/// All n-subsets of 0..m in lexicographic order.
fn combinations(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    if n == 0 {
        return vec![vec![]];
    }
    loop {
        out.push(cur.clone());
        // Advance lexicographically.
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < m - (n - i) {
                cur[i] += 1;
                for j in i + 1..n {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{gain_matrix_from_powers, random_gain_matrix};
    use std::collections::HashMap;

    fn single_sector_from_sets(num_ues: usize, sets: &[&[usize]]) -> GainMatrix {
        // Beam b covers exactly the listed users: -60 dBm inside, -200 out.
        let m = sets.len();
        let mut flat = vec![-200.0f32; num_ues * m];
        for (b, users) in sets.iter().enumerate() {
            for &u in users.iter() {
                flat[u * m + b] = -60.0;
            }
        }
        gain_matrix_from_powers(vec![flat], m, -85.0)
    }

    #[test]
    fn combinations_enumerate_lexicographically() {
        let c = combinations(4, 2);
        assert_eq!(c, vec![
            vec![0, 1],
            vec![0, 2],
            vec![0, 3],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3]
        ]);
        assert_eq!(combinations(5, 3).len(), 10);
    }

    #[test]
    fn expert_baseline_deploys_everywhere() {
        let g = random_gain_matrix(3, 30, 6, -100.0, -70.0, 1);
        let cb = Codebook::new(vec![0, 1, 2], "c1");
        let run = expert_baseline(&g, &cb, -82.0).unwrap();
        assert_eq!(run.deployment.codebooks.len(), 3);
        for c in &run.deployment.codebooks {
            assert_eq!(c.beam_indices, vec![0, 1, 2]);
        }
        let zero = gain_matrix_from_powers(vec![vec![], vec![], vec![]], 6, -85.0);
        assert_eq!(expert_baseline(&zero, &cb, -82.0).unwrap().coverage, 0);
    }

    #[test]
    fn narrow_expert_wins_at_the_cell_edge() {
        // Constructed edge ring: outdoor users on the rim, where the
        // far-band narrow codebook points and the near-band wide one does
        // not. Verified by full evaluation of both deployments.
        use crate::beams::{build_expert_codebooks, build_pool, ArrayGeometry, PoolConfig};
        use crate::propagation::{build_gain_matrix, RadioConfig};
        use crate::scenario::{Scenario, SiteLayout, UePopulation};

        let layout = SiteLayout::default();
        let ring = 0.97 * layout.cell_radius();
        let n = 60;
        let positions: Vec<[f64; 3]> = (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [ring * a.cos(), ring * a.sin(), 1.5]
            })
            .collect();
        let scenario = Scenario {
            layout,
            ues: UePopulation {
                positions,
                indoor: vec![false; n],
                cluster_ids: vec![-1; n],
            },
        };
        let pool = build_pool(&ArrayGeometry::default(), &PoolConfig::default()).unwrap();
        let experts = build_expert_codebooks(&pool).unwrap();
        let radio = RadioConfig::default();
        let gains = build_gain_matrix(&scenario, &pool, &radio).unwrap();
        let tau = radio.detection_threshold_dbm;
        let c1 = expert_baseline(&gains, &experts[0], tau).unwrap();
        let c2 = expert_baseline(&gains, &experts[1], tau).unwrap();
        assert!(
            c1.coverage >= c2.coverage,
            "edge ring: c1 {} vs c2 {}",
            c1.coverage,
            c2.coverage
        );
        assert!(c1.coverage > n / 2, "c1 should cover most of the rim");
    }

    #[test]
    fn max_of_experts_picks_per_sector_winner() {
        // Sector 0: beam 0 covers 2 users; sector 1: beam 1 covers 1 user.
        let s0 = vec![
            -60.0f32, -200.0, //
            -60.0, -200.0, //
            -200.0, -200.0, //
        ];
        let s1 = vec![
            -200.0f32, -200.0, //
            -200.0, -200.0, //
            -200.0, -60.0, //
        ];
        let g = gain_matrix_from_powers(vec![s0, s1], 2, -85.0);
        let c1 = Codebook::new(vec![0], "c1");
        let c2 = Codebook::new(vec![1], "c2");
        let run = max_of_experts(&g, &[c1, c2], -80.0).unwrap();
        assert_eq!(run.deployment.codebooks[0].label, "c1");
        assert_eq!(run.deployment.codebooks[1].label, "c2");
        assert_eq!(run.coverage, 3);
    }

    #[test]
    fn max_of_experts_tie_goes_to_first() {
        let g = random_gain_matrix(2, 10, 4, -200.0, -190.0, 3);
        // Nothing covered: every sector ties at zero for both codebooks.
        let c1 = Codebook::new(vec![0, 1], "c1");
        let c2 = Codebook::new(vec![2, 3], "c2");
        let run = max_of_experts(&g, &[c1, c2], -80.0).unwrap();
        for cb in &run.deployment.codebooks {
            assert_eq!(cb.label, "c1");
        }
    }

    #[test]
    fn max_of_experts_matches_enumeration() {
        for seed in 0..20 {
            let g = random_gain_matrix(3, 40, 8, -100.0, -70.0, seed);
            let c1 = Codebook::new(vec![0, 1, 2, 3], "c1");
            let c2 = Codebook::new(vec![4, 5, 6, 7], "c2");
            let tau = -82.0;
            let run = max_of_experts(&g, &[c1.clone(), c2.clone()], tau).unwrap();
            let count1 = per_sector_coverage(&g, &Deployment::uniform(&c1, 3), tau).unwrap();
            let count2 = per_sector_coverage(&g, &Deployment::uniform(&c2, 3), tau).unwrap();
            for s in 0..3 {
                let expect = if count2[s] > count1[s] { "c2" } else { "c1" };
                assert_eq!(run.deployment.codebooks[s].label, expect);
            }
        }
    }

    #[test]
    fn greedy_marginal_textbook_instance() {
        // Universe {a..f}: S1 covers {a,b,c,d}, S2 {a,b,e}, S3 {c,d,f}.
        let g = single_sector_from_sets(6, &[&[0, 1, 2, 3], &[0, 1, 4], &[2, 3, 5]]);
        let tau = -80.0;
        let run = greedy_codebook(&g, &[0, 1, 2], 2, tau, GreedyVariant::Marginal).unwrap();
        assert_eq!(run.coverage, 5);
        assert_eq!(run.deployment.codebooks[0].beam_indices, vec![0, 1]);
        let oracle = brute_force_oracle(&g, 2, tau).unwrap();
        assert_eq!(oracle.coverage, 6);
        assert!(run.coverage as f64 >= (1.0 - (-1.0f64).exp()) * oracle.coverage as f64);
    }

    #[test]
    fn greedy_variants_agree_on_disjoint_beams() {
        let g = single_sector_from_sets(9, &[&[0, 1, 2], &[3, 4], &[5], &[6, 7, 8]]);
        let tau = -80.0;
        let topk = greedy_codebook(&g, &[0, 1, 2, 3], 2, tau, GreedyVariant::TopK).unwrap();
        let marg = greedy_codebook(&g, &[0, 1, 2, 3], 2, tau, GreedyVariant::Marginal).unwrap();
        let mut t = topk.deployment.codebooks[0].beam_indices.clone();
        let mut m = marg.deployment.codebooks[0].beam_indices.clone();
        t.sort_unstable();
        m.sort_unstable();
        assert_eq!(t, vec![0, 3]);
        assert_eq!(m, vec![0, 3]);
        assert_eq!(topk.coverage, 6);
        let oracle = brute_force_oracle(&g, 2, tau).unwrap();
        assert_eq!(oracle.coverage, 6);
    }

    #[test]
    fn greedy_takes_everything_when_n_equals_candidates() {
        let g = random_gain_matrix(1, 10, 4, -100.0, -70.0, 5);
        let run = greedy_codebook(&g, &[0, 1, 2, 3], 4, -82.0, GreedyVariant::TopK).unwrap();
        let mut got = run.deployment.codebooks[0].beam_indices.clone();
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2, 3]);
        assert!(greedy_codebook(&g, &[0, 1], 3, -82.0, GreedyVariant::TopK).is_err());
    }

    #[test]
    fn random_codebook_shape_and_bounds() {
        let cb = random_codebook(144, 24, 9).unwrap();
        assert_eq!(cb.len(), 24);
        cb.validate(144).unwrap();
        let full = random_codebook(6, 6, 1).unwrap();
        assert_eq!(full.beam_indices, vec![0, 1, 2, 3, 4, 5]);
        assert!(random_codebook(4, 5, 0).is_err());
    }

    #[test]
    fn random_codebook_is_uniform_over_subsets() {
        // Multinomial check: 10^4 draws of 2-of-6, each of the 15 subsets
        // within 3 sigma of 1/15.
        let draws = 10_000usize;
        let mut freq: HashMap<Vec<usize>, usize> = HashMap::new();
        for seed in 0..draws {
            let cb = random_codebook(6, 2, seed as u64).unwrap();
            *freq.entry(cb.beam_indices).or_default() += 1;
        }
        assert_eq!(freq.len(), 15);
        let p = 1.0 / 15.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for (subset, count) in freq {
            let dev = (count as f64 - draws as f64 * p).abs();
            assert!(dev <= 3.0 * sigma, "subset {subset:?} count {count} deviates");
        }
    }

    #[test]
    fn brute_force_agrees_with_scan_enumeration() {
        // Independent route: enumerate with the per-user-scan coverage().
        for seed in 0..10 {
            let g = random_gain_matrix(1, 12, 6, -100.0, -70.0, seed);
            let tau = -84.0;
            let oracle = brute_force_oracle(&g, 2, tau).unwrap();
            let mut best = 0usize;
            for b0 in 0..6 {
                for b1 in (b0 + 1)..6 {
                    let d = Deployment::new(vec![Codebook::new(vec![b0, b1], "t")]);
                    best = best.max(coverage(&g, &d, tau).unwrap());
                }
            }
            assert_eq!(oracle.coverage, best);
        }
    }

    #[test]
    fn brute_force_full_pool_and_empty_cases() {
        let g = random_gain_matrix(1, 10, 5, -100.0, -70.0, 2);
        let tau = -82.0;
        let all = brute_force_oracle(&g, 5, tau).unwrap();
        let d = Deployment::new(vec![Codebook::new((0..5).collect(), "full")]);
        assert_eq!(all.coverage, coverage(&g, &d, tau).unwrap());
        // Everything below tau.
        let dead = random_gain_matrix(1, 10, 5, -300.0, -250.0, 2);
        assert_eq!(brute_force_oracle(&dead, 2, -82.0).unwrap().coverage, 0);
    }

    #[test]
    fn brute_force_guard_trips() {
        let g = random_gain_matrix(3, 5, 40, -100.0, -70.0, 2);
        let err = brute_force_oracle(&g, 20, -82.0).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn greedy_respects_approximation_bound_on_random_instances() {
        let ratio_floor = 1.0 - (-1.0f64).exp();
        for seed in 0..50 {
            let g = random_gain_matrix(1, 30, 8, -100.0, -70.0, 100 + seed);
            let tau = -80.0;
            let cands: Vec<usize> = (0..8).collect();
            let greedy = greedy_codebook(&g, &cands, 3, tau, GreedyVariant::Marginal).unwrap();
            let oracle = brute_force_oracle(&g, 3, tau).unwrap();
            assert!(oracle.coverage >= greedy.coverage);
            assert!(
                greedy.coverage as f64 >= ratio_floor * oracle.coverage as f64,
                "seed {seed}: greedy {} vs oracle {}",
                greedy.coverage,
                oracle.coverage
            );
        }
    }

    #[test]
    fn solver_runs_format_as_structured_text() {
        let g = single_sector_from_sets(3, &[&[0], &[1, 2]]);
        let run = greedy_codebook(&g, &[0, 1], 1, -80.0, GreedyVariant::TopK).unwrap();
        let text = run.to_string();
        assert!(text.starts_with("greedy coverage=2 sector0=[1]"), "got: {text}");
    }
}
