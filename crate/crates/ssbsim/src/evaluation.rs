//! Benchmark protocol: held-out instances, per-method coverage records,
//! win rates, covered-fraction stats, improvement histograms, top-decile
//! SNR, and rediscovery.
//!
//! Every method inside one instance consumes the identical gain matrix
//! (hash-recorded), so comparisons are never confounded by channel draws.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::agent::act_deploy;
use crate::cellsearch::{associate, observe, Deployment};
use crate::error::{Error, Result};
use crate::neuralnet::DenseNet;
use crate::propagation::build_gain_matrix;
use crate::scenario::{generate_scenario, ScenarioConfig};
use crate::solvers::{
    greedy_codebook, max_of_experts, random_deployment, GreedyVariant,
};
use crate::trainer::{AgentManifest, Environment};

/// Published single-site benchmark numbers used as side-by-side trend
/// references in the summary (mean fraction of connected users).
pub const REFERENCE_COVERED_FRACTION_ISD200: &[(&str, f64)] = &[
    ("neural", 0.454),
    ("c1", 0.414),
    ("c2", 0.423),
    ("max-of-experts", 0.429),
    ("greedy", 0.429),
    ("random", 0.408),
];
pub const REFERENCE_COVERED_FRACTION_ISD400: &[(&str, f64)] = &[
    ("neural", 0.624),
    ("c1", 0.599),
    ("c2", 0.56),
    ("max-of-experts", 0.604),
    ("greedy", 0.587),
    ("random", 0.592),
];

/// Benchmark contestants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Neural,
    ExpertC1,
    ExpertC2,
    MaxOfExperts,
    GreedyTopK,
    GreedyMarginal,
    Random,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Neural => "neural",
            Method::ExpertC1 => "c1",
            Method::ExpertC2 => "c2",
            Method::MaxOfExperts => "max-of-experts",
            Method::GreedyTopK => "greedy",
            Method::GreedyMarginal => "greedy-marginal",
            Method::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "neural" => Ok(Method::Neural),
            "c1" => Ok(Method::ExpertC1),
            "c2" => Ok(Method::ExpertC2),
            "max-of-experts" => Ok(Method::MaxOfExperts),
            "greedy" => Ok(Method::GreedyTopK),
            "greedy-marginal" => Ok(Method::GreedyMarginal),
            "random" => Ok(Method::Random),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }

    /// The benchmark set: every method except the marginal-greedy extra.
    pub fn standard_set() -> Vec<Method> {
        vec![
            Method::Neural,
            Method::ExpertC1,
            Method::ExpertC2,
            Method::MaxOfExperts,
            Method::GreedyTopK,
            Method::Random,
        ]
    }

    pub fn parse_list(spec: &str) -> Result<Vec<Method>> {
        if spec == "all" {
            return Ok(Method::standard_set());
        }
        let mut out = Vec::new();
        for tok in spec.split(',') {
            let m = Method::parse(tok.trim())?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("empty method list".into()));
        }
        Ok(out)
    }
}

/// One method's result on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub coverage: usize,
    pub covered_fraction: f64,
    /// Mean of the top ceil(10%) covered users' best-beam SNRs; absent
    /// when nothing was covered.
    pub top_decile_snr_db: Option<f64>,
    pub covered_mask: Vec<bool>,
}

/// One evaluated instance: identical gains for every method.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub index: usize,
    pub seed: u64,
    pub gains_hash: String,
    pub num_ues: usize,
    pub outcomes: Vec<MethodOutcome>,
    /// Users covered by either expert sweep.
    pub expert_union_mask: Vec<bool>,
}

/// The full evaluation result.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub methods: Vec<Method>,
    pub isd: f64,
    pub instances: Vec<InstanceRecord>,
}

fn top_decile_mean(snrs: &mut Vec<f64>) -> Option<f64> {
    if snrs.is_empty() {
        return None;
    }
    snrs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = (snrs.len() as f64 * 0.1).ceil() as usize;
    let k = k.max(1);
    Some(snrs[..k].iter().sum::<f64>() / k as f64)
}

fn outcome_for(
    gains: &crate::propagation::GainMatrix,
    deployment: &Deployment,
    tau: f64,
) -> Result<MethodOutcome> {
    let assoc = associate(gains, deployment, tau)?;
    let mut covered_mask = vec![false; gains.num_ues];
    let mut snrs = Vec::new();
    for (u, a) in assoc.per_ue.iter().enumerate() {
        if a.covered {
            covered_mask[u] = true;
            snrs.push(a.best_power_dbm - gains.noise_dbm);
        }
    }
    let coverage = snrs.len();
    Ok(MethodOutcome {
        coverage,
        covered_fraction: if gains.num_ues > 0 {
            coverage as f64 / gains.num_ues as f64
        } else {
            0.0
        },
        top_decile_snr_db: top_decile_mean(&mut snrs),
        covered_mask,
    })
}

/// Evaluate `methods` on `num_instances` fresh instances seeded
/// `seed_start..`. When the neural method runs, its manifest guards both
/// world compatibility and the training/evaluation seed split.
pub fn evaluate_suite(
    env: &Environment,
    methods: &[Method],
    num_instances: usize,
    seed_start: u64,
    neural: Option<(&DenseNet, &AgentManifest)>,
) -> Result<EvaluationReport> {
    if methods.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    if num_instances == 0 {
        return Err(Error::Config("need at least one instance".into()));
    }
    if methods.contains(&Method::Neural) {
        let (_, manifest) =
            neural.ok_or_else(|| Error::Config("neural method requires a checkpoint".into()))?;
        manifest.check_compatible(env)?;
        let eval_lo = seed_start;
        let eval_hi = seed_start + num_instances as u64;
        if eval_lo < manifest.train_seed_hi && manifest.train_seed_lo < eval_hi {
            return Err(Error::Config(format!(
                "evaluation seeds [{eval_lo}, {eval_hi}) overlap training seeds [{}, {})",
                manifest.train_seed_lo, manifest.train_seed_hi
            )));
        }
    }

    let tau = env.tau();
    let n = env.codebook_size;
    let expert_candidates: Vec<usize> = env
        .expert_codebooks
        .iter()
        .flat_map(|c| c.beam_indices.iter().copied())
        .collect();

    let instances: Vec<Result<InstanceRecord>> = (0..num_instances)
        .into_par_iter()
        .map(|i| {
            let seed = seed_start + i as u64;
            let scenario_cfg = ScenarioConfig {
                seed,
                ..env.scenario_cfg.clone()
            };
            let scenario = generate_scenario(&scenario_cfg, env.layout)?;
            let gains = build_gain_matrix(&scenario, env.pool, env.radio_cfg)?;
            let observations = observe(&gains, env.expert_codebooks, tau)?;

            let num_sectors = gains.num_sectors();
            let expert_deployments: Vec<Deployment> = env
                .expert_codebooks
                .iter()
                .map(|c| Deployment::uniform(c, num_sectors))
                .collect();
            let mut expert_union_mask = vec![false; gains.num_ues];
            for d in &expert_deployments {
                let assoc = associate(&gains, d, tau)?;
                for (u, a) in assoc.per_ue.iter().enumerate() {
                    if a.covered {
                        expert_union_mask[u] = true;
                    }
                }
            }

            let mut outcomes = Vec::with_capacity(methods.len());
            for method in methods {
                let deployment = match method {
                    Method::ExpertC1 => expert_deployments[0].clone(),
                    Method::ExpertC2 => {
                        expert_deployments
                            .get(1)
                            .ok_or_else(|| {
                                Error::Config("c2 requested but only one expert codebook".into())
                            })?
                            .clone()
                    }
                    Method::MaxOfExperts => {
                        max_of_experts(&gains, env.expert_codebooks, tau)?.deployment
                    }
                    Method::GreedyTopK => {
                        greedy_codebook(&gains, &expert_candidates, n, tau, GreedyVariant::TopK)?
                            .deployment
                    }
                    Method::GreedyMarginal => {
                        greedy_codebook(&gains, &expert_candidates, n, tau, GreedyVariant::Marginal)?
                            .deployment
                    }
                    Method::Random => random_deployment(&gains, n, tau, seed)?.deployment,
                    Method::Neural => {
                        let (actor, _) = neural.expect("checked above");
                        act_deploy(actor, &observations, n)?
                    }
                };
                outcomes.push(outcome_for(&gains, &deployment, tau)?);
            }

            Ok(InstanceRecord {
                index: i,
                seed,
                gains_hash: gains.content_hash(),
                num_ues: gains.num_ues,
                outcomes,
                expert_union_mask,
            })
        })
        .collect();

    let mut records = Vec::with_capacity(num_instances);
    for r in instances {
        records.push(r?);
    }
    Ok(EvaluationReport {
        methods: methods.to_vec(),
        isd: env.layout.isd,
        instances: records,
    })
}

impl EvaluationReport {
    pub fn method_index(&self, m: Method) -> Result<usize> {
        self.methods
            .iter()
            .position(|&x| x == m)
            .ok_or_else(|| Error::Config(format!("method '{}' not in report", m.label())))
    }

    /// Mean covered fraction per method, report order.
    pub fn covered_fraction_stats(&self) -> Vec<(Method, f64)> {
        let n = self.instances.len() as f64;
        self.methods
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let mean = self
                    .instances
                    .iter()
                    .map(|r| r.outcomes[k].covered_fraction)
                    .sum::<f64>()
                    / n;
                (m, mean)
            })
            .collect()
    }

    /// Win percentages per method: `(unique, tie_inclusive)`. A unique win
    /// is strictly the best coverage; tie-inclusive credits every method
    /// attaining the instance maximum.
    pub fn win_rates(&self) -> Vec<(Method, f64, f64)> {
        let mut unique = vec![0usize; self.methods.len()];
        let mut tied = vec![0usize; self.methods.len()];
        for r in &self.instances {
            let best = r.outcomes.iter().map(|o| o.coverage).max().unwrap_or(0);
            let winners: Vec<usize> = (0..self.methods.len())
                .filter(|&k| r.outcomes[k].coverage == best)
                .collect();
            for &k in &winners {
                tied[k] += 1;
            }
            if winners.len() == 1 {
                unique[winners[0]] += 1;
            }
        }
        let n = self.instances.len() as f64;
        self.methods
            .iter()
            .enumerate()
            .map(|(k, &m)| (m, 100.0 * unique[k] as f64 / n, 100.0 * tied[k] as f64 / n))
            .collect()
    }

    /// Sorted per-instance covered fractions with CDF ordinates.
    pub fn coverage_cdf(&self, m: Method) -> Result<Vec<(f64, f64)>> {
        let k = self.method_index(m)?;
        let mut xs: Vec<f64> = self
            .instances
            .iter()
            .map(|r| r.outcomes[k].covered_fraction)
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        Ok(xs
            .into_iter()
            .enumerate()
            .map(|(i, x)| (x, (i + 1) as f64 / n))
            .collect())
    }

    /// Per-instance relative improvement (%) of `challenger` over
    /// `baseline`, binned; zero-coverage baselines are skipped and counted.
    pub fn relative_improvement_hist(
        &self,
        baseline: Method,
        challenger: Method,
        bin_width: f64,
    ) -> Result<Histogram> {
        if !(bin_width > 0.0) {
            return Err(Error::Config("bin width must be positive".into()));
        }
        let b = self.method_index(baseline)?;
        let c = self.method_index(challenger)?;
        let mut values = Vec::new();
        let mut skipped = 0usize;
        for r in &self.instances {
            let base = r.outcomes[b].coverage;
            if base == 0 {
                skipped += 1;
                continue;
            }
            let ch = r.outcomes[c].coverage;
            values.push(100.0 * (ch as f64 - base as f64) / base as f64);
        }
        Ok(Histogram::from_values(values, bin_width, skipped))
    }

    /// Per-instance top-decile SNR values for a method, instances with
    /// zero coverage excluded; returns `(sorted values with CDF y, excluded)`.
    pub fn top_decile_snr_cdf(&self, m: Method) -> Result<(Vec<(f64, f64)>, usize)> {
        let k = self.method_index(m)?;
        let mut xs = Vec::new();
        let mut excluded = 0usize;
        for r in &self.instances {
            match r.outcomes[k].top_decile_snr_db {
                Some(v) => xs.push(v),
                None => excluded += 1,
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len().max(1) as f64;
        Ok((
            xs.into_iter()
                .enumerate()
                .map(|(i, x)| (x, (i + 1) as f64 / n))
                .collect(),
            excluded,
        ))
    }

    /// Rediscovery of expert-covered users by the neural codebook, pooled
    /// over the suite: `(rediscovered %, newly discovered %)`, both
    /// relative to the expert-union coverage, plus per-instance means.
    pub fn rediscovery(&self) -> Result<RediscoveryStats> {
        let k = self.method_index(Method::Neural)?;
        let mut pooled_union = 0usize;
        let mut pooled_inter = 0usize;
        let mut pooled_new = 0usize;
        let mut per_instance_re = Vec::new();
        let mut per_instance_new = Vec::new();
        for r in &self.instances {
            let neural = &r.outcomes[k].covered_mask;
            let union = &r.expert_union_mask;
            let u: usize = union.iter().filter(|&&b| b).count();
            let inter = neural
                .iter()
                .zip(union)
                .filter(|&(&nb, &ub)| nb && ub)
                .count();
            let newly = neural
                .iter()
                .zip(union)
                .filter(|&(&nb, &ub)| nb && !ub)
                .count();
            pooled_union += u;
            pooled_inter += inter;
            pooled_new += newly;
            if u > 0 {
                per_instance_re.push(100.0 * inter as f64 / u as f64);
                per_instance_new.push(100.0 * newly as f64 / u as f64);
            }
        }
        if pooled_union == 0 {
            return Err(Error::Numeric("expert union coverage is empty".into()));
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        Ok(RediscoveryStats {
            rediscovered_pct: 100.0 * pooled_inter as f64 / pooled_union as f64,
            newly_discovered_pct: 100.0 * pooled_new as f64 / pooled_union as f64,
            mean_instance_rediscovered_pct: mean(&per_instance_re),
            mean_instance_newly_pct: mean(&per_instance_new),
        })
    }

    /// Per-instance comma-separated records.
    pub fn per_instance_csv(&self) -> String {
        let mut s = String::from(
            "instance,seed,gains_hash,num_ues,method,coverage,covered_fraction,top_decile_snr_db\n",
        );
        for r in &self.instances {
            for (k, m) in self.methods.iter().enumerate() {
                let o = &r.outcomes[k];
                let snr = o
                    .top_decile_snr_db
                    .map(|v| format!("{v:?}"))
                    .unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{:?},{}",
                    r.index,
                    r.seed,
                    &r.gains_hash[..16],
                    r.num_ues,
                    m.label(),
                    o.coverage,
                    o.covered_fraction,
                    snr
                );
            }
        }
        s
    }
}

/// Percent rediscovered / newly discovered users (see
/// [`EvaluationReport::rediscovery`]). Denominators are the expert-union
/// coverage; the per-instance means are a secondary view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RediscoveryStats {
    pub rediscovered_pct: f64,
    pub newly_discovered_pct: f64,
    pub mean_instance_rediscovered_pct: f64,
    pub mean_instance_newly_pct: f64,
}

/// Fixed-width histogram over real values.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    /// Left edge of the first bin.
    pub origin: f64,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub skipped_instances: usize,
}

impl Histogram {
    pub fn from_values(values: Vec<f64>, bin_width: f64, skipped: usize) -> Self {
        if values.is_empty() {
            return Self {
                bin_width,
                origin: 0.0,
                counts: vec![],
                mean: 0.0,
                skipped_instances: skipped,
            };
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let origin = (min / bin_width).floor() * bin_width;
        let bins = (((max - origin) / bin_width).floor() as usize) + 1;
        let mut counts = vec![0usize; bins];
        for v in values {
            let idx = (((v - origin) / bin_width).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Self {
            bin_width,
            origin,
            counts,
            mean,
            skipped_instances: skipped,
        }
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.bin_width
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_center,count\n");
        for (i, &c) in self.counts.iter().enumerate() {
            let _ = writeln!(s, "{:?},{c}", self.bin_center(i));
        }
        s
    }
}

// ── Report files ─────────────────────────────────────────────────────────────

fn xy_csv(points: &[(f64, f64)]) -> String {
    let mut s = String::from("x,y\n");
    for (x, y) in points {
        let _ = writeln!(s, "{x:?},{y:?}");
    }
    s
}

/// Plain-text summary: win rates, covered fractions next to the published
/// reference values, rediscovery, and improvement means.
pub fn summary_text(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let n = report.instances.len();
    let _ = writeln!(s, "evaluation summary: {} instances, isd {:?} m", n, report.isd);
    s.push('\n');

    let _ = writeln!(s, "win rate (% of instances with the best coverage)");
    let _ = writeln!(s, "{:<16} {:>10} {:>14}", "method", "unique", "tie-inclusive");
    for (m, u, t) in report.win_rates() {
        let _ = writeln!(s, "{:<16} {:>9.2}% {:>13.2}%", m.label(), u, t);
    }
    s.push('\n');

    let reference: &[(&str, f64)] = if (report.isd - 400.0).abs() < 1.0 {
        REFERENCE_COVERED_FRACTION_ISD400
    } else {
        REFERENCE_COVERED_FRACTION_ISD200
    };
    let _ = writeln!(s, "mean fraction of connected users (reference column: published values)");
    let _ = writeln!(s, "{:<16} {:>10} {:>10}", "method", "measured", "reference");
    for (m, f) in report.covered_fraction_stats() {
        let reference = reference
            .iter()
            .find(|(label, _)| *label == m.label())
            .map(|(_, v)| format!("{v:.3}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{:<16} {:>10.4} {:>10}", m.label(), f, reference);
    }
    s.push('\n');

    if report.method_index(Method::Neural).is_ok() {
        for baseline in [Method::ExpertC1, Method::ExpertC2] {
            if report.method_index(baseline).is_err() {
                continue;
            }
            if let Ok(h) = report.relative_improvement_hist(baseline, Method::Neural, 2.0) {
                let _ = writeln!(
                    s,
                    "mean relative improvement of neural over {}: {:+.2}% ({} zero-baseline instances skipped)",
                    baseline.label(),
                    h.mean,
                    h.skipped_instances
                );
            }
        }
        if let Ok(r) = report.rediscovery() {
            let _ = writeln!(
                s,
                "rediscovered users: {:.2}% of expert-union coverage (newly discovered: {:.2}%)",
                r.rediscovered_pct, r.newly_discovered_pct
            );
        }
    }
    s
}

/// Write the full report bundle into `dir`; returns the created paths.
pub fn write_report_files(report: &EvaluationReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };

    emit("summary.txt".into(), summary_text(report))?;
    emit("per_instance.csv".into(), report.per_instance_csv())?;

    let mut coverage_series = Vec::new();
    let mut snr_series = Vec::new();
    for &m in &report.methods {
        let cdf = report.coverage_cdf(m)?;
        emit(format!("cdf_coverage_{}.csv", m.label()), xy_csv(&cdf))?;
        coverage_series.push((m.label().to_string(), cdf));
        let (snr_cdf, _) = report.top_decile_snr_cdf(m)?;
        emit(format!("cdf_topsnr_{}.csv", m.label()), xy_csv(&snr_cdf))?;
        snr_series.push((m.label().to_string(), snr_cdf));
    }
    emit(
        "fig_coverage_cdf.svg".into(),
        svg_line_chart(
            "CDF of covered fraction",
            "covered fraction",
            "P(X <= x)",
            &coverage_series,
        ),
    )?;
    emit(
        "fig_topsnr_cdf.svg".into(),
        svg_line_chart(
            "CDF of top-decile SNR",
            "top-decile SNR (dB)",
            "P(X <= x)",
            &snr_series,
        ),
    )?;

    if report.method_index(Method::Neural).is_ok() {
        let mut hist_series = Vec::new();
        for baseline in [Method::ExpertC1, Method::ExpertC2] {
            if report.method_index(baseline).is_err() {
                continue;
            }
            let h = report.relative_improvement_hist(baseline, Method::Neural, 2.0)?;
            emit(format!("hist_improvement_vs_{}.csv", baseline.label()), h.to_csv())?;
            hist_series.push((format!("vs {}", baseline.label()), h));
        }
        if !hist_series.is_empty() {
            emit(
                "fig_improvement_hist.svg".into(),
                svg_histogram("Relative improvement of the neural codebook (%)", &hist_series),
            )?;
        }
    }
    Ok(written)
}

// ── Minimal self-contained SVG rendering ─────────────────────────────────────

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;
const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
];

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.02 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn svg_header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\
         <text x=\"{:.1}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{title}</text>",
        (MARGIN_L + SVG_W - MARGIN_R) / 2.0
    );
    s
}

fn svg_axes(s: &mut String, x_label: &str, y_label: &str, xr: (f64, f64), yr: (f64, f64)) {
    let (x0, x1) = (MARGIN_L, SVG_W - MARGIN_R);
    let (y0, y1) = (SVG_H - MARGIN_B, MARGIN_T);
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = xr.0 + f * (xr.1 - xr.0);
        let yv = yr.0 + f * (yr.1 - yr.0);
        let xp = x0 + f * (x1 - x0);
        let yp = y0 - f * (y0 - y1);
        let _ = writeln!(
            s,
            "<line x1=\"{xp:.1}\" y1=\"{y0}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\
             <text x=\"{xp:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{xv:.2}</text>",
            y0 + 4.0,
            y0 + 18.0
        );
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{x0}\" y2=\"{yp:.1}\" stroke=\"black\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{yv:.2}</text>",
            x0 - 4.0,
            x0 - 8.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>",
        (x0 + x1) / 2.0,
        SVG_H - 10.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
}

/// Self-contained multi-series line chart.
pub fn svg_line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let xr = axis_range(series.iter().flat_map(|(_, p)| p.iter().map(|&(x, _)| x)));
    let yr = axis_range(series.iter().flat_map(|(_, p)| p.iter().map(|&(_, y)| y)));
    let (x0, x1) = (MARGIN_L, SVG_W - MARGIN_R);
    let (y0, y1) = (SVG_H - MARGIN_B, MARGIN_T);
    let sx = |x: f64| x0 + (x - xr.0) / (xr.1 - xr.0) * (x1 - x0);
    let sy = |y: f64| y0 - (y - yr.0) / (yr.1 - yr.0) * (y0 - y1);

    let mut s = svg_header(title);
    svg_axes(&mut s, x_label, y_label, xr, yr);
    for (i, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !points.is_empty() {
            let path: Vec<String> = points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>",
                path.join(" ")
            );
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>",
            x1 + 8.0,
            x1 + 28.0,
            x1 + 34.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Self-contained grouped histogram chart.
pub fn svg_histogram(title: &str, series: &[(String, Histogram)]) -> String {
    let xr = axis_range(series.iter().flat_map(|(_, h)| {
        let lo = h.origin;
        let hi = h.origin + h.bin_width * h.counts.len() as f64;
        [lo, hi].into_iter()
    }));
    let ymax = series
        .iter()
        .flat_map(|(_, h)| h.counts.iter().copied())
        .max()
        .unwrap_or(1) as f64;
    let yr = (0.0, ymax * 1.05);
    let (x0, x1) = (MARGIN_L, SVG_W - MARGIN_R);
    let (y0, y1) = (SVG_H - MARGIN_B, MARGIN_T);
    let sx = |x: f64| x0 + (x - xr.0) / (xr.1 - xr.0) * (x1 - x0);
    let sy = |y: f64| y0 - (y - yr.0) / (yr.1 - yr.0) * (y0 - y1);

    let mut s = svg_header(title);
    svg_axes(&mut s, "relative improvement (%)", "instances", xr, yr);
    let groups = series.len().max(1) as f64;
    for (i, (label, h)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for (b, &c) in h.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let left = h.origin + b as f64 * h.bin_width;
            let w = (sx(left + h.bin_width) - sx(left)) / groups;
            let x = sx(left) + w * i as f64;
            let y = sy(c as f64);
            let _ = writeln!(
                s,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.75\"/>",
                w.max(0.5),
                (y0 - y).max(0.0)
            );
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"14\" height=\"10\" fill=\"{color}\" fill-opacity=\"0.75\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>",
            x1 + 8.0,
            ly - 8.0,
            x1 + 28.0,
            ly
        );
    }
    s.push_str("</svg>\n");
    s
}
