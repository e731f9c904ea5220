//! Command implementations behind the `ssbsim` binary. Each function
//! returns artifacts through the filesystem and a short printable
//! summary; the binary maps errors onto exit codes (0 ok, 2 config,
//! 3 incompatibility, 4 numeric failure).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::agent::act_deploy;
use crate::beams::{build_expert_codebooks, build_pool, pool_from_str, pool_to_string, BeamPool, Codebook};
use crate::cellsearch::{associate, coverage, observe, Deployment};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_suite, write_report_files, EvaluationReport, InstanceRecord, Method, MethodOutcome};
use crate::neuralnet::DenseNet;
use crate::propagation::{build_gain_matrix, write_gmx};
use crate::scenario::{generate_scenario, scenario_from_str, scenario_to_string, Scenario};
use crate::trainer::{
    load_checkpoint, log_to_csv, train, init_state, AgentManifest,
    Environment, TrainState,
};

/// Build + on-disk format versions, printed by `--version`.
pub fn version_string() -> String {
    format!(
        "ssbsim {} (formats: scenario v1, pool v1, GMX1, NNW1 v{})",
        env!("CARGO_PKG_VERSION"),
        crate::neuralnet::CHECKPOINT_VERSION
    )
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// World assembled from a config: pool, experts, and borrows for an
/// [`Environment`].
pub struct World {
    pub pool: BeamPool,
    pub experts: Vec<Codebook>,
}

impl World {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let geometry = crate::beams::ArrayGeometry::default();
        Self::build_with_geometry(cfg, &geometry)
    }

    pub fn build_with_geometry(
        cfg: &ExperimentConfig,
        geometry: &crate::beams::ArrayGeometry,
    ) -> Result<Self> {
        Self::from_pool(cfg, build_pool(geometry, cfg.pool())?)
    }

    /// World around a previously exported pool file.
    pub fn load(cfg: &ExperimentConfig, pool_path: &Path) -> Result<Self> {
        let pool = pool_from_str(&fs::read_to_string(pool_path)?)?;
        if pool.len() != cfg.pool().total_beams {
            return Err(Error::Incompatible(format!(
                "pool file carries {} beams but the config expects {}",
                pool.len(),
                cfg.pool().total_beams
            )));
        }
        Self::from_pool(cfg, pool)
    }

    /// Build from the config, or from an exported pool file when given.
    pub fn build_or_load(cfg: &ExperimentConfig, pool_path: Option<&Path>) -> Result<Self> {
        match pool_path {
            Some(p) => Self::load(cfg, p),
            None => Self::build(cfg),
        }
    }

    fn from_pool(cfg: &ExperimentConfig, pool: BeamPool) -> Result<Self> {
        let experts = build_expert_codebooks(&pool)?;
        for c in &experts {
            if c.len() != cfg.codebook_size {
                return Err(Error::Config(format!(
                    "expert codebook '{}' has {} beams but codebook_size is {}",
                    c.label,
                    c.len(),
                    cfg.codebook_size
                )));
            }
        }
        Ok(Self { pool, experts })
    }

    pub fn env<'a>(&'a self, cfg: &'a ExperimentConfig) -> Environment<'a> {
        Environment {
            pool: &self.pool,
            expert_codebooks: &self.experts,
            layout: cfg.layout(),
            scenario_cfg: cfg.scenario(),
            radio_cfg: cfg.radio(),
            codebook_size: cfg.codebook_size,
        }
    }
}

fn load_scenario_or_generate(cfg: &ExperimentConfig, path: Option<&Path>) -> Result<Scenario> {
    match path {
        Some(p) => scenario_from_str(&fs::read_to_string(p)?),
        None => generate_scenario(cfg.scenario(), cfg.layout()),
    }
}

/// `gen`: write the beam pool and a sample scenario, printing content
/// hashes.
pub fn cmd_gen(cfg: &ExperimentConfig, out_dir: &Path) -> Result<String> {
    fs::create_dir_all(out_dir)?;
    let world = World::build(cfg)?;
    let pool_text = pool_to_string(&world.pool);
    let pool_path = out_dir.join("pool.txt");
    fs::write(&pool_path, &pool_text)?;

    let scenario = generate_scenario(cfg.scenario(), cfg.layout())?;
    let scenario_text = scenario_to_string(&scenario);
    let scenario_path = out_dir.join(format!("scenario_{}.txt", cfg.scenario().seed));
    fs::write(&scenario_path, &scenario_text)?;

    let mut out = String::new();
    let _ = writeln!(out, "pool: {} beams -> {}", world.pool.len(), pool_path.display());
    let _ = writeln!(out, "pool sha256: {}", sha256_hex(pool_text.as_bytes()));
    let _ = writeln!(
        out,
        "scenario: {} users, seed {} -> {}",
        scenario.num_ues(),
        cfg.scenario().seed,
        scenario_path.display()
    );
    let _ = writeln!(out, "scenario sha256: {}", sha256_hex(scenario_text.as_bytes()));
    Ok(out)
}

/// `sweep`: run the expert sweeps on one scenario; dump per-sweep
/// association records, the observation table, and the gain-matrix cache.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    pool_path: Option<&Path>,
    scenario_path: Option<&Path>,
    out_dir: &Path,
) -> Result<String> {
    fs::create_dir_all(out_dir)?;
    let world = World::build_or_load(cfg, pool_path)?;
    let scenario = load_scenario_or_generate(cfg, scenario_path)?;
    let gains = build_gain_matrix(&scenario, &world.pool, cfg.radio())?;
    let tau = cfg.radio().detection_threshold_dbm;

    let mut out = String::new();
    for cb in &world.experts {
        let deployment = Deployment::uniform(cb, gains.num_sectors());
        let assoc = associate(&gains, &deployment, tau)?;
        let path = out_dir.join(format!("assoc_{}.csv", cb.label));
        fs::write(&path, assoc.to_csv())?;
        let _ = writeln!(
            out,
            "{}: coverage {} / {} -> {}",
            cb.label,
            assoc.covered_count(),
            gains.num_ues,
            path.display()
        );
    }

    let observations = observe(&gains, &world.experts, tau)?;
    let mut obs_csv = String::from("sector,beam_slot,count,normalized\n");
    for o in &observations {
        for (i, (&c, &n)) in o.counts.iter().zip(&o.normalized).enumerate() {
            let _ = writeln!(obs_csv, "{},{},{},{:?}", o.sector, i, c, n);
        }
    }
    let obs_path = out_dir.join("observations.csv");
    fs::write(&obs_path, obs_csv)?;
    let _ = writeln!(out, "observations -> {}", obs_path.display());

    let gmx_path = out_dir.join("gains.gmx");
    let mut bytes = Vec::new();
    write_gmx(&gains, &mut bytes)?;
    fs::write(&gmx_path, &bytes)?;
    let _ = writeln!(out, "gain cache ({} bytes) -> {}", bytes.len(), gmx_path.display());
    let _ = writeln!(out, "gains sha256: {}", gains.content_hash());
    Ok(out)
}

/// `train`: train the policy, writing periodic checkpoints and the
/// training log into `ckpt_dir`. `resume` continues from a checkpoint
/// after verifying it matches the configured world.
pub fn cmd_train(
    cfg: &ExperimentConfig,
    pool_path: Option<&Path>,
    ckpt_dir: &Path,
    resume: Option<&Path>,
) -> Result<String> {
    let world = World::build_or_load(cfg, pool_path)?;
    let env = world.env(cfg);
    let train_cfg = cfg.train();

    let mut state: TrainState = match resume {
        Some(dir) => {
            let (state, manifest) = load_checkpoint(dir)?;
            manifest.check_compatible(&env)?;
            state
        }
        None => init_state(&env, train_cfg)?,
    };

    let mut log = Vec::new();
    let summary = train(&env, train_cfg, &mut state, Some(ckpt_dir), &mut log)?;
    fs::write(ckpt_dir.join("train_log.csv"), log_to_csv(&log))?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "trained {} iterations ({}), checkpoint -> {}",
        summary.iterations_run,
        if summary.converged { "converged" } else { "max iterations" },
        ckpt_dir.display()
    );
    if let Some(last) = log.last() {
        let _ = writeln!(out, "final mean reward: {:.2}", last.mean_reward);
    }
    Ok(out)
}

/// `select`: greedy-decode a deployment for one scenario from a trained
/// checkpoint; writes the per-sector beam lists.
pub fn cmd_select(
    cfg: &ExperimentConfig,
    pool_path: Option<&Path>,
    ckpt_dir: &Path,
    scenario_path: Option<&Path>,
    out_path: &Path,
) -> Result<String> {
    let world = World::build_or_load(cfg, pool_path)?;
    let env = world.env(cfg);
    let (state, manifest) = load_checkpoint(ckpt_dir)?;
    manifest.check_compatible(&env)?;

    let scenario = load_scenario_or_generate(cfg, scenario_path)?;
    let gains = build_gain_matrix(&scenario, &world.pool, cfg.radio())?;
    let tau = cfg.radio().detection_threshold_dbm;
    let observations = observe(&gains, &world.experts, tau)?;
    let deployment = act_deploy(&state.actor, &observations, cfg.codebook_size)?;
    let cov = coverage(&gains, &deployment, tau)?;

    let mut text = String::from("ssbsim-deployment v1\n");
    for (s, cb) in deployment.codebooks.iter().enumerate() {
        let beams: Vec<String> = cb.beam_indices.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(text, "sector{} = {}", s, beams.join(" "));
    }
    let _ = writeln!(text, "coverage = {cov}");
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out_path, &text)?;
    Ok(format!(
        "selected codebooks cover {cov} / {} users -> {}\n",
        gains.num_ues,
        out_path.display()
    ))
}

/// `eval`: run the benchmark suite and write the report bundle.
pub fn cmd_eval(
    cfg: &ExperimentConfig,
    pool_path: Option<&Path>,
    ckpt_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<String> {
    let world = World::build_or_load(cfg, pool_path)?;
    let env = world.env(cfg);
    let methods = Method::parse_list(&cfg.eval.methods)?;

    let loaded: Option<(DenseNet, AgentManifest)> = if methods.contains(&Method::Neural) {
        let dir = ckpt_dir.ok_or_else(|| {
            Error::Config("the neural method needs --checkpoint <dir>".into())
        })?;
        let (state, manifest) = load_checkpoint(dir)?;
        Some((state.actor, manifest))
    } else {
        None
    };
    let neural = loaded.as_ref().map(|(a, m)| (a, m));

    let report = evaluate_suite(&env, &methods, cfg.eval.num_instances, cfg.eval.seed_start, neural)?;
    let files = write_report_files(&report, out_dir)?;

    let mut out = crate::evaluation::summary_text(&report);
    let _ = writeln!(out, "\n{} report files -> {}", files.len(), out_dir.display());
    Ok(out)
}

/// `report`: regenerate summary and figures from a per-instance CSV
/// produced by `eval`.
pub fn cmd_report(per_instance_csv: &Path, out_dir: &Path) -> Result<String> {
    let text = fs::read_to_string(per_instance_csv)?;
    let report = report_from_per_instance_csv(&text)?;
    let files = write_report_files(&report, out_dir)?;
    Ok(format!(
        "rebuilt {} report files from {} -> {}\n",
        files.len(),
        per_instance_csv.display(),
        out_dir.display()
    ))
}

/// Parse `per_instance.csv` back into a report. Per-user masks are not
/// part of the CSV, so mask-based metrics (rediscovery) are unavailable
/// on a rebuilt report.
pub fn report_from_per_instance_csv(text: &str) -> Result<EvaluationReport> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty per-instance csv".into()))?;
    let expect = "instance,seed,gains_hash,num_ues,method,coverage,covered_fraction,top_decile_snr_db";
    if header != expect {
        return Err(Error::Config(format!("unexpected csv header '{header}'")));
    }

    let mut methods: Vec<Method> = Vec::new();
    let mut instances: Vec<InstanceRecord> = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::Config(format!("csv line {}: expected 8 fields", ln + 2)));
        }
        let bad = |what: &str| Error::Config(format!("csv line {}: bad {what}", ln + 2));
        let index: usize = f[0].parse().map_err(|_| bad("instance"))?;
        let seed: u64 = f[1].parse().map_err(|_| bad("seed"))?;
        let num_ues: usize = f[3].parse().map_err(|_| bad("num_ues"))?;
        let method = Method::parse(f[4])?;
        let cov: usize = f[5].parse().map_err(|_| bad("coverage"))?;
        let frac: f64 = f[6].parse().map_err(|_| bad("covered_fraction"))?;
        let snr: Option<f64> = if f[7].is_empty() {
            None
        } else {
            Some(f[7].parse().map_err(|_| bad("top_decile_snr_db"))?)
        };

        if instances.last().map(|r| r.index) != Some(index) {
            instances.push(InstanceRecord {
                index,
                seed,
                gains_hash: f[2].to_string(),
                num_ues,
                outcomes: Vec::new(),
                expert_union_mask: Vec::new(),
            });
        }
        if !methods.contains(&method) {
            methods.push(method);
        }
        instances.last_mut().unwrap().outcomes.push(MethodOutcome {
            coverage: cov,
            covered_fraction: frac,
            top_decile_snr_db: snr,
            covered_mask: Vec::new(),
        });
    }
    if instances.is_empty() {
        return Err(Error::Config("per-instance csv has no records".into()));
    }
    for r in &instances {
        if r.outcomes.len() != methods.len() {
            return Err(Error::Config(format!(
                "instance {} has {} records for {} methods",
                r.index,
                r.outcomes.len(),
                methods.len()
            )));
        }
    }
    Ok(EvaluationReport {
        methods,
        isd: 0.0,
        instances,
    })
}

/// Default config document for `gen --init`-style bootstrapping.
pub fn write_default_config(path: &Path) -> Result<String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, ExperimentConfig::default_document())?;
    Ok(format!("wrote default config -> {}\n", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::BeamwidthClass;

    fn toy_config() -> ExperimentConfig {
        let doc = ExperimentConfig::default_document();
        ExperimentConfig::from_toml(
            &doc,
            &[
                "codebook_size=2".into(),
                "scenario.num_ues=40".into(),
                "train.iterations=2".into(),
                "train.batch_size=2".into(),
                "train.actor_hidden=[16,16,8]".into(),
                "train.critic_hidden=[8,4]".into(),
                "train.convergence_window=0".into(),
                "train.checkpoint_interval=0".into(),
                "eval.num_instances=2".into(),
                "eval.methods='c1,c2,random'".into(),
                "pool.total_beams=8".into(),
            ],
        )
        .map(|mut cfg| {
            cfg.pool = crate::beams::PoolConfig::toy();
            cfg
        })
        .unwrap()
    }

    #[test]
    fn gen_writes_pool_and_scenario_with_stable_hashes() {
        let cfg = toy_config();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let out1 = cmd_gen(&cfg, d1.path()).unwrap();
        let out2 = cmd_gen(&cfg, d2.path()).unwrap();
        let hash_lines = |s: &str| {
            s.lines()
                .filter(|l| l.contains("sha256"))
                .map(String::from)
                .collect::<Vec<_>>()
        };
        assert_eq!(hash_lines(&out1), hash_lines(&out2));
        let pool = pool_from_str(&fs::read_to_string(d1.path().join("pool.txt")).unwrap()).unwrap();
        assert_eq!(pool.len(), 8);
        assert!(pool.is_canonical());
        assert_eq!(pool.beams[0].beamwidth_class, BeamwidthClass::Narrow);
    }

    #[test]
    fn sweep_emits_association_observation_and_cache() {
        let cfg = toy_config();
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_sweep(&cfg, None, None, dir.path()).unwrap();
        assert!(out.contains("c1: coverage"));
        for name in ["assoc_c1.csv", "assoc_c2.csv", "observations.csv", "gains.gmx"] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let gmx = fs::read(dir.path().join("gains.gmx")).unwrap();
        assert_eq!(&gmx[..4], b"GMX1");
    }

    #[test]
    fn train_select_eval_round_trip() {
        let cfg = toy_config();
        let ckpt = tempfile::tempdir().unwrap();
        let out = cmd_train(&cfg, None, ckpt.path(), None).unwrap();
        assert!(out.contains("trained 2 iterations"));
        assert!(ckpt.path().join("train_log.csv").exists());

        let sel = tempfile::tempdir().unwrap();
        let sel_path = sel.path().join("deployment.txt");
        let out = cmd_select(&cfg, None, ckpt.path(), None, &sel_path).unwrap();
        assert!(out.contains("selected codebooks"));
        let text = fs::read_to_string(&sel_path).unwrap();
        assert!(text.starts_with("ssbsim-deployment v1"));

        // Resume from the final checkpoint: no extra iterations.
        let out = cmd_train(&cfg, None, ckpt.path(), Some(ckpt.path())).unwrap();
        assert!(out.contains("trained 0 iterations"), "got: {out}");

        let mut eval_cfg = cfg.clone();
        eval_cfg.eval.methods = "neural,c1,c2,random".into();
        eval_cfg.eval.num_instances = 2;
        eval_cfg.eval.seed_start = 9_000_000;
        let rep = tempfile::tempdir().unwrap();
        let out = cmd_eval(&eval_cfg, None, Some(ckpt.path()), rep.path()).unwrap();
        assert!(out.contains("report files"));
        assert!(rep.path().join("summary.txt").exists());
        assert!(rep.path().join("fig_coverage_cdf.svg").exists());

        // Byte-identical on a second run.
        let rep2 = tempfile::tempdir().unwrap();
        cmd_eval(&eval_cfg, None, Some(ckpt.path()), rep2.path()).unwrap();
        for entry in fs::read_dir(rep.path()).unwrap() {
            let p = entry.unwrap().path();
            let name = p.file_name().unwrap();
            assert_eq!(
                fs::read(&p).unwrap(),
                fs::read(rep2.path().join(name)).unwrap(),
                "file {name:?} differs between runs"
            );
        }

        // Report regeneration from the per-instance records.
        let rep3 = tempfile::tempdir().unwrap();
        let out = cmd_report(&rep.path().join("per_instance.csv"), rep3.path()).unwrap();
        assert!(out.contains("rebuilt"));
        assert!(rep3.path().join("fig_coverage_cdf.svg").exists());
    }

    #[test]
    fn exported_pool_feeds_downstream_commands() {
        let cfg = toy_config();
        let gen_dir = tempfile::tempdir().unwrap();
        cmd_gen(&cfg, gen_dir.path()).unwrap();
        let pool_path = gen_dir.path().join("pool.txt");

        // Sweeping from the exported pool matches the rebuilt pool.
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        cmd_sweep(&cfg, Some(&pool_path), None, a.path()).unwrap();
        cmd_sweep(&cfg, None, None, b.path()).unwrap();
        assert_eq!(
            fs::read(a.path().join("gains.gmx")).unwrap(),
            fs::read(b.path().join("gains.gmx")).unwrap()
        );

        // A pool of the wrong size is refused.
        let mut other = toy_config();
        other.pool.total_beams = 4;
        other.pool.families.truncate(2);
        other.codebook_size = 2;
        let err = cmd_sweep(&other, Some(&pool_path), None, a.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn eval_requires_checkpoint_for_neural() {
        let mut cfg = toy_config();
        cfg.eval.methods = "neural".into();
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_eval(&cfg, None, None, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn train_refuses_mismatched_resume() {
        let cfg = toy_config();
        let ckpt = tempfile::tempdir().unwrap();
        cmd_train(&cfg, None, ckpt.path(), None).unwrap();
        let mut other = toy_config();
        other.scenario.num_ues = 99;
        let err = cmd_train(&other, None, ckpt.path(), Some(ckpt.path())).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn version_names_formats() {
        let v = version_string();
        assert!(v.contains("GMX1"));
        assert!(v.contains("NNW1"));
    }

    #[test]
    fn per_instance_csv_round_trip() {
        let cfg = toy_config();
        let world = World::build(&cfg).unwrap();
        let env = world.env(&cfg);
        let report = evaluate_suite(
            &env,
            &[Method::ExpertC1, Method::Random],
            3,
            7_000_000,
            None,
        )
        .unwrap();
        let rebuilt = report_from_per_instance_csv(&report.per_instance_csv()).unwrap();
        assert_eq!(rebuilt.methods, report.methods);
        assert_eq!(rebuilt.instances.len(), report.instances.len());
        for (a, b) in rebuilt.instances.iter().zip(&report.instances) {
            assert_eq!(a.seed, b.seed);
            for (x, y) in a.outcomes.iter().zip(&b.outcomes) {
                assert_eq!(x.coverage, y.coverage);
                assert_eq!(x.covered_fraction, y.covered_fraction);
            }
        }
        assert!(report_from_per_instance_csv("bogus\n").is_err());
    }
}
