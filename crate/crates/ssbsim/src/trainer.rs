//! Training orchestration: episodes, mini-batched updates, convergence
//! tracking, checkpointing.
//!
//! One episode spans the expert sweeps plus the deployment sweep: a fresh
//! scenario is generated from the episode seed, every expert codebook is
//! swept to form per-sector observations, the shared policy selects one
//! codebook per sector, and the joint deployment's per-sector coverage
//! becomes the reward. Every random stream is keyed by the episode index,
//! so training resumes from a checkpoint onto the exact trajectory an
//! uninterrupted run would have taken.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{
    critic_value, reinforce_update, select_codebook, EpisodeSample, SelectMode, TrainConfig,
};
use crate::beams::{BeamPool, Codebook};
use crate::cellsearch::{observe, per_sector_coverage, Deployment};
use crate::error::{Error, Result};
use crate::neuralnet::{
    read_checkpoint, write_checkpoint, DenseNet, OptimizerState,
};
use crate::propagation::{build_gain_matrix, RadioConfig};
use crate::rng::{mix, StreamKind};
use crate::scenario::{generate_scenario, Scenario, ScenarioConfig, SiteLayout};

/// Everything an episode needs besides the learner state.
#[derive(Debug, Clone, Copy)]
pub struct Environment<'a> {
    pub pool: &'a BeamPool,
    pub expert_codebooks: &'a [Codebook],
    pub layout: &'a SiteLayout,
    pub scenario_cfg: &'a ScenarioConfig,
    pub radio_cfg: &'a RadioConfig,
    /// Codebook size n selected per sector.
    pub codebook_size: usize,
}

impl<'a> Environment<'a> {
    pub fn observation_dim(&self) -> usize {
        self.expert_codebooks.iter().map(|c| c.len()).sum()
    }

    pub fn tau(&self) -> f64 {
        self.radio_cfg.detection_threshold_dbm
    }
}

/// Actor/critic pair with optimizer state and the training cursor.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub actor_opt: OptimizerState,
    pub critic_opt: OptimizerState,
    pub iteration: usize,
}

/// Fresh nets sized for the environment: observation in, pool size out
/// for the actor, scalar out for the critic.
pub fn init_state(env: &Environment, cfg: &TrainConfig) -> Result<TrainState> {
    let obs_dim = env.observation_dim();
    let mut actor_dims = vec![obs_dim];
    actor_dims.extend_from_slice(&cfg.actor_hidden);
    actor_dims.push(env.pool.len());
    let mut critic_dims = vec![obs_dim];
    critic_dims.extend_from_slice(&cfg.critic_hidden);
    critic_dims.push(1);

    let actor = DenseNet::mlp(&actor_dims, mix(cfg.seed, StreamKind::NetInit, &[0xac]))?;
    let critic = DenseNet::mlp(&critic_dims, mix(cfg.seed, StreamKind::NetInit, &[0xc1]))?;
    let actor_opt = OptimizerState::new(&actor, cfg.actor_learning_rate);
    let critic_opt = OptimizerState::new(&critic, cfg.critic_learning_rate);
    Ok(TrainState {
        actor,
        critic,
        actor_opt,
        critic_opt,
        iteration: 0,
    })
}

/// Run one episode on an already-built scenario. Action draws come from
/// streams keyed by `(sampling_seed, sector)`; the scenario supplies
/// everything else.
pub fn run_episode_on(
    env: &Environment,
    scenario: &Scenario,
    sampling_seed: u64,
    actor: &DenseNet,
    critic: &DenseNet,
    mode: SelectMode,
) -> Result<Vec<EpisodeSample>> {
    let gains = build_gain_matrix(scenario, env.pool, env.radio_cfg)?;
    let observations = observe(&gains, env.expert_codebooks, env.tau())?;

    let mut codebooks = Vec::with_capacity(observations.len());
    let mut picks = Vec::with_capacity(observations.len());
    for (s, obs) in observations.iter().enumerate() {
        let sample_seed = mix(sampling_seed, StreamKind::ActionSampling, &[s as u64]);
        let (action, tape) = select_codebook(actor, obs, env.codebook_size, mode, sample_seed)?;
        codebooks.push(Codebook::new(action.beams.clone(), format!("neural-s{s}")));
        picks.push((action, tape));
    }

    let deployment = Deployment::new(codebooks);
    let rewards = per_sector_coverage(&gains, &deployment, env.tau())?;

    let mut samples = Vec::with_capacity(observations.len());
    for ((obs, (action, tape)), &reward) in
        observations.into_iter().zip(picks).zip(rewards.iter())
    {
        let baseline = critic_value(critic, &obs)?;
        samples.push(EpisodeSample {
            observation: obs,
            action,
            loss: -(reward as f64),
            baseline,
            actor_tape: tape,
        });
    }
    Ok(samples)
}

/// Generate the episode's scenario from its seed and run it: the expert
/// sweeps, the selection, and the deployment sweep.
pub fn run_episode(
    env: &Environment,
    env_seed: u64,
    actor: &DenseNet,
    critic: &DenseNet,
    mode: SelectMode,
) -> Result<Vec<EpisodeSample>> {
    let scenario_cfg = ScenarioConfig {
        seed: env_seed,
        ..env.scenario_cfg.clone()
    };
    let scenario = generate_scenario(&scenario_cfg, env.layout)?;
    run_episode_on(env, &scenario, env_seed, actor, critic, mode)
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iteration: usize,
    pub mean_reward: f64,
    pub mean_advantage_abs: f64,
    pub actor_grad_norm: f64,
}

/// Comma-separated training log.
pub fn log_to_csv(rows: &[LogRow]) -> String {
    let mut s = String::from("iteration,mean_reward,mean_advantage_abs,actor_grad_norm\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:?},{:?},{:?}",
            r.iteration, r.mean_reward, r.mean_advantage_abs, r.actor_grad_norm
        );
    }
    s
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub iterations_run: usize,
    pub converged: bool,
}

/// Scenario seed for a global episode index.
fn episode_seed(cfg: &TrainConfig, episode_index: usize) -> u64 {
    match cfg.fixed_scenario_seed {
        Some(s) => s,
        None => cfg.scenario_seed_base + episode_index as u64,
    }
}

/// Action-sampling seed for a global episode index. Kept independent of
/// the scenario seed so a frozen world still explores, and derived from
/// the training seed so distinct runs sample distinct trajectories.
fn sampling_seed(cfg: &TrainConfig, episode_index: usize) -> u64 {
    mix(cfg.seed, StreamKind::ActionSampling, &[episode_index as u64])
}

/// Train until `cfg.iterations` or convergence of the windowed mean
/// reward. Appends one log row per iteration; optionally writes periodic
/// checkpoints into `ckpt_dir`.
pub fn train(
    env: &Environment,
    cfg: &TrainConfig,
    state: &mut TrainState,
    ckpt_dir: Option<&Path>,
    log: &mut Vec<LogRow>,
) -> Result<TrainSummary> {
    cfg.validate()?;
    let start = state.iteration;
    let mut rewards: Vec<f64> = Vec::with_capacity(cfg.iterations.saturating_sub(start));
    let mut converged = false;

    for it in start..cfg.iterations {
        // Roll out the batch in parallel; sample order is fixed by the
        // (episode, sector) index, independent of scheduling.
        let seeds: Vec<(u64, u64)> = (0..cfg.batch_size)
            .map(|k| {
                let e = it * cfg.batch_size + k;
                (episode_seed(cfg, e), sampling_seed(cfg, e))
            })
            .collect();
        let actor = &state.actor;
        let critic = &state.critic;
        let episodes: Vec<Result<Vec<EpisodeSample>>> = seeds
            .par_iter()
            .map(|&(scenario_seed, sample_seed)| {
                let scenario_cfg = ScenarioConfig {
                    seed: scenario_seed,
                    ..env.scenario_cfg.clone()
                };
                let scenario = generate_scenario(&scenario_cfg, env.layout)?;
                run_episode_on(env, &scenario, sample_seed, actor, critic, SelectMode::Sample)
            })
            .collect();
        let mut batch = Vec::with_capacity(cfg.batch_size * env.layout.num_sectors());
        for ep in episodes {
            batch.extend(ep?);
        }

        let diag = reinforce_update(
            &mut state.actor,
            &mut state.critic,
            &mut state.actor_opt,
            &mut state.critic_opt,
            &batch,
            cfg,
        )?;
        state.iteration = it + 1;

        let mean_reward = -diag.mean_loss;
        rewards.push(mean_reward);
        log.push(LogRow {
            iteration: it,
            mean_reward,
            mean_advantage_abs: diag.mean_advantage_abs,
            actor_grad_norm: diag.actor_grad_norm,
        });

        if let Some(dir) = ckpt_dir {
            if cfg.checkpoint_interval > 0 && state.iteration % cfg.checkpoint_interval == 0 {
                save_checkpoint(dir, state, &manifest_for(env, cfg, state.iteration))?;
            }
        }

        // Windowed convergence: stop when the trailing window's mean
        // reward improves on the previous window by less than the
        // threshold (relative).
        let w = cfg.convergence_window;
        let done = rewards.len();
        if w > 0 && done >= 2 * w && done % w == 0 {
            let newer: f64 = rewards[done - w..].iter().sum::<f64>() / w as f64;
            let older: f64 = rewards[done - 2 * w..done - w].iter().sum::<f64>() / w as f64;
            let improvement = (newer - older) / older.abs().max(1e-9);
            if improvement < cfg.convergence_threshold {
                converged = true;
                break;
            }
        }
    }

    if let Some(dir) = ckpt_dir {
        save_checkpoint(dir, state, &manifest_for(env, cfg, state.iteration))?;
    }
    Ok(TrainSummary {
        iterations_run: state.iteration - start,
        converged,
    })
}

// ── Checkpoint directory: actor.nnw1, critic.nnw1, manifest.toml ───────────

/// Deployment guard saved next to the network weights; a checkpoint only
/// runs against the world it was trained for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentManifest {
    pub pool_hash: String,
    pub pool_size: usize,
    pub codebook_size: usize,
    pub tau_dbm: f64,
    /// User count whose reciprocal scales observations.
    pub normalization_ues: usize,
    pub num_experts: usize,
    pub observation_dim: usize,
    pub iterations_completed: usize,
    /// Env-seed range consumed by training, half-open.
    pub train_seed_lo: u64,
    pub train_seed_hi: u64,
}

pub fn manifest_for(env: &Environment, cfg: &TrainConfig, iterations: usize) -> AgentManifest {
    let (lo, hi) = cfg.seed_range();
    AgentManifest {
        pool_hash: env.pool.content_hash(),
        pool_size: env.pool.len(),
        codebook_size: env.codebook_size,
        tau_dbm: env.tau(),
        normalization_ues: env.scenario_cfg.num_ues,
        num_experts: env.expert_codebooks.len(),
        observation_dim: env.observation_dim(),
        iterations_completed: iterations,
        train_seed_lo: lo,
        train_seed_hi: hi,
    }
}

impl AgentManifest {
    /// Refuse deployment against a mismatched world.
    pub fn check_compatible(&self, env: &Environment) -> Result<()> {
        let mismatch = |what: &str| {
            Err(Error::Incompatible(format!(
                "checkpoint does not match the configured world: {what}"
            )))
        };
        if self.pool_hash != env.pool.content_hash() {
            return mismatch("beam pool hash differs");
        }
        if self.codebook_size != env.codebook_size {
            return mismatch("codebook size differs");
        }
        if (self.tau_dbm - env.tau()).abs() > 1e-12 {
            return mismatch("detection threshold differs");
        }
        if self.normalization_ues != env.scenario_cfg.num_ues {
            return mismatch("observation normalization (user count) differs");
        }
        if self.observation_dim != env.observation_dim() {
            return mismatch("observation length differs");
        }
        Ok(())
    }
}

pub fn save_checkpoint(dir: &Path, state: &TrainState, manifest: &AgentManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut actor_bytes = Vec::new();
    write_checkpoint(&state.actor, Some(&state.actor_opt), &mut actor_bytes)?;
    fs::write(dir.join("actor.nnw1"), actor_bytes)?;
    let mut critic_bytes = Vec::new();
    write_checkpoint(&state.critic, Some(&state.critic_opt), &mut critic_bytes)?;
    fs::write(dir.join("critic.nnw1"), critic_bytes)?;
    let text = toml::to_string_pretty(manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<(TrainState, AgentManifest)> {
    let manifest: AgentManifest =
        toml::from_str(&fs::read_to_string(dir.join("manifest.toml"))?)
            .map_err(|e| Error::Config(format!("manifest parse: {e}")))?;
    let actor_bytes = fs::read(dir.join("actor.nnw1"))?;
    let (actor, actor_opt) = read_checkpoint(&mut actor_bytes.as_slice())?;
    let critic_bytes = fs::read(dir.join("critic.nnw1"))?;
    let (critic, critic_opt) = read_checkpoint(&mut critic_bytes.as_slice())?;
    let actor_opt =
        actor_opt.ok_or_else(|| Error::Incompatible("checkpoint lacks actor optimizer state".into()))?;
    let critic_opt = critic_opt
        .ok_or_else(|| Error::Incompatible("checkpoint lacks critic optimizer state".into()))?;
    Ok((
        TrainState {
            actor,
            critic,
            actor_opt,
            critic_opt,
            iteration: manifest.iterations_completed,
        },
        manifest,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::act_deploy;
    use crate::beams::{build_expert_codebooks, build_pool, ArrayGeometry, PoolConfig};
    use crate::cellsearch::Observation;
    use crate::scenario::UePopulation;

    fn toy_geometry() -> ArrayGeometry {
        ArrayGeometry {
            e1: 2,
            e2: 2,
            ..ArrayGeometry::default()
        }
    }

    fn toy_layout() -> SiteLayout {
        SiteLayout {
            sector_azimuths: vec![0.0],
            ..SiteLayout::default()
        }
    }

    fn toy_cfg() -> TrainConfig {
        TrainConfig {
            batch_size: 4,
            iterations: 10,
            actor_hidden: vec![16, 16, 8],
            critic_hidden: vec![8, 4],
            convergence_window: 0,
            checkpoint_interval: 0,
            ..TrainConfig::default()
        }
    }

    struct Owned {
        pool: BeamPool,
        experts: Vec<Codebook>,
        layout: SiteLayout,
        scenario_cfg: ScenarioConfig,
        radio_cfg: RadioConfig,
    }

    fn toy_world() -> Owned {
        let pool = build_pool(&toy_geometry(), &PoolConfig::toy()).unwrap();
        let experts = build_expert_codebooks(&pool).unwrap();
        Owned {
            pool,
            experts,
            layout: toy_layout(),
            scenario_cfg: ScenarioConfig {
                num_ues: 30,
                num_clusters: 2,
                cluster_stddev: 10.0,
                ..ScenarioConfig::default()
            },
            radio_cfg: RadioConfig::default(),
        }
    }

    impl Owned {
        fn env(&self) -> Environment<'_> {
            Environment {
                pool: &self.pool,
                expert_codebooks: &self.experts,
                layout: &self.layout,
                scenario_cfg: &self.scenario_cfg,
                radio_cfg: &self.radio_cfg,
                codebook_size: 2,
            }
        }
    }

    #[test]
    fn episode_spans_expert_sweeps_plus_deployment() {
        let world = toy_world();
        let env = world.env();
        let cfg = toy_cfg();
        let state = init_state(&env, &cfg).unwrap();
        let samples = run_episode(&env, 5, &state.actor, &state.critic, SelectMode::Sample).unwrap();
        assert_eq!(samples.len(), 1, "one sample per sector");
        // Observation concatenates both expert codebooks (2 beams each).
        assert_eq!(samples[0].observation.len(), 4);
        assert_eq!(samples[0].action.beams.len(), 2);
        assert!(samples[0].loss <= 0.0, "loss is negative coverage");
    }

    #[test]
    fn zero_ue_episode_is_well_formed() {
        let world = toy_world();
        let env = world.env();
        let cfg = toy_cfg();
        let state = init_state(&env, &cfg).unwrap();
        let empty = Scenario {
            layout: world.layout.clone(),
            ues: UePopulation {
                positions: vec![],
                indoor: vec![],
                cluster_ids: vec![],
            },
        };
        let samples =
            run_episode_on(&env, &empty, 1, &state.actor, &state.critic, SelectMode::Sample)
                .unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].loss, 0.0);
        assert!(samples[0].observation.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn episodes_replay_bit_identically() {
        let world = toy_world();
        let env = world.env();
        let cfg = toy_cfg();
        let state = init_state(&env, &cfg).unwrap();
        let a = run_episode(&env, 42, &state.actor, &state.critic, SelectMode::Sample).unwrap();
        let b = run_episode(&env, 42, &state.actor, &state.critic, SelectMode::Sample).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.action, y.action);
            assert_eq!(x.loss, y.loss);
            assert_eq!(x.baseline, y.baseline);
            assert_eq!(x.observation, y.observation);
        }
    }

    #[test]
    fn zero_iterations_returns_initial_nets() {
        let world = toy_world();
        let env = world.env();
        let mut cfg = toy_cfg();
        cfg.iterations = 0;
        let mut state = init_state(&env, &cfg).unwrap();
        let initial = state.clone();
        let mut log = Vec::new();
        let summary = train(&env, &cfg, &mut state, None, &mut log).unwrap();
        assert_eq!(summary.iterations_run, 0);
        assert_eq!(state.actor, initial.actor);
        assert_eq!(state.critic, initial.critic);
        assert!(log.is_empty());
    }

    #[test]
    fn batch_consumes_expected_episode_count() {
        let world = toy_world();
        let env = world.env();
        let mut cfg = toy_cfg();
        cfg.iterations = 2;
        cfg.batch_size = 3;
        let mut state = init_state(&env, &cfg).unwrap();
        let mut log = Vec::new();
        train(&env, &cfg, &mut state, None, &mut log).unwrap();
        assert_eq!(log.len(), 2);
        // Seeds advance by batch_size per iteration.
        assert_eq!(episode_seed(&cfg, 0), cfg.scenario_seed_base);
        assert_eq!(episode_seed(&cfg, 5), cfg.scenario_seed_base + 5);
    }

    #[test]
    fn training_is_deterministic() {
        let world = toy_world();
        let env = world.env();
        let mut cfg = toy_cfg();
        cfg.iterations = 3;
        let run = || {
            let mut state = init_state(&env, &cfg).unwrap();
            let mut log = Vec::new();
            train(&env, &cfg, &mut state, None, &mut log).unwrap();
            (state.actor.clone(), log)
        };
        let (a1, l1) = run();
        let (a2, l2) = run();
        assert_eq!(a1, a2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn checkpoint_round_trip_reproduces_decodes() {
        let world = toy_world();
        let env = world.env();
        let mut cfg = toy_cfg();
        cfg.iterations = 3;
        let mut state = init_state(&env, &cfg).unwrap();
        let mut log = Vec::new();
        train(&env, &cfg, &mut state, None, &mut log).unwrap();

        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &state, &manifest_for(&env, &cfg, state.iteration)).unwrap();
        let (loaded, manifest) = load_checkpoint(dir.path()).unwrap();
        manifest.check_compatible(&env).unwrap();
        assert_eq!(loaded.actor, state.actor);
        assert_eq!(loaded.iteration, 3);

        // Greedy decodes agree on a spread of observations.
        for i in 0..20 {
            let obs = Observation {
                sector: 0,
                counts: vec![i, 2 * i, i / 2, 3 * i],
                normalized: vec![
                    i as f64 / 30.0,
                    2.0 * i as f64 / 30.0,
                    i as f64 / 60.0,
                    3.0 * i as f64 / 30.0,
                ],
            };
            let a = act_deploy(&state.actor, &[obs.clone()], 2).unwrap();
            let b = act_deploy(&loaded.actor, &[obs], 2).unwrap();
            assert_eq!(a.codebooks[0].beam_indices, b.codebooks[0].beam_indices);
        }
    }

    #[test]
    fn resume_from_final_checkpoint_is_a_no_op() {
        let world = toy_world();
        let env = world.env();
        let mut cfg = toy_cfg();
        cfg.iterations = 4;
        let mut state = init_state(&env, &cfg).unwrap();
        let mut log = Vec::new();
        train(&env, &cfg, &mut state, None, &mut log).unwrap();

        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &state, &manifest_for(&env, &cfg, state.iteration)).unwrap();
        let (mut resumed, _) = load_checkpoint(dir.path()).unwrap();
        let before = resumed.actor.clone();
        let mut log2 = Vec::new();
        let summary = train(&env, &cfg, &mut resumed, None, &mut log2).unwrap();
        assert_eq!(summary.iterations_run, 0);
        assert_eq!(resumed.actor, before);
    }

    #[test]
    fn resume_matches_uninterrupted_trajectory() {
        let world = toy_world();
        let env = world.env();
        let mut cfg = toy_cfg();
        cfg.iterations = 6;

        let mut full = init_state(&env, &cfg).unwrap();
        let mut log_full = Vec::new();
        train(&env, &cfg, &mut full, None, &mut log_full).unwrap();

        let mut half_cfg = cfg.clone();
        half_cfg.iterations = 3;
        let mut part = init_state(&env, &cfg).unwrap();
        let mut log_part = Vec::new();
        train(&env, &half_cfg, &mut part, None, &mut log_part).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &part, &manifest_for(&env, &half_cfg, part.iteration)).unwrap();
        let (mut resumed, _) = load_checkpoint(dir.path()).unwrap();
        train(&env, &cfg, &mut resumed, None, &mut log_part).unwrap();

        assert_eq!(resumed.actor, full.actor);
        assert_eq!(resumed.critic, full.critic);
        assert_eq!(log_part, log_full);
    }

    #[test]
    fn manifest_rejects_mismatched_world() {
        let world = toy_world();
        let env = world.env();
        let cfg = toy_cfg();
        let manifest = manifest_for(&env, &cfg, 1);
        manifest.check_compatible(&env).unwrap();

        let mut other = toy_world();
        other.scenario_cfg.num_ues = 77;
        let err = manifest.check_compatible(&other.env()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn log_csv_layout() {
        let rows = vec![LogRow {
            iteration: 0,
            mean_reward: 12.5,
            mean_advantage_abs: 0.8,
            actor_grad_norm: 1.25,
        }];
        let csv = log_to_csv(&rows);
        assert_eq!(
            csv,
            "iteration,mean_reward,mean_advantage_abs,actor_grad_norm\n0,12.5,0.8,1.25\n"
        );
    }
}
