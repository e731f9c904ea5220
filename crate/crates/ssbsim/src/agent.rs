//! The actor-critic codebook policy.
//!
//! The actor maps a sector observation to beam logits once per episode;
//! selection proceeds step by step, masking already-chosen beams out of a
//! softmax and sampling (or taking the argmax) until n distinct beams are
//! drawn. Because the observation is fixed within an episode, conditioning
//! on earlier choices happens entirely through the mask, and one forward
//! pass serves every step. Updates follow the batched policy-gradient
//! rule with a critic baseline, advantage standardization, and clamping;
//! the critic regresses onto observed losses with mean squared error.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beams::Codebook;
use crate::cellsearch::{Deployment, Observation};
use crate::error::{Error, Result};
use crate::neuralnet::{
    backward, forward, optimizer_step, softmax_masked, DenseNet, Gradients, OptimizerState, Tape,
};
use crate::rng::{stream, StreamKind};

/// How the policy turns step distributions into beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    /// Draw each beam from the masked softmax (training).
    Sample,
    /// Take the argmax at every step (deployment).
    GreedyDecode,
}

/// An ordered without-replacement beam selection with its log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequence {
    pub beams: Vec<usize>,
    pub stepwise_logprobs: Vec<f64>,
    pub total_logprob: f64,
}

/// One sector's worth of episode data for the update step.
#[derive(Debug, Clone)]
pub struct EpisodeSample {
    pub observation: Observation,
    pub action: ActionSequence,
    /// Negative per-sector deployed coverage.
    pub loss: f64,
    /// Critic prediction at rollout time.
    pub baseline: f64,
    pub actor_tape: Tape,
}

/// Policy-training knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Episodes per mini-batch (each contributes one sample per sector).
    pub batch_size: usize,
    pub iterations: usize,
    pub actor_learning_rate: f64,
    pub critic_learning_rate: f64,
    /// Advantages are standardized, then clamped to this magnitude.
    pub advantage_clamp: f64,
    /// Weight of an optional entropy term; zero disables it.
    pub entropy_bonus: f64,
    pub seed: u64,
    /// Hidden widths; input/output sizes come from the problem.
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// First environment seed of the training range; episode e uses
    /// `scenario_seed_base + e`.
    pub scenario_seed_base: u64,
    /// Train on one frozen environment instead of fresh draws.
    pub fixed_scenario_seed: Option<u64>,
    /// Stop when the mean reward over the last window improves by less
    /// than `convergence_threshold` relative to the previous window.
    pub convergence_window: usize,
    pub convergence_threshold: f64,
    pub checkpoint_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 36,
            iterations: 15_000,
            actor_learning_rate: 1e-3,
            critic_learning_rate: 1e-3,
            advantage_clamp: 5.0,
            entropy_bonus: 0.0,
            seed: 0,
            actor_hidden: vec![512, 512, 256],
            critic_hidden: vec![256, 128],
            scenario_seed_base: 1_000_000,
            fixed_scenario_seed: None,
            convergence_window: 500,
            convergence_threshold: 1e-3,
            checkpoint_interval: 500,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be positive".into()));
        }
        if !(self.advantage_clamp > 0.0) {
            return Err(Error::Invalid("advantage_clamp must be positive".into()));
        }
        Ok(())
    }

    /// Env seeds consumed by a full run, as a half-open range.
    pub fn seed_range(&self) -> (u64, u64) {
        let count = (self.iterations * self.batch_size) as u64;
        (self.scenario_seed_base, self.scenario_seed_base + count)
    }
}

/// Select `n` distinct beams for one sector.
///
/// Sampling draws one uniform per step from the stream
/// `(seed, ActionSampling)` and walks the cumulative masked-softmax
/// probabilities in beam-index order, taking the first index whose
/// cumulative sum exceeds the draw. Greedy decode takes the argmax (ties
/// to the lower index). Returns the action and the forward tape.
pub fn select_codebook(
    actor: &DenseNet,
    obs: &Observation,
    n: usize,
    mode: SelectMode,
    seed: u64,
) -> Result<(ActionSequence, Tape)> {
    let m = actor.output_dim();
    if n > m {
        return Err(Error::Invalid(format!("cannot select n={n} beams from m={m} logits")));
    }
    let (logits, tape) = forward(actor, &obs.normalized)?;

    let mut rng = stream(seed, StreamKind::ActionSampling, &[]);
    let mut masked = vec![false; m];
    let mut beams = Vec::with_capacity(n);
    let mut stepwise_logprobs = Vec::with_capacity(n);

    for _ in 0..n {
        let probs = softmax_masked(&logits, &masked)?;
        let choice = match mode {
            SelectMode::GreedyDecode => {
                let mut best = None;
                for (i, &p) in probs.iter().enumerate() {
                    if masked[i] {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((_, bp)) => p > bp,
                    };
                    if better {
                        best = Some((i, p));
                    }
                }
                best.expect("unmasked entry exists").0
            }
            SelectMode::Sample => {
                let u: f64 = rng.gen();
                let mut cum = 0.0;
                let mut picked = None;
                for (i, &p) in probs.iter().enumerate() {
                    if masked[i] {
                        continue;
                    }
                    cum += p;
                    if u < cum {
                        picked = Some(i);
                        break;
                    }
                }
                // Rounding can leave the final cumulative just under u.
                picked.unwrap_or_else(|| {
                    (0..m).rev().find(|&i| !masked[i]).expect("unmasked entry exists")
                })
            }
        };
        stepwise_logprobs.push(probs[choice].ln());
        masked[choice] = true;
        beams.push(choice);
    }

    let total_logprob = stepwise_logprobs.iter().sum();
    Ok((
        ActionSequence {
            beams,
            stepwise_logprobs,
            total_logprob,
        },
        tape,
    ))
}

/// Gradients with respect to the logits for a recorded action sequence:
/// `d(total log-probability)/dz` and `d(-sum of step entropies)/dz`,
/// rebuilt from the taped logits by replaying the masks.
fn action_logit_gradients(logits: &[f64], action: &ActionSequence) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = logits.len();
    let mut masked = vec![false; m];
    let mut dlogp = vec![0.0; m];
    let mut dneg_entropy = vec![0.0; m];
    for &a in &action.beams {
        let probs = softmax_masked(logits, &masked)?;
        let h: f64 = probs
            .iter()
            .zip(&masked)
            .filter(|&(_, &mk)| !mk)
            .map(|(&q, _)| if q > 0.0 { -q * q.ln() } else { 0.0 })
            .sum();
        for (j, &p) in probs.iter().enumerate() {
            if masked[j] {
                continue;
            }
            // d log p[a] / d z_j = [j == a] - p_j over the unmasked set.
            dlogp[j] -= p;
            // dH/dz_j = -p_j (ln p_j + H).
            if p > 0.0 {
                dneg_entropy[j] += p * (p.ln() + h);
            }
        }
        dlogp[a] += 1.0;
        masked[a] = true;
    }
    Ok((dlogp, dneg_entropy))
}

/// Diagnostics from one policy update.
#[derive(Debug, Clone, Copy)]
pub struct UpdateDiagnostics {
    pub mean_loss: f64,
    pub mean_advantage_abs: f64,
    pub actor_grad_norm: f64,
    pub critic_loss: f64,
}

/// Standardize advantages across the batch (population moments), then
/// clamp. Constant batches standardize to zero.
fn standardized_advantages(batch: &[EpisodeSample], clamp: f64) -> Vec<f64> {
    let n = batch.len() as f64;
    let raw: Vec<f64> = batch.iter().map(|s| s.loss - s.baseline).collect();
    let mean = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    raw.iter()
        .map(|a| {
            let z = if std > 1e-12 { (a - mean) / std } else { 0.0 };
            z.clamp(-clamp, clamp)
        })
        .collect()
}

/// One REINFORCE step with critic baseline over a collected batch.
/// Advantages are `(loss - baseline)`, standardized then clamped; the
/// critic takes one mean-squared-error step toward the observed losses.
pub fn reinforce_update(
    actor: &mut DenseNet,
    critic: &mut DenseNet,
    actor_opt: &mut OptimizerState,
    critic_opt: &mut OptimizerState,
    batch: &[EpisodeSample],
    cfg: &TrainConfig,
) -> Result<UpdateDiagnostics> {
    if batch.is_empty() {
        return Err(Error::Invalid("empty update batch".into()));
    }
    if batch.iter().any(|s| !s.loss.is_finite()) {
        return Err(Error::Numeric("non-finite episode loss".into()));
    }
    cfg.validate()?;

    let n = batch.len() as f64;
    let advantages = standardized_advantages(batch, cfg.advantage_clamp);

    let mut actor_grads = Gradients::zeros_like(actor);
    for (sample, &adv) in batch.iter().zip(&advantages) {
        if adv == 0.0 && cfg.entropy_bonus == 0.0 {
            continue;
        }
        let logits = &sample.actor_tape.output;
        let (dlogp, dneg_entropy) = action_logit_gradients(logits, &sample.action)?;
        let dj: Vec<f64> = dlogp
            .iter()
            .zip(&dneg_entropy)
            .map(|(lp, ne)| (adv * lp + cfg.entropy_bonus * ne) / n)
            .collect();
        let g = backward(actor, &sample.actor_tape, &dj)?;
        actor_grads.add_assign(&g);
    }
    let actor_grad_norm = actor_grads.norm();
    optimizer_step(actor, &actor_grads, actor_opt)?;

    let pairs: Vec<(&[f64], f64)> = batch
        .iter()
        .map(|s| (s.observation.normalized.as_slice(), s.loss))
        .collect();
    let critic_loss = critic_regression_step(critic, critic_opt, &pairs)?;

    Ok(UpdateDiagnostics {
        mean_loss: batch.iter().map(|s| s.loss).sum::<f64>() / n,
        mean_advantage_abs: advantages.iter().map(|a| a.abs()).sum::<f64>() / n,
        actor_grad_norm,
        critic_loss,
    })
}

/// One mean-squared-error step of the critic on `(input, target)` pairs.
/// Returns the pre-step batch loss.
pub fn critic_regression_step(
    critic: &mut DenseNet,
    opt: &mut OptimizerState,
    pairs: &[(&[f64], f64)],
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Invalid("empty critic batch".into()));
    }
    let n = pairs.len() as f64;
    let mut grads = Gradients::zeros_like(critic);
    let mut loss = 0.0;
    for &(input, target) in pairs {
        let (out, tape) = forward(critic, input)?;
        let err = out[0] - target;
        loss += err * err;
        let g = backward(critic, &tape, &[2.0 * err / n])?;
        grads.add_assign(&g);
    }
    optimizer_step(critic, &grads, opt)?;
    Ok(loss / n)
}

/// Critic value for one observation.
pub fn critic_value(critic: &DenseNet, obs: &Observation) -> Result<f64> {
    let (out, _) = forward(critic, &obs.normalized)?;
    Ok(out[0])
}

/// Greedy-decode a deployment from per-sector observations with one
/// shared policy.
pub fn act_deploy(actor: &DenseNet, observations: &[Observation], n: usize) -> Result<Deployment> {
    let mut codebooks = Vec::with_capacity(observations.len());
    for (s, obs) in observations.iter().enumerate() {
        let (action, _) = select_codebook(actor, obs, n, SelectMode::GreedyDecode, 0)?;
        codebooks.push(Codebook::new(action.beams, format!("neural-s{s}")));
    }
    Ok(Deployment::new(codebooks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{Activation, Layer};
    use approx::assert_relative_eq;

    /// Actor that always emits `logits` regardless of the observation.
    fn constant_actor(input_dim: usize, logits: &[f64]) -> DenseNet {
        DenseNet {
            layers: vec![Layer {
                weights: vec![0.0; input_dim * logits.len()],
                biases: logits.to_vec(),
                activation: Activation::Identity,
                in_dim: input_dim,
                out_dim: logits.len(),
            }],
        }
    }

    fn obs(normalized: Vec<f64>) -> Observation {
        Observation {
            sector: 0,
            counts: normalized.iter().map(|&v| (v * 100.0) as u32).collect(),
            normalized,
        }
    }

    #[test]
    fn full_selection_when_n_equals_m() {
        let actor = constant_actor(2, &[0.3, -0.7, 1.1, 0.0]);
        let o = obs(vec![0.1, 0.2]);
        let (action, _) = select_codebook(&actor, &o, 4, SelectMode::Sample, 9).unwrap();
        let mut beams = action.beams.clone();
        beams.sort_unstable();
        assert_eq!(beams, vec![0, 1, 2, 3]);
        assert!(select_codebook(&actor, &o, 5, SelectMode::Sample, 9).is_err());
    }

    #[test]
    fn dominant_logit_goes_first_in_both_modes() {
        let actor = constant_actor(2, &[0.0, 1.0e6, -3.0]);
        let o = obs(vec![0.5, 0.5]);
        for mode in [SelectMode::Sample, SelectMode::GreedyDecode] {
            let (action, _) = select_codebook(&actor, &o, 2, mode, 1234).unwrap();
            assert_eq!(action.beams[0], 1, "mode {mode:?}");
        }
    }

    #[test]
    fn sampling_matches_handrolled_inverse_cdf() {
        let logits = vec![0.4, -0.2, 0.9, 0.1, -1.5];
        let actor = constant_actor(3, &logits);
        let o = obs(vec![0.0, 0.3, 0.6]);
        let seed = 77;
        let n = 3;
        let (action, _) = select_codebook(&actor, &o, n, SelectMode::Sample, seed).unwrap();

        // Independent trace with the same generator stream.
        let mut rng = stream(seed, StreamKind::ActionSampling, &[]);
        let mut masked = vec![false; logits.len()];
        let mut expect = Vec::new();
        for _ in 0..n {
            let probs = softmax_masked(&logits, &masked).unwrap();
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            let mut pick = None;
            for (i, &p) in probs.iter().enumerate() {
                if masked[i] {
                    continue;
                }
                cum += p;
                if u < cum {
                    pick = Some(i);
                    break;
                }
            }
            let pick = pick.unwrap();
            masked[pick] = true;
            expect.push(pick);
        }
        assert_eq!(action.beams, expect);
    }

    #[test]
    fn logprobs_chain_consistently() {
        let logits = vec![0.2, 0.8, -0.4, 1.3, 0.0, -2.0];
        let actor = constant_actor(2, &logits);
        let o = obs(vec![0.1, 0.9]);
        for seed in 0..20 {
            let (action, _) = select_codebook(&actor, &o, 4, SelectMode::Sample, seed).unwrap();
            let mut beams = action.beams.clone();
            beams.sort_unstable();
            beams.dedup();
            assert_eq!(beams.len(), 4, "beams must be distinct");

            let mut masked = vec![false; logits.len()];
            let mut product = 1.0;
            for &a in &action.beams {
                let probs = softmax_masked(&logits, &masked).unwrap();
                product *= probs[a];
                masked[a] = true;
            }
            assert_relative_eq!(action.total_logprob, product.ln(), epsilon = 1e-9);
            assert_relative_eq!(
                action.total_logprob,
                action.stepwise_logprobs.iter().sum::<f64>(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn advantage_standardization_moments() {
        let actor = constant_actor(2, &[0.0, 0.0]);
        let o = obs(vec![0.1, 0.2]);
        let mut batch = Vec::new();
        for (i, loss) in [3.0, -1.0, 5.0, 0.5, -2.5].iter().enumerate() {
            let (action, tape) = select_codebook(&actor, &o, 1, SelectMode::Sample, i as u64).unwrap();
            batch.push(EpisodeSample {
                observation: o.clone(),
                action,
                loss: *loss,
                baseline: 0.0,
                actor_tape: tape,
            });
        }
        let adv = standardized_advantages(&batch, 100.0);
        let n = adv.len() as f64;
        let mean = adv.iter().sum::<f64>() / n;
        let std = (adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-6);
        assert_relative_eq!(std, 1.0, epsilon = 1e-6);
        // Clamping bites when requested.
        let clamped = standardized_advantages(&batch, 0.5);
        assert!(clamped.iter().all(|a| a.abs() <= 0.5));
    }

    #[test]
    fn zero_advantage_leaves_actor_untouched() {
        let mut actor = DenseNet::mlp(&[2, 8, 3], 5).unwrap();
        let mut critic = DenseNet::mlp(&[2, 4, 1], 6).unwrap();
        let before = actor.clone();
        let o = obs(vec![0.3, 0.4]);
        let mut batch = Vec::new();
        for seed in 0..4 {
            let (action, tape) = select_codebook(&actor, &o, 2, SelectMode::Sample, seed).unwrap();
            batch.push(EpisodeSample {
                observation: o.clone(),
                action,
                loss: -7.0,
                baseline: -7.0,
                actor_tape: tape,
            });
        }
        let cfg = TrainConfig::default();
        let mut aopt = OptimizerState::new(&actor, cfg.actor_learning_rate);
        let mut copt = OptimizerState::new(&critic, cfg.critic_learning_rate);
        let diag =
            reinforce_update(&mut actor, &mut critic, &mut aopt, &mut copt, &batch, &cfg).unwrap();
        assert_eq!(diag.actor_grad_norm, 0.0);
        assert_eq!(actor, before);
    }

    #[test]
    fn bandit_learns_the_better_arm() {
        // Two arms, constant observation; arm 0 earns loss -1, arm 1 earns
        // loss 0. The policy must concentrate on arm 0.
        let mut actor = DenseNet::mlp(&[2, 16, 2], 3).unwrap();
        let mut critic = DenseNet::mlp(&[2, 8, 1], 4).unwrap();
        let cfg = TrainConfig {
            batch_size: 8,
            actor_learning_rate: 5e-3,
            critic_learning_rate: 5e-3,
            ..TrainConfig::default()
        };
        let mut aopt = OptimizerState::new(&actor, cfg.actor_learning_rate);
        let mut copt = OptimizerState::new(&critic, cfg.critic_learning_rate);
        let o = obs(vec![0.5, 0.5]);

        for update in 0..500 {
            let mut batch = Vec::new();
            for k in 0..cfg.batch_size {
                let seed = (update * cfg.batch_size + k) as u64;
                let (action, tape) =
                    select_codebook(&actor, &o, 1, SelectMode::Sample, seed).unwrap();
                let loss = if action.beams[0] == 0 { -1.0 } else { 0.0 };
                let baseline = critic_value(&critic, &o).unwrap();
                batch.push(EpisodeSample {
                    observation: o.clone(),
                    action,
                    loss,
                    baseline,
                    actor_tape: tape,
                });
            }
            reinforce_update(&mut actor, &mut critic, &mut aopt, &mut copt, &batch, &cfg).unwrap();
        }

        let (logits, _) = forward(&actor, &o.normalized).unwrap();
        let p = softmax_masked(&logits, &[false, false]).unwrap();
        assert!(p[0] > 0.95, "P(arm 0) = {}", p[0]);
    }

    #[test]
    fn critic_regression_reaches_small_error() {
        let mut critic = DenseNet::mlp(&[3, 32, 16, 1], 8).unwrap();
        let mut opt = OptimizerState::new(&critic, 1e-2);
        let data: Vec<(Vec<f64>, f64)> = vec![
            (vec![0.1, 0.2, 0.3], -40.0),
            (vec![0.4, 0.0, 0.2], -10.0),
            (vec![0.0, 0.5, 0.1], -25.0),
            (vec![0.3, 0.3, 0.3], -33.0),
        ];
        let pairs: Vec<(&[f64], f64)> = data.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
        let initial = critic_regression_step(&mut critic, &mut opt, &pairs).unwrap();
        let mut last = initial;
        for _ in 0..2000 {
            last = critic_regression_step(&mut critic, &mut opt, &pairs).unwrap();
        }
        assert!(
            last < 1e-3 * initial,
            "critic MSE {last} vs initial {initial}"
        );
    }

    #[test]
    fn deploy_is_deterministic_across_identical_observations() {
        let actor = DenseNet::mlp(&[4, 16, 6], 2).unwrap();
        let o = obs(vec![0.1, 0.0, 0.3, 0.2]);
        let d = act_deploy(&actor, &[o.clone(), o.clone(), o.clone()], 3).unwrap();
        assert_eq!(d.codebooks.len(), 3);
        assert_eq!(d.codebooks[0].beam_indices, d.codebooks[1].beam_indices);
        assert_eq!(d.codebooks[1].beam_indices, d.codebooks[2].beam_indices);
        for cb in &d.codebooks {
            assert_eq!(cb.len(), 3);
        }
    }

    #[test]
    fn rejects_empty_and_nonfinite_batches() {
        let mut actor = DenseNet::mlp(&[2, 4, 2], 1).unwrap();
        let mut critic = DenseNet::mlp(&[2, 4, 1], 1).unwrap();
        let cfg = TrainConfig::default();
        let mut aopt = OptimizerState::new(&actor, 1e-3);
        let mut copt = OptimizerState::new(&critic, 1e-3);
        assert!(
            reinforce_update(&mut actor, &mut critic, &mut aopt, &mut copt, &[], &cfg).is_err()
        );
        let o = obs(vec![0.5, 0.5]);
        let (action, tape) = select_codebook(&actor, &o, 1, SelectMode::Sample, 0).unwrap();
        let batch = vec![EpisodeSample {
            observation: o,
            action,
            loss: f64::NAN,
            baseline: 0.0,
            actor_tape: tape,
        }];
        assert!(
            reinforce_update(&mut actor, &mut critic, &mut aopt, &mut copt, &batch, &cfg).is_err()
        );
    }
}
