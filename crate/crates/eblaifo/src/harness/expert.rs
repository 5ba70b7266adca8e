//! Fully observable expert: deterministic-policy actor-critic on the true
//! 4-dim state (relative position, velocity) with the dense reward.

use rand::Rng;

use super::ExperimentConfig;
use crate::ail_engine::{actor_loss_and_grads, actor_net, explore_action, CriticPair};
use crate::error::{Error, Result};
use crate::nn_core::{adam_step, AdamConfig, AdamState, Network, Tensor};
use crate::rng::{derive_seed, stream};
use crate::toy_world::{expert_features, reset, step};

const STATE_DIM: usize = 4;
const ACTION_DIM: usize = 2;
const EXPERT_WARMUP: u32 = 500;
const EXPERT_BATCH: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct ExpertStats {
    /// Mean dense return over the final evaluation.
    pub mean_dense_return: f64,
    /// Fraction of evaluation episodes that touch the goal at least once.
    pub success_rate: f64,
}

struct Transition {
    state: [f64; 4],
    action: [f64; 2],
    reward: f64,
    next: [f64; 4],
}

fn state_tensor(states: &[[f64; 4]]) -> Tensor<f64> {
    let data = states.iter().flatten().copied().collect();
    Tensor::from_vec(&[states.len(), STATE_DIM], data)
}

/// Train the state-based expert. Deterministic for a given seed.
pub fn train_expert(cfg: &ExperimentConfig, seed: u64) -> Result<Network<f64>> {
    let hp = &cfg.hyper;
    let mut init_rng = stream(seed, "expert-init", 0);
    let mut actor = actor_net::<f64, _>(STATE_DIM, ACTION_DIM, &mut init_rng);
    let mut critics = CriticPair::new(STATE_DIM + ACTION_DIM, hp.polyak, &mut init_rng);
    let mut actor_opt = AdamState::new(&actor, AdamConfig::with_lr(hp.actor_lr));
    let mut q1_opt = AdamState::new(&critics.q1, AdamConfig::with_lr(hp.critic_lr));
    let mut q2_opt = AdamState::new(&critics.q2, AdamConfig::with_lr(hp.critic_lr));
    let mut act_rng = stream(seed, "expert-act", 0);
    let mut update_rng = stream(seed, "expert-update", 0);

    let mut replay: Vec<Transition> = Vec::new();
    let mut episode = 0u64;
    let mut state = reset(derive_seed(seed, "expert-episode", episode));

    for t in 1..=cfg.expert_steps {
        let features = expert_features(&state);
        let action = if t <= EXPERT_WARMUP {
            [act_rng.gen_range(-1.0..1.0), act_rng.gen_range(-1.0..1.0)]
        } else {
            let z = state_tensor(&[features]);
            let a = explore_action(&actor, &z, hp.explore_sigma, hp.noise_clip, &mut act_rng)?;
            [a[0], a[1]]
        };
        let (next, dense, _sparse, done) = step(&cfg.env, &state, action);
        replay.push(Transition {
            state: features,
            action,
            reward: dense,
            next: expert_features(&next),
        });
        if replay.len() > hp.replay_capacity {
            replay.remove(0);
        }
        state = next;
        if done {
            episode += 1;
            state = reset(derive_seed(seed, "expert-episode", episode));
        }

        if t > EXPERT_WARMUP && replay.len() >= EXPERT_BATCH {
            let batch: Vec<&Transition> = (0..EXPERT_BATCH)
                .map(|_| &replay[update_rng.gen_range(0..replay.len())])
                .collect();
            update_expert_critics(
                &mut critics,
                &actor,
                &batch,
                hp.gamma,
                hp.explore_sigma,
                hp.noise_clip,
                &mut q1_opt,
                &mut q2_opt,
                &mut update_rng,
            )?;
            let states: Vec<[f64; 4]> = batch.iter().map(|tr| tr.state).collect();
            let (loss, grads) = actor_loss_and_grads(&actor, &critics.q1, &state_tensor(&states))?;
            if !loss.is_finite() {
                return Err(Error::Training("expert actor loss diverged".into()));
            }
            adam_step(&mut actor, &grads, &mut actor_opt)?;
            critics.polyak_update();
        }
    }
    Ok(actor)
}

#[allow(clippy::too_many_arguments)]
fn update_expert_critics<R: Rng>(
    critics: &mut CriticPair<f64>,
    actor: &Network<f64>,
    batch: &[&Transition],
    gamma: f64,
    sigma: f64,
    clip: f64,
    q1_opt: &mut AdamState<f64>,
    q2_opt: &mut AdamState<f64>,
    rng: &mut R,
) -> Result<()> {
    let n = batch.len();
    let next_states: Vec<[f64; 4]> = batch.iter().map(|t| t.next).collect();
    let mean1 = actor.infer(&state_tensor(&next_states))?;
    let normal = rand_distr::Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut y = vec![0.0; n];
    let mut sa1 = Vec::with_capacity(n * (STATE_DIM + ACTION_DIM));
    for (i, t) in batch.iter().enumerate() {
        sa1.extend_from_slice(&t.next);
        for k in 0..ACTION_DIM {
            let noise: f64 = if sigma > 0.0 {
                rand_distr::Distribution::sample(&normal, rng)
            } else {
                0.0
            };
            sa1.push((mean1.data[i * ACTION_DIM + k] + noise.clamp(-clip, clip)).clamp(-1.0, 1.0));
        }
    }
    let sa1 = Tensor::from_vec(&[n, STATE_DIM + ACTION_DIM], sa1);
    let qt1 = critics.target1.infer(&sa1)?;
    let qt2 = critics.target2.infer(&sa1)?;
    for (i, t) in batch.iter().enumerate() {
        y[i] = t.reward + gamma * qt1.data[i].min(qt2.data[i]);
    }

    let mut sa = Vec::with_capacity(n * (STATE_DIM + ACTION_DIM));
    for t in batch {
        sa.extend_from_slice(&t.state);
        sa.extend_from_slice(&t.action);
    }
    let sa = Tensor::from_vec(&[n, STATE_DIM + ACTION_DIM], sa);
    for (q, opt) in [
        (&mut critics.q1, q1_opt),
        (&mut critics.q2, q2_opt),
    ] {
        let cache = q.forward(&sa)?;
        let up: Vec<f64> = cache
            .output()
            .data
            .iter()
            .zip(&y)
            .map(|(p, t)| 2.0 * (p - t) / n as f64)
            .collect();
        let (grads, _) = q.backward(&cache, &Tensor::from_vec(&[n, 1], up));
        adam_step(q, &grads, opt)?;
    }
    Ok(())
}

/// Run the expert policy without noise; returns dense-return and goal-touch
/// statistics over `episodes` fresh episodes.
pub fn evaluate_expert(
    cfg: &ExperimentConfig,
    actor: &Network<f64>,
    seed: u64,
    episodes: u32,
) -> Result<ExpertStats> {
    let mut total_dense = 0.0;
    let mut successes = 0u32;
    for ep in 0..episodes {
        let mut state = reset(derive_seed(seed, "expert-eval", ep as u64));
        let mut dense_sum = 0.0;
        let mut touched = false;
        loop {
            let a = actor.infer(&state_tensor(&[expert_features(&state)]))?;
            let (next, dense, sparse, done) = step(&cfg.env, &state, [a.data[0], a.data[1]]);
            dense_sum += dense;
            touched |= sparse > 0.0;
            state = next;
            if done {
                break;
            }
        }
        total_dense += dense_sum;
        successes += touched as u32;
    }
    Ok(ExpertStats {
        mean_dense_return: total_dense / episodes as f64,
        success_rate: successes as f64 / episodes as f64,
    })
}

/// Mean sparse return of the expert policy, the same statistic imitation
/// evaluation reports.
pub fn expert_sparse_return(
    cfg: &ExperimentConfig,
    actor: &Network<f64>,
    seed: u64,
    episodes: u32,
) -> Result<f64> {
    let mut total = 0.0;
    for ep in 0..episodes {
        let mut state = reset(derive_seed(seed, "expert-eval", ep as u64));
        loop {
            let a = actor.infer(&state_tensor(&[expert_features(&state)]))?;
            let (next, _dense, sparse, done) = step(&cfg.env, &state, [a.data[0], a.data[1]]);
            total += sparse;
            state = next;
            if done {
                break;
            }
        }
    }
    Ok(total / episodes as f64)
}
