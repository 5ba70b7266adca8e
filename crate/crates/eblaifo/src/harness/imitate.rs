//! The full imitation loop: act in the target domain, convert observations,
//! and run adversarial/critic/actor updates on a fixed cadence.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::demos::demo_episode_dirs;
use super::ExperimentConfig;
use crate::ail_engine::{
    explore_action, AilAgent, Episode, ObsMode, ObsStack, ReplayBuffer, StoredFrame,
};
use crate::error::{Error, Result};
use crate::event_core::{convert_pair, rgb_to_luminance, IntensityFrame};
use crate::frame_io::{read_frame_sequence, MetricsWriter, RunMetrics};
use crate::nn_core::{save_params, Scalar};
use crate::rng::{derive_seed, stream};
use crate::toy_world::{render, reset, step, DomainConfig, WorldState};

#[derive(Debug, Clone)]
pub struct ImitationOutcome {
    /// Mean of the last five evaluation returns (sparse return, 10 episodes
    /// each) — the per-seed final statistic.
    pub final_return: f64,
    /// (step, mean sparse return) per evaluation, in order.
    pub evals: Vec<(u32, f64)>,
    pub metrics_csv: PathBuf,
}

/// Convert one rendered RGB observation to its stored form, advancing the
/// luminance history in events mode.
fn observe(
    cfg: &ExperimentConfig,
    rgb: &crate::event_core::RgbFrame,
    prev_lum: &mut IntensityFrame,
    noise_seed: u64,
    frame_index: u64,
) -> Result<StoredFrame> {
    Ok(match cfg.obs_mode {
        ObsMode::Events => {
            let lum = rgb_to_luminance(rgb)?;
            let ev = convert_pair(&lum, prev_lum, &cfg.codec, noise_seed, frame_index)?;
            *prev_lum = lum;
            StoredFrame::Events(ev)
        }
        ObsMode::RawRgb => StoredFrame::from_rgb(rgb),
    })
}

/// Load expert demos from disk into an observation-only replay buffer,
/// converting with this run's codec so expert and agent streams share one
/// sensor model.
fn load_expert_buffer(
    cfg: &ExperimentConfig,
    demos_dir: &Path,
    seed: u64,
) -> Result<ReplayBuffer> {
    let dirs = demo_episode_dirs(demos_dir)?;
    let mut buffer = ReplayBuffer::new(usize::MAX, cfg.hyper.stack_depth, true);
    for (ep, dir) in dirs.iter().enumerate() {
        let frames = read_frame_sequence(dir)?;
        if frames.len() < 2 {
            return Err(Error::file(dir, "demo episode needs at least 2 frames"));
        }
        let mut stored = Vec::with_capacity(frames.len() - 1);
        match cfg.obs_mode {
            ObsMode::Events => {
                let noise_seed = derive_seed(seed, "expert-stream", ep as u64);
                let mut prev = rgb_to_luminance(&frames[0])?;
                for (i, f) in frames[1..].iter().enumerate() {
                    stored.push(observe(cfg, f, &mut prev, noise_seed, i as u64)?);
                }
            }
            ObsMode::RawRgb => {
                for f in &frames[1..] {
                    stored.push(StoredFrame::from_rgb(f));
                }
            }
        }
        buffer.push_episode(Episode {
            frames: stored,
            actions: Vec::new(),
            sparse: Vec::new(),
        })?;
    }
    Ok(buffer)
}

/// Noise-free policy rollout statistics in `domain`; mean per-episode sparse
/// return over `cfg.eval_episodes` episodes.
fn evaluate_policy<T: Scalar>(
    cfg: &ExperimentConfig,
    agent: &AilAgent<T>,
    domain: &DomainConfig,
    seed: u64,
    round: u64,
) -> Result<f64> {
    let ch = cfg.obs_mode.channels();
    let size = cfg.render_size as usize;
    let mut total = 0.0;
    for ep in 0..cfg.eval_episodes as u64 {
        let noise_seed = derive_seed(seed, "eval-stream", round * 10_000 + ep);
        let mut state = reset(derive_seed(seed, "eval-episode", round * 10_000 + ep));
        let mut prev_lum = rgb_to_luminance(&render(&state, domain))?;
        let mut stack = ObsStack::new(cfg.hyper.stack_depth, ch, size, size);
        let mut frame_index = 0u64;
        loop {
            let z = agent.encoder.encode(&stack.as_tensor::<T>())?;
            let a = agent.actor.infer(&z)?;
            let action = [a.data[0].to_f64().unwrap(), a.data[1].to_f64().unwrap()];
            let (next, _dense, sparse, done) = step(&cfg.env, &state, action);
            total += sparse;
            state = next;
            let rgb = render(&state, domain);
            stack.push(observe(cfg, &rgb, &mut prev_lum, noise_seed, frame_index)?);
            frame_index += 1;
            if done {
                break;
            }
        }
    }
    Ok(total / cfg.eval_episodes as f64)
}

/// Run one imitation seed end to end. Writes `metrics.csv`, the resolved
/// `config.json`, and `encoder.ckpt`/`actor.ckpt` into `out_dir`.
pub fn run_imitation(
    cfg: &ExperimentConfig,
    seed: u64,
    demos_dir: &Path,
    out_dir: &Path,
) -> Result<ImitationOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::file(out_dir, e.to_string()))?;
    cfg.save(&out_dir.join("config.json"))?;

    let hp = cfg.hyper;
    let ch = cfg.obs_mode.channels();
    let size = cfg.render_size as usize;
    let domain = cfg.domain(cfg.target_preset);

    let expert_buffer = load_expert_buffer(cfg, demos_dir, seed)?;
    if expert_buffer.len_transitions() < hp.batch_size {
        return Err(Error::validation(format!(
            "expert demos hold {} transitions, batch needs {}",
            expert_buffer.len_transitions(),
            hp.batch_size
        )));
    }
    let mut agent_buffer = ReplayBuffer::new(hp.replay_capacity, hp.stack_depth, false);
    let mut agent: AilAgent<f32> =
        AilAgent::new(ch, size, size, 2, hp, &mut stream(seed, "init", 0))?;

    let mut act_rng = stream(seed, "act", 0);
    let mut update_rng = stream(seed, "update", 0);
    let noise_seed = derive_seed(seed, "agent-stream", 0);

    let mut metrics = MetricsWriter::create(&out_dir.join("metrics.csv"))?;
    let mut evals = Vec::new();

    let mut episode_index = 0u64;
    let mut state: WorldState = reset(derive_seed(seed, "episode", episode_index));
    let mut prev_lum = rgb_to_luminance(&render(&state, &domain))?;
    let mut stack = ObsStack::new(hp.stack_depth, ch, size, size);
    let mut ep_frames: Vec<StoredFrame> = Vec::new();
    let mut ep_actions: Vec<[f64; 2]> = Vec::new();
    let mut ep_sparse: Vec<f64> = Vec::new();
    let mut frame_index = 0u64;
    let mut last_episode_return = 0.0;
    let mut last_disc_loss = 0.0;
    let mut last_critic_loss = 0.0;
    let mut eval_round = 0u64;

    for t in 1..=cfg.total_steps {
        let action = if t as usize <= hp.warmup_steps {
            [act_rng.gen_range(-1.0..1.0), act_rng.gen_range(-1.0..1.0)]
        } else {
            let z = agent.encoder.encode(&stack.as_tensor::<f32>())?;
            let a = explore_action(&agent.actor, &z, hp.explore_sigma, hp.noise_clip, &mut act_rng)?;
            [a[0], a[1]]
        };
        let (next, _dense, sparse, done) = step(&cfg.env, &state, action);
        state = next;
        let rgb = render(&state, &domain);
        let frame = observe(cfg, &rgb, &mut prev_lum, noise_seed, frame_index)?;
        frame_index += 1;
        stack.push(frame.clone());
        ep_frames.push(frame);
        ep_actions.push(action);
        ep_sparse.push(sparse);

        if done {
            last_episode_return = ep_sparse.iter().sum();
            agent_buffer.push_episode(Episode {
                frames: std::mem::take(&mut ep_frames),
                actions: std::mem::take(&mut ep_actions),
                sparse: std::mem::take(&mut ep_sparse),
            })?;
            episode_index += 1;
            state = reset(derive_seed(seed, "episode", episode_index));
            prev_lum = rgb_to_luminance(&render(&state, &domain))?;
            stack.reset();
            metrics.append(&RunMetrics {
                step: t as u64,
                episode_return: last_episode_return,
                discriminator_loss: last_disc_loss,
                critic_loss: last_critic_loss,
                eval_return: None,
            })?;
        }

        let ready = t as usize > hp.warmup_steps
            && t as usize % hp.update_every == 0
            && agent_buffer.len_windows(hp.nstep) >= hp.batch_size;
        if ready {
            let expert_batch = expert_buffer.sample_pairs::<f32, _>(hp.batch_size, &mut update_rng)?;
            let agent_batch = agent_buffer.sample_pairs::<f32, _>(hp.batch_size, &mut update_rng)?;
            last_disc_loss = agent.update_discriminator(
                (&expert_batch.stack_t, &expert_batch.stack_t1),
                (&agent_batch.stack_t, &agent_batch.stack_t1),
                &mut update_rng,
            )?;
            let batch =
                agent_buffer.sample_windows::<f32, _>(hp.batch_size, hp.nstep, &mut update_rng)?;
            let actions = batch.actions.as_ref().unwrap();
            let (critic_loss, _stats) = agent.update_critic(
                &batch.stacks,
                actions,
                batch.sparse.as_deref(),
                cfg.reward_mode,
                &mut update_rng,
            )?;
            last_critic_loss = critic_loss;
            agent.update_actor(&batch.stacks[0])?;
        }

        if t % cfg.eval_interval == 0 {
            eval_round += 1;
            let ret = evaluate_policy(cfg, &agent, &domain, seed, eval_round)?;
            evals.push((t, ret));
            metrics.append(&RunMetrics {
                step: t as u64,
                episode_return: last_episode_return,
                discriminator_loss: last_disc_loss,
                critic_loss: last_critic_loss,
                eval_return: Some(ret),
            })?;
        }
    }

    save_params(&agent.encoder.net, &out_dir.join("encoder.ckpt"))?;
    save_params(&agent.actor, &out_dir.join("actor.ckpt"))?;

    let tail = evals.iter().rev().take(5).map(|(_, r)| *r).collect::<Vec<_>>();
    let final_return = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
    Ok(ImitationOutcome {
        final_return,
        evals,
        metrics_csv: out_dir.join("metrics.csv"),
    })
}
