//! Demo recording: roll the expert in the source domain and store each
//! episode as a PPM frame sequence plus a converted event file. No actions
//! are stored — imitation is observation-only.

use std::fs;
use std::path::{Path, PathBuf};

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::event_core::convert_sequence;
use crate::frame_io::{write_events, write_ppm};
use crate::nn_core::{Network, Tensor};
use crate::rng::derive_seed;
use crate::toy_world::{expert_features, render, reset, step};

/// Record `cfg.demo_episodes` expert episodes under `out_dir/ep_NNN/`.
/// Each episode holds `episode_length + 1` frames (`frame_000.ppm` is the
/// initial observation) and an `events.evb` with `episode_length` converted
/// event frames. Returns the episode directories in order.
pub fn record_demos(
    cfg: &ExperimentConfig,
    actor: &Network<f64>,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let domain = cfg.domain(cfg.source_preset);
    fs::create_dir_all(out_dir).map_err(|e| Error::file(out_dir, e.to_string()))?;
    let mut dirs = Vec::new();
    for ep in 0..cfg.demo_episodes {
        let dir = out_dir.join(format!("ep_{ep:03}"));
        fs::create_dir_all(&dir).map_err(|e| Error::file(&dir, e.to_string()))?;
        let mut state = reset(derive_seed(seed, "demo-episode", ep as u64));
        let mut frames = vec![render(&state, &domain)];
        loop {
            let f = expert_features(&state);
            let a = actor.infer(&Tensor::from_vec(&[1, 4], f.to_vec()))?;
            let (next, _dense, _sparse, done) = step(&cfg.env, &state, [a.data[0], a.data[1]]);
            state = next;
            frames.push(render(&state, &domain));
            if done {
                break;
            }
        }
        for (i, frame) in frames.iter().enumerate() {
            write_ppm(frame, &dir.join(format!("frame_{i:03}.ppm")))?;
        }
        let events = convert_sequence(&frames, &cfg.codec, derive_seed(seed, "demo-events", ep as u64))?;
        write_events(&events, &dir.join("events.evb"))?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Episode directories under a demo root, sorted by name.
pub fn demo_episode_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::file(root, e.to_string()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::file(root, "no demo episode directories found"));
    }
    Ok(dirs)
}
