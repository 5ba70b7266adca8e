use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::event_core::{to_two_channel, EventFrame, RgbFrame};
use crate::nn_core::{Scalar, Tensor};

/// Observation representation stored in replay buffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObsMode {
    Events,
    RawRgb,
}

impl ObsMode {
    /// Channels per observation frame fed to the feature extractor.
    pub fn channels(&self) -> usize {
        match self {
            ObsMode::Events => 2,
            ObsMode::RawRgb => 3,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "events" => Ok(ObsMode::Events),
            "raw-rgb" => Ok(ObsMode::RawRgb),
            other => Err(Error::validation(format!("unknown observation mode {other:?}"))),
        }
    }
}

/// One stored observation frame, kept compact; expanded to float channel
/// planes only at sampling time.
#[derive(Debug, Clone)]
pub enum StoredFrame {
    /// Ternary event frame, expanded to (positive, negative) indicators.
    Events(EventFrame),
    /// 8-bit RGB planes scaled to [0,1] on expansion.
    Rgb {
        height: usize,
        width: usize,
        data: Vec<u8>,
    },
}

impl StoredFrame {
    pub fn from_rgb(frame: &RgbFrame) -> Self {
        StoredFrame::Rgb {
            height: frame.height,
            width: frame.width,
            data: frame
                .data
                .iter()
                .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            StoredFrame::Events(e) => (2, e.height, e.width),
            StoredFrame::Rgb { height, width, .. } => (3, *height, *width),
        }
    }

    /// Write `channels * height * width` plane-major values into `out`.
    pub fn expand<T: Scalar>(&self, out: &mut [T]) {
        match self {
            StoredFrame::Events(e) => {
                for (o, v) in out.iter_mut().zip(to_two_channel(e)) {
                    *o = T::from_f64(v).unwrap();
                }
            }
            StoredFrame::Rgb {
                height,
                width,
                data,
            } => {
                // Interleaved RGB to channel planes.
                let n = height * width;
                for (i, px) in data.chunks_exact(3).enumerate() {
                    out[i] = T::from_f64(px[0] as f64 / 255.0).unwrap();
                    out[n + i] = T::from_f64(px[1] as f64 / 255.0).unwrap();
                    out[2 * n + i] = T::from_f64(px[2] as f64 / 255.0).unwrap();
                }
            }
        }
    }
}

/// One episode of observations; agent episodes also carry actions and sparse
/// rewards, aligned so `actions[t]` is the action that produced the state
/// observed in `frames[t]` and `sparse[t]` is the reward it earned.
#[derive(Debug, Clone)]
pub struct Episode {
    pub frames: Vec<StoredFrame>,
    pub actions: Vec<[f64; 2]>,
    pub sparse: Vec<f64>,
}

/// A sampled batch of consecutive observation-stack pairs.
#[derive(Debug, Clone)]
pub struct SampledBatch<T> {
    /// [N, d*channels, H, W]
    pub stack_t: Tensor<T>,
    pub stack_t1: Tensor<T>,
    /// Present only for agent buffers.
    pub actions: Option<Vec<[f64; 2]>>,
    pub sparse: Option<Vec<f64>>,
}

/// A sampled batch of `n`-step windows: `n + 1` consecutive observation
/// stacks per sample, with the first action and the `n` per-step sparse
/// rewards along the window.
#[derive(Debug, Clone)]
pub struct NstepBatch<T> {
    /// `n + 1` tensors of shape [N, d*channels, H, W]; `stacks[k]` holds the
    /// observation stacks `k` steps after the window start.
    pub stacks: Vec<Tensor<T>>,
    /// Action taken at the window start; present only for agent buffers.
    pub actions: Option<Vec<[f64; 2]>>,
    /// `sparse[k]` are the rewards earned by step `k` of each window
    /// (`k` in `0..n`); present only for agent buffers.
    pub sparse: Option<Vec<Vec<f64>>>,
}

/// Ring buffer of episodes bounded by a total frame budget. The expert
/// variant stores observations only.
#[derive(Debug)]
pub struct ReplayBuffer {
    episodes: VecDeque<Episode>,
    capacity_frames: usize,
    stack_depth: usize,
    expert: bool,
    total_frames: usize,
}

impl ReplayBuffer {
    pub fn new(capacity_frames: usize, stack_depth: usize, expert: bool) -> Self {
        assert!(stack_depth >= 1);
        ReplayBuffer {
            episodes: VecDeque::new(),
            capacity_frames,
            stack_depth,
            expert,
            total_frames: 0,
        }
    }

    pub fn push_episode(&mut self, episode: Episode) -> Result<()> {
        if episode.frames.len() < self.stack_depth + 1 {
            return Err(Error::validation(format!(
                "episode of {} frames too short for stack depth {}",
                episode.frames.len(),
                self.stack_depth
            )));
        }
        if self.expert {
            if !episode.actions.is_empty() || !episode.sparse.is_empty() {
                return Err(Error::validation("expert buffer stores observations only"));
            }
        } else if episode.actions.len() != episode.frames.len()
            || episode.sparse.len() != episode.frames.len()
        {
            // frames[j] = observation after step j+... one action/reward per
            // stored frame, offset by one step (see transition_at).
            return Err(Error::validation(
                "agent episode needs one action and sparse reward per frame",
            ));
        }
        self.total_frames += episode.frames.len();
        self.episodes.push_back(episode);
        while self.total_frames > self.capacity_frames && self.episodes.len() > 1 {
            if let Some(old) = self.episodes.pop_front() {
                self.total_frames -= old.frames.len();
            }
        }
        Ok(())
    }

    fn transitions_in(&self, ep: &Episode) -> usize {
        ep.frames.len().saturating_sub(self.stack_depth)
    }

    /// Number of sampleable (stack, next stack) pairs.
    pub fn len_transitions(&self) -> usize {
        self.episodes.iter().map(|e| self.transitions_in(e)).sum()
    }

    fn windows_in(&self, ep: &Episode, n: usize) -> usize {
        ep.frames.len().saturating_sub(self.stack_depth + n - 1)
    }

    /// Number of sampleable `n`-step windows (which never straddle episode
    /// boundaries).
    pub fn len_windows(&self, n: usize) -> usize {
        self.episodes.iter().map(|e| self.windows_in(e, n)).sum()
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Uniformly sample consecutive stack pairs; pairs never straddle
    /// episode boundaries.
    pub fn sample_pairs<T: Scalar, R: Rng>(
        &self,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<SampledBatch<T>> {
        let mut batch = self.sample_windows(batch_size, 1, rng)?;
        let stack_t1 = batch.stacks.pop().unwrap();
        let stack_t = batch.stacks.pop().unwrap();
        Ok(SampledBatch {
            stack_t,
            stack_t1,
            actions: batch.actions,
            sparse: batch.sparse.map(|mut s| s.pop().unwrap()),
        })
    }

    /// Uniformly sample `n`-step windows of `n + 1` consecutive stacks;
    /// windows never straddle episode boundaries.
    pub fn sample_windows<T: Scalar, R: Rng>(
        &self,
        batch_size: usize,
        n: usize,
        rng: &mut R,
    ) -> Result<NstepBatch<T>> {
        assert!(n >= 1);
        let total = self.len_windows(n);
        if total < batch_size {
            return Err(Error::validation(format!(
                "buffer holds {total} windows of {n} steps, batch needs {batch_size}"
            )));
        }
        let (ch, h, w) = self.episodes[0].frames[0].dims();
        let d = self.stack_depth;
        let frame_len = ch * h * w;
        let stack_len = d * frame_len;
        let mut stacks = vec![vec![T::zero(); batch_size * stack_len]; n + 1];
        let mut actions = if self.expert { None } else { Some(Vec::new()) };
        let mut sparse = if self.expert {
            None
        } else {
            Some(vec![Vec::new(); n])
        };
        for b in 0..batch_size {
            let mut idx = rng.gen_range(0..total);
            let mut ep = &self.episodes[0];
            for e in &self.episodes {
                let m = self.windows_in(e, n);
                if idx < m {
                    ep = e;
                    break;
                }
                idx -= m;
            }
            // Window `idx` starts with the stack ending at frame
            // j = idx + d - 1; stack k of the window ends at j + k.
            let j = idx + d - 1;
            for (k, stack) in stacks.iter_mut().enumerate() {
                for (slot, frame_idx) in (j + k + 1 - d..=j + k).enumerate() {
                    ep.frames[frame_idx]
                        .expand(&mut stack[b * stack_len + slot * frame_len..][..frame_len]);
                }
            }
            if let (Some(actions), Some(sparse)) = (actions.as_mut(), sparse.as_mut()) {
                actions.push(ep.actions[j + 1]);
                for (k, s) in sparse.iter_mut().enumerate() {
                    s.push(ep.sparse[j + 1 + k]);
                }
            }
        }
        Ok(NstepBatch {
            stacks: stacks
                .into_iter()
                .map(|s| Tensor::from_vec(&[batch_size, d * ch, h, w], s))
                .collect(),
            actions,
            sparse,
        })
    }
}

/// Rolling observation window used while acting; zero-padded until the first
/// `d` frames arrive (acting only, never stored transitions).
#[derive(Debug)]
pub struct ObsStack {
    frames: VecDeque<StoredFrame>,
    depth: usize,
    channels: usize,
    height: usize,
    width: usize,
}

impl ObsStack {
    pub fn new(depth: usize, channels: usize, height: usize, width: usize) -> Self {
        ObsStack {
            frames: VecDeque::new(),
            depth,
            channels,
            height,
            width,
        }
    }

    pub fn reset(&mut self) {
        self.frames.clear();
    }

    pub fn push(&mut self, frame: StoredFrame) {
        if self.frames.len() == self.depth {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
    }

    /// Current stack as a batch-of-one tensor [1, d*ch, H, W].
    pub fn as_tensor<T: Scalar>(&self) -> Tensor<T> {
        let frame_len = self.channels * self.height * self.width;
        let mut data = vec![T::zero(); self.depth * frame_len];
        let pad = self.depth - self.frames.len();
        for (i, f) in self.frames.iter().enumerate() {
            f.expand(&mut data[(pad + i) * frame_len..][..frame_len]);
        }
        Tensor::from_vec(
            &[1, self.depth * self.channels, self.height, self.width],
            data,
        )
    }
}
