use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the adversarial imitation learner. All fields have
/// defaults so a JSON config may override any subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Discount factor γ.
    pub gamma: f64,
    /// Number of consecutive observation frames stacked per input.
    pub stack_depth: usize,
    /// Latent dimension of the shared feature extractor.
    pub z_dim: usize,
    /// Polyak coefficient τ for the target-critic blend.
    pub polyak: f64,
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub disc_lr: f64,
    /// Discriminator outputs are clamped into [ε, 1-ε] before logs.
    pub disc_clamp: f64,
    /// Gradient-penalty weight λ.
    pub lambda_gp: f64,
    /// Std of exploration / target-policy-smoothing noise.
    pub explore_sigma: f64,
    /// Clip bound c for the smoothing noise.
    pub noise_clip: f64,
    pub batch_size: usize,
    /// Environment steps collected per gradient update.
    pub update_every: usize,
    /// Uniform-random warmup steps before learning starts.
    pub warmup_steps: usize,
    /// Global L2 norm bound applied to each update's gradients (0 disables).
    /// Keeps the early, noisy critic from launching the actor's pre-tanh
    /// outputs into saturation, where gradients vanish permanently.
    pub grad_clip: f64,
    /// Reward steps folded into each TD target (n-step returns). Values > 1
    /// propagate reward down the horizon n times faster, which dominates
    /// convergence speed when the encoder must be learned from the critic.
    pub nstep: usize,
    /// Replay capacity in stored frames.
    pub replay_capacity: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma: 0.99,
            stack_depth: 3,
            z_dim: 50,
            polyak: 0.01,
            critic_lr: 1e-3,
            // An order of magnitude below the critic: the actor's tanh head
            // saturates under early, noisy critic gradients at matched rates.
            actor_lr: 1e-4,
            disc_lr: 1e-3,
            disc_clamp: 1e-6,
            lambda_gp: 10.0,
            explore_sigma: 0.2,
            noise_clip: 0.3,
            batch_size: 128,
            update_every: 2,
            warmup_steps: 1000,
            grad_clip: 10.0,
            nstep: 3,
            replay_capacity: 100_000,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::validation("gamma must be in [0,1)"));
        }
        if self.stack_depth == 0 || self.z_dim == 0 || self.batch_size == 0 {
            return Err(Error::validation(
                "stack_depth, z_dim and batch_size must be positive",
            ));
        }
        if !(0.0..=1.0).contains(&self.polyak) {
            return Err(Error::validation("polyak must be in [0,1]"));
        }
        if self.disc_clamp <= 0.0 || self.disc_clamp >= 0.5 {
            return Err(Error::validation("disc_clamp must be in (0, 0.5)"));
        }
        if self.lambda_gp < 0.0 || self.explore_sigma < 0.0 || self.noise_clip < 0.0 {
            return Err(Error::validation(
                "lambda_gp, explore_sigma and noise_clip must be nonnegative",
            ));
        }
        if self.grad_clip < 0.0 {
            return Err(Error::validation("grad_clip must be nonnegative"));
        }
        if self.nstep == 0 {
            return Err(Error::validation("nstep must be at least 1"));
        }
        Ok(())
    }
}
