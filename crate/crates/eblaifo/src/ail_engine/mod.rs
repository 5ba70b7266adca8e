//! Latent adversarial imitation from observation.
//!
//! Replay storage for stacked observation pairs, the shared convolutional
//! feature extractor, a latent discriminator whose confidence defines the
//! imitation reward, twin critics with slow-moving targets, and a
//! deterministic tanh actor. Update rules keep a strict gradient routing:
//! the encoder learns only from the critic loss.

mod agent;
mod buffer;
mod hyper;

pub use agent::{
    actor_loss_and_grads, actor_net, clip_grad_norm, combine_reward, critic_loss_and_grads,
    critic_net, disc_loss_and_grads, discriminator_net, explore_action, imitation_reward,
    AilAgent, CriticPair, FeatureExtractor, RewardMode, TargetStats,
};
pub use buffer::{Episode, NstepBatch, ObsMode, ObsStack, ReplayBuffer, SampledBatch, StoredFrame};
pub use hyper::Hyperparams;

#[cfg(test)]
mod tests;
