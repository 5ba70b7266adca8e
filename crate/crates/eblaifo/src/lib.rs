//! Event-based latent adversarial imitation from observations.
//!
//! Converts RGB frame pairs into ternary event frames (log-intensity change
//! thresholding with a simulated one-pixel camera shift), then runs the full
//! adversarial imitation pipeline on stacks of event frames: a shared
//! convolutional feature extractor trained jointly with twin critics, a latent
//! discriminator providing the reward `-log(1 - D)`, and a deterministic
//! policy with clipped exploration noise.
//!
//! The crate is organized as a library; see `examples/` for runnable entry
//! points per capability and `src/bin/eblaifo.rs` for the CLI.

pub mod ail_engine;
pub mod error;
pub mod event_core;
pub mod frame_io;
pub mod harness;
pub mod nn_core;
pub mod rng;
pub mod toy_world;

pub use error::{Error, Result};
