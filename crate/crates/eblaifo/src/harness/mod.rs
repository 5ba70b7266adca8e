//! Experiment orchestration: expert training, demo recording, imitation runs
//! across visual-mismatch presets, noise ablation, and table/plot emission.

mod demos;
mod expert;
mod imitate;
mod svg;
mod table;

pub use demos::{demo_episode_dirs, record_demos};
pub use expert::{evaluate_expert, expert_sparse_return, train_expert, ExpertStats};
pub use imitate::{run_imitation, ImitationOutcome};
pub use svg::{write_band_plot, Series};
pub use table::{ablate_noise, format_table, run_table, ResultRow};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ail_engine::{Hyperparams, ObsMode, RewardMode};
use crate::error::{Error, Result};
use crate::event_core::EventCodecConfig;
use crate::toy_world::{make_domain, DomainConfig, DomainPreset, EnvConfig};

/// One experiment, fully specified. Serializable so a run is regenerable
/// from its emitted `config.json` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub codec: EventCodecConfig,
    pub hyper: Hyperparams,
    /// Render resolution for every domain in this experiment.
    pub render_size: u32,
    /// Domain the expert demos are rendered in.
    pub source_preset: DomainPreset,
    /// Domain the imitating agent acts in.
    pub target_preset: DomainPreset,
    pub obs_mode: ObsMode,
    pub reward_mode: RewardMode,
    pub seeds: Vec<u64>,
    pub total_steps: u32,
    pub eval_interval: u32,
    pub eval_episodes: u32,
    pub demo_episodes: u32,
    pub expert_steps: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvConfig::default(),
            codec: EventCodecConfig::default(),
            hyper: Hyperparams::default(),
            render_size: 64,
            source_preset: DomainPreset::Source,
            target_preset: DomainPreset::Source,
            obs_mode: ObsMode::Events,
            reward_mode: RewardMode::RlPlusImitation,
            seeds: vec![1, 2, 3, 4, 5],
            total_steps: 60_000,
            eval_interval: 1000,
            eval_episodes: 10,
            demo_episodes: 100,
            expert_steps: 20_000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.codec.validate()?;
        self.hyper.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::validation("at least one seed required"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::validation("eval_episodes must be >= 1"));
        }
        if self.eval_interval == 0 || self.total_steps < self.eval_interval {
            return Err(Error::validation(
                "total_steps must cover at least one eval_interval",
            ));
        }
        let domain = self.domain(self.source_preset);
        domain.validate()?;
        Ok(())
    }

    /// Domain for a preset at this experiment's render resolution.
    pub fn domain(&self, preset: DomainPreset) -> DomainConfig {
        let mut d = make_domain(preset);
        d.render_size = self.render_size;
        d
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e.to_string()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::file(path, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::file(path, e.to_string()))
    }
}
