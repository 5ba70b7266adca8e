//! Miniature mismatch sweep: events vs raw-rgb observation modes on one
//! preset, with the aggregated table and an SVG learning-curve plot.

use std::path::Path;

use eblaifo::ail_engine::{Hyperparams, ObsMode};
use eblaifo::harness::{record_demos, run_table, train_expert, ExperimentConfig};
use eblaifo::toy_world::DomainPreset;

fn main() {
    let cfg = ExperimentConfig {
        hyper: Hyperparams {
            batch_size: 32,
            update_every: 2,
            ..Hyperparams::default()
        },
        render_size: 16,
        seeds: vec![1, 2],
        total_steps: 4000,
        eval_interval: 1000,
        demo_episodes: 20,
        expert_steps: 8000,
        ..ExperimentConfig::default()
    };
    let out = Path::new("table_out");

    let actor = train_expert(&cfg, 1).unwrap();
    record_demos(&cfg, &actor, 0, &out.join("demos")).unwrap();

    let rows = run_table(
        &cfg,
        &[DomainPreset::Full],
        &[ObsMode::Events, ObsMode::RawRgb],
        &out.join("demos"),
        out,
    )
    .unwrap();
    println!("{} result rows; artifacts under {}", rows.len(), out.display());
}
