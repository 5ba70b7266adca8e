//! Train a small state-based expert, evaluate it, and record demo episodes.

use std::path::Path;

use eblaifo::harness::{evaluate_expert, expert_sparse_return, record_demos, train_expert, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig {
        expert_steps: 6000,
        demo_episodes: 5,
        render_size: 32,
        ..ExperimentConfig::default()
    };
    println!("training expert for {} steps ...", cfg.expert_steps);
    let actor = train_expert(&cfg, 1).unwrap();
    let stats = evaluate_expert(&cfg, &actor, 99, 20).unwrap();
    let sparse = expert_sparse_return(&cfg, &actor, 99, 20).unwrap();
    println!(
        "mean dense return {:.2}, goal-touch rate {:.0}%, sparse return {:.1}",
        stats.mean_dense_return,
        stats.success_rate * 100.0,
        sparse
    );
    let out = Path::new("expert_out");
    let dirs = record_demos(&cfg, &actor, 0, out).unwrap();
    println!("recorded {} demo episodes under {}", dirs.len(), out.display());
}
