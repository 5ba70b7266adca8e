//! End-to-end miniature imitation run: expert -> demos -> adversarial
//! imitation from event observations, with a learning curve printed.

use std::path::Path;

use eblaifo::ail_engine::Hyperparams;
use eblaifo::harness::{expert_sparse_return, record_demos, run_imitation, train_expert, ExperimentConfig};
use eblaifo::toy_world::DomainPreset;

fn main() {
    // Small budget so the example finishes in a few minutes on one core.
    let cfg = ExperimentConfig {
        hyper: Hyperparams {
            batch_size: 32,
            update_every: 2,
            ..Hyperparams::default()
        },
        render_size: 16,
        total_steps: 8000,
        eval_interval: 1000,
        demo_episodes: 30,
        expert_steps: 8000,
        target_preset: DomainPreset::Source,
        ..ExperimentConfig::default()
    };

    println!("training expert ...");
    let actor = train_expert(&cfg, 1).unwrap();
    let expert_return = expert_sparse_return(&cfg, &actor, 99, 20).unwrap();
    println!("expert sparse return: {expert_return:.1}");

    let demos = Path::new("imitation_out/demos");
    record_demos(&cfg, &actor, 0, demos).unwrap();

    println!("imitating from observations ({} steps) ...", cfg.total_steps);
    let outcome = run_imitation(&cfg, 1, demos, Path::new("imitation_out/run")).unwrap();
    for (step, ret) in &outcome.evals {
        println!("  step {step:>6}: eval return {ret:.2}");
    }
    println!(
        "final return {:.2} ({:.0}% of expert)",
        outcome.final_return,
        100.0 * outcome.final_return / expert_return.max(1e-9)
    );
}
