//! Roll a random policy through the point-mass world, render every preset,
//! and write frames plus a converted event file to ./rollout_out.

use std::fs;
use std::path::Path;

use rand::Rng;

use eblaifo::event_core::{convert_sequence, EventCodecConfig};
use eblaifo::frame_io::{write_events, write_ppm};
use eblaifo::rng::stream;
use eblaifo::toy_world::{make_domain, render, reset, step, DomainPreset, EnvConfig};

fn main() {
    let env = EnvConfig::default();
    let out = Path::new("rollout_out");
    fs::create_dir_all(out).unwrap();

    // One frame per preset from the same state: pure visual mismatch.
    let state = reset(7);
    for preset in DomainPreset::ALL {
        let frame = render(&state, &make_domain(preset));
        write_ppm(&frame, &out.join(format!("preset_{}.ppm", preset.name()))).unwrap();
    }

    // A short random episode in the source domain, converted to events.
    let domain = make_domain(DomainPreset::Source);
    let mut rng = stream(7, "rollout", 0);
    let mut state = reset(7);
    let mut frames = vec![render(&state, &domain)];
    for _ in 0..30 {
        let action = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let (next, dense, sparse, _done) = step(&env, &state, action);
        state = next;
        frames.push(render(&state, &domain));
        if sparse > 0.0 {
            println!("goal touched (dense reward {dense:.3})");
        }
    }
    for (i, f) in frames.iter().enumerate() {
        write_ppm(f, &out.join(format!("frame_{i:03}.ppm"))).unwrap();
    }
    let events = convert_sequence(&frames, &EventCodecConfig::default(), 7).unwrap();
    write_events(&events, &out.join("episode.evb")).unwrap();
    println!(
        "wrote {} frames and {} event frames under {}",
        frames.len(),
        events.len(),
        out.display()
    );
}
