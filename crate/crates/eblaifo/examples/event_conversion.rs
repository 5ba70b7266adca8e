//! Convert a tiny synthetic frame pair to events and demonstrate the
//! illumination invariances of the log-difference transform.

use eblaifo::event_core::{
    affine_perturb, convert_pair, rgb_to_luminance, AffinePerturbation, EventCodecConfig, RgbFrame,
};

fn checker(size: usize, phase: usize) -> RgbFrame {
    let mut data = vec![0.0; size * size * 3];
    for r in 0..size {
        for c in 0..size {
            let v = if ((r + c + phase) / 2) % 2 == 0 { 0.8 } else { 0.3 };
            let i = (r * size + c) * 3;
            data[i..i + 3].copy_from_slice(&[v, v, v]);
        }
    }
    RgbFrame::new(size, size, data).unwrap()
}

fn main() {
    let cfg = EventCodecConfig::default();
    let prev = rgb_to_luminance(&checker(8, 0)).unwrap();
    let curr = rgb_to_luminance(&checker(8, 1)).unwrap();

    let events = convert_pair(&curr, &prev, &cfg, 0, 0).unwrap();
    println!("threshold C = {}", cfg.threshold_c);
    for row in 0..events.height {
        let line: String = events.data[row * events.width..(row + 1) * events.width]
            .iter()
            .map(|v| match v {
                1 => '+',
                -1 => '-',
                _ => '.',
            })
            .collect();
        println!("  {line}");
    }
    println!("{} active pixels", events.active_count());

    // Scaling both frames by a gain leaves the events unchanged: the log
    // difference cancels any per-frame multiplicative illumination change.
    let gain = AffinePerturbation { alpha: 0.5, beta: 0.0, eta: 0.0 };
    let dim_prev = affine_perturb(&prev, &gain).unwrap();
    let dim_curr = affine_perturb(&curr, &gain).unwrap();
    let dim_events = convert_pair(&dim_curr, &dim_prev, &cfg, 0, 0).unwrap();
    assert_eq!(events.data, dim_events.data);
    println!("events identical after halving scene brightness (gain invariance)");
}
