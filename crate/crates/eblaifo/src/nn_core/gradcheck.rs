use rand::seq::SliceRandom;
use rand::Rng;

use super::network::{Gradients, Network};

/// Central-difference verification for a loss over several networks.
///
/// `loss_and_grads` must return the loss and one `Gradients` per network (in
/// order) computed analytically. Up to `samples` parameters are drawn at
/// random across all networks and perturbed by ±h; returns the maximum
/// relative error `|g_a - g_n| / max(1e-8, |g_a| + |g_n|)`.
pub fn grad_check_multi<F, R>(
    nets: &mut [Network<f64>],
    loss_and_grads: F,
    samples: usize,
    h: f64,
    rng: &mut R,
) -> f64
where
    F: Fn(&[Network<f64>]) -> (f64, Vec<Gradients<f64>>),
    R: Rng,
{
    let (_, analytic) = loss_and_grads(nets);
    assert_eq!(analytic.len(), nets.len(), "one gradient set per network");

    // Enumerate parameter coordinates as (net, array, element).
    let mut coords = Vec::new();
    for (ni, net) in nets.iter().enumerate() {
        for (ai, arr) in net.param_arrays().iter().enumerate() {
            for ei in 0..arr.len() {
                coords.push((ni, ai, ei));
            }
        }
    }
    let picked: Vec<(usize, usize, usize)> = if coords.len() <= samples {
        coords
    } else {
        coords.choose_multiple(rng, samples).copied().collect()
    };

    let mut max_rel = 0.0f64;
    for (ni, ai, ei) in picked {
        let ga = analytic[ni].param_arrays()[ai][ei];
        let orig = nets[ni].param_arrays()[ai][ei];

        nets[ni].param_arrays_mut()[ai][ei] = orig + h;
        let (lp, _) = loss_and_grads(nets);
        nets[ni].param_arrays_mut()[ai][ei] = orig - h;
        let (lm, _) = loss_and_grads(nets);
        nets[ni].param_arrays_mut()[ai][ei] = orig;

        let gn = (lp - lm) / (2.0 * h);
        let rel = (ga - gn).abs() / (ga.abs() + gn.abs()).max(1e-8);
        if rel > max_rel {
            max_rel = rel;
        }
    }
    max_rel
}

/// Single-network convenience wrapper.
pub fn grad_check<F, R>(
    net: &mut Network<f64>,
    loss_and_grads: F,
    samples: usize,
    h: f64,
    rng: &mut R,
) -> f64
where
    F: Fn(&Network<f64>) -> (f64, Gradients<f64>),
    R: Rng,
{
    let mut nets = vec![net.clone()];
    let out = grad_check_multi(
        &mut nets,
        |ns| {
            let (l, g) = loss_and_grads(&ns[0]);
            (l, vec![g])
        },
        samples,
        h,
        rng,
    );
    *net = nets.pop().unwrap();
    out
}
