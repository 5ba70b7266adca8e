//! Verify analytic gradients of the three composite training losses against
//! central differences in double precision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eblaifo::ail_engine::{
    actor_loss_and_grads, actor_net, critic_loss_and_grads, critic_net, disc_loss_and_grads,
    discriminator_net, FeatureExtractor, Hyperparams, RewardMode,
};
use eblaifo::nn_core::{grad_check, grad_check_multi, Network, Tensor};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    // Discriminator loss with gradient penalty.
    let mut disc: Network<f64> = discriminator_net(6, &mut rng);
    let e = Tensor::from_vec(&[3, 12], (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let a = Tensor::from_vec(&[3, 12], (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let coeffs = [0.3, 0.6, 0.8];
    let err = grad_check(
        &mut disc,
        |n| disc_loss_and_grads(n, &e, &a, 1e-6, 10.0, &coeffs).unwrap(),
        200,
        1e-5,
        &mut rng,
    );
    println!("discriminator loss: max relative error {err:.2e}");

    // Critic loss, checked jointly over encoder and both critics.
    let hp = Hyperparams { stack_depth: 2, z_dim: 8, ..Hyperparams::default() };
    let enc = FeatureExtractor::<f64>::new(2, 2, 12, 12, hp.z_dim, &mut rng).unwrap();
    let q1 = critic_net(hp.z_dim + 2, "critic1", &mut rng);
    let q2 = critic_net(hp.z_dim + 2, "critic2", &mut rng);
    let t1 = critic_net(hp.z_dim + 2, "t1", &mut rng);
    let t2 = critic_net(hp.z_dim + 2, "t2", &mut rng);
    let actor = actor_net(hp.z_dim, 2, &mut rng);
    let disc2: Network<f64> = discriminator_net(hp.z_dim, &mut rng);
    // A two-step window exercises the n-step target path.
    let stacks: Vec<Tensor<f64>> = (0..3)
        .map(|_| {
            Tensor::from_vec(&[2, 4, 12, 12], (0..1152).map(|_| rng.gen_range(0.0..1.0)).collect())
        })
        .collect();
    let actions = [[0.3, -0.2], [-0.5, 0.8]];
    let noise = [[0.1, -0.1], [0.0, 0.2]];
    let frozen = enc.net.clone();
    let mut nets = vec![enc.net, q1, q2];
    let err = grad_check_multi(
        &mut nets,
        |ns| {
            let (loss, ge, g1, g2, _) = critic_loss_and_grads(
                &ns[0], &frozen, &ns[1], &ns[2], &t1, &t2, &actor, &disc2, &stacks,
                &actions, None, &hp, RewardMode::ImitationOnly, &noise,
            )
            .unwrap();
            (loss, vec![ge, g1, g2])
        },
        200,
        1e-5,
        &mut rng,
    );
    println!("critic loss (encoder + twin critics): max relative error {err:.2e}");

    // Actor loss.
    let mut actor2: Network<f64> = actor_net(6, 2, &mut rng);
    let q: Network<f64> = critic_net(8, "critic1", &mut rng);
    let z = Tensor::from_vec(&[3, 6], (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let err = grad_check(
        &mut actor2,
        |n| actor_loss_and_grads(n, &q, &z).unwrap(),
        200,
        1e-5,
        &mut rng,
    );
    println!("actor loss: max relative error {err:.2e}");
}
