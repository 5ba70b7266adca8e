use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::event_core::EventFrame;
use crate::nn_core::{
    adam_step, grad_check, grad_check_multi, AdamConfig, AdamState, Layer, Network, Tensor,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random ternary-indicator stacks shaped like `d` stacked 2-channel frames.
fn random_stack(n: usize, ch: usize, h: usize, w: usize, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let data = (0..n * ch * h * w)
        .map(|_| if rng.gen_bool(0.2) { 1.0 } else { 0.0 })
        .collect();
    Tensor::from_vec(&[n, ch, h, w], data)
}

fn zero_final_with_bias(net: &mut Network<f64>, bias: f64) {
    net.zero_final_layer();
    for l in net.layers.iter_mut().rev() {
        if let Layer::Dense(d) = l {
            d.bias[0] = bias;
            return;
        }
    }
}

fn small_hp() -> Hyperparams {
    Hyperparams {
        stack_depth: 2,
        z_dim: 8,
        ..Hyperparams::default()
    }
}

/// Small full agent setup used by several tests: 2-channel 12x12 frames,
/// stack depth 2.
fn small_agent(seed: u64) -> AilAgent<f64> {
    AilAgent::new(2, 12, 12, 2, small_hp(), &mut rng(seed)).unwrap()
}

// ---- imitation reward ----

#[test]
fn imitation_reward_matches_analytic_values() {
    assert!((imitation_reward(0.5, 1e-6) - std::f64::consts::LN_2).abs() < 1e-12);
    assert!((imitation_reward(0.9, 1e-6) - 2.302585).abs() < 1e-5);
}

#[test]
fn imitation_reward_clamps_extremes() {
    let eps = 1e-6;
    let lo = imitation_reward(0.0, eps);
    let hi = imitation_reward(1.0, eps);
    assert!(lo > 0.0 && lo < 2e-6, "near-zero reward at D=0, got {lo}");
    assert!((hi - (-(eps).ln())).abs() < 1e-9, "cap at -ln eps, got {hi}");
    // Bounds hold for any input, even out-of-range ones.
    for d in [-1.0, 0.0, 0.3, 1.0, 2.0] {
        let r = imitation_reward(d, eps);
        assert!(r >= -(1.0f64 - eps).ln() && r <= -(eps.ln()));
    }
}

#[test]
fn combine_reward_modes() {
    assert_eq!(combine_reward(0.0, 0.69, RewardMode::RlPlusImitation), 0.69);
    assert_eq!(combine_reward(1.0, 0.0, RewardMode::RlPlusImitation), 1.0);
    assert_eq!(combine_reward(1.0, 0.5, RewardMode::ImitationOnly), 0.5);
}

// ---- discriminator loss ----

#[test]
fn uniform_discriminator_loss_is_two_ln2() {
    let mut r = rng(1);
    let mut disc: Network<f64> = discriminator_net(8, &mut r);
    disc.zero_final_layer(); // D = 0.5 everywhere
    let e = Tensor::from_vec(&[4, 16], (0..64).map(|i| (i % 7) as f64 * 0.1).collect());
    let a = Tensor::from_vec(&[4, 16], (0..64).map(|i| (i % 5) as f64 * 0.1).collect());
    let (loss, _) = disc_loss_and_grads(&disc, &e, &a, 1e-6, 0.0, &[]).unwrap();
    assert!((loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    // With a zeroed final layer the logit has zero input gradient, so the
    // norm-to-one penalty contributes exactly lambda.
    let coeffs = [0.2, 0.5, 0.7, 0.9];
    let (loss_gp, _) = disc_loss_and_grads(&disc, &e, &a, 1e-6, 10.0, &coeffs).unwrap();
    assert!((loss_gp - (2.0 * std::f64::consts::LN_2 + 10.0)).abs() < 1e-12);
}

#[test]
fn identical_batches_are_stationary_for_uniform_discriminator() {
    let mut r = rng(2);
    let mut disc: Network<f64> = discriminator_net(8, &mut r);
    disc.zero_final_layer();
    let batch = random_stack(5, 16, 1, 1, &mut r);
    let batch = Tensor::from_vec(&[5, 16], batch.data);
    let (_, grads) = disc_loss_and_grads(&disc, &batch, &batch, 1e-6, 0.0, &[]).unwrap();
    for arr in grads.param_arrays() {
        assert!(arr.iter().all(|v| *v == 0.0), "nonzero grad at stationary point");
    }
}

#[test]
fn swapping_batches_negates_uniform_discriminator_gradient() {
    let mut r = rng(3);
    let mut disc: Network<f64> = discriminator_net(8, &mut r);
    disc.zero_final_layer(); // D = 0.5: per-sample upstreams are +-0.5/n
    let e = Tensor::from_vec(&[4, 16], (0..64).map(|_| r.gen_range(-1.0..1.0)).collect());
    let a = Tensor::from_vec(&[4, 16], (0..64).map(|_| r.gen_range(-1.0..1.0)).collect());
    let (_, g1) = disc_loss_and_grads(&disc, &e, &a, 1e-6, 0.0, &[]).unwrap();
    let (_, g2) = disc_loss_and_grads(&disc, &a, &e, 1e-6, 0.0, &[]).unwrap();
    for (x, y) in g1.param_arrays().iter().zip(g2.param_arrays()) {
        for (u, v) in x.iter().zip(y.iter()) {
            assert!((u + v).abs() < 1e-12, "{u} vs {v}");
        }
    }
}

#[test]
fn discriminator_gradients_match_central_differences() {
    let mut r = rng(4);
    let disc: Network<f64> = discriminator_net(6, &mut r);
    let e = Tensor::from_vec(&[3, 12], (0..36).map(|_| r.gen_range(-1.0..1.0)).collect());
    let a = Tensor::from_vec(&[3, 12], (0..36).map(|_| r.gen_range(-1.0..1.0)).collect());
    let coeffs = [0.3, 0.6, 0.8];
    let mut net = disc;
    let err = grad_check(
        &mut net,
        |n| disc_loss_and_grads(n, &e, &a, 1e-6, 10.0, &coeffs).unwrap(),
        150,
        1e-5,
        &mut r,
    );
    assert!(err < 1e-4, "max relative error {err}");
}

// ---- critic update ----

struct CriticFixture {
    encoder: Network<f64>,
    q1: Network<f64>,
    q2: Network<f64>,
    target1: Network<f64>,
    target2: Network<f64>,
    actor: Network<f64>,
    disc: Network<f64>,
    stack_t: Tensor<f64>,
    stack_t1: Tensor<f64>,
    actions: Vec<[f64; 2]>,
    sparse: Vec<f64>,
    noise: Vec<[f64; 2]>,
    hp: Hyperparams,
}

fn critic_fixture(seed: u64) -> CriticFixture {
    let mut r = rng(seed);
    let hp = small_hp();
    let enc = FeatureExtractor::<f64>::new(2, 2, 12, 12, hp.z_dim, &mut r).unwrap();
    let q1 = critic_net(hp.z_dim + 2, "critic1", &mut r);
    let q2 = critic_net(hp.z_dim + 2, "critic2", &mut r);
    let target1 = critic_net(hp.z_dim + 2, "t1", &mut r);
    let target2 = critic_net(hp.z_dim + 2, "t2", &mut r);
    let actor = actor_net(hp.z_dim, 2, &mut r);
    let disc = discriminator_net(hp.z_dim, &mut r);
    let n = 3;
    let stack_t = random_stack(n, 4, 12, 12, &mut r);
    let stack_t1 = random_stack(n, 4, 12, 12, &mut r);
    let actions: Vec<[f64; 2]> = (0..n)
        .map(|_| [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)])
        .collect();
    let sparse: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let noise: Vec<[f64; 2]> = (0..n)
        .map(|_| [r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3)])
        .collect();
    CriticFixture {
        encoder: enc.net,
        q1,
        q2,
        target1,
        target2,
        actor,
        disc,
        stack_t,
        stack_t1,
        actions,
        sparse,
        noise,
        hp,
    }
}

#[test]
fn critic_gradients_match_central_differences() {
    let f = critic_fixture(5);
    let frozen = f.encoder.clone();
    let mut nets = vec![f.encoder.clone(), f.q1.clone(), f.q2.clone()];
    let stacks = [f.stack_t.clone(), f.stack_t1.clone()];
    let sparse = [f.sparse.clone()];
    let mut r = rng(6);
    let err = grad_check_multi(
        &mut nets,
        |ns| {
            let (loss, ge, g1, g2, _) = critic_loss_and_grads(
                &ns[0],
                &frozen,
                &ns[1],
                &ns[2],
                &f.target1,
                &f.target2,
                &f.actor,
                &f.disc,
                &stacks,
                &f.actions,
                Some(&sparse),
                &f.hp,
                RewardMode::RlPlusImitation,
                &f.noise,
            )
            .unwrap();
            (loss, vec![ge, g1, g2])
        },
        120,
        1e-5,
        &mut r,
    );
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn td_target_takes_pessimistic_min_with_discount() {
    let mut f = critic_fixture(7);
    // Constant target critics at 2.0 and 3.0; uniform discriminator so the
    // imitation reward is ln 2; sparse chosen so the total reward is 1.
    zero_final_with_bias(&mut f.target1, 2.0);
    zero_final_with_bias(&mut f.target2, 3.0);
    f.disc.zero_final_layer();
    let sparse = [vec![1.0 - std::f64::consts::LN_2; 3]];
    let stacks = [f.stack_t.clone(), f.stack_t1.clone()];
    let run = |hp: &Hyperparams| {
        critic_loss_and_grads(
            &f.encoder,
            &f.encoder,
            &f.q1,
            &f.q2,
            &f.target1,
            &f.target2,
            &f.actor,
            &f.disc,
            &stacks,
            &f.actions,
            Some(&sparse),
            hp,
            RewardMode::RlPlusImitation,
            &f.noise,
        )
        .unwrap()
    };
    let (_, _, _, _, stats) = run(&f.hp);
    // y = 1 + 0.99 * min(2, 3) = 2.98 for every sample.
    assert!((stats.mean - 2.98).abs() < 1e-12, "mean {}", stats.mean);
    assert!((stats.min - 2.98).abs() < 1e-12);
    assert!((stats.max - 2.98).abs() < 1e-12);

    let hp0 = Hyperparams { gamma: 0.0, ..f.hp };
    let (_, _, _, _, stats0) = run(&hp0);
    assert!((stats0.mean - 1.0).abs() < 1e-12, "gamma=0 leaves the reward");
}

#[test]
fn multi_step_target_compounds_rewards_with_discount() {
    let mut f = critic_fixture(9);
    zero_final_with_bias(&mut f.target1, 2.0);
    zero_final_with_bias(&mut f.target2, 3.0);
    f.disc.zero_final_layer(); // constant imitation reward ln 2
    let mut r = rng(10);
    let stack_t2 = random_stack(3, 4, 12, 12, &mut r);
    let stacks = [f.stack_t.clone(), f.stack_t1.clone(), stack_t2];
    let sparse = [vec![0.5; 3], vec![-1.25; 3]];
    let (_, _, _, _, stats) = critic_loss_and_grads(
        &f.encoder,
        &f.encoder,
        &f.q1,
        &f.q2,
        &f.target1,
        &f.target2,
        &f.actor,
        &f.disc,
        &stacks,
        &f.actions,
        Some(&sparse),
        &f.hp,
        RewardMode::RlPlusImitation,
        &f.noise,
    )
    .unwrap();
    // y = (0.5 + ln 2) + γ(-1.25 + ln 2) + γ² min(2, 3), identically per row.
    let ln2 = std::f64::consts::LN_2;
    let g = f.hp.gamma;
    let expect = (0.5 + ln2) + g * (-1.25 + ln2) + g * g * 2.0;
    assert!(
        (stats.mean - expect).abs() < 1e-9,
        "mean {} expect {expect}",
        stats.mean
    );
    assert!((stats.max - stats.min).abs() < 1e-9);
}

#[test]
fn repeated_regression_reaches_the_fixed_target() {
    let mut f = critic_fixture(8);
    f.disc.zero_final_layer(); // constant reward ln 2
    let hp = Hyperparams { gamma: 0.0, ..f.hp };
    let mut opt1 = AdamState::new(&f.q1, AdamConfig::with_lr(0.01));
    let mut opt2 = AdamState::new(&f.q2, AdamConfig::with_lr(0.01));
    let stacks = [f.stack_t.clone(), f.stack_t1.clone()];
    for _ in 0..800 {
        let (_, _, g1, g2, _) = critic_loss_and_grads(
            &f.encoder,
            &f.encoder,
            &f.q1,
            &f.q2,
            &f.target1,
            &f.target2,
            &f.actor,
            &f.disc,
            &stacks,
            &f.actions,
            None,
            &hp,
            RewardMode::ImitationOnly,
            &f.noise,
        )
        .unwrap();
        adam_step(&mut f.q1, &g1, &mut opt1).unwrap();
        adam_step(&mut f.q2, &g2, &mut opt2).unwrap();
    }
    // Q(z, a) should now sit at the constant target r = ln 2.
    let z = f.encoder.infer(&f.stack_t).unwrap();
    let mut za = Vec::new();
    for i in 0..3 {
        za.extend_from_slice(&z.data[i * 8..(i + 1) * 8]);
        za.push(f.actions[i][0]);
        za.push(f.actions[i][1]);
    }
    let q = f.q1.infer(&Tensor::from_vec(&[3, 10], za)).unwrap();
    for v in &q.data {
        assert!(
            (v - std::f64::consts::LN_2).abs() < 0.05,
            "Q = {v}, want ln 2"
        );
    }
}

// ---- actor update ----

#[test]
fn zero_critic_means_zero_actor_gradient() {
    let mut r = rng(9);
    let actor: Network<f64> = actor_net(8, 2, &mut r);
    let mut q1: Network<f64> = critic_net(10, "critic1", &mut r);
    q1.zero_final_layer();
    // Hollow out every critic layer so Q is identically zero.
    for l in q1.layers.iter_mut() {
        if let Layer::Dense(d) = l {
            d.weight.iter_mut().for_each(|v| *v = 0.0);
            d.bias.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let z = Tensor::from_vec(&[4, 8], (0..32).map(|_| r.gen_range(-1.0..1.0)).collect());
    let (loss, grads) = actor_loss_and_grads(&actor, &q1, &z).unwrap();
    assert_eq!(loss, 0.0);
    for arr in grads.param_arrays() {
        assert!(arr.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn actor_gradients_match_central_differences() {
    let mut r = rng(10);
    let mut actor: Network<f64> = actor_net(6, 2, &mut r);
    let q1: Network<f64> = critic_net(8, "critic1", &mut r);
    let z = Tensor::from_vec(&[3, 6], (0..18).map(|_| r.gen_range(-1.0..1.0)).collect());
    let err = grad_check(
        &mut actor,
        |a| actor_loss_and_grads(a, &q1, &z).unwrap(),
        120,
        1e-5,
        &mut r,
    );
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn actor_converges_toward_quadratic_critic_optimum() {
    // Oracle objective mean ||pi(z) - a*||^2: optimum at a* regardless of z.
    let mut r = rng(11);
    let mut actor: Network<f64> = actor_net(8, 2, &mut r);
    let target = [0.5, -0.3];
    let z = Tensor::from_vec(&[8, 8], (0..64).map(|_| r.gen_range(-1.0..1.0)).collect());
    // Moderate rate: larger Adam steps overshoot the tanh into saturation.
    let mut opt = AdamState::new(&actor, AdamConfig::with_lr(0.001));
    for _ in 0..600 {
        let cache = actor.forward(&z).unwrap();
        let a = cache.output();
        let up: Vec<f64> = a
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| 2.0 * (v - target[i % 2]) / 8.0)
            .collect();
        let (grads, _) = actor.backward(&cache, &Tensor::from_vec(&[8, 2], up));
        adam_step(&mut actor, &grads, &mut opt).unwrap();
    }
    let a = actor.infer(&z).unwrap();
    for (i, v) in a.data.iter().enumerate() {
        assert!(
            (v - target[i % 2]).abs() < 0.05,
            "component {i} = {v}, want {}",
            target[i % 2]
        );
    }
}

// ---- gradient routing through the full agent ----

#[test]
fn encoder_learns_only_from_the_critic_update() {
    let mut agent = small_agent(12);
    let mut r = rng(13);
    let e0 = random_stack(4, 4, 12, 12, &mut r);
    let e1 = random_stack(4, 4, 12, 12, &mut r);
    let a0 = random_stack(4, 4, 12, 12, &mut r);
    let a1 = random_stack(4, 4, 12, 12, &mut r);
    let actions: Vec<[f64; 2]> = (0..4).map(|_| [r.gen_range(-1.0..1.0), 0.1]).collect();

    let enc_before = agent.encoder.net.params_flat();
    agent
        .update_discriminator((&e0, &e1), (&a0, &a1), &mut r)
        .unwrap();
    assert_eq!(
        agent.encoder.net.params_flat(),
        enc_before,
        "discriminator step must not touch the encoder"
    );

    let critic_before = agent.critics.q1.params_flat();
    agent.update_actor(&a0).unwrap();
    assert_eq!(
        agent.encoder.net.params_flat(),
        enc_before,
        "actor step must not touch the encoder"
    );
    assert_eq!(
        agent.critics.q1.params_flat(),
        critic_before,
        "actor step must not touch the critic"
    );

    agent
        .update_critic(
            &[a0.clone(), a1.clone()],
            &actions,
            None,
            RewardMode::ImitationOnly,
            &mut r,
        )
        .unwrap();
    assert_ne!(
        agent.encoder.net.params_flat(),
        enc_before,
        "critic step must train the encoder"
    );
}

#[test]
fn target_critics_track_online_critics_by_polyak_steps() {
    let mut agent = small_agent(14);
    let gap0: f64 = agent
        .critics
        .q1
        .params_flat()
        .iter()
        .zip(agent.critics.target1.params_flat())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert_eq!(gap0, 0.0, "targets start as exact copies");
    // Nudge the online critic, then a polyak step closes 1% of the gap.
    for arr in agent.critics.q1.param_arrays_mut() {
        for v in arr.iter_mut() {
            *v += 1.0;
        }
    }
    agent.critics.polyak_update();
    let gap: f64 = agent
        .critics
        .q1
        .params_flat()
        .iter()
        .zip(agent.critics.target1.params_flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!((gap - 0.99).abs() < 1e-12, "per-parameter gap {gap}");
}

// ---- exploration noise ----

#[test]
fn zero_sigma_exploration_is_deterministic_policy() {
    let mut r = rng(15);
    let actor: Network<f64> = actor_net(8, 2, &mut r);
    let z = Tensor::from_vec(&[1, 8], (0..8).map(|_| r.gen_range(-1.0..1.0)).collect());
    let a = explore_action(&actor, &z, 0.0, 0.3, &mut r).unwrap();
    let mean = actor.infer(&z).unwrap();
    assert_eq!(a, mean.to_f64());
}

#[test]
fn exploration_noise_matches_truncated_normal_statistics() {
    let (sigma, clip) = (0.2, 0.3);
    let mut r = rng(16);
    let mut actor: Network<f64> = actor_net(4, 2, &mut r);
    // Zero the whole actor so actions are exactly the clipped noise.
    for arr in actor.param_arrays_mut() {
        arr.iter_mut().for_each(|v| *v = 0.0);
    }
    let z = Tensor::zeros(&[1, 4]);
    let mut sq = 0.0;
    let mut count = 0usize;
    for _ in 0..5000 {
        let a = explore_action(&actor, &z, sigma, clip, &mut r).unwrap();
        for v in a {
            assert!(v.abs() <= clip + 1e-12);
            sq += v * v;
            count += 1;
        }
    }
    let empirical = (sq / count as f64).sqrt();

    // Oracle: std of clip(N(0, sigma^2), -c, c) by numeric integration of
    // x^2 pdf over [-c, c] plus the clipped tail mass at +-c.
    let pdf = |x: f64| (-x * x / (2.0 * sigma * sigma)).exp()
        / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let steps = 20_000;
    let hstep = clip / steps as f64;
    let mut inner_sq = 0.0;
    let mut inner_mass = 0.0;
    for i in 0..steps {
        let x = (i as f64 + 0.5) * hstep;
        inner_sq += 2.0 * x * x * pdf(x) * hstep;
        inner_mass += 2.0 * pdf(x) * hstep;
    }
    let oracle = (inner_sq + clip * clip * (1.0 - inner_mass)).sqrt();
    assert!(
        (empirical - oracle).abs() / oracle < 0.1,
        "empirical {empirical} vs oracle {oracle}"
    );
}

// ---- feature extractor ----

#[test]
fn stack_encoding_is_deterministic_and_shape_checked() {
    let mut r = rng(17);
    let enc = FeatureExtractor::<f64>::new(3, 2, 16, 16, 50, &mut r).unwrap();
    let stack = random_stack(1, 6, 16, 16, &mut r);
    let z1 = enc.encode(&stack).unwrap();
    let z2 = enc.encode(&stack).unwrap();
    assert_eq!(z1.data, z2.data);
    assert_eq!(z1.shape, vec![1, 50]);
    assert!(z1.data.iter().all(|v| v.abs() < 1.0), "tanh range");

    let wrong = random_stack(1, 4, 16, 16, &mut r);
    assert!(enc.encode(&wrong).is_err(), "wrong stack depth must fail");
}

#[test]
fn zeroed_head_maps_empty_stacks_to_the_origin() {
    let mut r = rng(18);
    let mut enc = FeatureExtractor::<f64>::new(3, 2, 16, 16, 50, &mut r).unwrap();
    enc.net.zero_final_layer();
    let z = enc.encode(&Tensor::zeros(&[1, 6, 16, 16])).unwrap();
    assert!(z.data.iter().all(|v| *v == 0.0));
}

#[test]
fn every_input_pixel_can_reach_the_latent() {
    // 14x14 is a size where the two stride-2 valid convolutions cover every
    // input pixel (no receptive-field gaps at the borders).
    let mut r = rng(19);
    let enc = FeatureExtractor::<f64>::new(2, 2, 14, 14, 8, &mut r).unwrap();
    let base = Tensor::<f64>::zeros(&[1, 4, 14, 14]);
    let z0 = enc.encode(&base).unwrap();
    // Probe a few scattered pixels, including the far corner; each must move
    // the latent.
    for idx in [0, 77, 195, 391, 584, 783] {
        let mut probe = base.clone();
        probe.data[idx] = 1.0;
        let z = enc.encode(&probe).unwrap();
        let diff: f64 = z
            .data
            .iter()
            .zip(&z0.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff > 0.0, "pixel {idx} is dead");
    }
}

// ---- replay buffer ----

fn event_episode(len: usize, fill: i8) -> Episode {
    let frames = (0..len)
        .map(|_| StoredFrame::Events(EventFrame::new(4, 4, vec![fill; 16]).unwrap()))
        .collect();
    Episode {
        frames,
        actions: (0..len).map(|i| [i as f64 * 0.01, 0.0]).collect(),
        sparse: (0..len).map(|i| i as f64).collect(),
    }
}

#[test]
fn transition_count_matches_the_index_window() {
    // 100 frames at depth 3: stacks may end at indices 2..=98, i.e. 97 pairs.
    let mut buf = ReplayBuffer::new(10_000, 3, false);
    buf.push_episode(event_episode(100, 1)).unwrap();
    assert_eq!(buf.len_transitions(), 97);
}

#[test]
fn sampling_more_than_stored_fails() {
    let mut buf = ReplayBuffer::new(10_000, 3, false);
    buf.push_episode(event_episode(10, 1)).unwrap();
    assert_eq!(buf.len_transitions(), 7);
    let mut r = rng(20);
    assert!(buf.sample_pairs::<f64, _>(8, &mut r).is_err());
    assert!(buf.sample_pairs::<f64, _>(7, &mut r).is_ok());
}

#[test]
fn sampled_pairs_never_straddle_episodes() {
    // Two episodes with distinct constant polarities: any mixed stack would
    // contain both positive- and negative-channel activity.
    let mut buf = ReplayBuffer::new(10_000, 3, false);
    buf.push_episode(event_episode(20, 1)).unwrap();
    buf.push_episode(event_episode(20, -1)).unwrap();
    let mut r = rng(21);
    for _ in 0..20 {
        let batch = buf.sample_pairs::<f64, _>(16, &mut r).unwrap();
        let stack_len = batch.stack_t.sample_len();
        for b in 0..16 {
            for t in [&batch.stack_t, &batch.stack_t1] {
                let sample = &t.data[b * stack_len..(b + 1) * stack_len];
                // 6 channel planes of 16px alternate (pos, neg) per frame.
                let pos: f64 = sample.chunks(16).step_by(2).flatten().sum();
                let neg: f64 = sample.chunks(16).skip(1).step_by(2).flatten().sum();
                assert!(
                    (pos == 0.0) != (neg == 0.0),
                    "stack mixes frames from different episodes"
                );
            }
        }
    }
}

#[test]
fn window_count_and_reward_alignment() {
    let mut buf = ReplayBuffer::new(10_000, 3, false);
    buf.push_episode(event_episode(10, 1)).unwrap();
    // 10 frames at depth 3: the first stack of a 3-step window may end at
    // indices 2..=6, i.e. 5 windows.
    assert_eq!(buf.len_windows(3), 5);
    let mut r = rng(23);
    let batch = buf.sample_windows::<f64, _>(5, 3, &mut r).unwrap();
    assert_eq!(batch.stacks.len(), 4);
    let actions = batch.actions.unwrap();
    let sparse = batch.sparse.unwrap();
    assert_eq!(sparse.len(), 3);
    // event_episode sets actions[i] = [0.01 i, 0] and sparse[i] = i, so the
    // window's rewards must count up from the sampled action's index.
    for i in 0..5 {
        let first = (actions[i][0] * 100.0).round();
        for (k, s) in sparse.iter().enumerate() {
            assert_eq!(s[i], first + k as f64, "reward k={k} misaligned");
        }
    }
}

#[test]
fn expert_buffer_is_observation_only() {
    let mut buf = ReplayBuffer::new(10_000, 3, true);
    assert!(buf.push_episode(event_episode(20, 1)).is_err());
    let mut ep = event_episode(20, 1);
    ep.actions.clear();
    ep.sparse.clear();
    buf.push_episode(ep).unwrap();
    let mut r = rng(22);
    let batch = buf.sample_pairs::<f64, _>(4, &mut r).unwrap();
    assert!(batch.actions.is_none());
    assert!(batch.sparse.is_none());
}

#[test]
fn too_short_episodes_are_rejected() {
    let mut buf = ReplayBuffer::new(10_000, 3, false);
    assert!(buf.push_episode(event_episode(3, 1)).is_err());
    assert!(buf.push_episode(event_episode(4, 1)).is_ok());
}

#[test]
fn capacity_evicts_oldest_episodes() {
    let mut buf = ReplayBuffer::new(50, 3, false);
    for _ in 0..5 {
        buf.push_episode(event_episode(20, 1)).unwrap();
    }
    assert!(buf.num_episodes() <= 3);
}

#[test]
fn acting_stack_zero_pads_until_full() {
    let mut stack = ObsStack::new(3, 2, 4, 4);
    let t0 = stack.as_tensor::<f64>();
    assert!(t0.data.iter().all(|v| *v == 0.0));
    stack.push(StoredFrame::Events(EventFrame::new(4, 4, vec![1; 16]).unwrap()));
    let t1 = stack.as_tensor::<f64>();
    assert_eq!(t1.shape, vec![1, 6, 4, 4]);
    // First two frame slots stay zero, the last holds the pushed frame.
    assert!(t1.data[..2 * 2 * 16].iter().all(|v| *v == 0.0));
    assert!(t1.data[2 * 2 * 16..].iter().any(|v| *v != 0.0));
}

#[test]
fn hyperparams_validate_ranges() {
    assert!(Hyperparams::default().validate().is_ok());
    assert!(Hyperparams { gamma: 1.0, ..Hyperparams::default() }.validate().is_err());
    assert!(Hyperparams { disc_clamp: 0.0, ..Hyperparams::default() }.validate().is_err());
    let parsed: Hyperparams = serde_json::from_str(r#"{"gamma": 0.9}"#).unwrap();
    assert_eq!(parsed.gamma, 0.9);
    assert_eq!(parsed.batch_size, Hyperparams::default().batch_size);
}

#[test]
fn gradient_clipping_rescales_to_the_norm_bound() {
    let mut rng = rng(5);
    let net: Network<f64> = critic_net(6, "c", &mut rng);
    let mut grads = crate::nn_core::Gradients::zeros_like(&net);
    for l in grads.layers.iter_mut() {
        for v in l.weight.iter_mut().chain(l.bias.iter_mut()) {
            *v = 3.0;
        }
    }
    let before: f64 = grads
        .layers
        .iter()
        .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    assert!(before > 1.0);
    let mut clipped = grads.clone();
    clip_grad_norm(&mut clipped, 1.0);
    let after: f64 = clipped
        .layers
        .iter()
        .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    assert!((after - 1.0).abs() < 1e-9);
    // Direction is preserved: clipped = grads * (1/before).
    let l0 = &grads.layers.last().unwrap().weight;
    let c0 = &clipped.layers.last().unwrap().weight;
    for (a, b) in l0.iter().zip(c0.iter()) {
        assert!((b - a / before).abs() < 1e-12);
    }
    // Below the bound nothing changes; zero bound disables clipping.
    let mut small = grads.clone();
    small.scale(1e-6);
    let copy = small.clone();
    clip_grad_norm(&mut small, 1.0);
    assert_eq!(small.layers.last().unwrap().weight, copy.layers.last().unwrap().weight);
    let mut off = grads.clone();
    clip_grad_norm(&mut off, 0.0);
    assert_eq!(off.layers.last().unwrap().weight, grads.layers.last().unwrap().weight);
}

#[test]
fn fresh_agent_policy_starts_at_the_zero_action() {
    let agent = small_agent(9);
    let stack = random_stack(4, 2 * agent.hp.stack_depth, 12, 12, &mut rng(1));
    let z = agent.encoder.encode(&stack).unwrap();
    let a = agent.actor.infer(&z).unwrap();
    assert!(a.data.iter().all(|v| *v == 0.0));
}
