use ndarray::ArrayView2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::hyper::Hyperparams;
use crate::error::{Error, Result};
use crate::nn_core::{
    adam_step, polyak_blend, AdamConfig, AdamState, Gradients, Layer, LayerSpec, Network, Scalar,
    Tensor,
};

/// Shared convolutional feature extractor φ: event (or RGB) stacks to a
/// latent vector with components in (-1,1).
#[derive(Debug, Clone)]
pub struct FeatureExtractor<T> {
    pub net: Network<T>,
    pub z_dim: usize,
    pub stack_depth: usize,
}

impl<T: Scalar> FeatureExtractor<T> {
    pub fn new<R: Rng>(
        stack_depth: usize,
        channels_per_frame: usize,
        height: usize,
        width: usize,
        z_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let net = Network::new(
            "feature_extractor",
            &[stack_depth * channels_per_frame, height, width],
            &[
                LayerSpec::Conv2d {
                    out_ch: 16,
                    kernel: 4,
                    stride: 2,
                },
                LayerSpec::Relu,
                LayerSpec::Conv2d {
                    out_ch: 32,
                    kernel: 4,
                    stride: 2,
                },
                LayerSpec::Relu,
                LayerSpec::Dense { out_dim: z_dim },
                LayerSpec::Tanh,
            ],
            rng,
        )?;
        Ok(FeatureExtractor {
            net,
            z_dim,
            stack_depth,
        })
    }

    /// Encode a batch of stacks; checks the stack depth against the declared
    /// input shape.
    pub fn encode(&self, stacks: &Tensor<T>) -> Result<Tensor<T>> {
        if stacks.shape[1] != self.net.input_shape[0] {
            return Err(Error::shape(format!(
                "stack has {} channels, extractor expects {} (depth {})",
                stacks.shape[1], self.net.input_shape[0], self.stack_depth
            )));
        }
        self.net.infer(stacks)
    }
}

/// Latent discriminator over concatenated (z, z') pairs.
pub fn discriminator_net<T: Scalar, R: Rng>(z_dim: usize, rng: &mut R) -> Network<T> {
    Network::new(
        "discriminator",
        &[2 * z_dim],
        &[
            LayerSpec::Dense { out_dim: 128 },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: 128 },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: 1 },
            LayerSpec::Sigmoid,
        ],
        rng,
    )
    .expect("valid discriminator arch")
}

pub fn critic_net<T: Scalar, R: Rng>(input_dim: usize, name: &str, rng: &mut R) -> Network<T> {
    Network::new(
        name,
        &[input_dim],
        &[
            LayerSpec::Dense { out_dim: 256 },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: 256 },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: 1 },
        ],
        rng,
    )
    .expect("valid critic arch")
}

pub fn actor_net<T: Scalar, R: Rng>(input_dim: usize, action_dim: usize, rng: &mut R) -> Network<T> {
    Network::new(
        "actor",
        &[input_dim],
        &[
            LayerSpec::Dense { out_dim: 256 },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: 256 },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: action_dim },
            LayerSpec::Tanh,
        ],
        rng,
    )
    .expect("valid actor arch")
}

/// Twin critics plus their slow-moving target copies.
#[derive(Debug, Clone)]
pub struct CriticPair<T> {
    pub q1: Network<T>,
    pub q2: Network<T>,
    pub target1: Network<T>,
    pub target2: Network<T>,
    pub polyak: f64,
}

impl<T: Scalar> CriticPair<T> {
    pub fn new<R: Rng>(input_dim: usize, polyak: f64, rng: &mut R) -> Self {
        let q1 = critic_net(input_dim, "critic1", rng);
        let q2 = critic_net(input_dim, "critic2", rng);
        let target1 = q1.clone();
        let target2 = q2.clone();
        CriticPair {
            q1,
            q2,
            target1,
            target2,
            polyak,
        }
    }

    pub fn polyak_update(&mut self) {
        let tau = T::from_f64(self.polyak).unwrap();
        polyak_blend(&mut self.target1, &self.q1, tau);
        polyak_blend(&mut self.target2, &self.q2, tau);
    }
}

/// r = -ln(1 - D) with D clamped into [ε, 1-ε].
pub fn imitation_reward(d_output: f64, clamp_eps: f64) -> f64 {
    let d = d_output.clamp(clamp_eps, 1.0 - clamp_eps);
    -(1.0 - d).ln()
}

/// Sum of environment sparse reward and imitation reward (unweighted), the
/// imitation term alone, or the environment term alone (a pure-RL baseline
/// arm that ignores the discriminator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    ImitationOnly,
    RlPlusImitation,
    EnvironmentOnly,
}

pub fn combine_reward(sparse: f64, r_imit: f64, mode: RewardMode) -> f64 {
    match mode {
        RewardMode::ImitationOnly => r_imit,
        RewardMode::RlPlusImitation => sparse + r_imit,
        RewardMode::EnvironmentOnly => sparse,
    }
}

/// a = clamp(π(z) + clip(n, -c, c), -1, 1) with per-component Gaussian n.
pub fn explore_action<T: Scalar, R: Rng>(
    actor: &Network<T>,
    z: &Tensor<T>,
    sigma: f64,
    clip: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mean = actor.infer(z)?;
    let mut out: Vec<f64> = mean.data.iter().map(|v| v.to_f64().unwrap()).collect();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("valid sigma");
        for a in out.iter_mut() {
            let n: f64 = normal.sample(rng);
            *a += n.clamp(-clip, clip);
        }
    }
    for a in out.iter_mut() {
        *a = a.clamp(-1.0, 1.0);
    }
    Ok(out)
}

fn concat_rows<T: Scalar>(a: &Tensor<T>, b: &[[f64; 2]]) -> Tensor<T> {
    let n = a.batch();
    let ad = a.sample_len();
    let mut data = Vec::with_capacity(n * (ad + 2));
    for i in 0..n {
        data.extend_from_slice(&a.data[i * ad..(i + 1) * ad]);
        data.push(T::from_f64(b[i][0]).unwrap());
        data.push(T::from_f64(b[i][1]).unwrap());
    }
    Tensor::from_vec(&[n, ad + 2], data)
}

fn concat_tensors<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let n = a.batch();
    assert_eq!(b.batch(), n);
    let (ad, bd) = (a.sample_len(), b.sample_len());
    let mut data = Vec::with_capacity(n * (ad + bd));
    for i in 0..n {
        data.extend_from_slice(&a.data[i * ad..(i + 1) * ad]);
        data.extend_from_slice(&b.data[i * bd..(i + 1) * bd]);
    }
    Tensor::from_vec(&[n, ad + bd], data)
}

/// Binary-cross-entropy discriminator loss (descent form of the adversarial
/// objective) with optional gradient penalty on interpolated inputs.
///
/// Returns the loss value and parameter gradients; pure in its inputs so it
/// can be verified by central differences. `interp_coeffs` are the per-sample
/// interpolation weights for the penalty term.
pub fn disc_loss_and_grads<T: Scalar>(
    disc: &Network<T>,
    expert_pairs: &Tensor<T>,
    agent_pairs: &Tensor<T>,
    clamp_eps: f64,
    lambda_gp: f64,
    interp_coeffs: &[f64],
) -> Result<(f64, Gradients<T>)> {
    let ne = expert_pairs.batch();
    let na = agent_pairs.batch();
    if ne == 0 || na == 0 {
        return Err(Error::validation("discriminator batches must be nonempty"));
    }
    let lo = clamp_eps;
    let hi = 1.0 - clamp_eps;

    // Expert term: -mean ln D.
    let e_cache = disc.forward(expert_pairs)?;
    let mut loss = 0.0;
    let mut e_up = vec![T::zero(); ne];
    for (i, y) in e_cache.output().data.iter().enumerate() {
        let y = y.to_f64().unwrap();
        let yc = y.clamp(lo, hi);
        loss += -yc.ln() / ne as f64;
        if y > lo && y < hi {
            e_up[i] = T::from_f64(-1.0 / (y * ne as f64)).unwrap();
        }
    }
    let (mut grads, _) = disc.backward(&e_cache, &Tensor::from_vec(&[ne, 1], e_up));

    // Agent term: -mean ln (1 - D).
    let a_cache = disc.forward(agent_pairs)?;
    let mut a_up = vec![T::zero(); na];
    for (i, y) in a_cache.output().data.iter().enumerate() {
        let y = y.to_f64().unwrap();
        let yc = y.clamp(lo, hi);
        loss += -(1.0 - yc).ln() / na as f64;
        if y > lo && y < hi {
            a_up[i] = T::from_f64(1.0 / ((1.0 - y) * na as f64)).unwrap();
        }
    }
    let (a_grads, _) = disc.backward(&a_cache, &Tensor::from_vec(&[na, 1], a_up));
    grads.add(&a_grads);

    if lambda_gp > 0.0 {
        let n = ne.min(na);
        assert_eq!(interp_coeffs.len(), n, "one interpolation weight per pair");
        let dim = expert_pairs.sample_len();
        let mut interp = Vec::with_capacity(n * dim);
        for i in 0..n {
            let u = T::from_f64(interp_coeffs[i]).unwrap();
            for k in 0..dim {
                let e = expert_pairs.data[i * dim + k];
                let a = agent_pairs.data[i * dim + k];
                interp.push(u * e + (T::one() - u) * a);
            }
        }
        let interp = Tensor::from_vec(&[n, dim], interp);
        let (gp_value, gp_grads) = gradient_penalty(disc, &interp, lambda_gp)?;
        loss += gp_value;
        grads.add(&gp_grads);
    }

    Ok((loss, grads))
}

/// λ·mean((‖∇_x logit(x)‖ - 1)²) over interpolated inputs, with exact
/// parameter gradients under relu masks frozen at the evaluation point.
///
/// Works for any alternating dense/relu stack with a final sigmoid (the
/// penalty acts on the pre-sigmoid logit). The input gradient of such a net
/// is linear in the masked weights, so the second backward pass reduces to
/// one masked-linear forward sweep of the penalty gradient and one masked
/// backward sweep of the output seed.
fn gradient_penalty<T: Scalar>(
    disc: &Network<T>,
    inputs: &Tensor<T>,
    lambda: f64,
) -> Result<(f64, Gradients<T>)> {
    // Collect dense layers and verify the architecture.
    let mut dense_idx = Vec::new();
    for (i, l) in disc.layers.iter().enumerate() {
        match l {
            Layer::Dense(_) => dense_idx.push(i),
            Layer::Relu | Layer::Sigmoid => {}
            _ => {
                return Err(Error::validation(
                    "gradient penalty supports dense/relu discriminators only",
                ))
            }
        }
    }
    let cache = disc.forward(inputs)?;
    let n = inputs.batch();

    // Relu mask after each dense layer (empty when none follows).
    let masks: Vec<Option<Vec<bool>>> = dense_idx
        .iter()
        .map(|i| match disc.layers.get(i + 1) {
            Some(Layer::Relu) => Some(cache.values[i + 1].data.iter().map(|v| *v > T::zero()).collect()),
            _ => None,
        })
        .collect();

    let dense: Vec<&crate::nn_core::Layer<T>> = dense_idx.iter().map(|i| &disc.layers[*i]).collect();
    fn weight_of<T: Scalar>(l: &Layer<T>) -> (usize, usize, &[T]) {
        if let Layer::Dense(d) = l {
            (d.out_dim, d.in_dim, d.weight.as_slice())
        } else {
            unreachable!()
        }
    }

    // Backward-side vectors b_l per sample: seed 1 at the logit, masked
    // transpose-propagation down to the input. b[l] has the out_dim of dense
    // layer l; b[0] transposed once more gives the input gradient g.
    let num = dense.len();
    let mut b: Vec<Vec<T>> = Vec::with_capacity(num); // indexed by dense layer, per [n, out_dim]
    let mut cur: Vec<T> = vec![T::one(); n]; // logit dim = 1
    for l in (0..num).rev() {
        let (out_dim, in_dim, w) = weight_of(dense[l]);
        debug_assert_eq!(cur.len(), n * out_dim);
        b.push(cur.clone());
        // propagate: next = mask_{l-1} ⊙ (W_lᵀ cur)
        let wv = ArrayView2::from_shape((out_dim, in_dim), w).unwrap();
        let cv = ArrayView2::from_shape((n, out_dim), &cur).unwrap();
        let mut down = cv.dot(&wv).into_raw_vec(); // [n, in_dim]
        if l > 0 {
            if let Some(mask) = &masks[l - 1] {
                for (v, m) in down.iter_mut().zip(mask) {
                    if !*m {
                        *v = T::zero();
                    }
                }
            }
        }
        cur = down;
    }
    b.reverse(); // b[l] now matches dense layer l
    let g = cur; // [n, input_dim] = per-sample input gradient of the logit

    // Penalty value and its gradient wrt g.
    let dim = inputs.sample_len();
    let mut value = 0.0f64;
    let mut q = vec![T::zero(); n * dim];
    for i in 0..n {
        let gi = &g[i * dim..(i + 1) * dim];
        let norm = gi
            .iter()
            .map(|v| v.to_f64().unwrap().powi(2))
            .sum::<f64>()
            .sqrt();
        let diff = norm - 1.0;
        value += lambda * diff * diff / n as f64;
        if norm > 1e-12 {
            let scale = T::from_f64(2.0 * lambda * diff / (norm * n as f64)).unwrap();
            for (qv, gv) in q[i * dim..(i + 1) * dim].iter_mut().zip(gi) {
                *qv = scale * *gv;
            }
        }
    }

    // Forward-side vectors c_l = mask_l ⊙ (W_l c_{l-1}), c_0 = q.
    // dP/dW_l = Σ_samples b_l c_{l-1}ᵀ ; biases receive no penalty gradient.
    let mut grads = Gradients::zeros_like(disc);
    let mut c_prev = q; // [n, in_dim of layer 0]
    for l in 0..num {
        let (out_dim, in_dim, w) = weight_of(dense[l]);
        {
            // accumulate dW_l += b_lᵀ-sample-outer c_prev
            let gw = &mut grads.layers[dense_idx[l]].weight;
            let bv = ArrayView2::from_shape((n, out_dim), &b[l]).unwrap();
            let cv = ArrayView2::from_shape((n, in_dim), &c_prev).unwrap();
            let dw = bv.t().dot(&cv); // [out_dim, in_dim]
            for (acc, v) in gw.iter_mut().zip(dw.iter()) {
                *acc = *acc + *v;
            }
        }
        if l + 1 < num {
            let wv = ArrayView2::from_shape((out_dim, in_dim), w).unwrap();
            let cv = ArrayView2::from_shape((n, in_dim), &c_prev).unwrap();
            let mut up = cv.dot(&wv.t()).into_raw_vec(); // [n, out_dim]
            if let Some(mask) = &masks[l] {
                for (v, m) in up.iter_mut().zip(mask) {
                    if !*m {
                        *v = T::zero();
                    }
                }
            }
            c_prev = up;
        }
    }
    Ok((value, grads))
}

/// Statistics of the bootstrapped regression target.
#[derive(Debug, Clone, Copy)]
pub struct TargetStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Critic regression loss: twin n-step TD target with the pessimistic min
/// over the target critics, and exact gradients for both critics and the
/// shared feature extractor. `stacks` holds `n + 1` consecutive observation
/// stacks per sample (`n` = number of reward steps folded into the target);
/// `sparse`, when present, holds the `n` per-step rewards. `action_noise` is
/// the pre-drawn clipped target-policy noise, one row per sample.
///
/// `target_encoder` encodes the detached stacks of the reward/bootstrap path;
/// the target is a constant with respect to the trained parameters
/// (semi-gradient TD), so callers normally pass the same network for both
/// encoder arguments while gradient checks pass a frozen copy.
#[allow(clippy::too_many_arguments)]
pub fn critic_loss_and_grads<T: Scalar>(
    encoder: &Network<T>,
    target_encoder: &Network<T>,
    q1: &Network<T>,
    q2: &Network<T>,
    target1: &Network<T>,
    target2: &Network<T>,
    actor: &Network<T>,
    disc: &Network<T>,
    stacks: &[Tensor<T>],
    actions: &[[f64; 2]],
    sparse: Option<&[Vec<f64>]>,
    hp: &Hyperparams,
    reward_mode: RewardMode,
    action_noise: &[[f64; 2]],
) -> Result<(f64, Gradients<T>, Gradients<T>, Gradients<T>, TargetStats)> {
    assert!(stacks.len() >= 2, "need at least one transition");
    let steps = stacks.len() - 1;
    let n = stacks[0].batch();
    assert_eq!(actions.len(), n);
    assert_eq!(action_noise.len(), n);
    if let Some(s) = sparse {
        assert_eq!(s.len(), steps);
    }

    // z with gradients; the reward/bootstrap path is fully detached.
    let enc_cache = encoder.forward(&stacks[0])?;
    let z = enc_cache.output().clone();
    let z_path: Vec<Tensor<T>> = stacks
        .iter()
        .map(|s| target_encoder.infer(s))
        .collect::<Result<_>>()?;
    let zn = &z_path[steps];

    // a' = π(z_n) + clipped noise, re-clamped to the action range.
    let mean1 = actor.infer(zn)?;
    let a1: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            [
                (mean1.data[2 * i].to_f64().unwrap() + action_noise[i][0]).clamp(-1.0, 1.0),
                (mean1.data[2 * i + 1].to_f64().unwrap() + action_noise[i][1]).clamp(-1.0, 1.0),
            ]
        })
        .collect();

    // Discounted reward sum along the window, each step's imitation term
    // from the detached latent pair around it.
    let gamma = hp.gamma;
    let mut y = vec![0.0f64; n];
    for k in 0..steps {
        let d_out = disc.infer(&concat_tensors(&z_path[k], &z_path[k + 1]))?;
        for i in 0..n {
            let r_imit = imitation_reward(d_out.data[i].to_f64().unwrap(), hp.disc_clamp);
            let r = combine_reward(sparse.map(|s| s[k][i]).unwrap_or(0.0), r_imit, reward_mode);
            y[i] += gamma.powi(k as i32) * r;
        }
    }
    let za1 = concat_rows(zn, &a1);
    let qt1 = target1.infer(&za1)?;
    let qt2 = target2.infer(&za1)?;
    let mut stats = TargetStats {
        mean: 0.0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    for i in 0..n {
        let boot = qt1.data[i].to_f64().unwrap().min(qt2.data[i].to_f64().unwrap());
        y[i] += gamma.powi(steps as i32) * boot;
        stats.mean += y[i] / n as f64;
        stats.min = stats.min.min(y[i]);
        stats.max = stats.max.max(y[i]);
    }

    // Σ_k (Q_k(z,a) - y)², averaged over the batch.
    let za = concat_rows(&z, actions);
    let q1_cache = q1.forward(&za)?;
    let q2_cache = q2.forward(&za)?;
    let mut loss = 0.0f64;
    let mut up1 = vec![T::zero(); n];
    let mut up2 = vec![T::zero(); n];
    for i in 0..n {
        let e1 = q1_cache.output().data[i].to_f64().unwrap() - y[i];
        let e2 = q2_cache.output().data[i].to_f64().unwrap() - y[i];
        loss += (e1 * e1 + e2 * e2) / n as f64;
        up1[i] = T::from_f64(2.0 * e1 / n as f64).unwrap();
        up2[i] = T::from_f64(2.0 * e2 / n as f64).unwrap();
    }
    let (q1_grads, dza1) = q1.backward(&q1_cache, &Tensor::from_vec(&[n, 1], up1));
    let (q2_grads, dza2) = q2.backward(&q2_cache, &Tensor::from_vec(&[n, 1], up2));

    // Route the z-part of both critic input gradients into the encoder.
    let z_dim = z.sample_len();
    let row = z_dim + 2;
    let mut dz = vec![T::zero(); n * z_dim];
    for i in 0..n {
        for k in 0..z_dim {
            dz[i * z_dim + k] = dza1.data[i * row + k] + dza2.data[i * row + k];
        }
    }
    let dz_t = Tensor::from_vec(&[n, z_dim], dz);
    let (enc_grads, _) = encoder.backward(&enc_cache, &dz_t);

    Ok((loss, enc_grads, q1_grads, q2_grads, stats))
}

/// Deterministic-policy-gradient actor loss -mean Q₁(z, π(z)) and its
/// gradients; the critic and encoder are read-only here.
pub fn actor_loss_and_grads<T: Scalar>(
    actor: &Network<T>,
    q1: &Network<T>,
    z_detached: &Tensor<T>,
) -> Result<(f64, Gradients<T>)> {
    let n = z_detached.batch();
    let a_cache = actor.forward(z_detached)?;
    let za = concat_tensors(z_detached, a_cache.output());
    let q_cache = q1.forward(&za)?;
    let loss = -q_cache
        .output()
        .data
        .iter()
        .map(|v| v.to_f64().unwrap())
        .sum::<f64>()
        / n as f64;
    let up = Tensor::from_vec(&[n, 1], vec![T::from_f64(-1.0 / n as f64).unwrap(); n]);
    let (_, dza) = q1.backward(&q_cache, &up);
    // Only the action part drives the actor.
    let z_dim = z_detached.sample_len();
    let a_dim = a_cache.output().sample_len();
    let row = z_dim + a_dim;
    let mut da = vec![T::zero(); n * a_dim];
    for i in 0..n {
        da[i * a_dim..(i + 1) * a_dim]
            .copy_from_slice(&dza.data[i * row + z_dim..(i + 1) * row]);
    }
    let (actor_grads, _) = actor.backward(&a_cache, &Tensor::from_vec(&[n, a_dim], da));
    Ok((loss, actor_grads))
}

/// All networks and optimizer state owned by one imitation run.
pub struct AilAgent<T> {
    pub encoder: FeatureExtractor<T>,
    pub critics: CriticPair<T>,
    pub actor: Network<T>,
    pub disc: Network<T>,
    pub enc_opt: AdamState<T>,
    pub q1_opt: AdamState<T>,
    pub q2_opt: AdamState<T>,
    pub actor_opt: AdamState<T>,
    pub disc_opt: AdamState<T>,
    pub hp: Hyperparams,
}

/// Rescale `grads` in place so their global L2 norm is at most `max_norm`.
/// A `max_norm` of zero disables clipping.
pub fn clip_grad_norm<T: Scalar>(grads: &mut Gradients<T>, max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let mut sq = 0.0f64;
    for l in &grads.layers {
        for v in l.weight.iter().chain(l.bias.iter()) {
            let f: f64 = num_traits::NumCast::from(*v).unwrap_or(0.0);
            sq += f * f;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm {
        grads.scale(T::from_f64(max_norm / norm).unwrap());
    }
}

impl<T: Scalar> AilAgent<T> {
    pub fn new<R: Rng>(
        channels_per_frame: usize,
        height: usize,
        width: usize,
        action_dim: usize,
        hp: Hyperparams,
        rng: &mut R,
    ) -> Result<Self> {
        let encoder = FeatureExtractor::new(
            hp.stack_depth,
            channels_per_frame,
            height,
            width,
            hp.z_dim,
            rng,
        )?;
        let critics = CriticPair::new(hp.z_dim + action_dim, hp.polyak, rng);
        let mut actor = actor_net(hp.z_dim, action_dim, rng);
        // Start the policy exactly at the zero action: with a random final
        // layer the pre-tanh outputs can begin (or be pushed early) deep into
        // tanh saturation, where the policy gradient vanishes for good.
        actor.zero_final_layer();
        let disc = discriminator_net(hp.z_dim, rng);
        let enc_opt = AdamState::new(&encoder.net, AdamConfig::with_lr(hp.critic_lr));
        let q1_opt = AdamState::new(&critics.q1, AdamConfig::with_lr(hp.critic_lr));
        let q2_opt = AdamState::new(&critics.q2, AdamConfig::with_lr(hp.critic_lr));
        let actor_opt = AdamState::new(&actor, AdamConfig::with_lr(hp.actor_lr));
        let disc_opt = AdamState::new(&disc, AdamConfig::with_lr(hp.disc_lr));
        Ok(AilAgent {
            encoder,
            critics,
            actor,
            disc,
            enc_opt,
            q1_opt,
            q2_opt,
            actor_opt,
            disc_opt,
            hp,
        })
    }

    /// One adversarial (inverse-RL) step: ascend the discriminator objective
    /// on freshly re-encoded expert and agent latent pairs.
    pub fn update_discriminator<R: Rng>(
        &mut self,
        expert_stacks: (&Tensor<T>, &Tensor<T>),
        agent_stacks: (&Tensor<T>, &Tensor<T>),
        rng: &mut R,
    ) -> Result<f64> {
        // Latents are detached: the discriminator never trains the encoder.
        let ez = self.encoder.encode(expert_stacks.0)?;
        let ez1 = self.encoder.encode(expert_stacks.1)?;
        let az = self.encoder.encode(agent_stacks.0)?;
        let az1 = self.encoder.encode(agent_stacks.1)?;
        let expert_pairs = concat_tensors(&ez, &ez1);
        let agent_pairs = concat_tensors(&az, &az1);
        let coeffs: Vec<f64> = (0..expert_pairs.batch().min(agent_pairs.batch()))
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let (loss, mut grads) = disc_loss_and_grads(
            &self.disc,
            &expert_pairs,
            &agent_pairs,
            self.hp.disc_clamp,
            self.hp.lambda_gp,
            &coeffs,
        )?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("discriminator loss".into()));
        }
        clip_grad_norm(&mut grads, self.hp.grad_clip);
        adam_step(&mut self.disc, &grads, &mut self.disc_opt)?;
        Ok(loss)
    }

    /// One n-step TD update on both critics with gradients flowing into the
    /// encoder, followed by the polyak target update. `stacks` holds the
    /// consecutive observation stacks of each sampled window.
    pub fn update_critic<R: Rng>(
        &mut self,
        stacks: &[Tensor<T>],
        actions: &[[f64; 2]],
        sparse: Option<&[Vec<f64>]>,
        reward_mode: RewardMode,
        rng: &mut R,
    ) -> Result<(f64, TargetStats)> {
        let noise: Vec<[f64; 2]> = (0..stacks[0].batch())
            .map(|_| {
                let mut n = [0.0; 2];
                if self.hp.explore_sigma > 0.0 {
                    let normal = Normal::new(0.0, self.hp.explore_sigma).unwrap();
                    for v in n.iter_mut() {
                        let s: f64 = normal.sample(rng);
                        *v = s.clamp(-self.hp.noise_clip, self.hp.noise_clip);
                    }
                }
                n
            })
            .collect();
        let (loss, mut enc_grads, mut q1_grads, mut q2_grads, stats) = critic_loss_and_grads(
            &self.encoder.net,
            &self.encoder.net,
            &self.critics.q1,
            &self.critics.q2,
            &self.critics.target1,
            &self.critics.target2,
            &self.actor,
            &self.disc,
            stacks,
            actions,
            sparse,
            &self.hp,
            reward_mode,
            &noise,
        )?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("critic loss".into()));
        }
        clip_grad_norm(&mut q1_grads, self.hp.grad_clip);
        clip_grad_norm(&mut q2_grads, self.hp.grad_clip);
        clip_grad_norm(&mut enc_grads, self.hp.grad_clip);
        adam_step(&mut self.critics.q1, &q1_grads, &mut self.q1_opt)?;
        adam_step(&mut self.critics.q2, &q2_grads, &mut self.q2_opt)?;
        adam_step(&mut self.encoder.net, &enc_grads, &mut self.enc_opt)?;
        self.critics.polyak_update();
        Ok((loss, stats))
    }

    /// One deterministic-policy-gradient step; encoder and critics are
    /// untouched.
    pub fn update_actor(&mut self, stack_t: &Tensor<T>) -> Result<f64> {
        let z = self.encoder.encode(stack_t)?;
        let (loss, mut grads) = actor_loss_and_grads(&self.actor, &self.critics.q1, &z)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("actor loss".into()));
        }
        clip_grad_norm(&mut grads, self.hp.grad_clip);
        adam_step(&mut self.actor, &grads, &mut self.actor_opt)?;
        Ok(loss)
    }
}
