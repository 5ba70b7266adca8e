use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

use super::*;
use crate::nn_core::network::Gradients;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor(shape: &[usize], r: &mut ChaCha8Rng) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect())
}

/// Mean squared value of the output: L = mean(y²) over all elements.
fn quadratic_loss(net: &Network<f64>, input: &Tensor<f64>) -> (f64, Gradients<f64>) {
    let cache = net.forward(input).unwrap();
    let out = cache.output();
    let n = out.numel() as f64;
    let loss = out.data.iter().map(|v| v * v).sum::<f64>() / n;
    let upstream = Tensor {
        shape: out.shape.clone(),
        data: out.data.iter().map(|v| 2.0 * v / n).collect(),
    };
    let (grads, _) = net.backward(&cache, &upstream);
    (loss, grads)
}

#[test]
fn dense_identity_passthrough() {
    let mut net = Network::<f64>::new("id", &[3], &[LayerSpec::Dense { out_dim: 3 }], &mut rng(0))
        .unwrap();
    // Set W = I, b = 0.
    let mut flat = vec![0.0; net.num_params()];
    for i in 0..3 {
        flat[i * 3 + i] = 1.0;
    }
    net.set_params_flat(&flat).unwrap();
    let x = random_tensor(&[2, 3], &mut rng(1));
    let y = net.infer(&x).unwrap();
    assert_eq!(y.data, x.data);
}

#[test]
fn activation_values() {
    let relu = Network::<f64>::new("r", &[3], &[LayerSpec::Relu], &mut rng(0)).unwrap();
    let y = relu
        .infer(&Tensor::from_vec(&[1, 3], vec![-1.0, -0.5, -2.0]))
        .unwrap();
    assert_eq!(y.data, vec![0.0, 0.0, 0.0]);

    let sig = Network::<f64>::new("s", &[1], &[LayerSpec::Sigmoid], &mut rng(0)).unwrap();
    let y = sig.infer(&Tensor::from_vec(&[1, 1], vec![0.0])).unwrap();
    assert_eq!(y.data, vec![0.5]);
}

#[test]
fn forward_rejects_bad_shape() {
    let net = Network::<f64>::new("d", &[4], &[LayerSpec::Dense { out_dim: 2 }], &mut rng(0))
        .unwrap();
    let err = net.infer(&Tensor::<f64>::zeros(&[1, 3])).unwrap_err();
    assert!(err.to_string().contains('d'));
}

#[test]
fn dense_backward_chain_rule_base_case() {
    // y = Wx, upstream g: dL/dW = g xᵀ.
    let mut net = Network::<f64>::new("w", &[2], &[LayerSpec::Dense { out_dim: 2 }], &mut rng(3))
        .unwrap();
    net.set_params_flat(&[1.0, 2.0, 3.0, 4.0, 0.0, 0.0]).unwrap();
    let x = Tensor::from_vec(&[1, 2], vec![5.0, 7.0]);
    let cache = net.forward(&x).unwrap();
    let g = Tensor::from_vec(&[1, 2], vec![0.5, -1.5]);
    let (grads, dx) = net.backward(&cache, &g);
    // dW[o][i] = g[o] * x[i]
    assert_eq!(grads.layers[0].weight, vec![2.5, 3.5, -7.5, -10.5]);
    assert_eq!(grads.layers[0].bias, vec![0.5, -1.5]);
    // dx = Wᵀ g
    assert_eq!(dx.data, vec![1.0 * 0.5 + 3.0 * -1.5, 2.0 * 0.5 + 4.0 * -1.5]);
}

#[test]
fn zero_upstream_gives_zero_grads() {
    let net = Network::<f64>::new(
        "z",
        &[2, 6, 6],
        &[
            LayerSpec::Conv2d {
                out_ch: 3,
                kernel: 3,
                stride: 1,
            },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: 2 },
        ],
        &mut rng(4),
    )
    .unwrap();
    let x = random_tensor(&[2, 2, 6, 6], &mut rng(5));
    let cache = net.forward(&x).unwrap();
    let zero = Tensor::<f64>::zeros(&[2, 2]);
    let (grads, dx) = net.backward(&cache, &zero);
    assert!(grads
        .layers
        .iter()
        .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| *v == 0.0)));
    assert!(dx.data.iter().all(|v| *v == 0.0));
}

#[test]
fn grad_check_each_layer_type() {
    let cases: Vec<(&str, Vec<usize>, Vec<LayerSpec>)> = vec![
        ("dense", vec![5], vec![LayerSpec::Dense { out_dim: 4 }]),
        (
            "conv",
            vec![2, 8, 8],
            vec![LayerSpec::Conv2d {
                out_ch: 3,
                kernel: 4,
                stride: 2,
            }],
        ),
        (
            "relu_stack",
            vec![4],
            vec![
                LayerSpec::Dense { out_dim: 8 },
                LayerSpec::Relu,
                LayerSpec::Dense { out_dim: 3 },
            ],
        ),
        (
            "tanh_stack",
            vec![4],
            vec![LayerSpec::Dense { out_dim: 6 }, LayerSpec::Tanh],
        ),
        (
            "sigmoid_stack",
            vec![4],
            vec![LayerSpec::Dense { out_dim: 6 }, LayerSpec::Sigmoid],
        ),
        (
            "conv_dense",
            vec![2, 10, 10],
            vec![
                LayerSpec::Conv2d {
                    out_ch: 4,
                    kernel: 4,
                    stride: 2,
                },
                LayerSpec::Relu,
                LayerSpec::Dense { out_dim: 5 },
                LayerSpec::Tanh,
            ],
        ),
    ];
    for (name, in_shape, specs) in cases {
        let mut net = Network::<f64>::new(name, &in_shape, &specs, &mut rng(11)).unwrap();
        let mut full_shape = vec![3];
        full_shape.extend(&in_shape);
        let x = random_tensor(&full_shape, &mut rng(12));
        let err = grad_check(
            &mut net,
            |n| quadratic_loss(n, &x),
            150,
            1e-5,
            &mut rng(13),
        );
        assert!(err < 1e-4, "{name}: relative error {err}");
    }
}

#[test]
fn grad_check_linear_quadratic_is_exact() {
    let mut net = Network::<f64>::new("lin", &[4], &[LayerSpec::Dense { out_dim: 3 }], &mut rng(21))
        .unwrap();
    let x = random_tensor(&[2, 4], &mut rng(22));
    let err = grad_check(&mut net, |n| quadratic_loss(n, &x), 100, 1e-5, &mut rng(23));
    assert!(err < 1e-8, "relative error {err}");
}

#[test]
fn grad_check_detects_corrupted_gradient() {
    let mut net = Network::<f64>::new("bad", &[4], &[LayerSpec::Dense { out_dim: 3 }], &mut rng(31))
        .unwrap();
    let x = random_tensor(&[2, 4], &mut rng(32));
    let err = grad_check(
        &mut net,
        |n| {
            let (l, mut g) = quadratic_loss(n, &x);
            for v in g.layers[0].weight.iter_mut() {
                *v += 0.5; // sabotage
            }
            (l, g)
        },
        100,
        1e-5,
        &mut rng(33),
    );
    assert!(err > 1e-4, "sabotaged gradient slipped through: {err}");
}

#[test]
fn adam_zero_gradient_keeps_params() {
    let mut net = Network::<f64>::new("a", &[3], &[LayerSpec::Dense { out_dim: 2 }], &mut rng(41))
        .unwrap();
    let before = net.params_flat();
    let mut state = AdamState::new(&net, AdamConfig::default());
    let grads = Gradients::zeros_like(&net);
    adam_step(&mut net, &grads, &mut state).unwrap();
    assert_eq!(net.params_flat(), before);
    assert_eq!(state.step, 1);
}

#[test]
fn adam_first_step_magnitude_and_direction() {
    let mut net = Network::<f64>::new("a", &[1], &[LayerSpec::Dense { out_dim: 1 }], &mut rng(42))
        .unwrap();
    net.set_params_flat(&[0.3, 0.1]).unwrap();
    let mut state = AdamState::new(&net, AdamConfig::default());
    let mut grads = Gradients::zeros_like(&net);
    grads.layers[0].weight[0] = 0.7;
    grads.layers[0].bias[0] = -0.2;
    adam_step(&mut net, &grads, &mut state).unwrap();
    let p = net.params_flat();
    // First bias-corrected step moves by ≈ lr against the gradient sign.
    assert!((p[0] - (0.3 - 1e-3)).abs() < 1e-7, "weight {}", p[0]);
    assert!((p[1] - (0.1 + 1e-3)).abs() < 1e-7, "bias {}", p[1]);

    // Constant gradient keeps moving opposite the gradient sign.
    for _ in 0..50 {
        adam_step(&mut net, &grads, &mut state).unwrap();
    }
    let p = net.params_flat();
    assert!(p[0] < 0.3 - 0.04);
    assert!(p[1] > 0.1 + 0.04);
}

#[test]
fn adam_rejects_non_finite_gradient() {
    let mut net = Network::<f64>::new("a", &[1], &[LayerSpec::Dense { out_dim: 1 }], &mut rng(43))
        .unwrap();
    let mut state = AdamState::new(&net, AdamConfig::default());
    let mut grads = Gradients::zeros_like(&net);
    grads.layers[0].weight[0] = f64::NAN;
    assert!(adam_step(&mut net, &grads, &mut state).is_err());
}

#[test]
fn init_is_seed_deterministic() {
    let specs = [
        LayerSpec::Dense { out_dim: 16 },
        LayerSpec::Relu,
        LayerSpec::Dense { out_dim: 4 },
    ];
    let a = Network::<f64>::new("n", &[8], &specs, &mut rng(7)).unwrap();
    let b = Network::<f64>::new("n", &[8], &specs, &mut rng(7)).unwrap();
    let c = Network::<f64>::new("n", &[8], &specs, &mut rng(8)).unwrap();
    assert_eq!(a.params_flat(), b.params_flat());
    assert_ne!(a.params_flat(), c.params_flat());
}

#[test]
fn polyak_shrinks_distance_exactly() {
    let mut rng0 = rng(51);
    let specs = [LayerSpec::Dense { out_dim: 4 }];
    let online = Network::<f64>::new("o", &[3], &specs, &mut rng0).unwrap();
    let mut target = Network::<f64>::new("t", &[3], &specs, &mut rng0).unwrap();
    let tau = 0.01;
    let dist = |a: &Network<f64>, b: &Network<f64>| -> f64 {
        a.params_flat()
            .iter()
            .zip(b.params_flat())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let d0 = dist(&target, &online);
    polyak_blend(&mut target, &online, tau);
    let d1 = dist(&target, &online);
    assert!((d1 - (1.0 - tau) * d0).abs() < 1e-12);
}

#[test]
fn checkpoint_round_trip_and_digest_guard() {
    let dir = tempdir().unwrap();
    let specs = [LayerSpec::Dense { out_dim: 5 }, LayerSpec::Tanh];
    let net = Network::<f64>::new("ck", &[3], &specs, &mut rng(61)).unwrap();
    let path = dir.path().join("net.ckpt");
    save_params(&net, &path).unwrap();

    let mut restored = Network::<f64>::new("ck", &[3], &specs, &mut rng(99)).unwrap();
    assert_ne!(restored.params_flat(), net.params_flat());
    load_params(&mut restored, &path).unwrap();
    assert_eq!(restored.params_flat(), net.params_flat());

    // f32 network with the same architecture loads too (digest matches).
    let mut as_f32 = Network::<f32>::new("ck", &[3], &specs, &mut rng(1)).unwrap();
    load_params(&mut as_f32, &path).unwrap();

    let mut other = Network::<f64>::new("ck", &[4], &specs, &mut rng(62)).unwrap();
    assert!(load_params(&mut other, &path).is_err());
}

#[test]
fn f32_and_f64_forward_agree() {
    let specs = [
        LayerSpec::Dense { out_dim: 8 },
        LayerSpec::Relu,
        LayerSpec::Dense { out_dim: 2 },
        LayerSpec::Tanh,
    ];
    let net64 = Network::<f64>::new("n", &[4], &specs, &mut rng(71)).unwrap();
    let mut net32 = Network::<f32>::new("n", &[4], &specs, &mut rng(0)).unwrap();
    let flat32: Vec<f32> = net64.params_flat().iter().map(|v| *v as f32).collect();
    net32.set_params_flat(&flat32).unwrap();
    let x64 = random_tensor(&[2, 4], &mut rng(72));
    let x32 = Tensor::<f32>::from_f64(&x64.shape, &x64.data);
    let y64 = net64.infer(&x64).unwrap();
    let y32 = net32.infer(&x32).unwrap();
    for (a, b) in y64.data.iter().zip(&y32.data) {
        assert!((a - *b as f64).abs() < 1e-5);
    }
}
