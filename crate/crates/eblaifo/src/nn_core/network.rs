use rand::Rng;

use super::layer::{Conv2d, Dense, Layer, LayerGrads, LayerSpec};
use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// An ordered stack of layers plus its parameter store.
#[derive(Debug, Clone)]
pub struct Network<T> {
    pub name: String,
    /// Per-sample input shape (batch dimension excluded).
    pub input_shape: Vec<usize>,
    pub layers: Vec<Layer<T>>,
}

/// Forward activations: `values[i]` is the input to layer `i`;
/// `values[len]` is the network output.
pub struct Cache<T> {
    pub values: Vec<Tensor<T>>,
}

impl<T: Scalar> Cache<T> {
    pub fn output(&self) -> &Tensor<T> {
        self.values.last().unwrap()
    }
}

/// Parameter gradients, one entry per layer, aligned with `Network::layers`.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGrads<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Gradients {
            layers: net.layers.iter().map(|l| l.zero_grads()).collect(),
        }
    }

    pub fn add(&mut self, other: &Gradients<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weight.iter_mut().zip(&b.weight) {
                *x = *x + *y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x = *x + *y;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for l in self.layers.iter_mut() {
            for v in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *v = *v * factor;
            }
        }
    }

    /// Flat view over parameter arrays: [w0, b0, w1, b1, ...] for layers
    /// that have parameters, in layer order.
    pub fn param_arrays(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for l in &self.layers {
            if !l.weight.is_empty() {
                out.push(l.weight.as_slice());
                out.push(l.bias.as_slice());
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

impl<T: Scalar> Network<T> {
    /// Build a network, inferring layer input sizes from `input_shape`.
    ///
    /// He-uniform initialization for layers feeding a relu, Xavier-uniform
    /// otherwise; biases start at zero. Deterministic for a given RNG state.
    pub fn new<R: Rng>(
        name: &str,
        input_shape: &[usize],
        specs: &[LayerSpec],
        rng: &mut R,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(specs.len());
        let mut shape = input_shape.to_vec();
        for (i, spec) in specs.iter().enumerate() {
            let next_is_relu = specs.get(i + 1).map(|s| s.is_relu()).unwrap_or(false);
            let layer = match *spec {
                LayerSpec::Dense { out_dim } => {
                    let in_dim: usize = shape.iter().product();
                    let fan_out = out_dim;
                    let limit = if next_is_relu {
                        (6.0 / in_dim as f64).sqrt()
                    } else {
                        (6.0 / (in_dim + fan_out) as f64).sqrt()
                    };
                    let weight = draw_uniform(rng, out_dim * in_dim, limit);
                    Layer::Dense(Dense {
                        in_dim,
                        out_dim,
                        weight,
                        bias: vec![T::zero(); out_dim],
                    })
                }
                LayerSpec::Conv2d {
                    out_ch,
                    kernel,
                    stride,
                } => {
                    if shape.len() != 3 {
                        return Err(Error::shape(format!(
                            "{name}: conv layer {i} expects CxHxW input, got {shape:?}"
                        )));
                    }
                    let (in_ch, in_h, in_w) = (shape[0], shape[1], shape[2]);
                    if in_h < kernel || in_w < kernel || stride == 0 {
                        return Err(Error::shape(format!(
                            "{name}: conv layer {i} kernel {kernel} stride {stride} too large for {in_h}x{in_w}"
                        )));
                    }
                    let fan_in = in_ch * kernel * kernel;
                    let fan_out = out_ch * kernel * kernel;
                    let limit = if next_is_relu {
                        (6.0 / fan_in as f64).sqrt()
                    } else {
                        (6.0 / (fan_in + fan_out) as f64).sqrt()
                    };
                    let weight = draw_uniform(rng, out_ch * fan_in, limit);
                    Layer::Conv2d(Conv2d {
                        in_ch,
                        out_ch,
                        kernel,
                        stride,
                        in_h,
                        in_w,
                        weight,
                        bias: vec![T::zero(); out_ch],
                    })
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Tanh => Layer::Tanh,
                LayerSpec::Sigmoid => Layer::Sigmoid,
            };
            shape = layer.out_shape(&shape);
            layers.push(layer);
        }
        Ok(Network {
            name: name.to_string(),
            input_shape: input_shape.to_vec(),
            layers,
        })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec()).collect()
    }

    pub fn output_shape(&self) -> Vec<usize> {
        let mut shape = self.input_shape.clone();
        for l in &self.layers {
            shape = l.out_shape(&shape);
        }
        shape
    }

    /// Run the network on a batched input, keeping activations for backward.
    pub fn forward(&self, input: &Tensor<T>) -> Result<Cache<T>> {
        if input.sample_len() != self.input_shape.iter().product::<usize>() {
            return Err(Error::shape(format!(
                "{}: input sample shape {:?} incompatible with {:?}",
                self.name,
                &input.shape[1..],
                self.input_shape
            )));
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(input.clone());
        for layer in &self.layers {
            let out = layer.forward(values.last().unwrap());
            values.push(out);
        }
        Ok(Cache { values })
    }

    /// Forward without retaining the cache.
    pub fn infer(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward(input)?.values.pop().unwrap())
    }

    /// Exact reverse-mode pass. Returns parameter gradients and the gradient
    /// with respect to the input.
    pub fn backward(&self, cache: &Cache<T>, upstream: &Tensor<T>) -> (Gradients<T>, Tensor<T>) {
        assert_eq!(
            cache.values.len(),
            self.layers.len() + 1,
            "forward cache missing"
        );
        let mut grads = Gradients::zeros_like(self);
        let mut g = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            g = layer.backward(&cache.values[i], &cache.values[i + 1], &g, &mut grads.layers[i]);
        }
        (grads, g)
    }

    pub fn num_params(&self) -> usize {
        self.param_arrays().iter().map(|a| a.len()).sum()
    }

    pub fn param_arrays(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Dense(d) => {
                    out.push(d.weight.as_slice());
                    out.push(d.bias.as_slice());
                }
                Layer::Conv2d(c) => {
                    out.push(c.weight.as_slice());
                    out.push(c.bias.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_arrays_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Dense(d) => {
                    out.push(d.weight.as_mut_slice());
                    out.push(d.bias.as_mut_slice());
                }
                Layer::Conv2d(c) => {
                    out.push(c.weight.as_mut_slice());
                    out.push(c.bias.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    /// Flat copy of all parameters, in `param_arrays` order.
    pub fn params_flat(&self) -> Vec<T> {
        self.param_arrays().iter().flat_map(|a| a.iter().copied()).collect()
    }

    pub fn set_params_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(format!(
                "{}: parameter count {} != {}",
                self.name,
                flat.len(),
                self.num_params()
            )));
        }
        let mut off = 0;
        for arr in self.param_arrays_mut() {
            arr.copy_from_slice(&flat[off..off + arr.len()]);
            off += arr.len();
        }
        Ok(())
    }

    /// Zero the parameters of the final parameterized layer.
    pub fn zero_final_layer(&mut self) {
        for l in self.layers.iter_mut().rev() {
            match l {
                Layer::Dense(d) => {
                    d.weight.iter_mut().for_each(|v| *v = T::zero());
                    d.bias.iter_mut().for_each(|v| *v = T::zero());
                    return;
                }
                Layer::Conv2d(c) => {
                    c.weight.iter_mut().for_each(|v| *v = T::zero());
                    c.bias.iter_mut().for_each(|v| *v = T::zero());
                    return;
                }
                _ => {}
            }
        }
    }
}

fn draw_uniform<T: Scalar, R: Rng>(rng: &mut R, n: usize, limit: f64) -> Vec<T> {
    (0..n)
        .map(|_| T::from_f64(rng.gen_range(-limit..limit)).unwrap())
        .collect()
}

/// ψ̄ ← (1-τ)·ψ̄ + τ·ψ, elementwise.
pub fn polyak_blend<T: Scalar>(target: &mut Network<T>, online: &Network<T>, tau: T) {
    let one_minus = T::one() - tau;
    let online_params = online.param_arrays();
    for (t_arr, o_arr) in target.param_arrays_mut().into_iter().zip(online_params) {
        for (t, o) in t_arr.iter_mut().zip(o_arr.iter()) {
            *t = one_minus * *t + tau * *o;
        }
    }
}
