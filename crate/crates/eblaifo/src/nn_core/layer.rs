use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::tensor::{Scalar, Tensor};

/// Architecture description, independent of parameters and float type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv2d {
        out_ch: usize,
        kernel: usize,
        stride: usize,
    },
    Dense {
        out_dim: usize,
    },
    Relu,
    Tanh,
    Sigmoid,
}

impl LayerSpec {
    pub fn is_relu(&self) -> bool {
        matches!(self, LayerSpec::Relu)
    }
}

#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major [out_dim, in_dim].
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub in_h: usize,
    pub in_w: usize,
    /// Row-major [out_ch, in_ch * kernel * kernel].
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T> Conv2d<T> {
    pub fn out_h(&self) -> usize {
        (self.in_h - self.kernel) / self.stride + 1
    }
    pub fn out_w(&self) -> usize {
        (self.in_w - self.kernel) / self.stride + 1
    }
}

#[derive(Debug, Clone)]
pub enum Layer<T> {
    Dense(Dense<T>),
    Conv2d(Conv2d<T>),
    Relu,
    Tanh,
    Sigmoid,
}

/// Gradient buffers for one layer, matching its parameter layout.
#[derive(Debug, Clone)]
pub struct LayerGrads<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T> Default for LayerGrads<T> {
    fn default() -> Self {
        LayerGrads {
            weight: Vec::new(),
            bias: Vec::new(),
        }
    }
}

impl<T: Scalar> Layer<T> {
    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Dense(d) => LayerSpec::Dense { out_dim: d.out_dim },
            Layer::Conv2d(c) => LayerSpec::Conv2d {
                out_ch: c.out_ch,
                kernel: c.kernel,
                stride: c.stride,
            },
            Layer::Relu => LayerSpec::Relu,
            Layer::Tanh => LayerSpec::Tanh,
            Layer::Sigmoid => LayerSpec::Sigmoid,
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn out_shape(&self, in_shape: &[usize]) -> Vec<usize> {
        match self {
            Layer::Dense(d) => vec![d.out_dim],
            Layer::Conv2d(c) => vec![c.out_ch, c.out_h(), c.out_w()],
            _ => in_shape.to_vec(),
        }
    }

    pub fn zero_grads(&self) -> LayerGrads<T> {
        match self {
            Layer::Dense(d) => LayerGrads {
                weight: vec![T::zero(); d.weight.len()],
                bias: vec![T::zero(); d.bias.len()],
            },
            Layer::Conv2d(c) => LayerGrads {
                weight: vec![T::zero(); c.weight.len()],
                bias: vec![T::zero(); c.bias.len()],
            },
            _ => LayerGrads::default(),
        }
    }

    pub fn forward(&self, input: &Tensor<T>) -> Tensor<T> {
        let n = input.batch();
        match self {
            Layer::Dense(d) => {
                assert_eq!(input.sample_len(), d.in_dim, "dense input size");
                let x = ArrayView2::from_shape((n, d.in_dim), &input.data).unwrap();
                let w = ArrayView2::from_shape((d.out_dim, d.in_dim), &d.weight).unwrap();
                let mut y: Array2<T> = x.dot(&w.t());
                for mut row in y.rows_mut() {
                    for (o, b) in row.iter_mut().zip(&d.bias) {
                        *o = *o + *b;
                    }
                }
                Tensor::from_vec(&[n, d.out_dim], y.into_raw_vec())
            }
            Layer::Conv2d(c) => {
                assert_eq!(
                    input.sample_len(),
                    c.in_ch * c.in_h * c.in_w,
                    "conv input size"
                );
                conv_forward(c, input)
            }
            Layer::Relu => Tensor {
                shape: input.shape.clone(),
                data: input.data.iter().map(|v| v.max(T::zero())).collect(),
            },
            Layer::Tanh => Tensor {
                shape: input.shape.clone(),
                data: input.data.iter().map(|v| v.tanh()).collect(),
            },
            Layer::Sigmoid => Tensor {
                shape: input.shape.clone(),
                data: input
                    .data
                    .iter()
                    .map(|v| T::one() / (T::one() + (-*v).exp()))
                    .collect(),
            },
        }
    }

    /// Accumulate parameter gradients into `grads` and return the input
    /// gradient. `input`/`output` are the cached forward values.
    pub fn backward(
        &self,
        input: &Tensor<T>,
        output: &Tensor<T>,
        upstream: &Tensor<T>,
        grads: &mut LayerGrads<T>,
    ) -> Tensor<T> {
        let n = input.batch();
        match self {
            Layer::Dense(d) => {
                let x = ArrayView2::from_shape((n, d.in_dim), &input.data).unwrap();
                let g = ArrayView2::from_shape((n, d.out_dim), &upstream.data).unwrap();
                // dW = gᵀ x, db = column sums of g, dx = g W.
                let dw: Array2<T> = g.t().dot(&x);
                for (acc, v) in grads.weight.iter_mut().zip(dw.iter()) {
                    *acc = *acc + *v;
                }
                for row in g.rows() {
                    for (acc, v) in grads.bias.iter_mut().zip(row.iter()) {
                        *acc = *acc + *v;
                    }
                }
                let w = ArrayView2::from_shape((d.out_dim, d.in_dim), &d.weight).unwrap();
                let dx: Array2<T> = g.dot(&w);
                Tensor {
                    shape: input.shape.clone(),
                    data: dx.into_raw_vec(),
                }
            }
            Layer::Conv2d(c) => conv_backward(c, input, upstream, grads),
            Layer::Relu => Tensor {
                shape: input.shape.clone(),
                data: input
                    .data
                    .iter()
                    .zip(&upstream.data)
                    .map(|(x, g)| if *x > T::zero() { *g } else { T::zero() })
                    .collect(),
            },
            Layer::Tanh => Tensor {
                shape: input.shape.clone(),
                data: output
                    .data
                    .iter()
                    .zip(&upstream.data)
                    .map(|(y, g)| *g * (T::one() - *y * *y))
                    .collect(),
            },
            Layer::Sigmoid => Tensor {
                shape: input.shape.clone(),
                data: output
                    .data
                    .iter()
                    .zip(&upstream.data)
                    .map(|(y, g)| *g * *y * (T::one() - *y))
                    .collect(),
            },
        }
    }
}

/// Gather conv patches of one sample into a [in_ch*k*k, oh*ow] column matrix.
fn im2col<T: Scalar>(c: &Conv2d<T>, sample: &[T], col: &mut [T]) {
    let (oh, ow) = (c.out_h(), c.out_w());
    let cols = oh * ow;
    let mut row = 0;
    for ch in 0..c.in_ch {
        let plane = &sample[ch * c.in_h * c.in_w..(ch + 1) * c.in_h * c.in_w];
        for ky in 0..c.kernel {
            for kx in 0..c.kernel {
                for oy in 0..oh {
                    let iy = oy * c.stride + ky;
                    let src = &plane[iy * c.in_w..];
                    let dst = &mut col[row * cols + oy * ow..row * cols + oy * ow + ow];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        *d = src[ox * c.stride + kx];
                    }
                }
                row += 1;
            }
        }
    }
}

fn conv_forward<T: Scalar>(c: &Conv2d<T>, input: &Tensor<T>) -> Tensor<T> {
    let n = input.batch();
    let (oh, ow) = (c.out_h(), c.out_w());
    let cols = oh * ow;
    let krows = c.in_ch * c.kernel * c.kernel;
    let sample_len = input.sample_len();
    let w = ArrayView2::from_shape((c.out_ch, krows), &c.weight).unwrap();
    let mut out = vec![T::zero(); n * c.out_ch * cols];
    let mut col = vec![T::zero(); krows * cols];
    for s in 0..n {
        im2col(c, &input.data[s * sample_len..(s + 1) * sample_len], &mut col);
        let col_m = ArrayView2::from_shape((krows, cols), &col).unwrap();
        let y: Array2<T> = w.dot(&col_m);
        let dst = &mut out[s * c.out_ch * cols..(s + 1) * c.out_ch * cols];
        for (oc, yrow) in y.rows().into_iter().enumerate() {
            let b = c.bias[oc];
            for (d, v) in dst[oc * cols..(oc + 1) * cols].iter_mut().zip(yrow.iter()) {
                *d = *v + b;
            }
        }
    }
    Tensor::from_vec(&[n, c.out_ch, oh, ow], out)
}

fn conv_backward<T: Scalar>(
    c: &Conv2d<T>,
    input: &Tensor<T>,
    upstream: &Tensor<T>,
    grads: &mut LayerGrads<T>,
) -> Tensor<T> {
    let n = input.batch();
    let (oh, ow) = (c.out_h(), c.out_w());
    let cols = oh * ow;
    let krows = c.in_ch * c.kernel * c.kernel;
    let sample_len = input.sample_len();
    let w = ArrayView2::from_shape((c.out_ch, krows), &c.weight).unwrap();
    let mut dx = vec![T::zero(); input.data.len()];
    let mut col = vec![T::zero(); krows * cols];
    let mut dw_acc = Array2::<T>::zeros((c.out_ch, krows));
    for s in 0..n {
        im2col(c, &input.data[s * sample_len..(s + 1) * sample_len], &mut col);
        let col_m = ArrayView2::from_shape((krows, cols), &col).unwrap();
        let g = ArrayView2::from_shape(
            (c.out_ch, cols),
            &upstream.data[s * c.out_ch * cols..(s + 1) * c.out_ch * cols],
        )
        .unwrap();
        dw_acc = dw_acc + g.dot(&col_m.t());
        for (oc, grow) in g.rows().into_iter().enumerate() {
            let mut sum = T::zero();
            for v in grow.iter() {
                sum = sum + *v;
            }
            grads.bias[oc] = grads.bias[oc] + sum;
        }
        // dcol = Wᵀ g, then scatter back (col2im).
        let dcol: Array2<T> = w.t().dot(&g);
        let dst = &mut dx[s * sample_len..(s + 1) * sample_len];
        let dcol_slice = dcol.as_slice().unwrap();
        let mut row = 0;
        for ch in 0..c.in_ch {
            let plane_off = ch * c.in_h * c.in_w;
            for ky in 0..c.kernel {
                for kx in 0..c.kernel {
                    for oy in 0..oh {
                        let iy = oy * c.stride + ky;
                        let src = &dcol_slice[row * cols + oy * ow..row * cols + oy * ow + ow];
                        for (ox, v) in src.iter().enumerate() {
                            let ix = ox * c.stride + kx;
                            dst[plane_off + iy * c.in_w + ix] =
                                dst[plane_off + iy * c.in_w + ix] + *v;
                        }
                    }
                    row += 1;
                }
            }
        }
    }
    for (acc, v) in grads.weight.iter_mut().zip(dw_acc.iter()) {
        *acc = *acc + *v;
    }
    Tensor {
        shape: input.shape.clone(),
        data: dx,
    }
}
