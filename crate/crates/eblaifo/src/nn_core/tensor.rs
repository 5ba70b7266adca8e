use ndarray::NdFloat;
use num_traits::FromPrimitive;

/// Float type usable by the engine (f32 or f64).
pub trait Scalar: NdFloat + FromPrimitive {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dense row-major tensor. The first dimension is the batch dimension
/// wherever a batched value flows through a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Self {
        assert_eq!(
            data.len(),
            shape.iter().product::<usize>(),
            "tensor data length must match shape"
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn from_f64(shape: &[usize], data: &[f64]) -> Self {
        Tensor::from_vec(
            shape,
            data.iter()
                .map(|v| T::from_f64(*v).expect("f64 conversion"))
                .collect(),
        )
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Batch size (first dimension).
    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    /// Elements per sample (product of trailing dimensions).
    pub fn sample_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.to_f64().unwrap()).collect()
    }
}
