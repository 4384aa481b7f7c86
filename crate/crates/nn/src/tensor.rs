use pogd_core::Scalar;

use crate::error::{mismatch, Result};

/// Dense `(batch, channels, height, width)` array in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T> {
    data: Vec<T>,
    shape: [usize; 4],
}

impl<T: Scalar> Tensor4<T> {
    pub fn new(data: Vec<T>, shape: [usize; 4]) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(mismatch("tensor data length", len, data.len()));
        }
        Ok(Tensor4 { data, shape })
    }

    pub fn zeros(shape: [usize; 4]) -> Self {
        Tensor4 {
            data: vec![T::zero(); shape.iter().product()],
            shape,
        }
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    /// Elements per sample.
    pub fn sample_len(&self) -> usize {
        self.shape[1] * self.shape[2] * self.shape[3]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, n: usize, c: usize, h: usize, w: usize) -> usize {
        ((n * self.shape[1] + c) * self.shape[2] + h) * self.shape[3] + w
    }

    pub fn get(&self, n: usize, c: usize, h: usize, w: usize) -> T {
        self.data[self.index(n, c, h, w)]
    }

    /// Copies the listed samples, in order, into a new tensor.
    pub fn gather(&self, samples: &[usize]) -> Self {
        let len = self.sample_len();
        let mut data = Vec::with_capacity(samples.len() * len);
        for &s in samples {
            data.extend_from_slice(&self.data[s * len..(s + 1) * len]);
        }
        Tensor4 {
            data,
            shape: [samples.len(), self.shape[1], self.shape[2], self.shape[3]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}
