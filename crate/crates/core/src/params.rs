use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Flat vector of trainable parameters (or a point in an objective's domain).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params<T>(Vec<T>);

impl<T: Scalar> Params<T> {
    pub fn zeros(dim: usize) -> Self {
        Params(vec![T::zero(); dim])
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for Params<T> {
    fn from(v: Vec<T>) -> Self {
        Params(v)
    }
}

impl<T: Clone> From<&[T]> for Params<T> {
    fn from(v: &[T]) -> Self {
        Params(v.to_vec())
    }
}

impl<T> Deref for Params<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for Params<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> FromIterator<T> for Params<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Params(iter.into_iter().collect())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_finite<T: Scalar>(xs: &[T]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Shape and finiteness checks shared by every optimizer step.
pub(crate) fn check_step<T: Scalar>(state_dim: usize, theta: &[T], grad: &[T]) -> Result<()> {
    check_dim(state_dim, theta.len())?;
    check_dim(state_dim, grad.len())?;
    check_finite(grad)
}
