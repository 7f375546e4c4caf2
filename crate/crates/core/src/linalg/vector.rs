use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector<T> {
    data: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    /// Builds a vector, rejecting empty input and NaN/Inf entries.
    pub fn new(data: Vec<T>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector construction"));
        }
        Ok(Self { data })
    }

    /// Wraps data produced by library arithmetic. Finiteness is only checked in debug builds.
    pub(crate) fn from_raw(data: Vec<T>) -> Self {
        debug_assert!(!data.is_empty());
        Self { data }
    }

    pub fn from_f64_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| T::c(v)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_raw(vec![T::zero(); dim])
    }

    pub fn filled(dim: usize, value: T) -> Self {
        Self::from_raw(vec![value; dim])
    }

    /// `e_{i,n}`: the all-zeros vector with a one at coordinate `i`.
    pub fn unit(i: usize, dim: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[i] = T::one();
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.to_f64_lossy()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got: self.dim() })
        }
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.data.iter().zip(&other.data).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm2_squared(&self) -> T {
        self.dot(self)
    }

    /// Euclidean norm, scaled to avoid overflow.
    pub fn norm2(&self) -> T {
        let scale = self.norm_inf();
        if scale == T::zero() {
            return T::zero();
        }
        let sum: T = self.data.iter().map(|&v| (v / scale) * (v / scale)).sum();
        scale * sum.sqrt()
    }

    pub fn norm1(&self) -> T {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_inf(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_raw(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self::from_raw(self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + s * b)
    }

    /// In-place `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + s * b;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    /// Concatenates blocks into one vector.
    pub fn concat(blocks: &[&Self]) -> Self {
        let mut data = Vec::with_capacity(blocks.iter().map(|b| b.dim()).sum());
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Self::from_raw(data)
    }

    /// Copies out `len` entries starting at `start`.
    pub fn segment(&self, start: usize, len: usize) -> Self {
        Self::from_raw(self.data[start..start + len].to_vec())
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

impl<T: Scalar> Add for &Vector<T> {
    type Output = Vector<T>;
    fn add(self, rhs: Self) -> Vector<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for &Vector<T> {
    type Output = Vector<T>;
    fn sub(self, rhs: Self) -> Vector<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Scalar> Mul<T> for &Vector<T> {
    type Output = Vector<T>;
    fn mul(self, rhs: T) -> Vector<T> {
        self.scale(rhs)
    }
}

impl<T: Scalar> Neg for &Vector<T> {
    type Output = Vector<T>;
    fn neg(self) -> Vector<T> {
        self.map(|v| -v)
    }
}

/// Neumaier-compensated running sum of vectors.
#[derive(Debug, Clone)]
pub struct CompensatedSum<T> {
    sum: Vec<T>,
    carry: Vec<T>,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new(dim: usize) -> Self {
        Self { sum: vec![T::zero(); dim], carry: vec![T::zero(); dim] }
    }

    pub fn add_scaled(&mut self, weight: T, v: &Vector<T>) {
        for ((s, c), &x) in self.sum.iter_mut().zip(self.carry.iter_mut()).zip(v.as_slice()) {
            let term = weight * x;
            let t = *s + term;
            if s.abs() >= term.abs() {
                *c = *c + ((*s - t) + term);
            } else {
                *c = *c + ((term - t) + *s);
            }
            *s = t;
        }
    }

    pub fn value(&self) -> Vector<T> {
        Vector::from_raw(self.sum.iter().zip(&self.carry).map(|(&s, &c)| s + c).collect())
    }
}

/// Neumaier-compensated scalar sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedScalar<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> CompensatedScalar<T> {
    pub fn add(&mut self, term: T) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.carry = self.carry + ((self.sum - t) + term);
        } else {
            self.carry = self.carry + ((term - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}
