use std::ops::{Add, Index, Mul, Sub};

use crate::error::{Error, Result};

/// An element of an `n`-dimensional algebra, stored as its coordinates
/// relative to the algebra's ordered basis.
///
/// The coordinate vector *is* the φ-image of the element, so [`VElement::coords`]
/// is the canonical real representation used by every emulation routine.
#[derive(Debug, Clone, PartialEq)]
pub struct VElement(Vec<f64>);

impl VElement {
    /// Builds an element from its coordinates. Rejects NaN and infinities.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("element coordinate {pos}")));
        }
        Ok(VElement(coords))
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        VElement(coords)
    }

    pub fn zeros(n: usize) -> Self {
        VElement(vec![0.0; n])
    }

    /// The `index`-th basis vector of an `n`-dimensional space.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, dim: n });
        }
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        Ok(VElement(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Basis-relative absolute value: the Euclidean norm of the coordinates.
    ///
    /// This depends on the chosen basis and is not an algebraic invariant.
    pub fn abs(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, alpha: f64) -> VElement {
        VElement(self.0.iter().map(|v| alpha * v).collect())
    }

    pub(crate) fn add_assign_slice(&mut self, other: &[f64]) {
        debug_assert_eq!(self.0.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += b;
        }
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl Index<usize> for VElement {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &VElement {
    type Output = VElement;

    /// # Panics
    ///
    /// Panics on a dimension mismatch.
    fn add(self, rhs: &VElement) -> VElement {
        assert_eq!(
            self.dim(),
            rhs.dim(),
            "VElement addition: dimension mismatch"
        );
        VElement(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &VElement {
    type Output = VElement;

    /// # Panics
    ///
    /// Panics on a dimension mismatch.
    fn sub(self, rhs: &VElement) -> VElement {
        assert_eq!(
            self.dim(),
            rhs.dim(),
            "VElement subtraction: dimension mismatch"
        );
        VElement(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<&VElement> for f64 {
    type Output = VElement;

    fn mul(self, rhs: &VElement) -> VElement {
        rhs.scale(self)
    }
}
