//! Matrices over an algebra and their real-valued emulation.
//!
//! Storage is a contiguous `rows × cols × n` array with coordinates innermost:
//! entry `(r, c)` occupies `data[(r * cols + c) * n .. (r * cols + c + 1) * n]`.
//!
//! The real image `φ(B)` of an `L×N` matrix is the `nL×N` matrix whose
//! column `j` stacks `φ(b_0j), φ(b_1j), …`; that is,
//! `φ(B)[(l * n + k, j)] = B[l][j]_k`. For a column vector this is exactly a
//! row scan of the entries' coordinates.

use nalgebra::DMatrix;
use rand::Rng;

use crate::algebra::Algebra;
use crate::element::VElement;
use crate::error::{Error, Result};
use crate::linalg::{kron, matmul};

#[derive(Debug, Clone, PartialEq)]
pub struct VMatrix {
    algebra: Algebra,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// The real component matrices `A_1, …, A_n` with `A = Σ_k A_k e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentStack {
    pub components: Vec<DMatrix<f64>>,
}

impl VMatrix {
    /// Wraps raw `rows × cols × n` coordinate data.
    pub fn new(algebra: &Algebra, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let expected = rows * cols * algebra.dim();
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix data".into()));
        }
        Ok(VMatrix {
            algebra: algebra.clone(),
            rows,
            cols,
            data,
        })
    }

    pub fn zeros(algebra: &Algebra, rows: usize, cols: usize) -> Self {
        VMatrix {
            algebra: algebra.clone(),
            rows,
            cols,
            data: vec![0.0; rows * cols * algebra.dim()],
        }
    }

    /// Builds a matrix from row-major elements.
    pub fn from_elements(
        algebra: &Algebra,
        rows: usize,
        cols: usize,
        elements: &[VElement],
    ) -> Result<Self> {
        if elements.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} elements given for a {rows}x{cols} matrix",
                elements.len()
            )));
        }
        let mut data = Vec::with_capacity(rows * cols * algebra.dim());
        for e in elements {
            algebra.check_element(e.coords())?;
            data.extend_from_slice(e.coords());
        }
        Ok(VMatrix {
            algebra: algebra.clone(),
            rows,
            cols,
            data,
        })
    }

    /// A column vector holding `elements`.
    pub fn column(algebra: &Algebra, elements: &[VElement]) -> Result<Self> {
        Self::from_elements(algebra, elements.len(), 1, elements)
    }

    /// Square matrix with `diag` on the diagonal and zeros elsewhere.
    pub fn diagonal(algebra: &Algebra, size: usize, diag: &VElement) -> Result<Self> {
        algebra.check_element(diag.coords())?;
        let mut m = Self::zeros(algebra, size, size);
        for i in 0..size {
            m.entry_mut(i, i).copy_from_slice(diag.coords());
        }
        Ok(m)
    }

    /// Entries with every coordinate uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(
        algebra: &Algebra,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Self {
        let data = (0..rows * cols * algebra.dim())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        VMatrix {
            algebra: algebra.clone(),
            rows,
            cols,
            data,
        }
    }

    /// Reassembles `Σ_k A_k e_k` from component matrices.
    pub fn from_components(algebra: &Algebra, stack: &ComponentStack) -> Result<Self> {
        let n = algebra.dim();
        if stack.components.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: stack.components.len(),
            });
        }
        let (rows, cols) = stack.components[0].shape();
        if stack.components.iter().any(|c| c.shape() != (rows, cols)) {
            return Err(Error::shape("component matrices differ in shape"));
        }
        let mut m = Self::zeros(algebra, rows, cols);
        for (k, comp) in stack.components.iter().enumerate() {
            for r in 0..rows {
                for c in 0..cols {
                    m.entry_mut(r, c)[k] = comp[(r, c)];
                }
            }
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("component matrices".into()));
        }
        Ok(m)
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Raw coordinate storage, `rows × cols × n`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Coordinates of entry `(r, c)`.
    ///
    /// # Panics
    ///
    /// Panics if `(r, c)` is out of bounds.
    pub fn entry(&self, r: usize, c: usize) -> &[f64] {
        assert!(
            r < self.rows && c < self.cols,
            "entry ({r}, {c}) out of bounds"
        );
        let n = self.algebra.dim();
        let start = (r * self.cols + c) * n;
        &self.data[start..start + n]
    }

    pub(crate) fn entry_mut(&mut self, r: usize, c: usize) -> &mut [f64] {
        let n = self.algebra.dim();
        let start = (r * self.cols + c) * n;
        &mut self.data[start..start + n]
    }

    pub fn get(&self, r: usize, c: usize) -> VElement {
        VElement::from_vec_unchecked(self.entry(r, c).to_vec())
    }

    /// Replaces entry `(r, c)`.
    pub fn set(&mut self, r: usize, c: usize, value: &VElement) -> Result<()> {
        self.algebra.check_element(value.coords())?;
        if r >= self.rows || c >= self.cols {
            return Err(Error::shape(format!(
                "entry ({r}, {c}) outside a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        self.entry_mut(r, c).copy_from_slice(value.coords());
        Ok(())
    }

    /// Row-major list of entries.
    pub fn elements(&self) -> Vec<VElement> {
        self.data
            .chunks(self.algebra.dim())
            .map(|c| VElement::from_vec_unchecked(c.to_vec()))
            .collect()
    }

    /// Splits `A` into `A_1, …, A_n` with `A = Σ_k A_k e_k`.
    pub fn component_stack(&self) -> ComponentStack {
        let n = self.algebra.dim();
        let components = (0..n)
            .map(|k| DMatrix::from_fn(self.rows, self.cols, |r, c| self.entry(r, c)[k]))
            .collect();
        ComponentStack { components }
    }

    /// `φ(B)`: the `nL×N` real matrix stacking entry coordinates down each column.
    pub fn phi(&self) -> DMatrix<f64> {
        let n = self.algebra.dim();
        DMatrix::from_fn(self.rows * n, self.cols, |row, c| {
            self.entry(row / n, c)[row % n]
        })
    }

    /// Inverse of [`VMatrix::phi`].
    pub fn unphi(algebra: &Algebra, y: &DMatrix<f64>) -> Result<Self> {
        let n = algebra.dim();
        if !y.nrows().is_multiple_of(n) {
            return Err(Error::shape(format!(
                "{} rows are not divisible by the algebra dimension {n}",
                y.nrows()
            )));
        }
        let rows = y.nrows() / n;
        let mut m = Self::zeros(algebra, rows, y.ncols());
        for r in 0..rows {
            for c in 0..y.ncols() {
                for k in 0..n {
                    m.entry_mut(r, c)[k] = y[(r * n + k, c)];
                }
            }
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("real matrix".into()));
        }
        Ok(m)
    }

    /// `M_L(A) = Σ_k A_k ⊗ P_{k:}ᵀ`, the `nM×nL` real matrix emulating left
    /// multiplication by `A`.
    pub fn big_left_matrix(&self) -> DMatrix<f64> {
        let n = self.algebra.dim();
        let stack = self.component_stack();
        let mut out = DMatrix::zeros(self.rows * n, self.cols * n);
        for (k, comp) in stack.components.iter().enumerate() {
            out += kron(comp, &self.algebra.left_factor(k));
        }
        out
    }

    /// `M_L(A)` assembled block by block, block `(i, l)` being `M_L(a_il)`.
    pub fn big_left_matrix_blockwise(&self) -> DMatrix<f64> {
        let n = self.algebra.dim();
        let mut out = DMatrix::zeros(self.rows * n, self.cols * n);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let block = self.algebra.left_mult_matrix_of(self.entry(i, l));
                out.view_mut((i * n, l * n), (n, n)).copy_from(&block);
            }
        }
        out
    }

    fn check_product(&self, rhs: &VMatrix) -> Result<()> {
        if self.algebra != rhs.algebra {
            return Err(Error::AlgebraMismatch);
        }
        if self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }

    /// `c_ij = Σ_l a_il · b_lj`, evaluated entry by entry with the algebra product.
    pub fn mul_direct(&self, rhs: &VMatrix) -> Result<VMatrix> {
        self.check_product(rhs)?;
        let mut out = Self::zeros(&self.algebra, self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = vec![0.0; self.algebra.dim()];
                for l in 0..self.cols {
                    self.algebra
                        .multiply_into(self.entry(i, l), rhs.entry(l, j), &mut acc);
                }
                out.entry_mut(i, j).copy_from_slice(&acc);
            }
        }
        Ok(out)
    }

    /// `φ⁻¹(M_L(A) · φ(B))`, the product through real matrix arithmetic.
    pub fn mul_emulated(&self, rhs: &VMatrix) -> Result<VMatrix> {
        self.check_product(rhs)?;
        let y = matmul(&self.big_left_matrix(), &rhs.phi())?;
        Self::unphi(&self.algebra, &y)
    }
}

impl ComponentStack {
    pub fn dim(&self) -> usize {
        self.components.len()
    }
}
