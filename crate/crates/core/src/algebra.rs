//! Finite-dimensional real algebras defined by structure constants.
//!
//! An algebra of dimension `n` is fixed by the `n³` reals `p[i][j][k]`, the
//! coefficient of `e_k` in the basis product `e_i · e_j`. Everything else in
//! this crate (element products, left-multiplication matrices, Kronecker
//! emulation of layers) is derived from that tensor.
//!
//! Indices are 0-based throughout the API; for the built-in hypercomplex
//! algebras the identity is basis element 0.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::element::VElement;
use crate::error::{Error, Result};

/// Default tolerance for [`Algebra::analyze`].
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug)]
struct AlgebraData {
    dim: usize,
    /// `p[(i * n + j) * n + k]`
    table: Vec<f64>,
    basis: Vec<String>,
    name: String,
}

/// An immutable real algebra. Cloning is cheap (shared storage).
///
/// Equality compares dimension and structure constants only; names and basis
/// labels are for display.
#[derive(Debug, Clone)]
pub struct Algebra(Arc<AlgebraData>);

impl PartialEq for Algebra {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.dim == other.0.dim && self.0.table == other.0.table)
    }
}

/// Algebras shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinAlgebra {
    Real,
    Complex,
    Hyperbolic,
    Dual,
    Quaternion,
}

impl BuiltinAlgebra {
    pub const ALL: [BuiltinAlgebra; 5] = [
        BuiltinAlgebra::Real,
        BuiltinAlgebra::Complex,
        BuiltinAlgebra::Hyperbolic,
        BuiltinAlgebra::Dual,
        BuiltinAlgebra::Quaternion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinAlgebra::Real => "real",
            BuiltinAlgebra::Complex => "complex",
            BuiltinAlgebra::Hyperbolic => "hyperbolic",
            BuiltinAlgebra::Dual => "dual",
            BuiltinAlgebra::Quaternion => "quaternion",
        }
    }
}

impl fmt::Display for BuiltinAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinAlgebra {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinAlgebra::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownAlgebra(s.to_string()))
    }
}

/// Result of [`Algebra::analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraReport {
    pub commutative: bool,
    pub associative: bool,
    /// Two-sided identity, if one exists.
    pub identity: Option<VElement>,
    pub is_hypercomplex: bool,
    pub nondegenerate: bool,
    /// 0-based indices `k` for which the bilinear-form matrix `B_k` is singular.
    pub singular_bk_indices: Vec<usize>,
}

impl Algebra {
    /// Builds an algebra from a flat structure tensor laid out as
    /// `p[(i * n + j) * n + k]`. No property checks are performed.
    pub fn from_table(n: usize, p: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "algebra dimension must be positive".into(),
            ));
        }
        if p.len() != n * n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n * n,
                found: p.len(),
            });
        }
        if let Some(pos) = p.iter().position(|v| !v.is_finite()) {
            let (i, j, k) = (pos / (n * n), (pos / n) % n, pos % n);
            return Err(Error::NonFinite(format!(
                "structure constant p[{i}][{j}][{k}]"
            )));
        }
        Ok(Algebra(Arc::new(AlgebraData {
            dim: n,
            table: p,
            basis: (1..=n).map(|i| format!("e{i}")).collect(),
            name: format!("algebra{n}"),
        })))
    }

    /// Builds an algebra from a nested table where `table[i][j]` is the
    /// coefficient vector of `e_i · e_j`.
    pub fn from_nested(table: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = table.len();
        let mut flat = Vec::with_capacity(n * n * n);
        for row in table {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for entry in row {
                if entry.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: entry.len(),
                    });
                }
                flat.extend_from_slice(entry);
            }
        }
        Self::from_table(n, flat)
    }

    /// Builds the algebra whose left multiplication is `x·y = Σ_i x_i P_i φ(y)`,
    /// i.e. `P_i[k][j] = p_ijk`.
    pub fn parametrized(ps: &[DMatrix<f64>]) -> Result<Self> {
        let n = ps.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "at least one matrix is required".into(),
            ));
        }
        let mut p = vec![0.0; n * n * n];
        for (i, m) in ps.iter().enumerate() {
            if m.shape() != (n, n) {
                return Err(Error::shape(format!(
                    "parameter matrix {i} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            for j in 0..n {
                for k in 0..n {
                    p[(i * n + j) * n + k] = m[(k, j)];
                }
            }
        }
        Self::from_table(n, p)
    }

    pub fn builtin(which: BuiltinAlgebra) -> Self {
        // (basis labels, product of basis i and j as (coefficient, basis index))
        type Rule = fn(usize, usize) -> (f64, usize);
        let (labels, rule): (&[&str], Rule) = match which {
            BuiltinAlgebra::Real => (&["1"], |_, _| (1.0, 0)),
            BuiltinAlgebra::Complex => (&["1", "i"], |i, j| {
                if i == 1 && j == 1 {
                    (-1.0, 0)
                } else {
                    (1.0, i + j)
                }
            }),
            BuiltinAlgebra::Hyperbolic => (&["1", "j"], |i, j| {
                if i == 1 && j == 1 {
                    (1.0, 0)
                } else {
                    (1.0, i + j)
                }
            }),
            BuiltinAlgebra::Dual => (&["1", "ε"], |i, j| {
                if i == 1 && j == 1 {
                    (0.0, 0)
                } else {
                    (1.0, i + j)
                }
            }),
            BuiltinAlgebra::Quaternion => (&["1", "i", "j", "k"], quaternion_rule),
        };
        let n = labels.len();
        let mut p = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                let (coef, k) = rule(i, j);
                p[(i * n + j) * n + k] = coef;
            }
        }
        Self::from_table(n, p)
            .expect("builtin tables are well formed")
            .with_name(which.name())
            .with_basis(labels.iter().map(|s| s.to_string()).collect())
            .expect("builtin labels match dimension")
    }

    /// Random algebra with structure constants drawn uniformly from `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let p = (0..n * n * n)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        Ok(Self::from_table(n, p)?.with_name(format!("random{n}")))
    }

    pub fn with_name(self, name: impl Into<String>) -> Self {
        let d = &self.0;
        Algebra(Arc::new(AlgebraData {
            dim: d.dim,
            table: d.table.clone(),
            basis: d.basis.clone(),
            name: name.into(),
        }))
    }

    pub fn with_basis(self, labels: Vec<String>) -> Result<Self> {
        let d = &self.0;
        if labels.len() != d.dim {
            return Err(Error::DimensionMismatch {
                expected: d.dim,
                found: labels.len(),
            });
        }
        Ok(Algebra(Arc::new(AlgebraData {
            dim: d.dim,
            table: d.table.clone(),
            basis: labels,
            name: d.name.clone(),
        })))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.0.basis
    }

    /// Flat structure tensor, `p[(i * n + j) * n + k]`.
    pub fn table(&self) -> &[f64] {
        &self.0.table
    }

    /// Coefficient of `e_k` in `e_i · e_j`.
    #[inline]
    pub fn p(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.0.dim;
        self.0.table[(i * n + j) * n + k]
    }

    pub(crate) fn check_element(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `x · y`, computed coordinatewise as `z_k = φ(x)ᵀ B_k φ(y)`.
    pub fn multiply(&self, x: &VElement, y: &VElement) -> Result<VElement> {
        self.check_element(x.coords())?;
        self.check_element(y.coords())?;
        let mut z = vec![0.0; self.dim()];
        self.multiply_into(x.coords(), y.coords(), &mut z);
        Ok(VElement::from_vec_unchecked(z))
    }

    /// Accumulates `x · y` into `out` (`out += x·y`). Slices must have length `n`.
    pub(crate) fn multiply_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, xi) in x.iter().enumerate() {
                for (j, yj) in y.iter().enumerate() {
                    acc += xi * self.0.table[(i * n + j) * n + k] * yj;
                }
            }
            *o += acc;
        }
    }

    /// The matrix `P_{i:}ᵀ` with entries `[r][c] = p_{i c r}`, so that
    /// `M_L(a) = Σ_i a_i P_{i:}ᵀ`.
    pub fn left_factor(&self, i: usize) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| self.p(i, c, r))
    }

    /// All `n` matrices `P_{i:}ᵀ`; see [`Algebra::left_factor`].
    pub fn left_factors(&self) -> Vec<DMatrix<f64>> {
        (0..self.dim()).map(|i| self.left_factor(i)).collect()
    }

    /// `M_L(a)`, the real `n×n` matrix of `x ↦ a·x`.
    pub fn left_mult_matrix(&self, a: &VElement) -> Result<DMatrix<f64>> {
        self.check_element(a.coords())?;
        Ok(self.left_mult_matrix_of(a.coords()))
    }

    pub(crate) fn left_mult_matrix_of(&self, a: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| {
            let mut acc = 0.0;
            for (i, ai) in a.iter().enumerate() {
                acc += ai * self.p(i, c, r);
            }
            acc
        })
    }

    /// Bilinear-form matrices `B_k` with `B_k[i][j] = p_ijk`.
    pub fn bilinear_matrices(&self) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        (0..n)
            .map(|k| DMatrix::from_fn(n, n, |i, j| self.p(i, j, k)))
            .collect()
    }

    /// Checks commutativity, associativity, existence of a two-sided identity
    /// and non-degeneracy of every `B_k`, all to within `tol`.
    pub fn analyze(&self, tol: f64) -> AlgebraReport {
        let n = self.dim();

        let mut commutative = true;
        'comm: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if (self.p(i, j, k) - self.p(j, i, k)).abs() > tol {
                        commutative = false;
                        break 'comm;
                    }
                }
            }
        }

        // (e_i e_j) e_k = Σ_μ p_ijμ e_μ e_k  and  e_i (e_j e_k) = Σ_μ p_jkμ e_i e_μ
        let mut associative = true;
        'assoc: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut lhs = 0.0;
                        let mut rhs = 0.0;
                        for mu in 0..n {
                            lhs += self.p(i, j, mu) * self.p(mu, k, l);
                            rhs += self.p(j, k, mu) * self.p(i, mu, l);
                        }
                        if (lhs - rhs).abs() > tol {
                            associative = false;
                            break 'assoc;
                        }
                    }
                }
            }
        }

        let identity = self.find_identity(tol);

        let singular_bk_indices: Vec<usize> = self
            .bilinear_matrices()
            .into_iter()
            .enumerate()
            .filter(|(_, b)| is_singular(b, tol))
            .map(|(k, _)| k)
            .collect();

        AlgebraReport {
            commutative,
            associative,
            is_hypercomplex: identity.is_some(),
            identity,
            nondegenerate: singular_bk_indices.is_empty(),
            singular_bk_indices,
        }
    }

    /// Least-squares solve of `Σ_i e_i p_ijk = δ_jk` (so `e·x = x`), then a
    /// check that the solution also satisfies `x·e = x`.
    fn find_identity(&self, tol: f64) -> Option<VElement> {
        let n = self.dim();
        let system = DMatrix::from_fn(n * n, n, |row, i| self.p(i, row / n, row % n));
        let rhs = DVector::from_fn(n * n, |row, _| if row / n == row % n { 1.0 } else { 0.0 });
        let svd = system.clone().svd(true, true);
        let solution = svd.solve(&rhs, f64::EPSILON).ok()?;

        let snapped: Vec<f64> = solution
            .iter()
            .map(|v| {
                if (v - v.round()).abs() <= tol {
                    v.round()
                } else {
                    *v
                }
            })
            .collect();

        [snapped, solution.as_slice().to_vec()]
            .into_iter()
            .find(|e| self.identity_residual(e) <= tol)
            .map(VElement::from_vec_unchecked)
    }

    /// Largest deviation of `e·x = x` and `x·e = x` over the basis.
    fn identity_residual(&self, e: &[f64]) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let target = if j == k { 1.0 } else { 0.0 };
                let mut left = 0.0;
                let mut right = 0.0;
                for (i, ei) in e.iter().enumerate() {
                    left += ei * self.p(i, j, k);
                    right += ei * self.p(j, i, k);
                }
                worst = worst.max((left - target).abs()).max((right - target).abs());
            }
        }
        worst
    }

    /// Renders an element in basis-label form, e.g. `-176 + 45i + 96j + 11k`.
    pub fn format_element(&self, x: &VElement) -> String {
        let mut out = String::new();
        for (c, label) in x.coords().iter().zip(self.basis_labels()) {
            if *c == 0.0 {
                continue;
            }
            let magnitude = c.abs();
            if out.is_empty() {
                if *c < 0.0 {
                    out.push('-');
                }
            } else {
                out.push_str(if *c < 0.0 { " - " } else { " + " });
            }
            if label == "1" {
                out.push_str(&magnitude.to_string());
            } else if magnitude == 1.0 {
                out.push_str(label);
            } else {
                out.push_str(&format!("{magnitude}{label}"));
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

fn quaternion_rule(i: usize, j: usize) -> (f64, usize) {
    match (i, j) {
        (0, x) | (x, 0) => (1.0, x),
        (a, b) if a == b => (-1.0, 0),
        (1, 2) => (1.0, 3),
        (2, 1) => (-1.0, 3),
        (2, 3) => (1.0, 1),
        (3, 2) => (-1.0, 1),
        (3, 1) => (1.0, 2),
        (1, 3) => (-1.0, 2),
        _ => unreachable!("quaternion basis index out of range"),
    }
}

/// Singular when `σ_min ≤ tol · σ_max` (or `tol` itself when `σ_max` is 0).
fn is_singular(b: &DMatrix<f64>, tol: f64) -> bool {
    let sv = b.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = if max > 0.0 { max } else { 1.0 };
    min <= tol * scale
}
