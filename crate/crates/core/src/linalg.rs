//! Dense real-matrix helpers.
//!
//! Products here use plain nested loops with a fixed summation order
//! (accumulator starts at `0.0`, inner index ascending). Several tests rely
//! on that order to compare the one-dimensional algebra bit-for-bit against
//! ordinary real arithmetic, so do not swap these for BLAS-backed kernels.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Kronecker product `a ⊗ b`: block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// `a · b` with a fixed accumulation order.
pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.nrows() {
        return Err(Error::shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = 0.0;
            for l in 0..a.ncols() {
                acc += a[(i, l)] * b[(l, j)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// `a · x` with a fixed accumulation order.
pub fn matvec(a: &DMatrix<f64>, x: &[f64]) -> Result<Vec<f64>> {
    if a.ncols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: x.len(),
        });
    }
    Ok((0..a.nrows())
        .map(|i| {
            let mut acc = 0.0;
            for (l, xl) in x.iter().enumerate() {
                acc += a[(i, l)] * xl;
            }
            acc
        })
        .collect())
}

/// `aᵀ · y` with a fixed accumulation order.
pub fn matvec_transpose(a: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: y.len(),
        });
    }
    Ok((0..a.ncols())
        .map(|j| {
            let mut acc = 0.0;
            for (i, yi) in y.iter().enumerate() {
                acc += a[(i, j)] * yi;
            }
            acc
        })
        .collect())
}

/// Largest absolute entry, `0.0` for an empty slice.
pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `‖a − b‖∞ / ‖b‖∞`, or the plain `‖a − b‖∞` when `b` is identically zero.
///
/// # Panics
///
/// Panics if the slices have different lengths.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "relative_error: length mismatch");
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = max_abs(b);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_with_one_by_one_is_scaling() {
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(kron(&DMatrix::from_element(1, 1, 1.0), &b), b);
        assert_eq!(kron(&DMatrix::from_element(1, 1, -2.0), &b), &b * -2.0);
    }

    #[test]
    fn kron_identity_is_block_diagonal() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = kron(&DMatrix::identity(2, 2), &b);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 2.0, 0.0, 0.0, //
                3.0, 4.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 2.0, //
                0.0, 0.0, 3.0, 4.0,
            ],
        );
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_matches_nalgebra() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, 7.0]);
        let b = DMatrix::from_row_slice(3, 2, &[0.1, 0.2, -0.3, 0.4, 0.5, -0.6]);
        assert_eq!(kron(&a, &b), a.kronecker(&b));
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = DMatrix::<f64>::zeros(2, 3);
        let b = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(matmul(&a, &b), Err(Error::Shape(_))));
        assert!(matvec(&a, &[1.0, 2.0]).is_err());
        assert!(matvec_transpose(&a, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn products_agree_with_nalgebra() {
        let a = DMatrix::from_fn(3, 4, |i, j| (i as f64) - 0.5 * (j as f64));
        let b = DMatrix::from_fn(4, 2, |i, j| 1.0 + (i * j) as f64);
        assert_eq!(matmul(&a, &b).unwrap(), &a * &b);
        let x = [1.0, -1.0, 2.0, 0.5];
        let y = matvec(&a, &x).unwrap();
        let expected = &a * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(y, expected.as_slice());
        let t = matvec_transpose(&a, &[1.0, 2.0, 3.0]).unwrap();
        let expected = a.transpose() * nalgebra::DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        assert_eq!(t, expected.as_slice());
    }

    #[test]
    fn relative_error_handles_zero_reference() {
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(relative_error(&[1e-3, 0.0], &[0.0, 0.0]), 1e-3);
        assert!((relative_error(&[1.0, 2.0], &[1.0, 4.0]) - 0.5).abs() < 1e-15);
    }
}
