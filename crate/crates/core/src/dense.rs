//! Vector-valued dense layers, `y = ψ(W x + b)`, with weights multiplying
//! inputs from the left.

use nalgebra::DMatrix;
use rand::Rng;

use crate::activation::SplitActivation;
use crate::algebra::Algebra;
use crate::element::VElement;
use crate::error::{Error, Result};
use crate::linalg::matvec;
use crate::vmatrix::VMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: VMatrix,
    bias: VMatrix,
    activation: SplitActivation,
}

/// Trainable-parameter counts of a dense layer and of an unconstrained real
/// layer with the same real input and output widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCounts {
    /// `n·M·(N+1)`
    pub vnet: usize,
    /// `n·M·(n·N+1)`
    pub real_equiv: usize,
}

impl ParamCounts {
    pub fn ratio(&self) -> f64 {
        self.real_equiv as f64 / self.vnet as f64
    }
}

pub fn dense_param_counts(n: usize, outputs: usize, inputs: usize) -> ParamCounts {
    ParamCounts {
        vnet: n * outputs * (inputs + 1),
        real_equiv: n * outputs * (n * inputs + 1),
    }
}

/// The real dense layer `ψ_R(Ŵ φ(x) + b_k)` that yields the `k`-th real
/// component of a [`DenseLayer`]'s output.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLayer {
    /// `M × nN`; block `(i, j)` is the row vector `φ(w_ij)ᵀ B_k`.
    pub weights: DMatrix<f64>,
    /// `b_k`, the `k`-th coordinate of each bias entry.
    pub bias: Vec<f64>,
    pub activation: SplitActivation,
}

impl ComponentLayer {
    pub fn forward(&self, xr: &[f64]) -> Result<Vec<f64>> {
        let mut s = matvec(&self.weights, xr)?;
        for (si, bi) in s.iter_mut().zip(&self.bias) {
            *si += bi;
        }
        self.activation.apply_in_place(&mut s);
        Ok(s)
    }
}

impl DenseLayer {
    /// `weights` is `M × N`, `bias` is an `M × 1` column.
    pub fn new(weights: VMatrix, bias: VMatrix, activation: SplitActivation) -> Result<Self> {
        if weights.algebra() != bias.algebra() {
            return Err(Error::AlgebraMismatch);
        }
        if bias.shape() != (weights.rows(), 1) {
            return Err(Error::shape(format!(
                "bias must be {}x1, got {}x{}",
                weights.rows(),
                bias.rows(),
                bias.cols()
            )));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(
        algebra: &Algebra,
        outputs: usize,
        inputs: usize,
        activation: SplitActivation,
    ) -> Self {
        DenseLayer {
            weights: VMatrix::zeros(algebra, outputs, inputs),
            bias: VMatrix::zeros(algebra, outputs, 1),
            activation,
        }
    }

    /// Weight coordinates uniform in `[-s, s]` with `s = 1/√(nN)`; zero bias.
    pub fn init<R: Rng + ?Sized>(
        algebra: &Algebra,
        outputs: usize,
        inputs: usize,
        activation: SplitActivation,
        rng: &mut R,
    ) -> Self {
        let scale = 1.0 / ((algebra.dim() * inputs.max(1)) as f64).sqrt();
        let mut layer = Self::zeros(algebra, outputs, inputs, activation);
        for w in layer.weights.data_mut() {
            *w = rng.random_range(-scale..=scale);
        }
        layer
    }

    pub fn algebra(&self) -> &Algebra {
        self.weights.algebra()
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &VMatrix {
        &self.weights
    }

    pub fn bias(&self) -> &VMatrix {
        &self.bias
    }

    pub fn activation(&self) -> SplitActivation {
        self.activation
    }

    pub(crate) fn weights_mut(&mut self) -> &mut VMatrix {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut VMatrix {
        &mut self.bias
    }

    /// Number of stored trainable reals, `n·M·(N+1)`.
    pub fn param_count(&self) -> usize {
        self.weights.data().len() + self.bias.data().len()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs(),
                found: len,
            });
        }
        Ok(())
    }

    /// Direct evaluation with the algebra product.
    pub fn forward(&self, x: &[VElement]) -> Result<Vec<VElement>> {
        self.check_input(x.len())?;
        let alg = self.algebra();
        for xj in x {
            alg.check_element(xj.coords())?;
        }
        let n = alg.dim();
        (0..self.outputs())
            .map(|i| {
                let mut s = VElement::zeros(n);
                for (j, xj) in x.iter().enumerate() {
                    alg.multiply_into(self.weights.entry(i, j), xj.coords(), s.coords_mut());
                }
                s.add_assign_slice(self.bias.entry(i, 0));
                Ok(self.activation.apply(&s))
            })
            .collect()
    }

    /// Evaluation on real coordinates: `ψ_R(M_L(W)·xr + φ(b))`.
    pub fn forward_emulated(&self, xr: &[f64]) -> Result<Vec<f64>> {
        let n = self.algebra().dim();
        if xr.len() != n * self.inputs() {
            return Err(Error::DimensionMismatch {
                expected: n * self.inputs(),
                found: xr.len(),
            });
        }
        let mut s = matvec(&self.weights.big_left_matrix(), xr)?;
        for (si, bi) in s.iter_mut().zip(self.bias.data()) {
            *si += bi;
        }
        self.activation.apply_in_place(&mut s);
        Ok(s)
    }

    /// Real layer producing the `k`-th output component (0-based `k`).
    pub fn component_output_layer(&self, k: usize) -> Result<ComponentLayer> {
        let alg = self.algebra();
        let n = alg.dim();
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, dim: n });
        }
        let (m, big_n) = self.weights.shape();
        let weights = DMatrix::from_fn(m, n * big_n, |i, col| {
            let (j, c) = (col / n, col % n);
            let w = self.weights.entry(i, j);
            let mut acc = 0.0;
            for (r, wr) in w.iter().enumerate() {
                acc += wr * alg.p(r, c, k);
            }
            acc
        });
        let bias = (0..m).map(|i| self.bias.entry(i, 0)[k]).collect();
        Ok(ComponentLayer {
            weights,
            bias,
            activation: self.activation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BuiltinAlgebra;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_counts() {
        assert_eq!(
            dense_param_counts(1, 3, 5),
            ParamCounts {
                vnet: 18,
                real_equiv: 18
            }
        );
        assert_eq!(
            dense_param_counts(4, 2, 3),
            ParamCounts {
                vnet: 32,
                real_equiv: 104
            }
        );
        assert_eq!(
            dense_param_counts(4, 8, 8),
            ParamCounts {
                vnet: 288,
                real_equiv: 1056
            }
        );
        let alg = Algebra::builtin(BuiltinAlgebra::Quaternion);
        let layer = DenseLayer::zeros(&alg, 2, 3, SplitActivation::Identity);
        assert_eq!(layer.param_count(), 32);
    }

    #[test]
    fn zero_layer_gives_zero() {
        let alg = Algebra::builtin(BuiltinAlgebra::Quaternion);
        let layer = DenseLayer::zeros(&alg, 3, 2, SplitActivation::Relu);
        let x = vec![VElement::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap(); 2];
        for y in layer.forward(&x).unwrap() {
            assert_eq!(y.coords(), &[0.0; 4]);
        }
    }

    #[test]
    fn sigmoid_of_zero() {
        let alg = Algebra::builtin(BuiltinAlgebra::Quaternion);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layer = DenseLayer::init(&alg, 3, 2, SplitActivation::Sigmoid, &mut rng);
        let y = layer.forward_emulated(&[0.0; 8]).unwrap();
        assert_eq!(y, vec![0.5; 12]);
    }

    #[test]
    fn init_respects_scale() {
        let alg = Algebra::builtin(BuiltinAlgebra::Quaternion);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layer = DenseLayer::init(&alg, 5, 4, SplitActivation::Tanh, &mut rng);
        let s = 1.0 / 16f64.sqrt();
        assert!(layer.weights().data().iter().all(|w| w.abs() <= s));
        assert!(layer.bias().data().iter().all(|b| *b == 0.0));
    }

    #[test]
    fn shape_errors() {
        let alg = Algebra::builtin(BuiltinAlgebra::Complex);
        let layer = DenseLayer::zeros(&alg, 2, 3, SplitActivation::Identity);
        assert!(layer.forward(&[VElement::zeros(2)]).is_err());
        assert!(layer.forward(&vec![VElement::zeros(3); 3]).is_err());
        assert!(layer.forward_emulated(&[0.0; 5]).is_err());
        assert!(matches!(
            layer.component_output_layer(2),
            Err(Error::IndexOutOfRange { index: 2, dim: 2 })
        ));
        let bad_bias = VMatrix::zeros(&alg, 3, 1);
        assert!(DenseLayer::new(
            VMatrix::zeros(&alg, 2, 3),
            bad_bias,
            SplitActivation::Identity
        )
        .is_err());
        let other = VMatrix::zeros(&Algebra::builtin(BuiltinAlgebra::Dual), 2, 1);
        assert!(matches!(
            DenseLayer::new(VMatrix::zeros(&alg, 2, 3), other, SplitActivation::Identity),
            Err(Error::AlgebraMismatch)
        ));
    }

    #[test]
    fn real_algebra_component_layer_is_weight_matrix() {
        let alg = Algebra::builtin(BuiltinAlgebra::Real);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let layer = DenseLayer::init(&alg, 3, 4, SplitActivation::Identity, &mut rng);
        let comp = layer.component_output_layer(0).unwrap();
        assert_eq!(
            comp.weights,
            layer.weights().component_stack().components[0]
        );
    }
}
