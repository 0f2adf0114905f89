//! Vector-valued multilayer perceptrons.

use nalgebra::DMatrix;
use rand::Rng;

use crate::activation::SplitActivation;
use crate::algebra::Algebra;
use crate::dense::DenseLayer;
use crate::element::VElement;
use crate::error::{Error, Result};
use crate::linalg::matvec;

/// How the last dense layer's output is turned into the network output.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputMode {
    /// The last layer's vector-valued output, unchanged.
    Vector,
    /// `y_o = Σ_i α[o, i] · h_i` with real scalars `α` (`P × M`).
    RealOutputWeights(DMatrix<f64>),
    /// The `k`-th real coordinate (0-based) of each output of the last layer.
    Component(usize),
}

/// Output shape requested from [`Vmlp::init`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputSpec {
    Vector,
    RealOutputWeights { outputs: usize },
    Component(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelOutput {
    Vector(Vec<VElement>),
    Real(Vec<f64>),
}

impl ModelOutput {
    /// Flattened real representation (`φ` for vector outputs).
    pub fn to_real(&self) -> Vec<f64> {
        match self {
            ModelOutput::Vector(v) => v.iter().flat_map(|e| e.coords().iter().copied()).collect(),
            ModelOutput::Real(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vmlp {
    layers: Vec<DenseLayer>,
    output: OutputMode,
}

impl Vmlp {
    pub fn new(layers: Vec<DenseLayer>, output: OutputMode) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidArgument("a model needs at least one layer".into()))?;
        let algebra = first.algebra().clone();
        for (idx, pair) in layers.windows(2).enumerate() {
            if pair[1].algebra() != &algebra {
                return Err(Error::AlgebraMismatch);
            }
            if pair[1].inputs() != pair[0].outputs() {
                return Err(Error::shape(format!(
                    "layer {} expects {} inputs but layer {idx} produces {}",
                    idx + 1,
                    pair[1].inputs(),
                    pair[0].outputs()
                )));
            }
        }
        let last = layers.last().map(DenseLayer::outputs).unwrap_or_default();
        match &output {
            OutputMode::Vector => {}
            OutputMode::RealOutputWeights(alpha) => {
                if alpha.ncols() != last {
                    return Err(Error::shape(format!(
                        "output weights have {} columns, last layer has {last} outputs",
                        alpha.ncols()
                    )));
                }
                if alpha.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("output weights".into()));
                }
            }
            OutputMode::Component(k) => {
                if *k >= algebra.dim() {
                    return Err(Error::IndexOutOfRange {
                        index: *k,
                        dim: algebra.dim(),
                    });
                }
            }
        }
        Ok(Vmlp { layers, output })
    }

    /// Randomly initialised model. `widths = [N, h_1, …, h_L]` gives the
    /// input width followed by each layer's width; `activations` has one entry
    /// per layer. Real output weights are uniform in `[-1/√h_L, 1/√h_L]`.
    pub fn init<R: Rng + ?Sized>(
        algebra: &Algebra,
        widths: &[usize],
        activations: &[SplitActivation],
        output: OutputSpec,
        rng: &mut R,
    ) -> Result<Self> {
        if widths.len() < 2 || activations.len() != widths.len() - 1 {
            return Err(Error::InvalidArgument(
                "need one activation per layer and at least one layer".into(),
            ));
        }
        if widths.contains(&0) {
            return Err(Error::InvalidArgument(
                "layer widths must be positive".into(),
            ));
        }
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, act)| DenseLayer::init(algebra, w[1], w[0], *act, rng))
            .collect();
        let last = *widths.last().expect("checked above");
        let output = match output {
            OutputSpec::Vector => OutputMode::Vector,
            OutputSpec::Component(k) => OutputMode::Component(k),
            OutputSpec::RealOutputWeights { outputs } => {
                let s = 1.0 / (last as f64).sqrt();
                OutputMode::RealOutputWeights(DMatrix::from_fn(outputs, last, |_, _| {
                    rng.random_range(-s..=s)
                }))
            }
        };
        Self::new(layers, output)
    }

    pub fn algebra(&self) -> &Algebra {
        self.layers[0].algebra()
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn output_mode(&self) -> &OutputMode {
        &self.output
    }

    pub(crate) fn output_mode_mut(&mut self) -> &mut OutputMode {
        &mut self.output
    }

    /// Number of vector-valued inputs.
    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    /// Length of the real input representation.
    pub fn input_len(&self) -> usize {
        self.inputs() * self.algebra().dim()
    }

    /// Length of the real output representation.
    pub fn output_len(&self) -> usize {
        let n = self.algebra().dim();
        let last = self.layers.last().expect("non-empty").outputs();
        match &self.output {
            OutputMode::Vector => n * last,
            OutputMode::RealOutputWeights(alpha) => n * alpha.nrows(),
            OutputMode::Component(_) => last,
        }
    }

    /// Direct evaluation with the algebra product. In component mode the last
    /// layer is replaced by its extracted real component layer.
    pub fn forward(&self, x: &[VElement]) -> Result<ModelOutput> {
        let (last, hidden) = self.layers.split_last().expect("non-empty");
        let mut h = x.to_vec();
        for layer in hidden {
            h = layer.forward(&h)?;
        }
        match &self.output {
            OutputMode::Vector => Ok(ModelOutput::Vector(last.forward(&h)?)),
            OutputMode::RealOutputWeights(alpha) => {
                let h = last.forward(&h)?;
                let n = self.algebra().dim();
                let out = (0..alpha.nrows())
                    .map(|o| {
                        let mut acc = VElement::zeros(n);
                        for (i, hi) in h.iter().enumerate() {
                            for (a, v) in acc.coords_mut().iter_mut().zip(hi.coords()) {
                                *a += alpha[(o, i)] * v;
                            }
                        }
                        acc
                    })
                    .collect();
                Ok(ModelOutput::Vector(out))
            }
            OutputMode::Component(k) => {
                last.check_inputs_len(h.len())?;
                let xr: Vec<f64> = h.iter().flat_map(|e| e.coords().iter().copied()).collect();
                Ok(ModelOutput::Real(
                    last.component_output_layer(*k)?.forward(&xr)?,
                ))
            }
        }
    }

    /// Evaluation on real coordinates through the emulated real network.
    pub fn forward_emulated(&self, xr: &[f64]) -> Result<Vec<f64>> {
        let mut a = xr.to_vec();
        for layer in &self.layers {
            a = layer.forward_emulated(&a)?;
        }
        Ok(self.apply_output_real(&a))
    }

    /// Maps the last layer's real output to the model's real output.
    pub(crate) fn apply_output_real(&self, a: &[f64]) -> Vec<f64> {
        let n = self.algebra().dim();
        match &self.output {
            OutputMode::Vector => a.to_vec(),
            OutputMode::RealOutputWeights(alpha) => {
                let mut y = vec![0.0; alpha.nrows() * n];
                for o in 0..alpha.nrows() {
                    for i in 0..alpha.ncols() {
                        for r in 0..n {
                            y[o * n + r] += alpha[(o, i)] * a[i * n + r];
                        }
                    }
                }
                y
            }
            OutputMode::Component(k) => a.iter().skip(*k).step_by(n).copied().collect(),
        }
    }

    /// Real matrices `M_L(W_l)` and biases `φ(b_l)` of every layer.
    pub fn emulated_layers(&self) -> Vec<(DMatrix<f64>, Vec<f64>, SplitActivation)> {
        self.layers
            .iter()
            .map(|l| {
                (
                    l.weights().big_left_matrix(),
                    l.bias().data().to_vec(),
                    l.activation(),
                )
            })
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        let alpha = match &self.output {
            OutputMode::RealOutputWeights(a) => a.len(),
            _ => 0,
        };
        self.layers
            .iter()
            .map(DenseLayer::param_count)
            .sum::<usize>()
            + alpha
    }

    /// All trainable reals: per layer the weight data then the bias data,
    /// followed by the real output weights in row-major order.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_parameters());
        for l in &self.layers {
            out.extend_from_slice(l.weights().data());
            out.extend_from_slice(l.bias().data());
        }
        if let OutputMode::RealOutputWeights(alpha) = &self.output {
            for o in 0..alpha.nrows() {
                for i in 0..alpha.ncols() {
                    out.push(alpha[(o, i)]);
                }
            }
        }
        out
    }

    /// Inverse of [`Vmlp::parameters`].
    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_parameters() {
            return Err(Error::DimensionMismatch {
                expected: self.num_parameters(),
                found: params.len(),
            });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameters".into()));
        }
        let mut rest = params;
        for l in &mut self.layers {
            let w = l.weights_mut().data_mut();
            let (head, tail) = rest.split_at(w.len());
            w.copy_from_slice(head);
            let b = l.bias_mut().data_mut();
            let (head, tail) = tail.split_at(b.len());
            b.copy_from_slice(head);
            rest = tail;
        }
        if let OutputMode::RealOutputWeights(alpha) = &mut self.output {
            let cols = alpha.ncols();
            for (idx, v) in rest.iter().enumerate() {
                alpha[(idx / cols, idx % cols)] = *v;
            }
        }
        Ok(())
    }
}

impl DenseLayer {
    pub(crate) fn check_inputs_len(&self, len: usize) -> Result<()> {
        if len != self.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs(),
                found: len,
            });
        }
        Ok(())
    }
}

/// `M_L(W)·a + φ(b)`.
pub(crate) fn layer_pre_activation(
    big: &DMatrix<f64>,
    bias: &[f64],
    a: &[f64],
) -> Result<Vec<f64>> {
    let mut z = matvec(big, a)?;
    for (zi, bi) in z.iter_mut().zip(bias) {
        *zi += bi;
    }
    Ok(z)
}
