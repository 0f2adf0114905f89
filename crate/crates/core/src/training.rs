//! Gradient-descent training of V-MLPs through their real emulation.
//!
//! Forward and backward passes run on the emulated real network. The gradient
//! of each `nM × nN` real weight matrix is then folded back onto the
//! vector-valued weights: coordinate `ℓ` of `w_ij` receives the Frobenius
//! product of block `(i, j)` with `P_{ℓ:}ᵀ`. Updates only ever touch the
//! stored coordinates, so the Kronecker structure cannot drift.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::activation::SplitActivation;
use crate::algebra::{Algebra, DEFAULT_TOLERANCE};
use crate::dense::DenseLayer;
use crate::element::VElement;
use crate::error::{Error, Result};
use crate::linalg::matvec_transpose;
use crate::model::{layer_pre_activation, OutputMode, Vmlp};
use crate::vmatrix::VMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    #[default]
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    #[default]
    Full,
    /// Mini-batches of this many samples, drawn without replacement each step.
    Size(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch: BatchMode,
    pub seed: u64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            iterations: 1000,
            batch: BatchMode::Full,
            seed: 0,
            loss: Loss::Mse,
        }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted (it freezes the parameters).
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument(
                "iterations must be at least 1".into(),
            ));
        }
        if self.batch == BatchMode::Size(0) {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Full-dataset MSE after the last update.
    pub final_train_mse: f64,
    /// Batch MSE at every iteration, measured before that iteration's update.
    pub mse_history: Vec<f64>,
    /// `max |f(x) − N(x)|` over an evaluation grid, when one was supplied.
    pub sup_error_on_grid: Option<f64>,
}

impl FitReport {
    /// Whitespace-separated `iteration mse` table with a header line.
    pub fn to_table(&self) -> String {
        let mut out = String::from("iteration mse\n");
        for (i, m) in self.mse_history.iter().enumerate() {
            let _ = writeln!(out, "{i} {m:e}");
        }
        out
    }
}

/// Inputs and targets in real representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::shape(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let (il, tl) = (inputs[0].len(), targets[0].len());
        if inputs.iter().any(|x| x.len() != il) || targets.iter().any(|t| t.len() != tl) {
            return Err(Error::shape("samples have inconsistent lengths"));
        }
        if inputs
            .iter()
            .chain(&targets)
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("dataset".into()));
        }
        Ok(Dataset { inputs, targets })
    }

    /// From vector-valued inputs and targets, flattened through `φ`.
    pub fn from_elements(inputs: &[Vec<VElement>], targets: &[Vec<VElement>]) -> Result<Self> {
        let flat = |rows: &[Vec<VElement>]| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().flat_map(|e| e.coords().iter().copied()).collect())
                .collect()
        };
        Self::new(flat(inputs), flat(targets))
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }
}

/// Gradient of one dense layer, laid out like its stored data.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
    pub output_weights: Option<DMatrix<f64>>,
}

impl Gradients {
    /// Same ordering as [`Vmlp::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        if let Some(a) = &self.output_weights {
            for o in 0..a.nrows() {
                for i in 0..a.ncols() {
                    out.push(a[(o, i)]);
                }
            }
        }
        out
    }
}

fn check_batch(model: &Vmlp, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if inputs.len() != targets.len() {
        return Err(Error::shape(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    for (x, t) in inputs.iter().zip(targets) {
        if x.len() != model.input_len() {
            return Err(Error::DimensionMismatch {
                expected: model.input_len(),
                found: x.len(),
            });
        }
        if t.len() != model.output_len() {
            return Err(Error::DimensionMismatch {
                expected: model.output_len(),
                found: t.len(),
            });
        }
    }
    Ok(())
}

/// Mean squared error over every real output coordinate of the batch.
pub fn mse(model: &Vmlp, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    check_batch(model, inputs, targets)?;
    let mut total = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let y = model.forward_emulated(x)?;
        for (yi, ti) in y.iter().zip(t) {
            let d = yi - ti;
            total += d * d;
        }
    }
    Ok(total / (inputs.len() * model.output_len()) as f64)
}

/// MSE and its gradient with respect to every trainable parameter.
pub fn loss_and_grad(
    model: &Vmlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<(f64, Gradients)> {
    check_batch(model, inputs, targets)?;
    let alg = model.algebra();
    let n = alg.dim();
    let plan = model.emulated_layers();
    let count = (inputs.len() * model.output_len()) as f64;

    let mut d_big: Vec<DMatrix<f64>> = plan
        .iter()
        .map(|(m, _, _)| DMatrix::zeros(m.nrows(), m.ncols()))
        .collect();
    let mut d_bias: Vec<Vec<f64>> = plan.iter().map(|(_, b, _)| vec![0.0; b.len()]).collect();
    let mut d_alpha = match model.output_mode() {
        OutputMode::RealOutputWeights(a) => Some(DMatrix::zeros(a.nrows(), a.ncols())),
        _ => None,
    };

    let mut loss = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        // forward, keeping pre-activations and activations
        let mut acts = vec![x.clone()];
        let mut pres = Vec::with_capacity(plan.len());
        for (big, bias, act) in &plan {
            let z = layer_pre_activation(big, bias, acts.last().expect("non-empty"))?;
            let mut a = z.clone();
            act.apply_in_place(&mut a);
            pres.push(z);
            acts.push(a);
        }
        let last = acts.last().expect("non-empty");
        let y = model.apply_output_real(last);

        let dy: Vec<f64> = y
            .iter()
            .zip(t)
            .map(|(yi, ti)| {
                let d = yi - ti;
                loss += d * d;
                2.0 * d / count
            })
            .collect();

        let mut da = match model.output_mode() {
            OutputMode::Vector => dy,
            OutputMode::RealOutputWeights(alpha) => {
                let ga = d_alpha.as_mut().expect("allocated for this mode");
                let mut da = vec![0.0; last.len()];
                for o in 0..alpha.nrows() {
                    for i in 0..alpha.ncols() {
                        for r in 0..n {
                            ga[(o, i)] += dy[o * n + r] * last[i * n + r];
                            da[i * n + r] += alpha[(o, i)] * dy[o * n + r];
                        }
                    }
                }
                da
            }
            OutputMode::Component(k) => {
                let mut da = vec![0.0; last.len()];
                for (i, g) in dy.iter().enumerate() {
                    da[i * n + k] = *g;
                }
                da
            }
        };

        for l in (0..plan.len()).rev() {
            let (big, _, act) = &plan[l];
            let dz: Vec<f64> = da
                .iter()
                .zip(&pres[l])
                .zip(&acts[l + 1])
                .map(|((g, z), a)| g * act.derivative(*z, *a))
                .collect();
            let prev = &acts[l];
            let gb = &mut d_big[l];
            for (r, dzr) in dz.iter().enumerate() {
                for (c, pc) in prev.iter().enumerate() {
                    gb[(r, c)] += dzr * pc;
                }
            }
            for (b, g) in d_bias[l].iter_mut().zip(&dz) {
                *b += g;
            }
            if l > 0 {
                da = matvec_transpose(big, &dz)?;
            }
        }
    }
    loss /= count;

    let layers = model
        .layers()
        .iter()
        .zip(d_big)
        .zip(d_bias)
        .map(|((layer, gbig), gbias)| LayerGradient {
            weights: fold_onto_weights(alg, &gbig, layer.outputs(), layer.inputs()),
            bias: gbias,
        })
        .collect();

    Ok((
        loss,
        Gradients {
            layers,
            output_weights: d_alpha,
        },
    ))
}

/// `g[(i·N + j)·n + ℓ] = Σ_{r,c} G[(i·n + r, j·n + c)] · p_{ℓ c r}`.
fn fold_onto_weights(alg: &Algebra, g: &DMatrix<f64>, rows: usize, cols: usize) -> Vec<f64> {
    let n = alg.dim();
    let mut out = vec![0.0; rows * cols * n];
    for i in 0..rows {
        for j in 0..cols {
            for l in 0..n {
                let mut acc = 0.0;
                for r in 0..n {
                    for c in 0..n {
                        acc += g[(i * n + r, j * n + c)] * alg.p(l, c, r);
                    }
                }
                out[(i * cols + j) * n + l] = acc;
            }
        }
    }
    out
}

/// `θ ← θ − lr · g` on the stored parameters.
pub fn apply_gradients(model: &mut Vmlp, grads: &Gradients, learning_rate: f64) -> Result<()> {
    if grads.layers.len() != model.layers().len() {
        return Err(Error::DimensionMismatch {
            expected: model.layers().len(),
            found: grads.layers.len(),
        });
    }
    for (layer, g) in model.layers_mut().iter_mut().zip(&grads.layers) {
        let w = layer.weights_mut().data_mut();
        if w.len() != g.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                found: g.weights.len(),
            });
        }
        for (p, d) in w.iter_mut().zip(&g.weights) {
            *p -= learning_rate * d;
        }
        let b = layer.bias_mut().data_mut();
        if b.len() != g.bias.len() {
            return Err(Error::DimensionMismatch {
                expected: b.len(),
                found: g.bias.len(),
            });
        }
        for (p, d) in b.iter_mut().zip(&g.bias) {
            *p -= learning_rate * d;
        }
    }
    if let (OutputMode::RealOutputWeights(alpha), Some(ga)) =
        (model.output_mode_mut(), &grads.output_weights)
    {
        if alpha.shape() != ga.shape() {
            return Err(Error::shape("output weight gradient has the wrong shape"));
        }
        for (p, d) in alpha.iter_mut().zip(ga.iter()) {
            *p -= learning_rate * d;
        }
    }
    Ok(())
}

/// Plain gradient descent for `cfg.iterations` steps. Deterministic for a
/// given seed.
pub fn train(model: &mut Vmlp, data: &Dataset, cfg: &TrainConfig) -> Result<FitReport> {
    cfg.validate()?;
    check_batch(model, data.inputs(), data.targets())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut batch_x = Vec::new();
    let mut batch_t = Vec::new();

    for iteration in 0..cfg.iterations {
        let (loss, grads) = match cfg.batch {
            BatchMode::Size(size) if size < data.len() => {
                batch_x.clear();
                batch_t.clear();
                for idx in index::sample(&mut rng, data.len(), size) {
                    batch_x.push(data.inputs[idx].clone());
                    batch_t.push(data.targets[idx].clone());
                }
                loss_and_grad(model, &batch_x, &batch_t)?
            }
            _ => loss_and_grad(model, data.inputs(), data.targets())?,
        };
        if !loss.is_finite() {
            return Err(Error::Diverged { iteration });
        }
        history.push(loss);
        apply_gradients(model, &grads, cfg.learning_rate)?;
    }

    let final_train_mse = mse(model, data.inputs(), data.targets())?;
    if !final_train_mse.is_finite() {
        return Err(Error::Diverged {
            iteration: cfg.iterations,
        });
    }
    Ok(FitReport {
        final_train_mse,
        mse_history: history,
        sup_error_on_grid: None,
    })
}

/// Functions the approximation demo can fit on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoTarget {
    /// `f(x) = x · x`
    Square,
    /// `f(x) = a · x` for the fixed element with coordinates `a_k = (−1/2)^k`.
    LeftMultByConst,
    /// Each coordinate `t ↦ t² − t/2`.
    CoordinatewisePoly,
}

impl DemoTarget {
    pub const ALL: [DemoTarget; 3] = [
        DemoTarget::Square,
        DemoTarget::LeftMultByConst,
        DemoTarget::CoordinatewisePoly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DemoTarget::Square => "square",
            DemoTarget::LeftMultByConst => "left_mult_by_const",
            DemoTarget::CoordinatewisePoly => "coordinatewise_poly",
        }
    }

    /// The constant used by [`DemoTarget::LeftMultByConst`].
    pub fn constant(n: usize) -> VElement {
        VElement::from_vec_unchecked((0..n).map(|k| (-0.5f64).powi(k as i32)).collect())
    }

    pub fn evaluate(self, algebra: &Algebra, x: &VElement) -> Result<VElement> {
        match self {
            DemoTarget::Square => algebra.multiply(x, x),
            DemoTarget::LeftMultByConst => algebra.multiply(&Self::constant(algebra.dim()), x),
            DemoTarget::CoordinatewisePoly => Ok(VElement::from_vec_unchecked(
                x.coords().iter().map(|t| t * t - 0.5 * t).collect(),
            )),
        }
    }
}

impl FromStr for DemoTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        DemoTarget::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(&norm))
            .ok_or_else(|| Error::UnknownTarget(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub target: DemoTarget,
    pub hidden: usize,
    pub activation: SplitActivation,
    pub samples: usize,
    pub grid_points: usize,
    pub init: DemoInit,
    pub train: TrainConfig,
}

/// Initial parameter ranges for the demo network. Hidden weight coordinates
/// are uniform in `[-weight_scale, weight_scale]`, hidden bias coordinates in
/// `bias_center ± bias_spread`, real output weights in `[-alpha_scale, alpha_scale]`.
///
/// A negative bias centre starts the sigmoids in their lower tail, which keeps
/// the mean hidden output small and lets plain gradient descent take larger
/// steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoInit {
    pub weight_scale: f64,
    pub bias_center: f64,
    pub bias_spread: f64,
    pub alpha_scale: f64,
}

impl Default for DemoInit {
    fn default() -> Self {
        DemoInit {
            weight_scale: 2.0,
            bias_center: -4.0,
            bias_spread: 2.0,
            alpha_scale: 1.0,
        }
    }
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            target: DemoTarget::Square,
            hidden: 32,
            activation: SplitActivation::Sigmoid,
            samples: 256,
            grid_points: 512,
            init: DemoInit::default(),
            train: TrainConfig {
                learning_rate: 4.0,
                iterations: 5000,
                batch: BatchMode::Full,
                seed: 0,
                loss: Loss::Mse,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub report: FitReport,
    pub model: Vmlp,
    /// Set when some `B_k` is singular; the approximation guarantee for
    /// single-hidden-layer networks does not cover this case.
    pub degenerate: bool,
}

/// Uniform sample from the closed unit ball of `R^dim`.
pub fn sample_unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / dim as f64);
            return g.into_iter().map(|v| v * radius / norm).collect();
        }
    }
}

fn demo_model(algebra: &Algebra, cfg: &DemoConfig, rng: &mut ChaCha8Rng) -> Result<Vmlp> {
    let DemoInit {
        weight_scale,
        bias_center,
        bias_spread,
        alpha_scale,
    } = cfg.init;
    let scales = [weight_scale, bias_center, bias_spread, alpha_scale];
    if scales.iter().any(|v| !v.is_finite())
        || weight_scale < 0.0
        || bias_spread < 0.0
        || alpha_scale < 0.0
    {
        return Err(Error::InvalidArgument(
            "demo init ranges must be finite and nonnegative".into(),
        ));
    }
    let n = algebra.dim();
    let m = cfg.hidden;
    let uniform = |rng: &mut ChaCha8Rng, s: f64| {
        if s > 0.0 {
            rng.random_range(-s..=s)
        } else {
            0.0
        }
    };
    let w: Vec<f64> = (0..m * n).map(|_| uniform(rng, weight_scale)).collect();
    let b: Vec<f64> = (0..m * n)
        .map(|_| bias_center + uniform(rng, bias_spread))
        .collect();
    let alpha = DMatrix::from_fn(1, m, |_, _| uniform(rng, alpha_scale));
    let layer = DenseLayer::new(
        VMatrix::new(algebra, m, 1, w)?,
        VMatrix::new(algebra, m, 1, b)?,
        cfg.activation,
    )?;
    Vmlp::new(vec![layer], OutputMode::RealOutputWeights(alpha))
}

/// Fits a single-hidden-layer V-MLP with real output weights to `cfg.target`
/// on the unit ball of the algebra (one vector-valued input), and measures
/// the sup error on a held-out seeded grid.
pub fn approximation_demo(algebra: &Algebra, cfg: &DemoConfig) -> Result<DemoOutcome> {
    if cfg.hidden == 0 {
        return Err(Error::InvalidArgument(
            "hidden layer width must be at least 1".into(),
        ));
    }
    if cfg.samples == 0 || cfg.grid_points == 0 {
        return Err(Error::InvalidArgument(
            "sample and grid sizes must be positive".into(),
        ));
    }
    let degenerate = !algebra.analyze(DEFAULT_TOLERANCE).nondegenerate;
    let n = algebra.dim();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut grid_rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    grid_rng.set_stream(1);

    type Samples = (Vec<Vec<f64>>, Vec<Vec<f64>>);
    let draw = |rng: &mut ChaCha8Rng, count: usize| -> Result<Samples> {
        let mut xs = Vec::with_capacity(count);
        let mut ys = Vec::with_capacity(count);
        for _ in 0..count {
            let x = sample_unit_ball(n, rng);
            let fx = cfg
                .target
                .evaluate(algebra, &VElement::from_vec_unchecked(x.clone()))?;
            xs.push(x);
            ys.push(fx.into_coords());
        }
        Ok((xs, ys))
    };

    let (xs, ys) = draw(&mut rng, cfg.samples)?;
    let data = Dataset::new(xs, ys)?;
    let mut model = demo_model(algebra, cfg, &mut rng)?;
    let mut report = train(&mut model, &data, &cfg.train)?;

    let (gx, gy) = draw(&mut grid_rng, cfg.grid_points)?;
    let mut sup: f64 = 0.0;
    for (x, fx) in gx.iter().zip(&gy) {
        let y = model.forward_emulated(x)?;
        let err = y
            .iter()
            .zip(fx)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        sup = sup.max(err);
    }
    report.sup_error_on_grid = Some(sup);

    Ok(DemoOutcome {
        report,
        model,
        degenerate,
    })
}
