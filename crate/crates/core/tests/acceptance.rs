//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vnet_core::linalg::{kron, relative_error};
use vnet_core::training::mse;
use vnet_core::{
    approximation_demo, dense_param_counts, loss_and_grad, split_maxpool, train, Algebra,
    BatchMode, BuiltinAlgebra, ConvLayer, DMatrix, Dataset, DemoConfig, DemoTarget, DenseLayer,
    OutputMode, OutputSpec, RealImage, SplitActivation, TrainConfig, VElement, VImage, VMatrix,
    Vmlp,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_element(n: usize, rng: &mut ChaCha8Rng) -> VElement {
    VElement::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn flat(xs: &[VElement]) -> Vec<f64> {
    xs.iter().flat_map(|e| e.coords().iter().copied()).collect()
}

fn rows(count: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

// 1 ---------------------------------------------------------------------------

#[rustfmt::skip]
const GOLDEN_ML: [[f64; 12]; 8] = [
    [1., -2., 0., 0., 0., -3., -4., 0., 0., 0., -5., -6.],
    [2., 1., 0., 0., 3., 0., 0., 4., 0., 0., -6., 5.],
    [0., 0., 1., -2., 4., 0., 0., -3., 5., 6., 0., 0.],
    [0., 0., 2., 1., 0., -4., 3., 0., 6., -5., 0., 0.],
    [7., 0., -8., 0., 9., 0., 0., -10., 0., -11., 0., -12.],
    [0., 7., 0., 8., 0., 9., -10., 0., 11., 0., -12., 0.],
    [8., 0., 7., 0., 0., 10., 9., 0., 0., 12., 0., -11.],
    [0., -8., 0., 7., 10., 0., 0., 9., 12., 0., 11., 0.],
];

fn golden_example() -> Outcome {
    let alg = Algebra::builtin(BuiltinAlgebra::Quaternion);
    let q = |c: [f64; 4]| VElement::new(c.to_vec()).unwrap();
    let a = VMatrix::from_elements(
        &alg,
        2,
        3,
        &[
            q([1., 2., 0., 0.]),
            q([0., 3., 4., 0.]),
            q([0., 0., 5., 6.]),
            q([7., 0., 8., 0.]),
            q([9., 0., 0., 10.]),
            q([0., 11., 0., 12.]),
        ],
    )
    .map_err(|e| e.to_string())?;
    let x = VMatrix::column(
        &alg,
        &[
            q([1., 2., 3., 4.]),
            q([5., 6., 7., 8.]),
            q([9., 10., 11., 12.]),
        ],
    )
    .map_err(|e| e.to_string())?;
    let y = [-176., 45., 96., 11., -306., -3., 140., 363.];

    let ml = a.big_left_matrix();
    let mut worst: f64 = 0.0;
    for (r, row) in GOLDEN_ML.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            worst = worst.max((ml[(r, c)] - v).abs());
        }
    }
    let phi = x.phi();
    for (i, v) in phi.iter().enumerate() {
        worst = worst.max((v - (i + 1) as f64).abs());
    }
    let direct = a.mul_direct(&x).map_err(|e| e.to_string())?;
    let emulated = a.mul_emulated(&x).map_err(|e| e.to_string())?;
    for (d, e) in direct
        .data()
        .iter()
        .zip(emulated.data())
        .zip(y)
        .map(|((d, e), y)| ((d - y).abs(), (e - y).abs()))
    {
        worst = worst.max(d).max(e);
    }
    ensure(ml.shape() == (8, 12) && phi.shape() == (12, 1), || {
        "shape".into()
    })?;
    ensure(worst <= 1e-12, || format!("max abs error {worst:e}"))?;
    Ok(format!(
        "y = ({}, {}), max abs error {worst:e}",
        alg.format_element(&direct.get(0, 0)),
        alg.format_element(&direct.get(1, 0))
    ))
}

// 2 ---------------------------------------------------------------------------

fn product_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let alg = Algebra::random(n, &mut rng).map_err(|e| e.to_string())?;
        let (m, l, k) = (
            rng.random_range(1..=5),
            rng.random_range(1..=5),
            rng.random_range(1..=5),
        );
        let a = VMatrix::random(&alg, m, l, &mut rng);
        let b = VMatrix::random(&alg, l, k, &mut rng);
        let direct = a.mul_direct(&b).map_err(|e| e.to_string())?;
        let emulated = a.mul_emulated(&b).map_err(|e| e.to_string())?;
        worst = worst.max(relative_error(emulated.data(), direct.data()));
    }
    ensure(worst <= 1e-10, || format!("worst relative error {worst:e}"))?;
    Ok(format!("100 algebras, worst relative error {worst:e}"))
}

// 3 ---------------------------------------------------------------------------

fn layer_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA3);
    let quat = Algebra::builtin(BuiltinAlgebra::Quaternion);
    let pick = |i: usize, rng: &mut ChaCha8Rng| {
        if i.is_multiple_of(2) {
            quat.clone()
        } else {
            let n = rng.random_range(1..=6);
            Algebra::random(n, rng).unwrap()
        }
    };
    let mut worst_dense: f64 = 0.0;
    for i in 0..50 {
        let alg = pick(i, &mut rng);
        let act = SplitActivation::ALL[i % 4];
        let (m, n_in) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let layer = DenseLayer::new(
            VMatrix::random(&alg, m, n_in, &mut rng),
            VMatrix::random(&alg, m, 1, &mut rng),
            act,
        )
        .map_err(|e| e.to_string())?;
        let x: Vec<VElement> = (0..n_in)
            .map(|_| random_element(alg.dim(), &mut rng))
            .collect();
        let direct = layer.forward(&x).map_err(|e| e.to_string())?;
        let emulated = layer
            .forward_emulated(&flat(&x))
            .map_err(|e| e.to_string())?;
        worst_dense = worst_dense.max(relative_error(&emulated, &flat(&direct)));
    }
    let mut worst_conv: f64 = 0.0;
    for i in 0..20 {
        let alg = pick(i, &mut rng);
        let act = SplitActivation::ALL[i % 4];
        let stride = if i % 4 < 2 { (1, 1) } else { (2, 2) };
        let kernel = (rng.random_range(1..=3), rng.random_range(1..=3));
        let (c_in, filters) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let layer = ConvLayer::random(&alg, kernel, c_in, filters, stride, act, &mut rng)
            .map_err(|e| e.to_string())?;
        let x = VImage::random(
            &alg,
            rng.random_range(4..=7),
            rng.random_range(4..=7),
            c_in,
            &mut rng,
        );
        let direct = layer.forward_direct(&x).map_err(|e| e.to_string())?;
        let emulated = layer
            .forward_emulated(&x.phi())
            .map_err(|e| e.to_string())?;
        worst_conv = worst_conv.max(relative_error(&emulated.data, &direct.phi().data));
    }
    // φ(ψ(x)) = ψ_R(φ(x)) exactly
    let mut split_exact = true;
    for _ in 0..50 {
        let n = rng.random_range(1..=6);
        let x = VElement::new((0..n).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
        for act in SplitActivation::ALL {
            let lhs = act.apply(&x);
            split_exact &= lhs
                .coords()
                .iter()
                .zip(x.coords())
                .all(|(l, t)| l.to_bits() == act.real(*t).to_bits());
        }
    }
    ensure(worst_dense <= 1e-10, || {
        format!("dense worst {worst_dense:e}")
    })?;
    ensure(worst_conv <= 1e-10, || format!("conv worst {worst_conv:e}"))?;
    ensure(split_exact, || "split activation identity not exact".into())?;
    Ok(format!(
        "50 dense worst {worst_dense:e}, 20 conv worst {worst_conv:e}, split identity exact"
    ))
}

// 4 ---------------------------------------------------------------------------

fn classification_table() -> Outcome {
    let mut lines = Vec::new();
    for b in BuiltinAlgebra::ALL {
        let alg = Algebra::builtin(b);
        let r = alg.analyze(vnet_core::DEFAULT_TOLERANCE);
        let n = alg.dim();
        let unit = r
            .identity
            .as_ref()
            .map(|e| e.coords() == VElement::basis(n, 0).unwrap().coords());
        let expected = match b {
            BuiltinAlgebra::Real | BuiltinAlgebra::Complex | BuiltinAlgebra::Hyperbolic => {
                r.commutative && r.associative && unit == Some(true) && r.nondegenerate
            }
            BuiltinAlgebra::Quaternion => {
                !r.commutative && r.associative && unit == Some(true) && r.nondegenerate
            }
            BuiltinAlgebra::Dual => !r.nondegenerate && r.singular_bk_indices == vec![0],
        };
        lines.push(format!(
            "{}: comm={} assoc={} identity={} nondeg={} singular B={:?}",
            b.name(),
            r.commutative,
            r.associative,
            unit.unwrap_or(false),
            r.nondegenerate,
            r.singular_bk_indices
                .iter()
                .map(|k| k + 1)
                .collect::<Vec<_>>()
        ));
        ensure(expected, || lines.last().unwrap().clone())?;
    }
    Ok(lines.join("; "))
}

// 5 ---------------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5);
    let h = 1e-6;
    let mut checked = 0;
    let mut worst_ratio: f64 = 0.0;
    for m in 0..20 {
        let n = rng.random_range(1..=4);
        let alg = if m % 3 == 0 {
            Algebra::builtin(BuiltinAlgebra::ALL[(m / 3) % 5])
        } else {
            Algebra::random(n, &mut rng).map_err(|e| e.to_string())?
        };
        let depth = rng.random_range(1..=2);
        let widths: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=4)).collect();
        let acts = vec![SplitActivation::Sigmoid; depth];
        let spec = match m % 3 {
            0 => OutputSpec::Vector,
            1 => OutputSpec::RealOutputWeights {
                outputs: rng.random_range(1..=2),
            },
            _ => OutputSpec::Component(rng.random_range(0..alg.dim())),
        };
        let model = Vmlp::init(&alg, &widths, &acts, spec, &mut rng).map_err(|e| e.to_string())?;
        let xs = rows(3, model.input_len(), &mut rng);
        let ts = rows(3, model.output_len(), &mut rng);
        let (_, grads) = loss_and_grad(&model, &xs, &ts).map_err(|e| e.to_string())?;
        let analytic = grads.flatten();
        let params = model.parameters();
        for i in 0..params.len() {
            let mut probe = model.clone();
            let mut p = params.clone();
            p[i] = params[i] + h;
            probe.set_parameters(&p).map_err(|e| e.to_string())?;
            let up = mse(&probe, &xs, &ts).map_err(|e| e.to_string())?;
            p[i] = params[i] - h;
            probe.set_parameters(&p).map_err(|e| e.to_string())?;
            let down = mse(&probe, &xs, &ts).map_err(|e| e.to_string())?;
            let fd = (up - down) / (2.0 * h);
            let tol = (1e-5 * fd.abs().max(analytic[i].abs())).max(1e-8);
            let diff = (fd - analytic[i]).abs();
            worst_ratio = worst_ratio.max(diff / tol);
            ensure(diff <= tol, || {
                format!("model {m} param {i}: fd {fd:e} analytic {:e}", analytic[i])
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "20 models, {checked} coordinates, worst diff/tol {worst_ratio:.3}"
    ))
}

// 6 ---------------------------------------------------------------------------

fn structure_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    let mut layers_checked = 0;
    for alg in [
        Algebra::builtin(BuiltinAlgebra::Quaternion),
        Algebra::random(3, &mut rng).map_err(|e| e.to_string())?,
    ] {
        let mut model = Vmlp::init(
            &alg,
            &[2, 3, 2],
            &[SplitActivation::Tanh, SplitActivation::Sigmoid],
            OutputSpec::Vector,
            &mut rng,
        )
        .map_err(|e| e.to_string())?;
        let data = Dataset::new(
            rows(16, model.input_len(), &mut rng),
            rows(16, model.output_len(), &mut rng),
        )
        .map_err(|e| e.to_string())?;
        let cfg = TrainConfig {
            learning_rate: 0.1,
            iterations: 100,
            ..TrainConfig::default()
        };
        train(&mut model, &data, &cfg).map_err(|e| e.to_string())?;
        for (l, layer) in model.layers().iter().enumerate() {
            let w = layer.weights();
            let stack = w.component_stack();
            let mut expected = DMatrix::zeros(w.rows() * alg.dim(), w.cols() * alg.dim());
            for (k, wk) in stack.components.iter().enumerate() {
                expected += kron(wk, &alg.left_factor(k));
            }
            ensure(w.big_left_matrix() == expected, || {
                format!("{} layer {l}", alg.name())
            })?;
            ensure(w.big_left_matrix_blockwise() == expected, || {
                format!("{} layer {l} blockwise", alg.name())
            })?;
            layers_checked += 1;
        }
    }
    Ok(format!("{layers_checked} layers exact after 100 steps"))
}

// 7 ---------------------------------------------------------------------------

fn parameter_counts() -> Outcome {
    let alg = Algebra::builtin(BuiltinAlgebra::Quaternion);
    let layer = DenseLayer::zeros(&alg, 2, 3, SplitActivation::Identity);
    let counts = dense_param_counts(4, 2, 3);
    let big = layer.weights().big_left_matrix();
    let unconstrained = big.len() + layer.bias().data().len();
    ensure(layer.param_count() == 32 && counts.vnet == 32, || {
        format!("stored {} / formula {}", layer.param_count(), counts.vnet)
    })?;
    ensure(counts.real_equiv == 104 && unconstrained == 104, || {
        format!("real {} / emulated {unconstrained}", counts.real_equiv)
    })?;
    Ok(format!(
        "stored 32, unconstrained 104, ratio {:.3}",
        counts.ratio()
    ))
}

// 8 ---------------------------------------------------------------------------

fn approximation() -> Outcome {
    let cfg = DemoConfig::default();
    ensure(
        cfg.target == DemoTarget::Square
            && cfg.hidden == 32
            && cfg.activation == SplitActivation::Sigmoid
            && cfg.samples == 256
            && cfg.grid_points == 512
            && cfg.train.iterations <= 5000
            && cfg.train.batch == BatchMode::Full,
        || format!("unexpected demo defaults {cfg:?}"),
    )?;
    let alg = Algebra::builtin(BuiltinAlgebra::Quaternion);
    let start = Instant::now();
    let out = approximation_demo(&alg, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mse = out.report.final_train_mse;
    let sup = out.report.sup_error_on_grid.unwrap_or(f64::INFINITY);
    ensure(
        matches!(out.model.output_mode(), OutputMode::RealOutputWeights(_)),
        || "output mode".into(),
    )?;
    let summary = format!(
        "train MSE {mse:.3e}, sup {sup:.4}, {:.1}s",
        elapsed.as_secs_f64()
    );
    ensure(
        mse < 1e-2 && sup < 0.3 && elapsed < Duration::from_secs(60),
        || summary.clone(),
    )?;
    Ok(summary)
}

// 9 ---------------------------------------------------------------------------

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn plain_dense(w: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    w.iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut s = 0.0;
            for (wij, xj) in row.iter().zip(x) {
                s += wij * xj;
            }
            sigmoid(s + bi)
        })
        .collect()
}

fn degenerate_reduction() -> Outcome {
    let real = Algebra::builtin(BuiltinAlgebra::Real);
    let mut rng = ChaCha8Rng::seed_from_u64(0xA9);
    let bits = |a: &[f64], b: &[f64]| {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
    };

    // product
    for _ in 0..100 {
        let (x, y) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let z = real
            .multiply(
                &VElement::new(vec![x]).unwrap(),
                &VElement::new(vec![y]).unwrap(),
            )
            .unwrap();
        ensure(z[0].to_bits() == (x * y).to_bits(), || {
            format!("product {x} * {y}")
        })?;
    }

    // dense
    let (m, n_in) = (4, 5);
    let w: Vec<Vec<f64>> = rows(m, n_in, &mut rng);
    let b: Vec<f64> = rows(1, m, &mut rng).remove(0);
    let layer = DenseLayer::new(
        VMatrix::new(&real, m, n_in, w.concat()).unwrap(),
        VMatrix::new(&real, m, 1, b.clone()).unwrap(),
        SplitActivation::Sigmoid,
    )
    .map_err(|e| e.to_string())?;
    let x: Vec<f64> = rows(1, n_in, &mut rng).remove(0);
    let plain = plain_dense(&w, &b, &x);
    let xe: Vec<VElement> = x.iter().map(|v| VElement::new(vec![*v]).unwrap()).collect();
    ensure(bits(&flat(&layer.forward(&xe).unwrap()), &plain), || {
        "dense direct".into()
    })?;
    ensure(bits(&layer.forward_emulated(&x).unwrap(), &plain), || {
        "dense emulated".into()
    })?;

    // conv: single channel in, two filters, 3x2 kernel, stride (2, 1)
    let (h, wd, kh, kw, f) = (6, 5, 3, 2, 2);
    let (sy, sx) = (2, 1);
    let img: Vec<f64> = rows(1, h * wd, &mut rng).remove(0);
    let kernels: Vec<Vec<f64>> = rows(f, kh * kw, &mut rng);
    let cb: Vec<f64> = rows(1, f, &mut rng).remove(0);
    // layer weight layout: [(q·C + c)·K + k]
    let mut lw = vec![0.0; kh * kw * f];
    for (k, ker) in kernels.iter().enumerate() {
        for (q, v) in ker.iter().enumerate() {
            lw[q * f + k] = *v;
        }
    }
    let conv = ConvLayer::new(
        &real,
        (kh, kw),
        1,
        f,
        lw,
        VMatrix::new(&real, f, 1, cb.clone()).unwrap(),
        (sy, sx),
        SplitActivation::Sigmoid,
    )
    .map_err(|e| e.to_string())?;
    let (oh, ow) = ((h - kh) / sy + 1, (wd - kw) / sx + 1);
    let mut plain_conv = Vec::new();
    for oy in 0..oh {
        for ox in 0..ow {
            for k in 0..f {
                let mut s = 0.0;
                for qy in 0..kh {
                    for qx in 0..kw {
                        s += kernels[k][qy * kw + qx] * img[(oy * sy + qy) * wd + ox * sx + qx];
                    }
                }
                plain_conv.push(sigmoid(s + cb[k]));
            }
        }
    }
    let vimg = VImage::new(&real, h, wd, 1, img.clone()).unwrap();
    ensure(
        bits(conv.forward_direct(&vimg).unwrap().data(), &plain_conv),
        || "conv direct".into(),
    )?;
    let rimg = RealImage::new(h, wd, 1, img.clone()).unwrap();
    ensure(
        bits(&conv.forward_emulated(&rimg).unwrap().data, &plain_conv),
        || "conv emulated".into(),
    )?;

    // pooling: 2x2 window, stride 2
    let mut plain_pool = Vec::new();
    for oy in 0..(h - 2) / 2 + 1 {
        for ox in 0..(wd - 2) / 2 + 1 {
            let mut best = f64::NEG_INFINITY;
            for dy in 0..2 {
                for dx in 0..2 {
                    best = best.max(img[(oy * 2 + dy) * wd + ox * 2 + dx]);
                }
            }
            plain_pool.push(best);
        }
    }
    ensure(
        bits(
            split_maxpool(&vimg, (2, 2), (2, 2)).unwrap().data(),
            &plain_pool,
        ),
        || "pooling".into(),
    )?;

    // one gradient step on the dense layer
    let samples = 6;
    let xs = rows(samples, n_in, &mut rng);
    let ts = rows(samples, m, &mut rng);
    let lr = 0.3;
    let count = (samples * m) as f64;
    let mut gw = vec![vec![0.0; n_in]; m];
    let mut gb = vec![0.0; m];
    let mut loss = 0.0;
    for (x, t) in xs.iter().zip(&ts) {
        let mut z = vec![0.0; m];
        for i in 0..m {
            let mut s = 0.0;
            for j in 0..n_in {
                s += w[i][j] * x[j];
            }
            z[i] = s + b[i];
        }
        for i in 0..m {
            let a = sigmoid(z[i]);
            let d = a - t[i];
            loss += d * d;
            let dz = 2.0 * d / count * (a * (1.0 - a));
            for j in 0..n_in {
                gw[i][j] += dz * x[j];
            }
            gb[i] += dz;
        }
    }
    loss /= count;
    let mut expected = Vec::new();
    for i in 0..m {
        for j in 0..n_in {
            expected.push(w[i][j] - lr * gw[i][j]);
        }
    }
    for i in 0..m {
        expected.push(b[i] - lr * gb[i]);
    }
    let mut model = Vmlp::new(vec![layer], OutputMode::Vector).map_err(|e| e.to_string())?;
    let data = Dataset::new(xs, ts).map_err(|e| e.to_string())?;
    let report = train(
        &mut model,
        &data,
        &TrainConfig {
            learning_rate: lr,
            iterations: 1,
            ..TrainConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(report.mse_history[0].to_bits() == loss.to_bits(), || {
        "training loss".into()
    })?;
    ensure(bits(&model.parameters(), &expected), || {
        "training step parameters".into()
    })?;
    Ok("product, dense, conv, pooling and training step bit-identical".into())
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("golden quaternion example", golden_example),
        ("oracle equivalence: products", product_equivalence),
        ("oracle equivalence: layers", layer_equivalence),
        ("algebra classification table", classification_table),
        ("gradient check", gradient_check),
        ("structure preservation", structure_preservation),
        ("parameter counts", parameter_counts),
        ("approximation demo", approximation),
        ("degenerate reduction n=1", degenerate_reduction),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
