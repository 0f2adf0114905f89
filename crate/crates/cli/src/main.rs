//! `vnet`: inspect algebras, multiply elements, dump real emulations and run
//! the approximation demo.

mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vnet_core::io::{algebra_from_json, algebra_to_json, matrix_from_json, model_to_json};
use vnet_core::linalg::relative_error;
use vnet_core::{
    approximation_demo, dense_param_counts, Algebra, BatchMode, BuiltinAlgebra, ConvLayer,
    DemoConfig, DemoTarget, DenseLayer, SplitActivation, TrainConfig, VElement, VImage, VMatrix,
    DEFAULT_TOLERANCE,
};

use render::{human_inspect, human_matrix, machine_inspect, machine_matrix, numbers};

#[derive(Parser)]
#[command(
    name = "vnet",
    version,
    about = "Vector-valued neural networks over real algebras"
)]
struct Cli {
    /// Output style.
    #[arg(long, value_enum, global = true, default_value_t = Format::Human)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct AlgebraSource {
    /// Built-in algebra: real, complex, hyperbolic, dual, quaternion.
    #[arg(long)]
    builtin: Option<String>,
    /// Algebra definition file (JSON).
    #[arg(long)]
    file: Option<PathBuf>,
}

impl AlgebraSource {
    fn load(&self) -> Result<Algebra> {
        match (&self.builtin, &self.file) {
            (Some(name), _) => Ok(Algebra::builtin(name.parse::<BuiltinAlgebra>()?)),
            (None, Some(path)) => {
                let text = read(path)?;
                algebra_from_json(&text).with_context(|| path.display().to_string())
            }
            (None, None) => bail!("an algebra is required (--builtin or --file)"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the multiplication table and the algebra's properties.
    Inspect {
        #[command(flatten)]
        algebra: AlgebraSource,
        /// Write the algebra definition to this file.
        #[arg(long)]
        export: Option<PathBuf>,
        /// Tolerance for the property checks.
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Multiply two elements given as coordinate lists.
    Mul {
        #[command(flatten)]
        algebra: AlgebraSource,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        x: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        y: Vec<f64>,
    },
    /// Print M_L(A), phi(B) and the product for matrix files A and B.
    Emulate {
        #[command(flatten)]
        algebra: AlgebraSource,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: Option<PathBuf>,
    },
    /// Compare direct and emulated evaluation on seeded random data.
    Check {
        #[command(flatten)]
        algebra: AlgebraSource,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random cases per check.
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Largest accepted relative error.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Parameter counts of a dense layer and of its unconstrained real equivalent.
    Params {
        /// Algebra dimension.
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        /// Output neurons.
        #[arg(long = "outputs", short = 'm', allow_hyphen_values = true)]
        outputs: i64,
        /// Inputs.
        #[arg(long = "inputs", short = 'N', allow_hyphen_values = true)]
        inputs: i64,
    },
    /// Fit a single-hidden-layer network with real output weights on the unit ball.
    TrainDemo(TrainDemoArgs),
}

#[derive(Args)]
struct TrainDemoArgs {
    #[command(flatten)]
    algebra: AlgebraSource,
    /// square, left-mult-by-const or coordinatewise-poly.
    #[arg(long, default_value = "square")]
    target: String,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value = "sigmoid")]
    activation: String,
    #[arg(long, default_value_t = DemoConfig::default().train.learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = DemoConfig::default().train.iterations)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `full` or a mini-batch size.
    #[arg(long, default_value = "full")]
    batch: String,
    #[arg(long, default_value_t = DemoConfig::default().samples)]
    samples: usize,
    /// Held-out evaluation points.
    #[arg(long, default_value_t = DemoConfig::default().grid_points)]
    grid: usize,
    /// Write the (iteration, mse) table here.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Save the trained model (JSON).
    #[arg(long)]
    save_model: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn inspect(
    format: Format,
    source: &AlgebraSource,
    export: Option<&Path>,
    tol: f64,
) -> Result<String> {
    let alg = source.load()?;
    if !(tol >= 0.0 && tol.is_finite()) {
        bail!("tolerance must be a nonnegative number");
    }
    let report = alg.analyze(tol);
    if let Some(path) = export {
        write(path, &algebra_to_json(&alg))?;
    }
    Ok(match format {
        Format::Human => human_inspect(&alg, &report),
        Format::Machine => machine_inspect(&alg, &report),
    })
}

fn mul(format: Format, source: &AlgebraSource, x: &[f64], y: &[f64]) -> Result<String> {
    let alg = source.load()?;
    let x = VElement::new(x.to_vec()).context("--x")?;
    let y = VElement::new(y.to_vec()).context("--y")?;
    let z = alg.multiply(&x, &y)?;
    Ok(match format {
        Format::Human => format!(
            "({}) · ({}) = {}\n",
            alg.format_element(&x),
            alg.format_element(&y),
            alg.format_element(&z)
        ),
        Format::Machine => format!("element {}\n", numbers(z.coords())),
    })
}

fn emulate(format: Format, source: &AlgebraSource, a: &Path, b: Option<&Path>) -> Result<String> {
    let alg = source.load()?;
    let a = matrix_from_json(&alg, &read(a)?).with_context(|| a.display().to_string())?;
    let mut blocks = vec![("M_L(A)".to_string(), a.big_left_matrix())];
    let mut product = None;
    if let Some(path) = b {
        let b = matrix_from_json(&alg, &read(path)?).with_context(|| path.display().to_string())?;
        let c = a.mul_emulated(&b)?;
        blocks.push(("phi(B)".into(), b.phi()));
        blocks.push(("phi(AB)".into(), c.phi()));
        product = Some(c);
    }
    let mut out = String::new();
    for (name, m) in &blocks {
        out.push_str(&match format {
            Format::Human => human_matrix(name, m),
            Format::Machine => machine_matrix(name, m),
        });
    }
    if let (Format::Human, Some(c)) = (format, product) {
        out.push_str("AB:\n");
        for r in 0..c.rows() {
            let row: Vec<String> = (0..c.cols())
                .map(|j| alg.format_element(&c.get(r, j)))
                .collect();
            out.push_str(&format!("  {}\n", row.join(" | ")));
        }
    }
    Ok(out)
}

struct CheckResult {
    name: &'static str,
    worst: f64,
}

fn run_checks(alg: &Algebra, seed: u64, trials: usize) -> Result<Vec<CheckResult>> {
    let n = alg.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let element = |rng: &mut ChaCha8Rng| {
        VElement::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("finite")
    };
    let flat =
        |xs: &[VElement]| -> Vec<f64> { xs.iter().flat_map(|e| e.coords().to_vec()).collect() };

    let mut product = 0.0_f64;
    let mut matrix = 0.0_f64;
    let mut dense = 0.0_f64;
    let mut conv = 0.0_f64;
    for t in 0..trials {
        let (a, x) = (element(&mut rng), element(&mut rng));
        let direct = alg.multiply(&a, &x)?;
        let emulated = vnet_core::linalg::matvec(&alg.left_mult_matrix(&a)?, x.coords())?;
        product = product.max(relative_error(&emulated, direct.coords()));

        let (m, l, k) = (
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        );
        let am = VMatrix::random(alg, m, l, &mut rng);
        let bm = VMatrix::random(alg, l, k, &mut rng);
        matrix = matrix.max(relative_error(
            am.mul_emulated(&bm)?.data(),
            am.mul_direct(&bm)?.data(),
        ));

        let act = SplitActivation::ALL[t % 4];
        let layer = DenseLayer::new(
            VMatrix::random(alg, m, l, &mut rng),
            VMatrix::random(alg, m, 1, &mut rng),
            act,
        )?;
        let xs: Vec<VElement> = (0..l).map(|_| element(&mut rng)).collect();
        dense = dense.max(relative_error(
            &layer.forward_emulated(&flat(&xs))?,
            &flat(&layer.forward(&xs)?),
        ));

        let stride = if t % 2 == 0 { (1, 1) } else { (2, 2) };
        let layer = ConvLayer::random(alg, (2, 3), 2, 2, stride, act, &mut rng)?;
        let img = VImage::random(alg, 5, 6, 2, &mut rng);
        conv = conv.max(relative_error(
            &layer.forward_emulated(&img.phi())?.data,
            &layer.forward_direct(&img)?.phi().data,
        ));
    }
    Ok(vec![
        CheckResult {
            name: "product",
            worst: product,
        },
        CheckResult {
            name: "matrix",
            worst: matrix,
        },
        CheckResult {
            name: "dense",
            worst: dense,
        },
        CheckResult {
            name: "conv",
            worst: conv,
        },
    ])
}

fn check(
    format: Format,
    source: &AlgebraSource,
    seed: u64,
    trials: u64,
    tol: f64,
) -> Result<String> {
    let alg = source.load()?;
    let results = run_checks(&alg, seed, trials as usize)?;
    let mut out = String::new();
    let mut failed = Vec::new();
    for r in &results {
        let pass = r.worst <= tol;
        if !pass {
            failed.push(r.name);
        }
        out.push_str(&match format {
            Format::Human => format!(
                "{} {:<8} worst relative error {:e}\n",
                if pass { "PASS" } else { "FAIL" },
                r.name,
                r.worst
            ),
            Format::Machine => format!(
                "check {} {} {}\n",
                r.name,
                if pass { "pass" } else { "fail" },
                r.worst
            ),
        });
    }
    if !failed.is_empty() {
        print!("{out}");
        bail!("checks failed: {}", failed.join(", "));
    }
    Ok(out)
}

fn params(format: Format, n: i64, outputs: i64, inputs: i64) -> Result<String> {
    for (name, v) in [("n", n), ("outputs", outputs), ("inputs", inputs)] {
        if v <= 0 {
            bail!("{name} must be a positive integer, got {v}");
        }
    }
    let counts = dense_param_counts(n as usize, outputs as usize, inputs as usize);
    Ok(match format {
        Format::Human => format!(
            "vector-valued layer: {}\nreal-valued equivalent: {}\nratio: {:.4}\n",
            counts.vnet,
            counts.real_equiv,
            counts.ratio()
        ),
        Format::Machine => format!(
            "vnet {}\nreal {}\nratio {}\n",
            counts.vnet,
            counts.real_equiv,
            counts.ratio()
        ),
    })
}

fn train_demo(format: Format, args: &TrainDemoArgs) -> Result<String> {
    let alg = args.algebra.load()?;
    let batch = match args.batch.as_str() {
        "full" => BatchMode::Full,
        s => BatchMode::Size(s.parse().with_context(|| format!("invalid batch `{s}`"))?),
    };
    let cfg = DemoConfig {
        target: args.target.parse::<DemoTarget>()?,
        hidden: args.hidden,
        activation: args.activation.parse::<SplitActivation>()?,
        samples: args.samples,
        grid_points: args.grid,
        train: TrainConfig {
            learning_rate: args.lr,
            iterations: args.iterations,
            batch,
            seed: args.seed,
            ..TrainConfig::default()
        },
        ..DemoConfig::default()
    };
    if !alg.analyze(DEFAULT_TOLERANCE).nondegenerate {
        eprintln!("warning: degenerate algebra: approximation theorem hypothesis not met");
    }
    let outcome = approximation_demo(&alg, &cfg)?;
    let report = &outcome.report;
    if let Some(path) = &args.table {
        write(path, &report.to_table())?;
    }
    if let Some(path) = &args.save_model {
        write(path, &model_to_json(&outcome.model))?;
    }
    let first = report.mse_history.first().copied().unwrap_or(f64::NAN);
    let sup = report.sup_error_on_grid.unwrap_or(f64::NAN);
    Ok(match format {
        Format::Human => format!(
            "algebra: {}\ntarget: {}, hidden {}, activation {}, lr {}, iterations {}, seed {}\n\
             initial mse: {first:.6e}\nfinal train mse: {:.6e}\nsup error on grid ({} points): {sup:.6}\n",
            alg.name(),
            cfg.target.name(),
            cfg.hidden,
            cfg.activation,
            cfg.train.learning_rate,
            cfg.train.iterations,
            cfg.train.seed,
            report.final_train_mse,
            cfg.grid_points,
        ),
        Format::Machine => format!(
            "iterations {}\ninitial_mse {first}\nfinal_train_mse {}\nsup_error {sup}\n",
            report.mse_history.len(),
            report.final_train_mse
        ),
    })
}

fn run(cli: &Cli) -> Result<String> {
    let f = cli.format;
    match &cli.command {
        Command::Inspect {
            algebra,
            export,
            tol,
        } => inspect(f, algebra, export.as_deref(), *tol),
        Command::Mul { algebra, x, y } => mul(f, algebra, x, y),
        Command::Emulate { algebra, a, b } => emulate(f, algebra, a, b.as_deref()),
        Command::Check {
            algebra,
            seed,
            trials,
            tol,
        } => check(f, algebra, *seed, *trials, *tol),
        Command::Params { n, outputs, inputs } => params(f, *n, *outputs, *inputs),
        Command::TrainDemo(args) => train_demo(f, args),
    }
}

/// First line of an error chain, joined with `: `.
fn one_line(err: &anyhow::Error) -> String {
    err.chain()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(": ")
        .replace('\n', " ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let summary: Vec<&str> = rendered
                .lines()
                .take_while(|l| !l.trim().is_empty() && !l.starts_with("Usage:"))
                .map(str::trim)
                .collect();
            eprintln!("{}", summary.join(" "));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}
