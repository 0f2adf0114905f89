//! JSON documents for algebras, vector-valued matrices and models.
//!
//! Algebra:
//! ```json
//! { "name": "complex", "dim": 2, "basis": ["1", "i"],
//!   "table": [[[1, 0], [0, 1]], [[0, 1], [-1, 0]]] }
//! ```
//! `table[i][j]` is the coefficient vector of `e_i · e_j`; `basis` is optional.
//!
//! Matrix: `{ "rows": M, "cols": N, "components": [A_1, …, A_n] }`, each
//! component a row-major list of `M·N` reals.
//!
//! Model: `{ "algebra": <algebra>, "layers": [<layer>…], "output": <output> }`
//! where a layer is `{ "rows", "cols", "weights": [W_1…W_n], "bias": [[b_i coords]…],
//! "activation" }` and the output is one of `{"mode": "vector"}`,
//! `{"mode": "real_output_weights", "rows", "cols", "alpha": [row-major]}` or
//! `{"mode": "component", "index": k}` (0-based). Floats round-trip exactly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::activation::SplitActivation;
use crate::algebra::Algebra;
use crate::dense::DenseLayer;
use crate::error::{Error, Result};
use crate::model::{OutputMode, Vmlp};
use crate::vmatrix::{ComponentStack, VMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDoc {
    pub name: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<String>>,
    pub table: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub components: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
    pub activation: SplitActivation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputDoc {
    Vector,
    RealOutputWeights {
        rows: usize,
        cols: usize,
        alpha: Vec<f64>,
    },
    Component {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub algebra: AlgebraDoc,
    pub layers: Vec<LayerDoc>,
    pub output: OutputDoc,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        // serde reports missing/unknown fields as "missing field `x`" etc.
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "document".to_string());
        Error::format(field, msg)
    })
}

fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("documents always serialize")
}

impl AlgebraDoc {
    pub fn from_algebra(alg: &Algebra) -> Self {
        let n = alg.dim();
        AlgebraDoc {
            name: alg.name().to_string(),
            dim: n,
            basis: Some(alg.basis_labels().to_vec()),
            table: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).map(|k| alg.p(i, j, k)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_algebra(&self) -> Result<Algebra> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::format("dim", "must be positive"));
        }
        if self.table.len() != n {
            return Err(Error::format(
                "table",
                format!("expected {n} rows, found {}", self.table.len()),
            ));
        }
        for (i, row) in self.table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::format(
                    format!("table[{i}]"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
            for (j, e) in row.iter().enumerate() {
                if e.len() != n {
                    return Err(Error::format(
                        format!("table[{i}][{j}]"),
                        format!("expected {n} coefficients, found {}", e.len()),
                    ));
                }
            }
        }
        let mut alg = Algebra::from_nested(&self.table)
            .map_err(|e| Error::format("table", e.to_string()))?
            .with_name(self.name.clone());
        if let Some(basis) = &self.basis {
            alg = alg
                .with_basis(basis.clone())
                .map_err(|e| Error::format("basis", e.to_string()))?;
        }
        Ok(alg)
    }
}

impl MatrixDoc {
    pub fn from_matrix(m: &VMatrix) -> Self {
        MatrixDoc {
            rows: m.rows(),
            cols: m.cols(),
            components: m
                .component_stack()
                .components
                .iter()
                .map(|c| c.transpose().as_slice().to_vec())
                .collect(),
        }
    }

    pub fn to_matrix(&self, alg: &Algebra) -> Result<VMatrix> {
        let n = alg.dim();
        if self.components.len() != n {
            return Err(Error::format(
                "components",
                format!(
                    "expected {n} component matrices, found {}",
                    self.components.len()
                ),
            ));
        }
        let mut comps = Vec::with_capacity(n);
        for (k, c) in self.components.iter().enumerate() {
            if c.len() != self.rows * self.cols {
                return Err(Error::format(
                    format!("components[{k}]"),
                    format!(
                        "expected {} values, found {}",
                        self.rows * self.cols,
                        c.len()
                    ),
                ));
            }
            comps.push(DMatrix::from_row_slice(self.rows, self.cols, c));
        }
        if self.rows == 0 || self.cols == 0 {
            return Ok(VMatrix::zeros(alg, self.rows, self.cols));
        }
        VMatrix::from_components(alg, &ComponentStack { components: comps })
            .map_err(|e| Error::format("components", e.to_string()))
    }
}

/// Parses an algebra definition document.
pub fn algebra_from_json(text: &str) -> Result<Algebra> {
    parse::<AlgebraDoc>(text)?.to_algebra()
}

pub fn algebra_to_json(alg: &Algebra) -> String {
    to_json(&AlgebraDoc::from_algebra(alg))
}

/// Parses a matrix document over `alg`.
pub fn matrix_from_json(alg: &Algebra, text: &str) -> Result<VMatrix> {
    parse::<MatrixDoc>(text)?.to_matrix(alg)
}

pub fn matrix_to_json(m: &VMatrix) -> String {
    to_json(&MatrixDoc::from_matrix(m))
}

pub fn model_to_json(model: &Vmlp) -> String {
    let layers = model
        .layers()
        .iter()
        .map(|l| {
            let w = MatrixDoc::from_matrix(l.weights());
            LayerDoc {
                rows: w.rows,
                cols: w.cols,
                weights: w.components,
                bias: l
                    .bias()
                    .elements()
                    .into_iter()
                    .map(|e| e.into_coords())
                    .collect(),
                activation: l.activation(),
            }
        })
        .collect();
    let output = match model.output_mode() {
        OutputMode::Vector => OutputDoc::Vector,
        OutputMode::Component(k) => OutputDoc::Component { index: *k },
        OutputMode::RealOutputWeights(a) => OutputDoc::RealOutputWeights {
            rows: a.nrows(),
            cols: a.ncols(),
            alpha: a.transpose().as_slice().to_vec(),
        },
    };
    to_json(&ModelDoc {
        algebra: AlgebraDoc::from_algebra(model.algebra()),
        layers,
        output,
    })
}

pub fn model_from_json(text: &str) -> Result<Vmlp> {
    let doc: ModelDoc = parse(text)?;
    let alg = doc.algebra.to_algebra()?;
    let n = alg.dim();
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (idx, l) in doc.layers.iter().enumerate() {
        let weights = MatrixDoc {
            rows: l.rows,
            cols: l.cols,
            components: l.weights.clone(),
        }
        .to_matrix(&alg)
        .map_err(|e| Error::format(format!("layers[{idx}].weights"), e.to_string()))?;
        if l.bias.len() != l.rows || l.bias.iter().any(|b| b.len() != n) {
            return Err(Error::format(
                format!("layers[{idx}].bias"),
                format!("expected {} entries of {n} coordinates", l.rows),
            ));
        }
        let bias = VMatrix::new(&alg, l.rows, 1, l.bias.concat())
            .map_err(|e| Error::format(format!("layers[{idx}].bias"), e.to_string()))?;
        layers.push(DenseLayer::new(weights, bias, l.activation)?);
    }
    let output = match doc.output {
        OutputDoc::Vector => OutputMode::Vector,
        OutputDoc::Component { index } => OutputMode::Component(index),
        OutputDoc::RealOutputWeights { rows, cols, alpha } => {
            if alpha.len() != rows * cols {
                return Err(Error::format(
                    "output.alpha",
                    format!("expected {} values, found {}", rows * cols, alpha.len()),
                ));
            }
            OutputMode::RealOutputWeights(DMatrix::from_row_slice(rows, cols, &alpha))
        }
    };
    Vmlp::new(layers, output)
}
