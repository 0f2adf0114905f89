//! Output rendering.
//!
//! Machine format: one record per line, fields separated by single spaces,
//! numbers printed with `f64`'s `Display` (round-trip exact, no exponent).
//! Matrices are a header `matrix <name> <rows> <cols>` followed by one line
//! per row.

use std::fmt::Write as _;

use vnet_core::{Algebra, AlgebraReport, DMatrix, VElement};

pub fn numbers(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn machine_matrix(name: &str, m: &DMatrix<f64>) -> String {
    let mut out = format!("matrix {name} {} {}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<f64> = m.row(r).iter().copied().collect();
        out.push_str(&numbers(&row));
        out.push('\n');
    }
    out
}

pub fn human_matrix(name: &str, m: &DMatrix<f64>) -> String {
    let cells: Vec<String> = m.iter().map(f64::to_string).collect();
    let width = cells.iter().map(String::len).max().unwrap_or(1);
    let mut out = format!("{name} ({}x{}):\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        out.push(' ');
        for c in 0..m.ncols() {
            // nalgebra iterates column-major
            let _ = write!(out, " {:>width$}", cells[c * m.nrows() + r]);
        }
        out.push('\n');
    }
    out
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Singular `B_k` indices in the 1-based labelling used for display.
fn singular_labels(report: &AlgebraReport) -> Vec<String> {
    report
        .singular_bk_indices
        .iter()
        .map(|k| format!("B_{}", k + 1))
        .collect()
}

pub fn human_inspect(alg: &Algebra, report: &AlgebraReport) -> String {
    let n = alg.dim();
    let labels = alg.basis_labels();
    let mut out = String::new();
    let _ = writeln!(out, "algebra: {} (dimension {n})", alg.name());
    let _ = writeln!(out, "basis: {}", labels.join(", "));
    let _ = writeln!(out, "multiplication table (row · column):");

    let mut cells = vec![vec![String::new(); n + 1]; n + 1];
    cells[0][1..].clone_from_slice(labels);
    for i in 0..n {
        cells[i + 1][0] = labels[i].clone();
        for j in 0..n {
            let coeffs: Vec<f64> = (0..n).map(|k| alg.p(i, j, k)).collect();
            let e = VElement::new(coeffs).expect("table entries are finite");
            cells[i + 1][j + 1] = alg.format_element(&e);
        }
    }
    let width = cells
        .iter()
        .flatten()
        .map(|c| c.chars().count())
        .max()
        .unwrap_or(1);
    for row in &cells {
        out.push(' ');
        for cell in row {
            let pad = width - cell.chars().count();
            let _ = write!(out, " {}{cell}", " ".repeat(pad));
        }
        out.push('\n');
    }

    let _ = writeln!(out, "commutative: {}", yes_no(report.commutative));
    let _ = writeln!(out, "associative: {}", yes_no(report.associative));
    match &report.identity {
        Some(e) => {
            let _ = writeln!(out, "identity: {}", alg.format_element(e));
        }
        None => {
            let _ = writeln!(out, "identity: none");
        }
    }
    let _ = writeln!(out, "hypercomplex: {}", yes_no(report.is_hypercomplex));
    if report.nondegenerate {
        let _ = writeln!(out, "non-degenerate: yes");
    } else {
        let _ = writeln!(
            out,
            "non-degenerate: no (singular {})",
            singular_labels(report).join(", ")
        );
    }
    out
}

pub fn machine_inspect(alg: &Algebra, report: &AlgebraReport) -> String {
    let n = alg.dim();
    let mut out = String::new();
    let _ = writeln!(out, "algebra {} {n}", alg.name());
    let _ = writeln!(out, "basis {}", alg.basis_labels().join(" "));
    for i in 0..n {
        for j in 0..n {
            let coeffs: Vec<f64> = (0..n).map(|k| alg.p(i, j, k)).collect();
            let _ = writeln!(out, "product {} {} {}", i + 1, j + 1, numbers(&coeffs));
        }
    }
    let _ = writeln!(out, "commutative {}", report.commutative);
    let _ = writeln!(out, "associative {}", report.associative);
    match &report.identity {
        Some(e) => {
            let _ = writeln!(out, "identity {}", numbers(e.coords()));
        }
        None => {
            let _ = writeln!(out, "identity none");
        }
    }
    let _ = writeln!(out, "hypercomplex {}", report.is_hypercomplex);
    let _ = writeln!(out, "nondegenerate {}", report.nondegenerate);
    out.push_str("singular_b");
    for k in &report.singular_bk_indices {
        let _ = write!(out, " {}", k + 1);
    }
    out.push('\n');
    out
}
