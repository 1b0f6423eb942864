//! Plain-text field files.
//!
//! The first line is `scalar n` or `vector n`. It is followed by the values in
//! storage order, one per line: `(n + 1)^2` nodal reals for a scalar field,
//! `2 n^2` whitespace-separated pairs for a vector field, `2 n^2` triples
//! `xx xy yy` for a symmetric matrix field (header `matrix n`).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldFile {
    Scalar(ScalarField),
    Vector(VectorField),
    /// Symmetric matrices `[xx, xy, yy]`, one per triangle.
    Matrix {
        n: usize,
        values: Vec<[f64; 3]>,
    },
}

impl FieldFile {
    pub fn n(&self) -> usize {
        match self {
            FieldFile::Scalar(s) => s.n(),
            FieldFile::Vector(v) => v.n(),
            FieldFile::Matrix { n, .. } => *n,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{tok}` as a real")))?;
    if !v.is_finite() {
        return Err(parse_err(line, "non-finite value"));
    }
    Ok(v)
}

pub fn parse_field(text: &str) -> Result<FieldFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty field file"))?;
    let mut parts = header.split_whitespace();
    let kind = parts.next().unwrap_or_default();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(hline, "header must be `scalar N` or `vector N`"))?;
    if parts.next().is_some() || n < 2 {
        return Err(parse_err(hline, "header must be `scalar N` or `vector N` with N >= 2"));
    }
    let field = match kind {
        "scalar" => {
            let rows = read_rows::<1>(lines, (n + 1) * (n + 1), hline)?;
            FieldFile::Scalar(ScalarField::new(n, rows.into_iter().map(|[v]| v).collect())?)
        }
        "vector" => FieldFile::Vector(VectorField::new(n, read_rows::<2>(lines, 2 * n * n, hline)?)?),
        "matrix" => FieldFile::Matrix {
            n,
            values: read_rows::<3>(lines, 2 * n * n, hline)?,
        },
        other => return Err(parse_err(hline, format!("unknown field kind `{other}`"))),
    };
    Ok(field)
}

fn read_rows<'a, const K: usize>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    expected: usize,
    hline: usize,
) -> Result<Vec<[f64; K]>> {
    let mut rows = Vec::with_capacity(expected);
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != K {
            return Err(parse_err(
                ln,
                format!("expected {K} value(s) per line, found {}", toks.len()),
            ));
        }
        if rows.len() == expected {
            return Err(parse_err(ln, format!("more than {expected} rows")));
        }
        let mut row = [0.0; K];
        for (slot, tok) in row.iter_mut().zip(&toks) {
            *slot = parse_real(tok, ln)?;
        }
        rows.push(row);
    }
    if rows.len() != expected {
        return Err(parse_err(
            hline,
            format!("expected {expected} rows, found {}", rows.len()),
        ));
    }
    Ok(rows)
}

pub fn read_field(path: impl AsRef<Path>) -> Result<FieldFile> {
    parse_field(&std::fs::read_to_string(path)?)
}

pub fn format_scalar(field: &ScalarField) -> String {
    let mut out = format!("scalar {}\n", field.n());
    for v in field.values() {
        // {:e} keeps the shortest round-tripping representation
        let _ = writeln!(out, "{v:e}");
    }
    out
}

pub fn format_vector(field: &VectorField) -> String {
    let mut out = format!("vector {}\n", field.n());
    for v in field.values() {
        let _ = writeln!(out, "{:e} {:e}", v[0], v[1]);
    }
    out
}

pub fn format_matrix(n: usize, values: &[[f64; 3]]) -> String {
    let mut out = format!("matrix {n}\n");
    for m in values {
        let _ = writeln!(out, "{:e} {:e} {:e}", m[0], m[1], m[2]);
    }
    out
}

pub fn write_scalar(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    Ok(std::fs::write(path, format_scalar(field))?)
}

pub fn write_vector(path: impl AsRef<Path>, field: &VectorField) -> Result<()> {
    Ok(std::fs::write(path, format_vector(field))?)
}
