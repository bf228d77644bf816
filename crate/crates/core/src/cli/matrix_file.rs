//! Plain-text matrix and vocabulary files.
//!
//! A matrix file starts with a `rows cols` header line followed by one line
//! per row of space-separated values. Values are written with 17 significant
//! digits, so reading a written file reproduces the matrix exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::corpus::Vocab;
use crate::error::{Error, Result};

pub fn format_matrix(m: &Array2<f64>) -> String {
    let (rows, cols) = m.dim();
    let mut out = String::with_capacity(24 * rows * cols + 16);
    writeln!(out, "{rows} {cols}").unwrap();
    for row in m.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<Array2<f64>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let dims: Vec<usize> = header
        .split_ascii_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(1, format!("bad header {header:?}: {e}")))?;
    let [rows, cols] = dims[..] else {
        return Err(err(1, format!("header must be \"rows cols\", got {header:?}")));
    };
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let line_no = r + 2;
        let line = lines
            .next()
            .ok_or_else(|| err(line_no, format!("expected {rows} rows, found {r}")))?;
        let before = values.len();
        for field in line.split_ascii_whitespace() {
            let v: f64 = field
                .parse()
                .map_err(|e| err(line_no, format!("bad value {field:?}: {e}")))?;
            values.push(v);
        }
        let found = values.len() - before;
        if found != cols {
            return Err(err(line_no, format!("expected {cols} values, found {found}")));
        }
    }
    if let Some((i, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(rows + 2 + i, format!("unexpected trailing line {extra:?}")));
    }
    Ok(Array2::from_shape_vec((rows, cols), values).expect("shape checked while parsing"))
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, path)
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    fs::write(path, format_matrix(m)).map_err(|e| Error::io(path, e))
}

/// One token per line; the line number (from 0) is the token id.
pub fn write_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    let mut out = String::new();
    for t in vocab.tokens() {
        out.push_str(t);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_vocab(path: &Path) -> Result<Vocab> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Vocab::from_tokens(text.lines()).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: 0,
        message: e.to_string(),
    })
}
