//! Count-to-signal transforms.
//!
//! Probabilities are maximum-likelihood estimates from the count matrix: the
//! joint from the grand total, the marginals from row and column sums. PMI
//! entries with a zero joint count are set to 0 rather than −∞.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::{CountKind, CountMatrix};
use crate::error::{Error, Result};
use crate::linalg::Svd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Pmi,
    Ppmi,
    /// Shifted PPMI, `max(PMI − ln l, 0)` for `l` negative samples.
    Sppmi,
    /// `ln(1 + count)`.
    LogCount,
    Tf,
    /// `tf · ln(N_docs / (1 + df))`.
    TfIdf,
    Raw,
}

impl TransformKind {
    pub const ALL: [TransformKind; 7] = [
        TransformKind::Pmi,
        TransformKind::Ppmi,
        TransformKind::Sppmi,
        TransformKind::LogCount,
        TransformKind::Tf,
        TransformKind::TfIdf,
        TransformKind::Raw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Pmi => "pmi",
            TransformKind::Ppmi => "ppmi",
            TransformKind::Sppmi => "sppmi",
            TransformKind::LogCount => "log_count",
            TransformKind::Tf => "tf",
            TransformKind::TfIdf => "tf_idf",
            TransformKind::Raw => "raw",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        TransformKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown transform {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TransformParams {
    /// Negative-sample count `l` for SPPMI.
    pub negative_samples: Option<f64>,
}

impl TransformParams {
    fn to_map(self) -> BTreeMap<String, f64> {
        let mut map = BTreeMap::new();
        if let Some(l) = self.negative_samples {
            map.insert("negative_samples".to_owned(), l);
        }
        map
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetrizeMode {
    /// `MᵀM`.
    Gram,
    /// `[[0, M], [Mᵀ, 0]]`.
    JordanWielandt,
}

/// A real matrix ready for factorization, tagged with how it was produced.
///
/// The full SVD is computed on first use and cached; the cache is safe for
/// concurrent readers.
#[derive(Debug, Clone)]
pub struct SignalMatrix {
    values: Array2<f64>,
    pub transform: TransformKind,
    pub params: BTreeMap<String, f64>,
    pub provenance: String,
    svd: OnceLock<Svd>,
}

impl SignalMatrix {
    pub fn new(values: Array2<f64>, transform: TransformKind) -> Self {
        SignalMatrix {
            values,
            transform,
            params: BTreeMap::new(),
            provenance: String::new(),
            svd: OnceLock::new(),
        }
    }

    /// Untransformed matrix, e.g. read from a file.
    pub fn raw(values: Array2<f64>) -> Self {
        Self::new(values, TransformKind::Raw)
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Cached full SVD with descending singular values.
    pub fn svd(&self) -> Result<&Svd> {
        if let Some(svd) = self.svd.get() {
            return Ok(svd);
        }
        let svd = Svd::compute(&self.values)?;
        Ok(self.svd.get_or_init(|| svd))
    }
}

pub fn transform(
    counts: &CountMatrix,
    kind: TransformKind,
    params: TransformParams,
) -> Result<SignalMatrix> {
    let c = &counts.counts;
    if c.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroCounts);
    }
    let values = match kind {
        TransformKind::Pmi => pmi(c),
        TransformKind::Ppmi => pmi(c).mapv_into(|v| v.max(0.0)),
        TransformKind::Sppmi => {
            let l = params.negative_samples.ok_or_else(|| {
                Error::InvalidArgument("sppmi requires the negative-sample count l".into())
            })?;
            if l.is_nan() || l < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "negative-sample count must be at least 1, got {l}"
                )));
            }
            let shift = l.ln();
            pmi(c).mapv_into(|v| (v - shift).max(0.0))
        }
        TransformKind::LogCount => c.mapv(f64::ln_1p),
        TransformKind::Tf | TransformKind::TfIdf if counts.kind == CountKind::Cooccurrence => {
            return Err(Error::InvalidArgument(format!(
                "{kind} requires term-document counts"
            )));
        }
        TransformKind::Tf => c.clone(),
        TransformKind::TfIdf => tf_idf(c),
        TransformKind::Raw => c.clone(),
    };
    let mut out = SignalMatrix::new(values, kind);
    out.params = params.to_map();
    out.provenance = format!("{kind} of {}×{} counts", counts.rows(), counts.cols());
    Ok(out)
}

fn pmi(c: &Array2<f64>) -> Array2<f64> {
    let total = c.sum();
    let rows = c.sum_axis(Axis(1));
    let cols = c.sum_axis(Axis(0));
    let mut out = Array2::zeros(c.dim());
    for ((i, j), v) in out.indexed_iter_mut() {
        let joint = c[[i, j]];
        if joint > 0.0 {
            // log p(i,j) / (p(i) p(j)) with every p = count / total
            *v = (joint * total / (rows[i] * cols[j])).ln();
        }
    }
    out
}

fn tf_idf(c: &Array2<f64>) -> Array2<f64> {
    let docs = c.nrows() as f64;
    let idf: Vec<f64> = c
        .axis_iter(Axis(1))
        .map(|col| {
            let df = col.iter().filter(|v| **v > 0.0).count() as f64;
            (docs / (1.0 + df)).ln()
        })
        .collect();
    let mut out = c.clone();
    for mut row in out.rows_mut() {
        for (v, w) in row.iter_mut().zip(&idf) {
            *v *= w;
        }
    }
    out
}

pub fn symmetrize(m: &SignalMatrix, mode: SymmetrizeMode) -> SignalMatrix {
    let a = m.values();
    let values = match mode {
        SymmetrizeMode::Gram => a.t().dot(a),
        SymmetrizeMode::JordanWielandt => {
            let (rows, cols) = a.dim();
            let mut out = Array2::zeros((rows + cols, rows + cols));
            out.slice_mut(s![..rows, rows..]).assign(a);
            out.slice_mut(s![rows.., ..rows]).assign(&a.t());
            out
        }
    };
    let mut out = SignalMatrix::new(values, m.transform);
    out.params = m.params.clone();
    let tag = match mode {
        SymmetrizeMode::Gram => "gram",
        SymmetrizeMode::JordanWielandt => "jordan_wielandt",
    };
    out.provenance = if m.provenance.is_empty() {
        format!("{tag} symmetrization")
    } else {
        format!("{tag} symmetrization of {}", m.provenance)
    };
    out
}
