//! JSON documents written and read by the command-line tools.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::estimate::Spectrum;
use crate::select::SelectionReport;

/// Schema version stamped into every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub k: Vec<usize>,
    pub loss: Vec<f64>,
    pub stddev: Vec<f64>,
}

/// Output of `pipdim select`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: u32,
    pub method: String,
    pub transform: Option<String>,
    pub alpha: f64,
    pub sigma: f64,
    pub spectrum: Vec<f64>,
    pub rank_d: usize,
    pub ambient: usize,
    pub k_star: usize,
    pub loss_at_k_star: f64,
    /// Level `p` (percent) to `[k_lo, k_hi]`, in increasing `p`.
    #[serde(with = "interval_map")]
    pub intervals: Vec<(f64, [usize; 2])>,
    pub curve: CurveRecord,
    pub samples: usize,
    pub notes: Vec<String>,
    pub config: Value,
    pub warnings: Vec<String>,
}

impl ReportFile {
    pub fn new(
        report: &SelectionReport,
        spectrum: &Spectrum,
        transform: Option<String>,
        config: Value,
        mut warnings: Vec<String>,
    ) -> Self {
        warnings.extend(report.warnings.iter().cloned());
        let curve = &report.curve;
        ReportFile {
            version: SCHEMA_VERSION,
            method: curve.method.name().to_owned(),
            transform,
            alpha: report.alpha,
            sigma: report.sigma,
            spectrum: spectrum.values().to_vec(),
            rank_d: spectrum.rank(),
            ambient: spectrum.ambient(),
            k_star: report.k_star,
            loss_at_k_star: report.loss_at_k_star,
            intervals: report
                .intervals
                .iter()
                .map(|i| (i.p, [i.lo, i.hi]))
                .collect(),
            curve: CurveRecord {
                k: curve.k_values.clone(),
                loss: curve.losses.clone(),
                stddev: curve.stddevs.clone(),
            },
            samples: curve.samples,
            notes: vec![
                "p% intervals hold every k whose loss gap to the minimum is at most p% of the gap of the 1-dimensional embedding".to_owned(),
                "losses assume a signal with the given spectrum and iid noise of standard deviation sigma".to_owned(),
            ],
            config,
            warnings,
        }
    }
}

/// Output of `pipdim estimate`; also accepted as `select` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateFile {
    pub version: u32,
    pub transform: String,
    pub sigma: f64,
    pub spectrum: Vec<f64>,
    pub rank_d: usize,
    pub ambient: usize,
    pub config: Value,
    pub warnings: Vec<String>,
}

/// The fields `select` reads from a spectrum document. Extra keys are ignored.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SpectrumInput {
    pub spectrum: Vec<f64>,
    pub sigma: Option<f64>,
    pub ambient: Option<usize>,
    pub transform: Option<String>,
}

/// Writes intervals as a JSON object keyed by level, keeping level order.
mod interval_map {
    use serde::de::{Error as _, MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &[(f64, [usize; 2])], s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(v.len()))?;
        for (p, range) in v {
            map.serialize_entry(&p.to_string(), range)?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, [usize; 2])>, D::Error> {
        struct Levels;
        impl<'de> Visitor<'de> for Levels {
            type Value = Vec<(f64, [usize; 2])>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping levels to [lo, hi]")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((key, range)) = map.next_entry::<String, [usize; 2]>()? {
                    let p = key.parse().map_err(|_| A::Error::custom(format!("bad level {key:?}")))?;
                    out.push((p, range));
                }
                out.sort_by(|a: &(f64, _), b| a.0.total_cmp(&b.0));
                Ok(out)
            }
        }
        d.deserialize_map(Levels)
    }
}
