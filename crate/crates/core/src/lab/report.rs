//! Case identifiers and the reports the bench produces.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{DzkError, Result};
use crate::numerics::{fit_line, LineFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseId {
    Unitarity,
    Decay,
    Strichartz,
    SmoothingHom,
    SmoothingInhomL2,
    SmoothingInhomLinf,
    Maximal,
    WaveMaximalCos,
    WaveMaximalSin2,
    WaveMaximalSin1,
    KernelEnvelope,
    LeibnizCommutator,
    BkBound,
    Counterexample,
}

impl CaseId {
    pub const ALL: [CaseId; 14] = [
        CaseId::Unitarity,
        CaseId::Decay,
        CaseId::Strichartz,
        CaseId::SmoothingHom,
        CaseId::SmoothingInhomL2,
        CaseId::SmoothingInhomLinf,
        CaseId::Maximal,
        CaseId::WaveMaximalCos,
        CaseId::WaveMaximalSin2,
        CaseId::WaveMaximalSin1,
        CaseId::KernelEnvelope,
        CaseId::LeibnizCommutator,
        CaseId::BkBound,
        CaseId::Counterexample,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Unitarity => "unitarity",
            CaseId::Decay => "decay",
            CaseId::Strichartz => "strichartz",
            CaseId::SmoothingHom => "smoothing-hom",
            CaseId::SmoothingInhomL2 => "smoothing-inhom-L2",
            CaseId::SmoothingInhomLinf => "smoothing-inhom-Linf",
            CaseId::Maximal => "maximal",
            CaseId::WaveMaximalCos => "wave-maximal-cos",
            CaseId::WaveMaximalSin2 => "wave-maximal-sin2",
            CaseId::WaveMaximalSin1 => "wave-maximal-sin1",
            CaseId::KernelEnvelope => "kernel-envelope",
            CaseId::LeibnizCommutator => "leibniz-commutator",
            CaseId::BkBound => "bk-bound",
            CaseId::Counterexample => "counterexample",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = DzkError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| DzkError::InvalidParameter(format!("unknown case id `{s}`")))
    }
}

/// A case with its parameters (exponents, regularity, level, horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCase {
    pub id: CaseId,
    pub params: Map<String, Value>,
}

impl EstimateCase {
    pub fn new(id: CaseId) -> Self {
        Self {
            id,
            params: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(Value::as_f64)
    }
}

/// Parameters as compact JSON with sorted keys.
pub fn param_json(params: &Map<String, Value>) -> String {
    Value::Object(params.clone()).to_string()
}

/// One input of a ratio check.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub input_id: String,
    pub params: Map<String, Value>,
    pub lhs: f64,
    pub rhs: f64,
}

impl RatioRow {
    pub fn new(input_id: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            input_id: input_id.into(),
            params: Map::new(),
            lhs,
            rhs,
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// `lhs / rhs`, or `None` for a degenerate row (`rhs = 0`).
    pub fn ratio(&self) -> Option<f64> {
        if self.rhs == 0.0 {
            None
        } else {
            Some(self.lhs / self.rhs)
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.ratio().is_none()
    }
}

/// Per-input LHS, RHS and ratio of one case over one family.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub case: EstimateCase,
    pub family: String,
    pub rows: Vec<RatioRow>,
    pub metrics: BTreeMap<String, f64>,
}

impl RatioReport {
    pub fn new(case: EstimateCase, family: impl Into<String>, rows: Vec<RatioRow>) -> Result<Self> {
        for r in &rows {
            if !(r.lhs.is_finite() && r.rhs.is_finite() && r.lhs >= 0.0 && r.rhs >= 0.0) {
                return Err(DzkError::NonFinite(0));
            }
        }
        let mut rep = Self {
            case,
            family: family.into(),
            rows,
            metrics: BTreeMap::new(),
        };
        if let Some(m) = rep.max_ratio() {
            rep.metrics.insert("max_ratio".into(), m);
        }
        if let Some(m) = rep.median_ratio() {
            rep.metrics.insert("median_ratio".into(), m);
        }
        rep.metrics
            .insert("degenerate".into(), rep.degenerate_count() as f64);
        Ok(rep)
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().filter_map(RatioRow::ratio).collect()
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios().into_iter().reduce(f64::max)
    }

    pub fn min_ratio(&self) -> Option<f64> {
        self.ratios().into_iter().reduce(f64::min)
    }

    pub fn median_ratio(&self) -> Option<f64> {
        let mut r = self.ratios();
        if r.is_empty() {
            return None;
        }
        r.sort_by(f64::total_cmp);
        let n = r.len();
        Some(if n % 2 == 1 {
            r[n / 2]
        } else {
            0.5 * (r[n / 2 - 1] + r[n / 2])
        })
    }

    pub fn degenerate_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_degenerate()).count()
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }
}

/// Least-squares line through `(abscissa, ordinate)` pairs, usually on log2 axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub case: EstimateCase,
    pub label: String,
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub fit: LineFit,
    pub metrics: BTreeMap<String, f64>,
}

impl SlopeFit {
    pub fn new(
        case: EstimateCase,
        label: impl Into<String>,
        abscissae: Vec<f64>,
        ordinates: Vec<f64>,
    ) -> Result<Self> {
        let fit = fit_line(&abscissae, &ordinates)?;
        Ok(Self {
            case,
            label: label.into(),
            abscissae,
            ordinates,
            fit,
            metrics: BTreeMap::new(),
        })
    }

    pub fn slope(&self) -> f64 {
        self.fit.slope
    }

    pub fn residual(&self) -> f64 {
        self.fit.residual
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }
}

/// Anything the bench emits.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Ratio(RatioReport),
    Slope(SlopeFit),
}

impl Report {
    pub fn case(&self) -> &EstimateCase {
        match self {
            Report::Ratio(r) => &r.case,
            Report::Slope(s) => &s.case,
        }
    }
}

impl From<RatioReport> for Report {
    fn from(r: RatioReport) -> Self {
        Report::Ratio(r)
    }
}

impl From<SlopeFit> for Report {
    fn from(s: SlopeFit) -> Self {
        Report::Slope(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_ids_round_trip() {
        for c in CaseId::ALL {
            assert_eq!(c.as_str().parse::<CaseId>().unwrap(), c);
        }
        assert!("smoothing".parse::<CaseId>().is_err());
    }

    #[test]
    fn zero_over_zero_is_degenerate() {
        let rows = vec![RatioRow::new("zero", 0.0, 0.0), RatioRow::new("a", 2.0, 1.0)];
        let r = RatioReport::new(EstimateCase::new(CaseId::Unitarity), "test", rows).unwrap();
        assert_eq!(r.degenerate_count(), 1);
        assert_eq!(r.max_ratio(), Some(2.0));
        assert_eq!(r.median_ratio(), Some(2.0));
    }

    #[test]
    fn rejects_nan_rows() {
        let rows = vec![RatioRow::new("a", f64::NAN, 1.0)];
        assert!(RatioReport::new(EstimateCase::new(CaseId::Maximal), "f", rows).is_err());
    }

    #[test]
    fn params_are_sorted_json() {
        let c = EstimateCase::new(CaseId::Strichartz).with("q", 4.0).with("p", 4.0);
        assert_eq!(param_json(&c.params), r#"{"p":4.0,"q":4.0}"#);
    }

    #[test]
    fn slope_fit_needs_three_points() {
        let c = EstimateCase::new(CaseId::BkBound);
        assert!(SlopeFit::new(c.clone(), "x", vec![1.0, 2.0], vec![1.0, 2.0]).is_err());
        let s = SlopeFit::new(c, "x", vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]).unwrap();
        assert!((s.slope() - 2.0).abs() < 1e-14);
    }
}
