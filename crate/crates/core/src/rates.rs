//! Power-law fitting of decay series and pass/fail verdicts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive quantity sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DecaySeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Domain(format!("{} times but {} values", times.len(), values.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("series times must be strictly increasing".into()));
        }
        Ok(Self { label: label.into(), times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, value: f64) {
        self.times.push(t);
        self.values.push(value);
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// `t,<label>` rows with round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = format!("t,{}\n", self.label);
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{t:e},{v:e}");
        }
        out
    }
}

/// Time window `[t_lo, t_hi]` for a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl FitWindow {
    pub fn new(t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(t_hi > t_lo) {
            return Err(Error::Domain(format!("empty fit window [{t_lo}, {t_hi}]")));
        }
        Ok(Self { t_lo, t_hi })
    }

    /// The last decade of the run, dropping its final 5%.
    pub fn last_decade(series: &DecaySeries) -> Self {
        let t0 = series.times.first().copied().unwrap_or(0.0);
        let t1 = series.t_end();
        Self { t_lo: t1 / 10.0, t_hi: t1 - 0.05 * (t1 - t0) }
    }
}

/// Abscissa of the log-log fit: `log(offset + t)`.
///
/// `offset = 1` fits `(1+t)^p`, `offset = 0.5` fits `(1+2t)^p`, `offset = 0`
/// fits `t^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitAxis {
    pub offset: f64,
}

impl Default for FitAxis {
    fn default() -> Self {
        Self { offset: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// Max relative deviation of the fitted power law inside the window.
    pub residual: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares slope of `log y` against `log(offset + t)` inside `window`.
pub fn fit_decay_exponent(series: &DecaySeries, window: FitWindow, axis: FitAxis) -> Result<RateFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &y) in series.times.iter().zip(&series.values) {
        if t < window.t_lo || t > window.t_hi {
            continue;
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("series '{}' has nonpositive value {y} at t = {t}", series.label)));
        }
        let s = axis.offset + t;
        if !(s > 0.0) {
            return Err(Error::Domain(format!("log abscissa undefined at t = {t}")));
        }
        xs.push(s.ln());
        ys.push(y.ln());
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(Error::Insufficient(format!(
            "series '{}' has {} samples in [{}, {}], need {MIN_FIT_SAMPLES}",
            series.label,
            xs.len(),
            window.t_lo,
            window.t_hi
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Insufficient("fit window spans a single time".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = xs.iter().zip(&ys).map(|(x, y)| ((intercept + exponent * x - y).exp() - 1.0).abs()).fold(0.0, f64::max);
    Ok(RateFit { exponent, intercept, window: (window.t_lo, window.t_hi), residual, samples: xs.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    T1,
    T2,
    T3CorIA,
    T4Props,
    HN,
    CKN,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Expected {
    Value(f64),
    Property(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub theorem_id: TheoremId,
    pub label: String,
    pub expected: Expected,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub config_hash: String,
}

impl TheoremVerdict {
    /// Passes iff `|measured − expected| ≤ tolerance`.
    pub fn quantitative(
        theorem_id: TheoremId,
        label: impl Into<String>,
        expected: f64,
        measured: f64,
        tolerance: f64,
        config_hash: impl Into<String>,
    ) -> Self {
        let pass = (measured - expected).abs() <= tolerance;
        Self {
            theorem_id,
            label: label.into(),
            expected: Expected::Value(expected),
            measured,
            tolerance,
            pass,
            config_hash: config_hash.into(),
        }
    }

    /// `measured` is a scalar summary (e.g. worst margin); `pass` comes from the property suite.
    pub fn property(
        theorem_id: TheoremId,
        label: impl Into<String>,
        description: impl Into<String>,
        measured: f64,
        pass: bool,
        config_hash: impl Into<String>,
    ) -> Self {
        Self {
            theorem_id,
            label: label.into(),
            expected: Expected::Property(description.into()),
            measured,
            tolerance: 0.0,
            pass,
            config_hash: config_hash.into(),
        }
    }

    pub fn summary_line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        match &self.expected {
            Expected::Value(e) => format!(
                "{status} {:?} {}: measured {:.6} expected {:.6} tol {:.3e}",
                self.theorem_id, self.label, self.measured, e, self.tolerance
            ),
            Expected::Property(p) => {
                format!("{status} {:?} {}: {p} (measured {:.6e})", self.theorem_id, self.label, self.measured)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerdictBundle {
    pub verdicts: Vec<TheoremVerdict>,
}

impl VerdictBundle {
    pub fn push(&mut self, v: TheoremVerdict) {
        self.verdicts.push(v);
    }

    pub fn extend(&mut self, other: VerdictBundle) {
        self.verdicts.extend(other.verdicts);
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Domain(format!("verdict serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Domain(format!("malformed verdict file: {e}")))
    }
}

/// FNV-1a digest used to tag verdicts with the configuration that produced them.
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}
