//! The JSON report shared by every check, and its CSV projection.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complexfn::{format_complex, wrap_phase, Complex};
use crate::contour::IntegralResult;
use crate::master::ParameterSet;

/// Below this, `rel_err` passes regardless of the quadrature estimate.
pub const ESTIMATE_FLOOR: f64 = 1e-9;

/// A complex number as `(log|x|, arg x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub log_abs: f64,
    pub arg: f64,
}

impl From<Complex> for LogValue {
    /// Takes a complex logarithm.
    fn from(log: Complex) -> Self {
        Self { log_abs: log.re, arg: wrap_phase(log.im) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub z: Vec<String>,
    pub a: Vec<String>,
    pub p: String,
    pub kappa: String,
}

impl From<&ParameterSet> for ParamsJson {
    fn from(p: &ParameterSet) -> Self {
        Self {
            z: p.z().iter().copied().map(format_complex).collect(),
            a: p.a().iter().copied().map(format_complex).collect(),
            p: format_complex(p.p()),
            kappa: format_complex(p.kappa()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadratureInfo {
    pub panels: usize,
    pub truncation_radius: f64,
    pub est_error: f64,
}

impl QuadratureInfo {
    /// Accumulates panels, the largest radius and the summed relative error.
    pub fn absorb(&mut self, r: &IntegralResult) {
        self.panels += r.panels_used;
        self.truncation_radius = self.truncation_radius.max(r.truncation_radius);
        self.est_error += r.rel_error();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub s: f64,
    pub rel_err: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedMatrix {
    pub label: String,
    /// Row-major entries formatted as complex literals.
    pub entries: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub n: usize,
    pub params: Option<ParamsJson>,
    pub lhs: Option<LogValue>,
    pub rhs: Option<LogValue>,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tol: f64,
    pub pass: bool,
    pub quadrature: Option<QuadratureInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_ci: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted_matrices: Option<Vec<FittedMatrix>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// The pass rule: within tolerance, and within ten times the propagated
/// error estimate (or [`ESTIMATE_FLOOR`]).
pub fn passes(rel_err: f64, tol: f64, est: f64) -> bool {
    rel_err <= tol && rel_err <= (10.0 * est).max(ESTIMATE_FLOOR)
}

impl Report {
    pub fn new(check: &str, n: usize, params: Option<&ParameterSet>) -> Self {
        Self {
            check: check.to_string(),
            n,
            params: params.map(ParamsJson::from),
            lhs: None,
            rhs: None,
            abs_err: 0.0,
            rel_err: 0.0,
            tol: 0.0,
            pass: true,
            quadrature: None,
            slope: None,
            slope_ci: None,
            fitted_matrices: None,
            sweep: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Compares two complex logarithms: `abs_err = |log L - log R|` (imaginary
    /// part mod 2 pi), `rel_err = |L/R - 1|`.
    pub fn compare_logs(mut self, log_lhs: Complex, log_rhs: Complex, tol: f64, quad: Option<QuadratureInfo>) -> Self {
        let diff = Complex::new(log_lhs.re - log_rhs.re, wrap_phase(log_lhs.im - log_rhs.im));
        self.lhs = Some(log_lhs.into());
        self.rhs = Some(log_rhs.into());
        self.abs_err = diff.norm();
        self.rel_err = (diff.exp() - 1.0).norm();
        self.finish(tol, quad)
    }

    /// Sets `tol`, the quadrature block and `pass` from `rel_err`.
    pub fn finish(mut self, tol: f64, quad: Option<QuadratureInfo>) -> Self {
        self.tol = tol;
        let est = quad.map_or(0.0, |q| q.est_error);
        self.quadrature = quad;
        self.pass = self.rel_err.is_finite() && passes(self.rel_err, tol, est);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Short hash of the parameter block.
    pub fn param_hash(&self) -> String {
        let text = serde_json::to_string(&self.params).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// CSV rows `check,n,param_hash,rel_err,tol,pass`; a sweep gives one row
    /// per scale.
    pub fn csv_rows(&self) -> Vec<String> {
        let hash = self.param_hash();
        if self.sweep.is_empty() {
            return vec![format!("{},{},{},{:e},{:e},{}", self.check, self.n, hash, self.rel_err, self.tol, self.pass)];
        }
        self.sweep
            .iter()
            .map(|s| format!("{}[S={}],{},{},{:e},{:e},{}", self.check, s.s, self.n, hash, s.rel_err, self.tol, s.pass))
            .collect()
    }
}

pub const CSV_HEADER: &str = "check,n,param_hash,rel_err,tol,pass";

pub fn emit_csv(reports: &[Report]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        for row in r.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_and_pass_rule() {
        let r = Report::new("demo", 2, None).compare_logs(Complex::new(1.0, 0.1), Complex::new(1.0, 0.1 + 2.0 * std::f64::consts::PI), 1e-8, None);
        assert!(r.rel_err < 1e-14 && r.pass);
        let r = Report::new("demo", 2, None).compare_logs(Complex::new(1.0, 0.0), Complex::new(1.0 + 1e-7, 0.0), 1e-6, None);
        assert!(!r.pass, "1e-7 exceeds the estimate floor without a quadrature estimate");
        let q = QuadratureInfo { panels: 10, truncation_radius: 5.0, est_error: 1e-7 };
        let r = Report::new("demo", 2, None).compare_logs(Complex::new(1.0, 0.0), Complex::new(1.0 + 1e-7, 0.0), 1e-6, Some(q));
        assert!(r.pass);
    }

    #[test]
    fn csv_rows() {
        let mut r = Report::new("barnes", 2, None).finish(1e-8, None);
        assert_eq!(emit_csv(std::slice::from_ref(&r)).lines().count(), 2);
        r.sweep = vec![SweepPoint { s: 10.0, rel_err: 0.1, pass: true }, SweepPoint { s: 20.0, rel_err: 0.05, pass: false }];
        let csv = emit_csv(&[r]);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().ends_with(",false"));
    }
}
