//! The p-cycles `[G_m]`, the solution matrix `Theta` of real-line pairings,
//! the interval cycles of the classical theory, and the closed-form checks
//! against them (both determinant formulas and Barnes' integral).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::complexfn::{log_gamma, Complex};
use crate::contour::{integrate_interval, integrate_real_line, IntegralResult, IntervalNode, LineWindow, QuadratureSpec};
use crate::error::{Error, Result};
use crate::master::{decay_exponents, log_periodic_weight, log_phi_p, weight_w, ParameterSet};
use crate::reduction::ratfunc::FloatRational;
use crate::report::{QuadratureInfo, Report};

/// Condition number above which a solution matrix carries a warning.
pub const CONDITION_WARNING: f64 = 1e8;

/// `G_m(t) = e^{2 pi i m t / p}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicWeight {
    pub m: i64,
}

impl PeriodicWeight {
    pub fn admissible(&self, n: usize) -> bool {
        self.m >= 1 && self.m < n as i64
    }

    pub fn log_value(&self, t: Complex, p: Complex) -> Complex {
        log_periodic_weight(self.m, t, p)
    }
}

/// The oriented interval `[z_m, z_{m+1}]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntervalCycle {
    pub m: usize,
}

fn line_window(params: &ParameterSet, pole_points: &[Complex]) -> LineWindow {
    let re = params.z().iter().map(|z| z.re);
    let lo = re.clone().fold(f64::INFINITY, f64::min);
    let hi = re.fold(f64::NEG_INFINITY, f64::max);
    let width = 2.0 * params.p().norm();
    // nearest poles of Phi_p are z_l - a_l (below) and z_l + a_l + p (above)
    let nearest = params
        .z()
        .iter()
        .zip(params.a())
        .flat_map(|(z, a)| [(z - a).im.abs(), (z + a + params.p()).im.abs()])
        .chain(pole_points.iter().map(|c| c.im.abs()))
        .fold(f64::INFINITY, f64::min);
    LineWindow { lo: lo - width, hi: hi + width, resolution: nearest.clamp(1e-3, params.p().norm()) }
}

/// `int_R G_m(t) Phi_p(t, z) f(t) dt` with `log f` supplied; `pole_points`
/// lists the poles of `f`, which set the resolution near the real line.
pub fn pair_log<F>(params: &ParameterSet, m: i64, log_f: F, pole_points: &[Complex], spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(Complex) -> Result<Complex>,
{
    let decay = decay_exponents(params, m);
    if !(decay.0 > 0.0 && decay.1 > 0.0) {
        return Err(Error::DivergentIntegral { c_minus: decay.0, c_plus: decay.1 });
    }
    let weight = PeriodicWeight { m };
    let p = params.p();
    let integrand = |t: f64| -> Result<Complex> {
        let tc = Complex::new(t, 0.0);
        Ok(weight.log_value(tc, p) + log_phi_p(tc, params)? + log_f(tc)?)
    };
    integrate_real_line(integrand, decay, line_window(params, pole_points), spec)
}

fn ln_or_zero(v: Complex) -> Complex {
    if v == Complex::new(0.0, 0.0) {
        Complex::new(f64::NEG_INFINITY, 0.0)
    } else {
        v.ln()
    }
}

/// `<[G_m], f>` for a rational function.
pub fn pair_rational(params: &ParameterSet, m: i64, f: &FloatRational, spec: &QuadratureSpec) -> Result<IntegralResult> {
    pair_log(params, m, |t| Ok(ln_or_zero(f.eval(t))), &f.pole_locations(), spec)
}

/// `<[G_m], w_j>`.
pub fn theta_entry(params: &ParameterSet, m: i64, j: usize, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let poles: Vec<Complex> = params.z()[..j].iter().zip(params.a()).map(|(z, a)| z + a).collect();
    pair_log(params, m, |t| Ok(ln_or_zero(weight_w(j, t, params)?)), &poles, spec)
}

/// Residual of `<[G_m], f> = sum_j c_j <[G_m], w_j>`, which is the pairing
/// of the certificate image `D_p g`, relative to the largest term. Returns
/// `(residual, propagated estimate)`.
pub fn certificate_residual(params: &ParameterSet, m: i64, f: &FloatRational, coords: &[Complex], spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let lhs = pair_rational(params, m, f, spec)?;
    let terms: Vec<(Complex, IntegralResult)> = coords
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(j, c)| Ok((*c, theta_entry(params, m, j + 1, spec)?)))
        .collect::<Result<_>>()?;
    let scale = terms.iter().map(|(_, r)| r.log_scale).fold(lhs.log_scale, f64::max);
    let to_scale = |r: &IntegralResult| (r.log_scale - scale).exp();
    let mut rhs = Complex::new(0.0, 0.0);
    let mut denom = lhs.value_at_scale(scale).norm();
    let mut err = lhs.error_estimate * to_scale(&lhs);
    for (c, r) in &terms {
        let v = c * r.value_at_scale(scale);
        rhs += v;
        denom = denom.max(v.norm());
        err += c.norm() * r.error_estimate * to_scale(r);
    }
    if denom == 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok(((lhs.value_at_scale(scale) - rhs).norm() / denom, err / denom))
}

/// `Theta[m][j] = <[G_{m+1}], w_{j+1}>`, entries as separate integrals.
#[derive(Clone, Debug)]
pub struct SolutionMatrix {
    pub params: ParameterSet,
    pub entries: Vec<Vec<IntegralResult>>,
    pub warnings: Vec<String>,
}

pub fn theta(params: &ParameterSet, spec: &QuadratureSpec) -> Result<SolutionMatrix> {
    params.check_separation()?;
    let k = params.n() - 1;
    if k == 0 {
        return Err(Error::Domain("Theta needs n >= 2".into()));
    }
    let flat: Result<Vec<IntegralResult>> = (0..k * k)
        .into_par_iter()
        .map(|idx| theta_entry(params, (idx / k + 1) as i64, idx % k + 1, spec))
        .collect();
    let flat = flat?;
    let entries: Vec<Vec<IntegralResult>> = flat.chunks(k).map(<[IntegralResult]>::to_vec).collect();
    let mut out = SolutionMatrix { params: params.clone(), entries, warnings: Vec::new() };
    let cond = out.condition_number();
    if !(cond <= CONDITION_WARNING) {
        out.warnings.push(format!("ConditioningWarning: condition number {cond:e} exceeds {CONDITION_WARNING:e}"));
    }
    Ok(out)
}

impl SolutionMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// `log` of the largest entry modulus of each row.
    pub fn row_scales(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| e.log_scale + e.value.norm().ln()).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// Entries divided by `e^{row_scale}`.
    pub fn normalized(&self) -> (DMatrix<Complex>, Vec<f64>) {
        let scales = self.row_scales();
        let k = self.dim();
        let m = DMatrix::from_fn(k, k, |i, j| self.entries[i][j].value_at_scale(scales[i]));
        (m, scales)
    }

    /// Entry errors relative to each row's size, at the row scale.
    pub fn row_errors(&self) -> Vec<f64> {
        let scales = self.row_scales();
        self.entries
            .iter()
            .zip(&scales)
            .map(|(row, s)| row.iter().map(|e| e.error_estimate * (e.log_scale - s).exp()).sum())
            .collect()
    }

    pub fn condition_number(&self) -> f64 {
        let (m, _) = self.normalized();
        let sv = m.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// `log det Theta` from the LU pivots of the row-normalised matrix.
    pub fn log_det(&self) -> Complex {
        let (m, scales) = self.normalized();
        let lu = m.lu();
        let sign: Complex = lu.p().determinant();
        let mut acc = sign.ln();
        for d in lu.u().diagonal().iter() {
            acc += d.ln();
        }
        acc + scales.iter().sum::<f64>()
    }

    /// First-order relative error bound for the determinant.
    pub fn det_rel_error(&self) -> f64 {
        let (m, _) = self.normalized();
        let rows: f64 = self
            .row_errors()
            .iter()
            .enumerate()
            .map(|(i, e)| e / m.row(i).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .sum();
        rows * self.condition_number()
    }

    pub fn quadrature_info(&self) -> QuadratureInfo {
        let mut q = QuadratureInfo::default();
        for e in self.entries.iter().flatten() {
            q.absorb(e);
        }
        q.est_error = self.det_rel_error();
        q
    }

    /// Entry `(m, j)` (1-based) as a complex number.
    pub fn value(&self, m: usize, j: usize) -> Complex {
        self.entries[m - 1][j - 1].scaled_value()
    }
}

/// Log of the closed form for `det((2 a_l / p) Theta)`:
/// `e^{(n-1) pi i sum z / p} (2 pi i)^{n(n-1)/2} prod Gamma(2a_j/p + 1) / Gamma(2 sum a / p + 1)`
/// `* prod_{l<m} Gamma(1 + (z_m + a_m - z_l + a_l)/p) Gamma((z_l + a_l - z_m + a_m)/p)`.
pub fn qdet_rhs(params: &ParameterSet) -> Result<Complex> {
    let n = params.n();
    let (z, a, p) = (params.z(), params.a(), params.p());
    let sum_z: Complex = z.iter().sum();
    let sum_a: Complex = a.iter().sum();
    let mut acc = Complex::new(0.0, PI) * (n as f64 - 1.0) * sum_z / p;
    acc += Complex::new(0.0, 2.0 * PI).ln() * ((n * (n - 1) / 2) as f64);
    for aj in a {
        acc += log_gamma(2.0 * aj / p + 1.0)?;
    }
    acc -= log_gamma(2.0 * sum_a / p + 1.0)?;
    for l in 0..n {
        for m in l + 1..n {
            acc += log_gamma(1.0 + (z[m] + a[m] - z[l] + a[l]) / p)?;
            acc += log_gamma((z[l] + a[l] - z[m] + a[m]) / p)?;
        }
    }
    Ok(acc)
}

pub fn qdet_lhs(theta: &SolutionMatrix) -> Complex {
    let params = &theta.params;
    let scale: Complex = params.a()[..params.n() - 1].iter().map(|a| (2.0 * a / params.p()).ln()).sum();
    theta.log_det() + scale
}

pub fn qdet_check(params: &ParameterSet, spec: &QuadratureSpec, tol: f64) -> Result<Report> {
    let th = theta(params, spec)?;
    let mut report = Report::new("qdet", params.n(), Some(params)).compare_logs(qdet_lhs(&th), qdet_rhs(params)?, tol, Some(th.quadrature_info()));
    report.notes.extend(th.warnings.iter().cloned());
    Ok(report)
}

/// `log(2 pi i Gamma(a+c) Gamma(a+d) Gamma(b+c) Gamma(b+d) / Gamma(a+b+c+d))`.
pub fn barnes_rhs(a: Complex, b: Complex, c: Complex, d: Complex) -> Result<Complex> {
    Ok(Complex::new(0.0, 2.0 * PI).ln() + log_gamma(a + c)? + log_gamma(a + d)? + log_gamma(b + c)? + log_gamma(b + d)?
        - log_gamma(a + b + c + d)?)
}

/// `int_{-i inf}^{i inf} Gamma(a+t) Gamma(b+t) Gamma(c-t) Gamma(d-t) dt` along
/// `t = i s`.
pub fn barnes_lhs(a: Complex, b: Complex, c: Complex, d: Complex, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let args = [a, b, c, d];
    if let Some(bad) = args.iter().find(|w| !(w.re > 0.0)) {
        return Err(Error::Domain(format!("Re {bad} <= 0: the imaginary axis does not separate the pole families")));
    }
    let reach = 3.0 + args.iter().map(|w| w.im.abs()).fold(0.0, f64::max);
    let resolution = args.iter().map(|w| w.re).fold(f64::INFINITY, f64::min).min(1.0);
    let log_f = |s: f64| -> Result<Complex> {
        let is = Complex::new(0.0, s);
        Ok(log_gamma(a + is)? + log_gamma(b + is)? + log_gamma(c - is)? + log_gamma(d - is)?)
    };
    integrate_real_line(log_f, (2.0 * PI, 2.0 * PI), LineWindow { lo: -reach, hi: reach, resolution }, spec)
}

pub fn barnes_check(a: Complex, b: Complex, c: Complex, d: Complex, spec: &QuadratureSpec, tol: f64) -> Result<Report> {
    let lhs = barnes_lhs(a, b, c, d, spec)?;
    // dt = i ds
    let log_lhs = lhs.log_value() + Complex::new(0.0, PI / 2.0);
    let mut q = QuadratureInfo::default();
    q.absorb(&lhs);
    Ok(Report::new("barnes", 2, None)
        .compare_logs(log_lhs, barnes_rhs(a, b, c, d)?, tol, Some(q))
        .note(format!("a={a}, b={b}, c={c}, d={d}")))
}

/// `Psi_l = int_{z_m}^{z_{m+1}} Phi dt / (t - z_l)` for `l = 1..n`, with the
/// branch of [`crate::master::log_phi_classical`].
pub fn classical_solution(params: &ParameterSet, cycle: IntervalCycle, spec: &QuadratureSpec) -> Result<Vec<IntegralResult>> {
    let n = params.n();
    let m = cycle.m;
    if m == 0 || m >= n {
        return Err(Error::Domain(format!("interval index m = {m} outside 1..{n}")));
    }
    let z: Vec<f64> = params.z().iter().map(|z| z.re).collect();
    let alpha = params.alpha();
    let (lo, hi) = (z[m - 1], z[m]);
    // constant phase: arg(t - z_k) = pi for every k > m
    let phase: Complex = alpha[m..].iter().map(|a| a * Complex::new(0.0, PI)).sum();
    (1..=n)
        .map(|ell| {
            let exps = (
                alpha[m - 1] - if ell == m { 1.0 } else { 0.0 },
                alpha[m] - if ell == m + 1 { 1.0 } else { 0.0 },
            );
            let f = |node: IntervalNode| -> Result<Complex> {
                let mut log = phase;
                for (k, (zk, ak)) in z.iter().zip(&alpha).enumerate() {
                    let dist = if k == m - 1 {
                        node.from_lo
                    } else if k == m {
                        node.from_hi
                    } else {
                        (node.t - zk).abs()
                    };
                    log += ak * dist.ln();
                }
                let denom = if ell == m {
                    node.from_lo
                } else if ell == m + 1 {
                    -node.from_hi
                } else {
                    node.t - z[ell - 1]
                };
                Ok(log.exp() / denom)
            };
            integrate_interval(f, lo, hi, exps, spec)
        })
        .collect()
}

/// `log |RHS|` and `arg RHS` (principal branches) of
/// `prod Gamma(alpha_j + 1) / Gamma(sum alpha + 1) prod_{i != j} (z_i - z_j)^{alpha_j}`.
pub fn classical_det_rhs(params: &ParameterSet) -> Result<Complex> {
    let alpha = params.alpha();
    let z = params.z();
    let mut acc = -log_gamma(alpha.iter().sum::<Complex>() + 1.0)?;
    for a in &alpha {
        acc += log_gamma(a + 1.0)?;
    }
    for i in 0..z.len() {
        for j in 0..z.len() {
            if i != j {
                acc += alpha[j] * (z[i] - z[j]).ln();
            }
        }
    }
    Ok(acc)
}

/// Modulus comparison of `det((alpha_l) int_{gamma_m} Phi dt/(t - z_l))`
/// (rows `m`, columns `l`, both `< n`) with the closed form. The phase
/// difference is recorded as a note.
pub fn classical_det_check(params: &ParameterSet, spec: &QuadratureSpec, tol: f64) -> Result<Report> {
    let n = params.n();
    let alpha = params.alpha();
    if let Some(a) = alpha.iter().find(|a| !(a.re > 0.0)) {
        return Err(Error::Domain(format!("classical determinant needs Re alpha > 0, got {a}")));
    }
    let k = n - 1;
    let rows: Result<Vec<Vec<IntegralResult>>> = (1..n).map(|m| classical_solution(params, IntervalCycle { m }, spec)).collect();
    let rows = rows?;
    let mat = DMatrix::from_fn(k, k, |m, l| alpha[l] * rows[m][l].value);
    let det = mat.determinant();
    let mut q = QuadratureInfo::default();
    for e in rows.iter().flat_map(|r| &r[..k]) {
        q.absorb(e);
    }
    let sv = mat.singular_values();
    q.est_error *= sv.max() / sv.min();
    let rhs = classical_det_rhs(params)?;
    let lhs = det.ln();
    let mut report = Report::new("classical-det", n, Some(params));
    report.lhs = Some(lhs.into());
    report.rhs = Some(rhs.into());
    report.abs_err = (lhs.re - rhs.re).abs();
    report.rel_err = (lhs.re - rhs.re).exp_m1().abs();
    let phase = crate::complexfn::wrap_phase(lhs.im - rhs.im);
    Ok(report.finish(tol, Some(q)).note(format!("modulus compared; phase difference {phase:.6} under the declared branch")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn barnes_examples() {
        let h = c(0.5, 0.0);
        let r = barnes_check(h, h, h, h, &spec(), 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
        // both sides equal 2 pi i
        let rhs = r.rhs.unwrap();
        assert!((rhs.log_abs - (2.0 * PI).ln()).abs() < 1e-13 && (rhs.arg - PI / 2.0).abs() < 1e-13);
        let one = c(1.0, 0.0);
        let r = barnes_check(one, one, one, one, &spec(), 1e-8).unwrap();
        assert!(r.pass);
        assert!((r.rhs.unwrap().log_abs - (2.0 * PI / 6.0).ln()).abs() < 1e-13);
        assert!(matches!(barnes_lhs(c(0.0, 1.0), one, one, one, &spec()), Err(Error::Domain(_))));
    }

    #[test]
    fn divergence_outside_window() {
        let params = ParameterSet::contour_domain(&[0.0, 1.0, 2.5], &[1.2, 1.5, 1.3], 1.0, c(2.0, 0.0)).unwrap();
        for m in [-1, 0, 3, 4] {
            assert!(matches!(theta_entry(&params, m, 1, &spec()), Err(Error::DivergentIntegral { .. })), "m = {m}");
        }
        for m in [1, 2] {
            assert!(theta_entry(&params, m, 1, &spec()).is_ok());
        }
    }

    #[test]
    fn n2_entry_matches_closed_form() {
        let params = ParameterSet::contour_domain(&[0.0, 0.7], &[1.3, 1.6], 1.0, c(2.0, 0.0)).unwrap();
        let r = qdet_check(&params, &spec(), 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn classical_euler_beta() {
        let two = |a0: f64, a1: f64| {
            ParameterSet::new(vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(a0, 0.0), c(a1, 0.0)], c(0.0, 1.0), c(1.0, 0.0)).unwrap()
        };
        // Euler case alpha = (1, 1): alpha_1 Psi_1 = B(1, 2) = 1/2 up to the branch phase e^{i pi}
        let params = two(1.0, 1.0);
        let psi = classical_solution(&params, IntervalCycle { m: 1 }, &spec()).unwrap();
        assert!((psi[0].value - c(-0.5, 0.0)).norm() < 1e-12);
        let r = classical_det_check(&params, &spec(), 1e-10).unwrap();
        assert!(r.pass, "{r:?}");
        // alpha = (a + 1, b - 1), a = 1/2, b = 3/2: Psi_1 = e^{i pi/2} B(a + 1, b) = i pi/8
        let params = two(1.5, 0.5);
        let psi = classical_solution(&params, IntervalCycle { m: 1 }, &spec()).unwrap();
        assert!((psi[0].value - c(0.0, PI / 8.0)).norm() < 1e-10);
        // non-integrable component
        assert!(matches!(classical_solution(&two(1.0, 0.0), IntervalCycle { m: 1 }, &spec()), Err(Error::Domain(_))));
        // only a / kappa enters
        let scaled = ParameterSet::new(vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(3.0, 0.0), c(1.0, 0.0)], c(0.0, 1.0), c(2.0, 0.0)).unwrap();
        let psi2 = classical_solution(&scaled, IntervalCycle { m: 1 }, &spec()).unwrap();
        assert!((psi2[0].value - psi[0].value).norm() < 1e-12);
    }

    #[test]
    fn classical_n3_modulus() {
        let params = ParameterSet::new(
            vec![c(0.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)],
            vec![c(1.0 / 3.0, 0.0), c(0.5, 0.0), c(0.25, 0.0)],
            c(0.0, 1.0),
            c(1.0, 0.0),
        )
        .unwrap();
        let r = classical_det_check(&params, &spec(), 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
