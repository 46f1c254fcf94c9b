//! Suite driver: runs the selected checks on configured or seeded parameters
//! and assembles the report bundle.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexfn::Complex;
use crate::config::{CheckKind, RunConfig};
use crate::contour::QuadratureSpec;
use crate::error::{Error, Result};
use crate::homology::{barnes_check, certificate_residual, classical_det_check, qdet_check};
use crate::master::ParameterSet;
use crate::qkz::limits::DEFAULT_S;
use crate::qkz::{flatness_check, gm_limit_check, kz_limit_fit, scalar_limit_check, verify_qkz_all, w_limit_check};
use crate::reduction::discrete::sample::random_element;
use crate::reduction::gaussian::G;
use crate::reduction::{ExactParams, RationalFunction, Reducer};
use crate::report::{emit_csv, QuadratureInfo, Report};

pub const QDET_TOL: f64 = 1e-6;
pub const QKZ_TOL: f64 = 1e-6;
pub const BARNES_TOL: f64 = 1e-8;
pub const CERTIFICATE_TOL: f64 = 1e-6;
pub const KZ_FIT_TOL: f64 = 1e-3;

/// Tolerance of the classical determinant: `1e-10` for `n = 2`, `1e-8` above.
pub fn classical_tol(n: usize) -> f64 {
    if n == 2 {
        1e-10
    } else {
        1e-8
    }
}

/// Barnes quadruples `(a, b, c, d)`, all with positive real parts.
pub fn barnes_cases() -> Vec<[Complex; 4]> {
    let r = |x: f64| Complex::new(x, 0.0);
    vec![
        [r(0.5), r(0.5), r(0.5), r(0.5)],
        [r(1.0), r(1.0), r(1.0), r(1.0)],
        [r(0.3), r(0.7), r(1.2), r(0.9)],
        [Complex::new(1.0, 0.5), r(0.8), Complex::new(0.6, -0.2), r(1.1)],
        [r(2.0), r(0.5), r(1.5), r(0.25)],
    ]
}

/// The bundle of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub seed: u64,
    pub reports: Vec<Report>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub check: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub total: usize,
    pub passed: usize,
    pub pass: bool,
    pub checks: Vec<SummaryEntry>,
}

impl SuiteOutcome {
    /// Logical AND of every `pass` field.
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }

    pub fn summary(&self) -> Summary {
        Summary {
            seed: self.seed,
            total: self.reports.len(),
            passed: self.reports.iter().filter(|r| r.pass).count(),
            pass: self.pass(),
            checks: self.reports.iter().map(|r| SummaryEntry { check: r.check.clone(), pass: r.pass }).collect(),
        }
    }

    /// One JSON file per report, `summary.json` and `reports.csv`.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, r) in self.reports.iter().enumerate() {
            let name: String = r.check.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
            std::fs::write(dir.join(format!("{i:03}-{name}.json")), to_json(r)?)?;
        }
        std::fs::write(dir.join("summary.json"), to_json(&self.summary())?)?;
        std::fs::write(dir.join("reports.csv"), emit_csv(&self.reports))?;
        Ok(())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| Error::Io(e.to_string()))
}

/// A failed check recorded as a report.
fn error_report(check: &str, n: usize, params: Option<&ParameterSet>, err: &Error) -> Report {
    let mut r = Report::new(check, n, params);
    r.pass = false;
    r.rel_err = f64::INFINITY;
    r.note(format!("error: {err}"))
}

/// Per-check deterministic generator.
fn rng_for(seed: u64, kind: CheckKind) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ ((kind as u64 + 1) << 32))
}

struct Context<'a> {
    cfg: &'a RunConfig,
    n: usize,
    params: Option<ExactParams>,
}

impl Context<'_> {
    fn spec(&self) -> &QuadratureSpec {
        &self.cfg.quadrature
    }

    /// Configured parameters, or seeded ones with `Im a_l > min_ratio Im p`.
    fn domain_params(&self, kind: CheckKind, min_ratio: f64) -> ExactParams {
        self.params.clone().unwrap_or_else(|| ExactParams::random_domain(self.n, min_ratio, &mut rng_for(self.cfg.seed, kind)))
    }
}

/// Runs the selected checks on a worker pool and returns the reports in
/// selection order. Check failures become failing reports.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let params = cfg.exact_params()?;
    if let Some(p) = &params {
        p.check_contour_domain().map_err(|e| Error::Config(e.to_string()))?;
    }
    let n = cfg.dimension().unwrap_or(2);
    if n < 2 {
        return Err(Error::Config(format!("n must be at least 2, got {n}")));
    }
    let ctx = Context { cfg, n, params };
    let reports: Vec<Vec<Report>> = cfg.suite.par_iter().map(|&kind| run_check(&ctx, kind)).collect();
    Ok(SuiteOutcome { seed: cfg.seed, reports: reports.into_iter().flatten().collect() })
}

fn run_check(ctx: &Context, kind: CheckKind) -> Vec<Report> {
    let n = ctx.n;
    match kind {
        CheckKind::Barnes => barnes_cases()
            .into_par_iter()
            .map(|[a, b, c, d]| barnes_check(a, b, c, d, ctx.spec(), BARNES_TOL).unwrap_or_else(|e| error_report("barnes", 2, None, &e)))
            .collect(),
        CheckKind::Qdet => {
            let params = ctx.domain_params(kind, 1.1);
            vec![params
                .to_parameter_set()
                .and_then(|p| qdet_check(&p, ctx.spec(), QDET_TOL))
                .unwrap_or_else(|e| error_report("qdet", n, params.to_parameter_set().ok().as_ref(), &e))]
        }
        CheckKind::ClassicalDet => {
            let params = ctx.domain_params(kind, 0.2);
            let run = || -> Result<Report> {
                let p = params.with_kappa(params.p() / &G::from(2))?.to_parameter_set()?;
                classical_det_check(&p, ctx.spec(), classical_tol(n))
            };
            vec![run().unwrap_or_else(|e| error_report("classical-det", n, None, &e))]
        }
        CheckKind::Qkz => {
            let params = ctx.domain_params(kind, 1.1);
            verify_qkz_all(&params, ctx.spec(), QKZ_TOL).unwrap_or_else(|e| vec![error_report("qkz", n, params.to_parameter_set().ok().as_ref(), &e)])
        }
        CheckKind::Flatness => {
            let params = ctx.params.clone().unwrap_or_else(|| ExactParams::random_generic(n, &mut rng_for(ctx.cfg.seed, kind)));
            vec![flatness_check(&params).unwrap_or_else(|e| error_report("flatness", n, None, &e))]
        }
        CheckKind::Limits => {
            let params = ctx.domain_params(kind, 1.1);
            limit_reports(&params, ctx.spec()).unwrap_or_else(|e| vec![error_report("limits", n, params.to_parameter_set().ok().as_ref(), &e)])
        }
        CheckKind::ReductionRoundtrip => {
            let params = ctx.params.clone().unwrap_or_else(|| ExactParams::random_domain(n, 2.2, &mut rng_for(ctx.cfg.seed, kind)));
            let mut rng = rng_for(ctx.cfg.seed ^ 1, kind);
            vec![reduction_roundtrip(&params, ctx.spec(), &mut rng)
                .unwrap_or_else(|e| error_report("reduction-roundtrip", n, params.to_parameter_set().ok().as_ref(), &e))]
        }
    }
}

/// Three base configurations `Z_k + c k^2 / 10`, `c = 0, 1, 2`.
pub fn kz_configs(z: &[G]) -> Vec<Vec<G>> {
    (0..3)
        .map(|c| z.iter().enumerate().map(|(k, zk)| zk + &G::from_frac((c * k * k) as i64, 10)).collect())
        .collect()
}

/// Every continuum-limit check at the given base point.
pub fn limit_reports(params: &ExactParams, spec: &QuadratureSpec) -> Result<Vec<Report>> {
    let n = params.n();
    let template = params.with_kappa(G::from(2))?.to_parameter_set()?;
    let zf: Vec<f64> = template.z().iter().map(|z| z.re).collect();
    let t_grid: Vec<f64> = (0..=n).map(|k| zf[0] - 0.5 + k as f64 * (zf[n - 1] - zf[0] + 1.0) / n as f64 + 0.13).collect();
    let mut reports = Vec::new();
    for j in 1..=n {
        reports.push(w_limit_check(&template, j, &DEFAULT_S, &t_grid)?);
    }
    let s_int: Vec<u32> = DEFAULT_S.iter().map(|&s| s as u32).collect();
    let fit = kz_limit_fit(&kz_configs(params.z()), params.a(), params.p(), &s_int, KZ_FIT_TOL)?;
    reports.push(fit.report(&s_int, Some(&template)));
    reports.push(gm_limit_check(&template, 1, 1, n, &DEFAULT_S, spec)?);
    let samples = [Complex::new(0.3, 0.0), Complex::new(-2.1, 0.4), Complex::new(5.5, -0.2)];
    reports.push(scalar_limit_check(template.a()[0], template.p(), &samples, 1.3, &DEFAULT_S)?);
    Ok(reports)
}

/// Largest depth `d` with `min Im a_l > (d + 1) Im p`, so that poles of
/// depth `<= d` stay off the integration strip.
pub fn pairing_depth(params: &ExactParams) -> Option<u32> {
    let pf = params.p().to_complex().im;
    let amin = params.a().iter().map(|a| a.to_complex().im).fold(f64::INFINITY, f64::min);
    let d = (amin / pf - 1.0).ceil() - 1.0;
    (d >= 0.0).then_some(d as u32)
}

/// Exact round trips of the reduction and the numerical pairing of the
/// certificates.
pub fn reduction_roundtrip<R: rand::Rng + ?Sized>(params: &ExactParams, spec: &QuadratureSpec, rng: &mut R) -> Result<Report> {
    let n = params.n();
    let reducer = Reducer::new(params)?;
    let float = params.to_parameter_set()?;
    let mut report = Report::new("reduction-roundtrip", n, Some(&float));
    let mut exact_ok = true;
    for (j, w) in reducer.weights()[..n - 1].iter().enumerate() {
        let class = reducer.reduce(w)?;
        let unit = (0..n - 1).all(|k| class.coords[k] == if k == j { G::from(1) } else { G::from(0) });
        exact_ok &= unit && class.certificate.is_zero();
    }
    let mut images_ok = 0;
    for _ in 0..100 {
        let g = random_element(params, 3, 3, 2, rng);
        let class = reducer.reduce(&reducer.apply_dp(&g)?)?;
        if class.coords.iter().all(|c| *c == G::from(0)) {
            images_ok += 1;
        }
    }
    exact_ok &= images_ok == 100;
    report.notes.push(format!("reduce(w_j) = e_j for all j; reduce(D_p g) = 0 for {images_ok}/100 random g"));

    let depth = pairing_depth(params);
    let mut worst: f64 = 0.0;
    let mut q = QuadratureInfo::default();
    let mut verified = 0;
    for _ in 0..n + 3 {
        let f: RationalFunction = random_element(params, 3, depth.unwrap_or(0), 2, rng);
        let class = reducer.reduce(&f)?;
        if class.verify(&f, &reducer) {
            verified += 1;
        }
        if depth.is_some() {
            let coords: Vec<Complex> = class.coords.iter().map(G::to_complex).collect();
            for m in 1..n as i64 {
                let (res, est) = certificate_residual(&float, m, &f.to_float(), &coords, spec)?;
                worst = worst.max(res);
                q.est_error = q.est_error.max(est);
            }
        }
    }
    exact_ok &= verified == n + 3;
    report.notes.push(format!("{verified}/{} random elements reduced with exact certificates", n + 3));
    match depth {
        Some(d) => report.notes.push(format!("certificate pairings at pole depth <= {d}")),
        None => report.notes.push("Im a_l <= Im p: certificate pairings skipped".to_string()),
    }
    report.rel_err = worst;
    report.abs_err = worst;
    let mut report = report.finish(CERTIFICATE_TOL, Some(q));
    report.pass &= exact_ok;
    Ok(report)
}

/// Runs the suite and writes the bundle to the configured output directory.
pub fn run_and_write(cfg: &RunConfig) -> Result<SuiteOutcome> {
    let outcome = run_suite(cfg)?;
    if let Some(dir) = &cfg.output {
        outcome.write_bundle(dir)?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_passes() {
        let out = run_suite(&RunConfig::parse("suite =").unwrap()).unwrap();
        assert!(out.reports.is_empty());
        assert_eq!(out.exit_code(), 0);
    }

    #[test]
    fn barnes_suite_passes() {
        let out = run_suite(&RunConfig::parse("suite = barnes").unwrap()).unwrap();
        assert_eq!(out.reports.len(), 5);
        assert!(out.pass(), "{:?}", out.reports);
    }

    #[test]
    fn malformed_z_is_config_error() {
        assert!(matches!(RunConfig::parse("z = 0, 1;2\nsuite = qdet"), Err(Error::Config(_))));
        let cfg = RunConfig::parse("z = 1, 0\na_imag = 2, 2\np_imag = 1\nsuite = qdet").unwrap();
        assert!(matches!(run_suite(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn pairing_depth_rule() {
        let g = |s: &str| -> G { s.parse().unwrap() };
        let p = |a: &str| ExactParams::from_imag(vec![g("0"), g("1")], vec![g(a), g("5")], g("1"), g("2")).unwrap();
        assert_eq!(pairing_depth(&p("1/2")), None);
        assert_eq!(pairing_depth(&p("3/2")), Some(0));
        assert_eq!(pairing_depth(&p("2")), Some(0));
        assert_eq!(pairing_depth(&p("21/10")), Some(1));
    }

    #[test]
    fn roundtrip_and_flatness_n2() {
        let cfg = RunConfig::parse("n = 2\nsuite = reduction-roundtrip, flatness\nseed = 3").unwrap();
        let out = run_suite(&cfg).unwrap();
        assert!(out.pass(), "{:?}", out.reports);
    }
}
