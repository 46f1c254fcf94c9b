//! The qKZ difference system: cross-validation of `Theta` against the exact
//! connection matrices, flatness, R-matrix tooling, and continuum limits.

pub mod limits;
pub mod rmatrix;

use nalgebra::DMatrix;
use num::Zero;
use rayon::prelude::*;

use crate::complexfn::Complex;
use crate::contour::QuadratureSpec;
use crate::error::{Error, Result};
use crate::homology::{theta, SolutionMatrix};
use crate::reduction::{beta_matrix, ExactMatrix, ExactParams};
use crate::report::{QuadratureInfo, Report};

pub use limits::{gm_limit_check, kz_limit_fit, scalar_limit_check, w_limit_check, KzFit, LimitSweep};
pub use rmatrix::{assemble_k, yang_baxter_check, FlipR, IdentityR, RProvider, YangR};

/// Residual of `Theta(z + p e_ell) = Theta(z) beta_ell(z)`:
/// `(residual, reference norm, propagated error)`, all at a common scale.
pub fn qkz_residual(base: &SolutionMatrix, shifted: &SolutionMatrix, beta: &DMatrix<Complex>) -> (f64, f64, f64) {
    let (nb, sb) = base.normalized();
    let top = sb.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let k = base.dim();
    let weights: Vec<f64> = sb.iter().map(|s| (s - top).exp()).collect();
    let predicted = &nb * beta;
    let base_err = base.row_errors();
    let mut res = 0.0;
    let mut norm = 0.0;
    let mut err = 0.0;
    let beta_norm = beta.norm();
    for m in 0..k {
        for j in 0..k {
            let direct = shifted.entries[m][j].value_at_scale(sb[m]);
            res += ((direct - predicted[(m, j)]) * weights[m]).norm_sqr();
            norm += (nb[(m, j)] * weights[m]).norm_sqr();
            err += shifted.entries[m][j].error_estimate * (shifted.entries[m][j].log_scale - sb[m]).exp() * weights[m];
        }
        err += base_err[m] * beta_norm * weights[m];
    }
    (res.sqrt(), norm.sqrt(), err)
}

/// Checks the difference equation in direction `ell` with two independent
/// quadratures. `base` may carry a precomputed `Theta(z)`.
pub fn verify_qkz(params: &ExactParams, ell: usize, spec: &QuadratureSpec, tol: f64, base: Option<&SolutionMatrix>) -> Result<Report> {
    params.check_contour_domain()?;
    let float = params.to_parameter_set()?;
    let shifted_params = params.shifted(ell, 1).to_parameter_set()?;
    shifted_params.check_separation().map_err(|e| {
        Error::Domain(format!("shifted point leaves the contour domain (needs Im a_l > Im p): {e}"))
    })?;
    let beta = beta_matrix(params, ell)?;
    let owned;
    let base = match base {
        Some(b) => b,
        None => {
            owned = theta(&float, spec)?;
            &owned
        }
    };
    let shifted = theta(&shifted_params, spec)?;
    let (res, norm, err) = qkz_residual(base, &shifted, &beta.to_complex());
    let mut report = Report::new(&format!("qkz[ell={ell}]"), params.n(), Some(&float));
    report.lhs = Some(Complex::new(norm.ln(), 0.0).into());
    report.rhs = Some(Complex::new(res.ln(), 0.0).into());
    report.rel_err = res / norm;
    report.abs_err = res;
    let mut q = QuadratureInfo::default();
    for e in base.entries.iter().chain(&shifted.entries).flatten() {
        q.absorb(e);
    }
    q.est_error = err / norm;
    Ok(report.finish(tol, Some(q)).note("lhs = log ||Theta(z)||, rhs = log ||Theta(z+p e_ell) - Theta(z) beta_ell|| (common scale)"))
}

pub fn verify_qkz_all(params: &ExactParams, spec: &QuadratureSpec, tol: f64) -> Result<Vec<Report>> {
    let base = theta(&params.to_parameter_set()?, spec)?;
    (1..=params.n()).into_par_iter().map(|ell| verify_qkz(params, ell, spec, tol, Some(&base))).collect()
}

/// `beta_ell(z) beta_m(z + p e_ell) - beta_m(z) beta_ell(z + p e_m)`.
pub fn flatness_defect(params: &ExactParams, ell: usize, m: usize) -> Result<ExactMatrix> {
    let lhs = &beta_matrix(params, ell)?.entries * &beta_matrix(&params.shifted(ell, 1), m)?.entries;
    let rhs = &beta_matrix(params, m)?.entries * &beta_matrix(&params.shifted(m, 1), ell)?.entries;
    Ok(lhs.sub(&rhs))
}

/// The same identity with the factors in the opposite order,
/// `beta_m(z + p e_ell) beta_ell(z) - beta_ell(z + p e_m) beta_m(z)`.
pub fn flatness_defect_reversed(params: &ExactParams, ell: usize, m: usize) -> Result<ExactMatrix> {
    let lhs = &beta_matrix(&params.shifted(ell, 1), m)?.entries * &beta_matrix(params, ell)?.entries;
    let rhs = &beta_matrix(&params.shifted(m, 1), ell)?.entries * &beta_matrix(params, m)?.entries;
    Ok(lhs.sub(&rhs))
}

/// Exact flatness over all pairs `ell < m`. `rel_err` is 0 on exact
/// equality and 1 otherwise; the offending pair and entry are noted.
pub fn flatness_check(params: &ExactParams) -> Result<Report> {
    let n = params.n();
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|l| (l + 1..=n).map(move |m| (l, m))).collect();
    let defects: Result<Vec<(ExactMatrix, ExactMatrix)>> = pairs
        .par_iter()
        .map(|&(l, m)| Ok((flatness_defect(params, l, m)?, flatness_defect_reversed(params, l, m)?)))
        .collect();
    let defects = defects?;
    let float = params.to_parameter_set().ok();
    let mut report = Report::new("flatness", n, float.as_ref());
    let mut reversed_holds = true;
    for ((l, m), (d, rev)) in pairs.iter().zip(&defects) {
        if !d.is_zero() {
            let (i, j) = (0..d.rows()).flat_map(|i| (0..d.cols()).map(move |j| (i, j))).find(|&(i, j)| !d[(i, j)].is_zero()).unwrap();
            report.rel_err = 1.0;
            report.notes.push(format!("pair ({l}, {m}): entry ({}, {}) differs by {}", i + 1, j + 1, d[(i, j)]));
        }
        reversed_holds &= rev.is_zero();
    }
    report.notes.push(format!("{} pairs checked exactly", pairs.len()));
    report.notes.push(format!(
        "reversed product order beta_m(z+p e_l) beta_l(z) = beta_l(z+p e_m) beta_m(z): {}",
        if reversed_holds { "also holds" } else { "does not hold" }
    ));
    Ok(report.finish(0.0, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flatness_exact_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=3 {
            let params = ExactParams::random_generic(n, &mut rng);
            let r = flatness_check(&params).unwrap();
            assert!(r.pass && r.rel_err == 0.0, "{r:?}");
        }
    }

    #[test]
    fn qkz_n2() {
        let g = |s: &str| s.parse().unwrap();
        let params = ExactParams::from_imag(vec![g("0"), g("7/10")], vec![g("13/10"), g("8/5")], g("1"), g("2")).unwrap();
        for ell in 1..=2 {
            let r = verify_qkz(&params, ell, &QuadratureSpec::default(), 1e-6, None).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn qkz_rejects_small_weights() {
        let g = |s: &str| s.parse().unwrap();
        let params = ExactParams::from_imag(vec![g("0"), g("7/10")], vec![g("4/5"), g("8/5")], g("1"), g("2")).unwrap();
        assert!(matches!(verify_qkz(&params, 1, &QuadratureSpec::default(), 1e-6, None), Err(Error::Domain(_))));
    }
}
