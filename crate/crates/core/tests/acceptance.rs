//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances are pinned here.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qkz_core::complexfn::{log_gamma, wrap_phase};
use qkz_core::contour::jackson_sum;
use qkz_core::homology::{barnes_check, classical_det_check, qdet_check, qdet_lhs, qdet_rhs, theta, theta_entry};
use qkz_core::qkz::limits::{DEFAULT_S, ORDER_TOL};
use qkz_core::qkz::{flatness_check, gm_limit_check, kz_limit_fit, scalar_limit_check, verify_qkz_all, w_limit_check};
use qkz_core::reduction::gaussian::G;
use qkz_core::suite::{barnes_cases, kz_configs, reduction_roundtrip};
use qkz_core::{Complex, Error, ExactParams, ParameterSet, QuadratureSpec};

const SEED: u64 = 0x5eed_0001;
const BARNES_TOL: f64 = 1e-8;
const BARNES_TIME: Duration = Duration::from_secs(5);
const QDET_TOL: f64 = 1e-6;
const QDET_N4_TIME: Duration = Duration::from_secs(120);
const CLASSICAL_N2_TOL: f64 = 1e-10;
const CLASSICAL_N3_TOL: f64 = 1e-8;
const QKZ_TOL: f64 = 1e-6;
const KZ_FIT_TOL: f64 = 1e-3;
const RECURRENCE_TOL: f64 = 1e-12;
const REFLECTION_TOL: f64 = 1e-10;
const JACKSON_TOL: f64 = 1e-12;
const GAMMA_POINTS: usize = 1000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn g(s: &str) -> G {
    s.parse().unwrap()
}

fn require(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut ok = true;
    for [a, b, cc, d] in barnes_cases() {
        let start = Instant::now();
        let r = barnes_check(a, b, cc, d, &spec, BARNES_TOL).map_err(err)?;
        let dt = start.elapsed();
        ok &= r.pass && r.rel_err <= BARNES_TOL && dt < BARNES_TIME;
        worst = worst.max(r.rel_err);
        slowest = slowest.max(dt);
    }
    // both sides equal 2 pi i at a = b = c = d = 1/2
    let half = qkz_core::homology::barnes_rhs(c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)).map_err(err)?;
    let two_pi_i = c(2.0 * PI, 0.0).ln() + c(0.0, PI / 2.0);
    ok &= (half - two_pi_i).norm() < 1e-13;
    require(ok, format!("5 quadruples, max rel_err {worst:.2e} (tol {BARNES_TOL:.0e}), slowest {:.2}s", slowest.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ok = true;
    let mut worst_mod: f64 = 0.0;
    let mut worst_arg: f64 = 0.0;
    let mut n4_time = Duration::ZERO;
    for n in 2..=4 {
        let start = Instant::now();
        for _ in 0..3 {
            let params = ExactParams::random_domain(n, 1.1, &mut rng).to_parameter_set().map_err(err)?;
            let th = theta(&params, &spec).map_err(err)?;
            let (lhs, rhs) = (qdet_lhs(&th), qdet_rhs(&params).map_err(err)?);
            let dmod = (lhs.re - rhs.re).abs() / rhs.re.abs().max(1.0);
            let darg = wrap_phase(lhs.im - rhs.im).abs();
            worst_mod = worst_mod.max(dmod);
            worst_arg = worst_arg.max(darg);
            ok &= dmod <= QDET_TOL && darg <= QDET_TOL;
            ok &= qdet_check(&params, &spec, QDET_TOL).map_err(err)?.pass;
        }
        if n == 4 {
            n4_time = start.elapsed();
        }
    }
    ok &= n4_time < QDET_N4_TIME;
    require(
        ok,
        format!(
            "n=2,3,4 x 3 points: log-modulus {worst_mod:.2e}, arg {worst_arg:.2e} (tol {QDET_TOL:.0e}); n=4 took {:.1}s",
            n4_time.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let spec = QuadratureSpec::default();
    let kappa = c(1.0, 0.0);
    // Euler beta case: alpha = a
    let p2 = ParameterSet::new(vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.7, 0.0), c(1.6, 0.0)], c(0.0, 1.0), kappa).map_err(err)?;
    let r2 = classical_det_check(&p2, &spec, CLASSICAL_N2_TOL).map_err(err)?;
    let p3 = ParameterSet::new(
        vec![c(-0.4, 0.0), c(0.8, 0.0), c(2.1, 0.0)],
        vec![c(0.6, 0.0), c(1.3, 0.0), c(0.9, 0.0)],
        c(0.0, 1.0),
        kappa,
    )
    .map_err(err)?;
    let r3 = classical_det_check(&p3, &spec, CLASSICAL_N3_TOL).map_err(err)?;
    require(
        r2.pass && r3.pass,
        format!("n=2 rel_err {:.2e} (tol {CLASSICAL_N2_TOL:.0e}), n=3 modulus rel_err {:.2e} (tol {CLASSICAL_N3_TOL:.0e})", r2.rel_err, r3.rel_err),
    )
}

fn criterion_4() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 2..=3 {
        let params = ExactParams::random_domain(n, 1.1, &mut rng);
        for r in verify_qkz_all(&params, &spec, QKZ_TOL).map_err(err)? {
            ok &= r.pass;
            worst = worst.max(r.rel_err);
            count += 1;
        }
    }
    require(ok && count == 5, format!("{count} directions (n=2,3), max residual {worst:.2e} (tol {QKZ_TOL:.0e})"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut ok = true;
    let mut count = 0;
    for n in 2..=4 {
        for _ in 0..5 {
            let params = ExactParams::random_generic(n, &mut rng);
            let r = flatness_check(&params).map_err(err)?;
            ok &= r.pass && r.rel_err == 0.0;
            count += 1;
        }
    }
    require(ok, format!("{count} random Gaussian-rational points (n=2,3,4), all pairs exactly zero"))
}

fn criterion_6() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for n in 2..=3 {
        let params = ExactParams::random_domain(n, 2.2, &mut rng);
        let r = reduction_roundtrip(&params, &spec, &mut rng).map_err(err)?;
        ok &= r.pass;
        worst = worst.max(r.rel_err);
    }
    require(ok, format!("n=2,3: w_j -> e_j, 100 images -> 0, n+3 certificates exact; max pairing residual {worst:.2e} (tol 1e-6)"))
}

fn criterion_7() -> Outcome {
    let spec = QuadratureSpec::default();
    let template = ParameterSet::contour_domain(&[0.0, 1.0, 2.5], &[1.3, 1.6, 1.2], 1.0, c(2.0, 0.0)).map_err(err)?;
    let mut orders = Vec::new();
    let mut ok = true;
    for j in 1..=3 {
        let r = w_limit_check(&template, j, &DEFAULT_S, &[-0.7, 0.4, 1.6, 3.3]).map_err(err)?;
        ok &= r.pass;
        orders.push(-r.slope.unwrap());
    }
    let z = vec![g("0"), g("1"), g("5/2")];
    let a = [g("13/10 i"), g("8/5 i"), g("6/5 i")];
    let s: Vec<u32> = DEFAULT_S.iter().map(|&s| s as u32).collect();
    let fit = kz_limit_fit(&kz_configs(&z), &a, &g("i"), &s, KZ_FIT_TOL).map_err(err)?;
    ok &= fit.report(&s, None).pass && fit.residual <= KZ_FIT_TOL;
    let mut gm_orders = Vec::new();
    for m in 1..=2 {
        let r = gm_limit_check(&template, m, 1, 3, &DEFAULT_S, &spec).map_err(err)?;
        ok &= r.pass;
        gm_orders.push(-r.slope.unwrap());
    }
    let samples = [c(0.3, 0.0), c(-2.1, 0.4), c(5.5, -0.2)];
    let sc = scalar_limit_check(c(0.0, 1.3), c(0.0, 1.0), &samples, 1.3, &DEFAULT_S).map_err(err)?;
    ok &= sc.pass;
    let fmt = |v: &[f64]| v.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(",");
    require(
        ok,
        format!(
            "(a) orders [{}] (b) orders [{}], fit residual {:.1e} (tol {KZ_FIT_TOL:.0e}) (c) orders [{}] (d) order {:.3}; band 1+-{ORDER_TOL}",
            fmt(&orders),
            fmt(&fit.orders),
            fit.residual,
            fmt(&gm_orders),
            -sc.slope.unwrap()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut worst_rec: f64 = 0.0;
    let mut worst_refl: f64 = 0.0;
    for _ in 0..GAMMA_POINTS {
        let w = c(rng.random_range(-6.0..6.0), rng.random_range(-8.0..8.0));
        let rec = log_gamma(w + 1.0).map_err(err)? - log_gamma(w).map_err(err)? - w.ln();
        worst_rec = worst_rec.max(c(rec.re, wrap_phase(rec.im)).norm() / w.norm().ln().abs().max(1.0));
        let lhs = log_gamma(w).map_err(err)? + log_gamma(1.0 - w).map_err(err)?;
        let rhs = (c(PI, 0.0) / (w * PI).sin()).ln();
        let d = lhs - rhs;
        worst_refl = worst_refl.max(c(d.re, wrap_phase(d.im)).norm());
    }
    let mut worst_jackson: f64 = 0.0;
    for _ in 0..100 {
        let p = c(rng.random_range(-1.0..1.0), rng.random_range(0.3..1.5));
        let xi = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (lo, hi) = (rng.random_range(-6..0), rng.random_range(1..6));
        let vals: Vec<Complex> = (lo..=hi).map(|_| c(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3))).collect();
        let gk = |k: i64| if (lo..=hi).contains(&k) { vals[(k - lo) as usize] } else { c(0.0, 0.0) };
        let index = |t: Complex| ((t - xi) / p).re.round() as i64;
        let h = |t: Complex| gk(index(t) + 1) - gk(index(t));
        let scale = p.norm() * (lo - 2..=hi + 2).map(|k| h(xi + p * k as f64).norm()).sum::<f64>();
        worst_jackson = worst_jackson.max(jackson_sum(h, xi, p, lo - 2..=hi + 2).norm() / scale);
    }
    require(
        worst_rec <= RECURRENCE_TOL && worst_refl <= REFLECTION_TOL && worst_jackson <= JACKSON_TOL,
        format!(
            "{GAMMA_POINTS} strip points: recurrence {worst_rec:.1e} (tol {RECURRENCE_TOL:.0e}), reflection {worst_refl:.1e} (tol {REFLECTION_TOL:.0e}); Jackson {worst_jackson:.1e} (tol {JACKSON_TOL:.0e})"
        ),
    )
}

fn criterion_9() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for n in 2..=4 {
        for _ in 0..2 {
            let params = ExactParams::random_domain(n, 1.1, &mut rng).to_parameter_set().map_err(err)?;
            for m in -2..=n as i64 + 1 {
                let result = theta_entry(&params, m, 1, &spec);
                let divergent = matches!(result, Err(Error::DivergentIntegral { .. }));
                let expected = !(1..n as i64).contains(&m);
                cases += 1;
                if divergent != expected || (!expected && result.is_err()) {
                    mismatches.push(format!("n={n} m={m}"));
                }
            }
        }
    }
    require(mismatches.is_empty(), format!("{cases} (n, m, z) cases, mismatches: [{}]", mismatches.join(", ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Barnes integral", criterion_1),
        ("q-determinant", criterion_2),
        ("classical determinant", criterion_3),
        ("qKZ cross-validation", criterion_4),
        ("flatness", criterion_5),
        ("cohomology basis and reduction", criterion_6),
        ("continuum limits", criterion_7),
        ("gamma kernel", criterion_8),
        ("divergence guard", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {}: {tag} {name}: {msg} [{secs:.1}s]", i + 1);
    }
    println!("acceptance: {}/9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
