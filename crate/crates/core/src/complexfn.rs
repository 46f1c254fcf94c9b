//! Complex scalars and the log-gamma kernel.
//!
//! Every gamma product in the crate is accumulated as a sum of [`log_gamma`]
//! values and exponentiated once, so that products spanning hundreds of
//! orders of magnitude stay representable until the final comparison.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Complex = num::complex::Complex64;

/// Below this modulus the asymptotic series is not used directly; the
/// argument is lifted with the recurrence first.
pub const STIRLING_THRESHOLD: f64 = 12.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// B_{2k} / (2k (2k-1)) for k = 1..10.
const STIRLING_COEFFS: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

/// Builds a complex number, rejecting NaN and infinite components.
pub fn complex(re: f64, im: f64) -> Result<Complex> {
    if !re.is_finite() || !im.is_finite() {
        return Err(Error::Domain(format!("non-finite complex ({re}, {im})")));
    }
    Ok(Complex::new(re, im))
}

/// Parses `<re>`, `<im>i` or `<re>(+|-)<im>i` with decimal components.
pub fn parse_complex(text: &str) -> Result<Complex> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty complex literal".into()));
    }
    let bad = || Error::Parse(format!("malformed complex literal `{text}`"));
    let num = |part: &str| -> Result<f64> {
        match part {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => part.parse::<f64>().map_err(|_| bad()),
        }
    };
    let Some(body) = s.strip_suffix('i') else {
        let re = s.parse::<f64>().map_err(|_| bad())?;
        return complex(re, 0.0);
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            complex(re, num(&body[k..])?)
        }
        None => complex(0.0, num(body)?),
    }
}

/// Inverse of [`parse_complex`]; round-trips exactly.
pub fn format_complex(c: Complex) -> String {
    if c.im.is_sign_negative() {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

/// Reduces an angle to (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

fn check_pole(w: Complex) -> Result<()> {
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {w}")));
    }
    if w.re <= 0.5 {
        let k = w.re.round();
        if k <= 0.0 && (w - Complex::new(k, 0.0)).norm() <= 4.0 * f64::EPSILON * k.abs().max(1.0) {
            return Err(Error::Pole(format!("gamma pole at {k}")));
        }
    }
    Ok(())
}

fn stirling_series(x: Complex, terms: usize) -> Complex {
    let inv = x.inv();
    let inv2 = inv * inv;
    let mut tail = Complex::new(0.0, 0.0);
    for c in STIRLING_COEFFS[..terms].iter().rev() {
        tail = tail * inv2 + Complex::new(*c, 0.0);
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + tail * inv
}

/// Principal-branch log Gamma.
///
/// The argument is lifted by the recurrence `log G(w) = log G(w+1) - log w`
/// into `Re w >= 0, |w| >= 12`, where the asymptotic series with ten
/// Bernoulli terms is accurate to well below double rounding.
pub fn log_gamma(w: Complex) -> Result<Complex> {
    check_pole(w)?;
    let mut x = w;
    let mut shift = Complex::new(0.0, 0.0);
    while x.re < 0.0 || x.norm() < STIRLING_THRESHOLD {
        shift += x.ln();
        x += 1.0;
    }
    Ok(stirling_series(x, STIRLING_COEFFS.len()) - shift)
}

/// Gamma itself, via a single exponentiation of [`log_gamma`].
pub fn gamma(w: Complex) -> Result<Complex> {
    Ok(log_gamma(w)?.exp())
}

/// Leading Stirling form `x^{-1/2} e^{x(ln x - 1)} (2 pi)^{1/2}` with the
/// first three correction terms; used for decay modelling only.
pub fn log_gamma_stirling(w: Complex) -> Result<Complex> {
    if !(w.norm() >= STIRLING_THRESHOLD) {
        return Err(Error::Domain(format!(
            "|w| = {} below the asymptotic threshold {STIRLING_THRESHOLD}",
            w.norm()
        )));
    }
    Ok(stirling_series(w, 3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex, b: Complex, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn trivial_values() {
        assert!(log_gamma(Complex::new(1.0, 0.0)).unwrap().norm() < 4e-15);
        assert!(log_gamma(Complex::new(2.0, 0.0)).unwrap().norm() < 4e-15);
        let half = log_gamma(Complex::new(0.5, 0.0)).unwrap();
        assert!((half.re - 0.5 * PI.ln()).abs() < 1e-14);
        assert_eq!(half.im, 0.0);
    }

    // Reference values from an independent 40-digit evaluation.
    #[test]
    fn reference_values() {
        let cases = [
            ((3.0, 4.0), (-1.756_626_784_603_784_110_5, 4.742_664_438_034_657_928_2)),
            ((-2.5, 0.3), (-0.432_088_892_613_201_920_52, -9.093_345_421_289_741_507_3)),
            ((10.0, -20.0), (-1.702_980_443_956_511_060_3, -52.660_660_425_584_719_482)),
            ((0.1, 50.0), (-79.185_684_608_589_472_944, 144.972_065_057_198_424_87)),
            ((-7.3, -0.01), (-7.779_848_878_792_177_213_8, 25.089_379_617_749_799_736)),
            ((0.25, 0.0), (1.288_022_524_698_077_457_4, 0.0)),
            ((80.0, 3.0), (269.234_508_048_923_171_51, 13.128_002_507_205_384_149)),
        ];
        for ((re, im), (lr, li)) in cases {
            let got = log_gamma(Complex::new(re, im)).unwrap();
            let want = Complex::new(lr, li);
            // exp(log_gamma) relative accuracy is the absolute log accuracy
            assert!((got - want).norm() < 2e-13, "w = {re}+{im}i: {got} vs {want}");
        }
    }

    #[test]
    fn poles_are_rejected() {
        for k in [0.0, -1.0, -7.0, -30.0] {
            assert!(matches!(log_gamma(Complex::new(k, 0.0)), Err(Error::Pole(_))));
        }
        assert!(log_gamma(Complex::new(-3.0, 1e-6)).is_ok());
    }

    #[test]
    fn stirling_examples() {
        let w = Complex::new(50.0, 0.0);
        let s = log_gamma_stirling(w).unwrap();
        let l = log_gamma(w).unwrap();
        assert!(((s - l).norm() / l.norm()) < 1e-8);
        let w = Complex::new(0.0, 30.0);
        assert!((log_gamma_stirling(w).unwrap() - log_gamma(w).unwrap()).norm() < 1e-6);
        assert!(matches!(log_gamma_stirling(Complex::new(1.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn conjugation_is_exact() {
        for (re, im) in [(0.3, 2.0), (-4.5, 0.7), (13.0, -40.0), (-2.5, 0.0)] {
            let w = Complex::new(re, im);
            let a = log_gamma(w.conj()).unwrap();
            let b = log_gamma(w).unwrap().conj();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn literals_round_trip() {
        for s in ["3+4i", "-1.5-2e-3i", "2", "-7i", "i", "0.25+0i"] {
            let c = parse_complex(s).unwrap();
            assert_eq!(parse_complex(&format_complex(c)).unwrap(), c);
        }
        assert_eq!(parse_complex("1e-3+2i").unwrap(), Complex::new(1e-3, 2.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex::new(0.0, -1.0));
        assert!(parse_complex("3+4j").is_err());
        assert!(parse_complex("nan").is_err());
        assert!(complex(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn gamma_matches_factorials() {
        assert!(close(gamma(Complex::new(5.0, 0.0)).unwrap(), Complex::new(24.0, 0.0), 1e-14));
    }
}
