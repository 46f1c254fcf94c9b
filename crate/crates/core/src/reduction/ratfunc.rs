//! Rational functions of one variable over the Gaussian rationals, kept in
//! canonical partial-fraction form: a polynomial part plus, for each pole,
//! its principal Laurent coefficients.
//!
//! Canonical form is unique, so structural equality is equality of functions.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use super::gaussian::G;
use crate::complexfn::Complex;
use crate::error::{Error, Result};

/// `poly[k]` is the coefficient of `t^k`; `poles[c][j]` the coefficient of
/// `1/(t-c)^(j+1)`.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RationalFunctionJson", into = "RationalFunctionJson")]
pub struct RationalFunction {
    poly: Vec<G>,
    poles: BTreeMap<G, Vec<G>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoleJson {
    pub loc: G,
    pub coeffs: Vec<G>,
}

/// Wire format: `{"poly": [...], "poles": [{"loc": .., "coeffs": [..]}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RationalFunctionJson {
    #[serde(default)]
    pub poly: Vec<G>,
    #[serde(default)]
    pub poles: Vec<PoleJson>,
}

impl TryFrom<RationalFunctionJson> for RationalFunction {
    type Error = Error;
    fn try_from(j: RationalFunctionJson) -> Result<Self> {
        let mut poles = BTreeMap::new();
        for p in j.poles {
            if poles.insert(p.loc.clone(), p.coeffs).is_some() {
                return Err(Error::Parse(format!("duplicate pole location {}", p.loc)));
            }
        }
        Ok(Self::from_parts(j.poly, poles))
    }
}

impl From<RationalFunction> for RationalFunctionJson {
    fn from(f: RationalFunction) -> Self {
        Self {
            poly: f.poly,
            poles: f.poles.into_iter().map(|(loc, coeffs)| PoleJson { loc, coeffs }).collect(),
        }
    }
}

fn trim(v: &mut Vec<G>) {
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
}

fn add_into(v: &mut Vec<G>, k: usize, c: &G) {
    if v.len() <= k {
        v.resize(k + 1, G::zero());
    }
    v[k] += c;
}

/// `P(t) * (t - c)`.
fn poly_mul_linear(p: &[G], c: &G) -> Vec<G> {
    if p.is_empty() {
        return Vec::new();
    }
    let mut out = vec![G::zero(); p.len() + 1];
    for (k, a) in p.iter().enumerate() {
        out[k + 1] += a;
        out[k] -= &(a * c);
    }
    out
}

/// Product of polynomials in coefficient form.
pub fn poly_mul(a: &[G], b: &[G]) -> Vec<G> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![G::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += &(x * y);
        }
    }
    trim(&mut out);
    out
}

/// `prod_k (t - roots_k)`.
pub fn poly_from_roots<'a>(roots: impl IntoIterator<Item = &'a G>) -> Vec<G> {
    roots.into_iter().fold(vec![G::one()], |acc, r| poly_mul_linear(&acc, r))
}

fn poly_eval(p: &[G], t: &G) -> G {
    p.iter().rev().fold(G::zero(), |acc, c| &(&acc * t) + c)
}

impl RationalFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: G) -> Self {
        Self::polynomial(vec![c])
    }

    pub fn polynomial(mut coeffs: Vec<G>) -> Self {
        trim(&mut coeffs);
        Self { poly: coeffs, poles: BTreeMap::new() }
    }

    /// `c * t^k`.
    pub fn monomial(c: G, k: usize) -> Self {
        let mut v = vec![G::zero(); k + 1];
        v[k] = c;
        Self::polynomial(v)
    }

    /// `c / (t - loc)^order`, `order >= 1`.
    pub fn pole(loc: G, order: usize, c: G) -> Self {
        assert!(order >= 1, "pole order must be positive");
        let mut coeffs = vec![G::zero(); order];
        coeffs[order - 1] = c;
        Self::from_parts(Vec::new(), BTreeMap::from([(loc, coeffs)]))
    }

    pub fn from_parts(mut poly: Vec<G>, poles: BTreeMap<G, Vec<G>>) -> Self {
        trim(&mut poly);
        let poles = poles
            .into_iter()
            .filter_map(|(loc, mut c)| {
                trim(&mut c);
                (!c.is_empty()).then_some((loc, c))
            })
            .collect();
        Self { poly, poles }
    }

    /// `num(t) / prod (t - root)^mult`.
    pub fn from_num_den(num: &[G], roots: &[(G, usize)]) -> Self {
        let mut f = Self::polynomial(num.to_vec());
        for (root, mult) in roots {
            for _ in 0..*mult {
                f = f.div_linear(root);
            }
        }
        f
    }

    /// Numerator coefficients and denominator roots with multiplicities.
    pub fn to_num_den(&self) -> (Vec<G>, Vec<(G, usize)>) {
        let roots: Vec<(G, usize)> = self.poles.iter().map(|(c, v)| (c.clone(), v.len())).collect();
        let all_roots = roots.iter().flat_map(|(c, m)| std::iter::repeat_n(c, *m));
        let den = poly_from_roots(all_roots);
        let mut num = poly_mul(&self.poly, &den);
        for (loc, coeffs) in &self.poles {
            let others = roots.iter().filter(|(c, _)| c != loc).flat_map(|(c, m)| std::iter::repeat_n(c, *m));
            let rest = poly_from_roots(others);
            for (j, r) in coeffs.iter().enumerate() {
                let order = j + 1;
                let local = poly_from_roots(std::iter::repeat_n(loc, coeffs.len() - order));
                let term = poly_mul(&poly_mul(&local, &rest), std::slice::from_ref(r));
                for (k, c) in term.iter().enumerate() {
                    add_into(&mut num, k, c);
                }
            }
        }
        trim(&mut num);
        (num, roots)
    }

    pub fn poly(&self) -> &[G] {
        &self.poly
    }

    pub fn poles(&self) -> &BTreeMap<G, Vec<G>> {
        &self.poles
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_empty() && self.poles.is_empty()
    }

    pub fn is_polynomial(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.poly.len().checked_sub(1)
    }

    /// Coefficient of `1/(t - loc)`.
    pub fn residue(&self, loc: &G) -> G {
        self.poles.get(loc).and_then(|c| c.first().cloned()).unwrap_or_else(G::zero)
    }

    pub fn max_pole_order(&self) -> usize {
        self.poles.values().map(Vec::len).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &G) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            poly: self.poly.iter().map(|x| x * c).collect(),
            poles: self.poles.iter().map(|(l, v)| (l.clone(), v.iter().map(|x| x * c).collect())).collect(),
        }
    }

    /// `(t - c) f(t)`.
    pub fn mul_linear(&self, c: &G) -> Self {
        let mut poly = poly_mul_linear(&self.poly, c);
        let mut poles = BTreeMap::new();
        for (d, coeffs) in &self.poles {
            let shift = d - c;
            let mut out = vec![G::zero(); coeffs.len()];
            for (j, r) in coeffs.iter().enumerate() {
                if j == 0 {
                    add_into(&mut poly, 0, r);
                } else {
                    out[j - 1] += r;
                }
                out[j] += &(r * &shift);
            }
            poles.insert(d.clone(), out);
        }
        Self::from_parts(poly, poles)
    }

    /// `f(t) / (t - c)`.
    pub fn div_linear(&self, c: &G) -> Self {
        let mut poles: BTreeMap<G, Vec<G>> = BTreeMap::new();
        let mut at_c = vec![G::zero()];
        // synthetic division of the polynomial part
        let mut quotient = vec![G::zero(); self.poly.len().saturating_sub(1)];
        let mut carry = G::zero();
        for k in (0..self.poly.len()).rev() {
            carry = &(&carry * c) + &self.poly[k];
            if k > 0 {
                quotient[k - 1] = carry.clone();
            }
        }
        if !self.poly.is_empty() {
            at_c[0] += &carry;
        }
        for (d, coeffs) in &self.poles {
            if d == c {
                for (j, r) in coeffs.iter().enumerate() {
                    add_into(&mut at_c, j + 1, r);
                }
                continue;
            }
            // 1/((t-d)^j (t-c)) = e^{-j}/(t-c) - sum_{i=1..j} e^{-(j-i+1)}/(t-d)^i, e = c - d
            let e_inv = (c - d).inv().expect("distinct points");
            let mut powers = vec![G::one()];
            for _ in 0..coeffs.len() {
                let next = powers.last().unwrap() * &e_inv;
                powers.push(next);
            }
            let mut out = vec![G::zero(); coeffs.len()];
            for (jm1, r) in coeffs.iter().enumerate() {
                let j = jm1 + 1;
                at_c[0] += &(r * &powers[j]);
                for i in 1..=j {
                    out[i - 1] -= &(r * &powers[j - i + 1]);
                }
            }
            poles.insert(d.clone(), out);
        }
        poles.insert(c.clone(), at_c);
        Self::from_parts(quotient, poles)
    }

    /// `f(t + s)`.
    pub fn shift(&self, s: &G) -> Self {
        let mut poly: Vec<G> = Vec::new();
        let neg = -s;
        for c in self.poly.iter().rev() {
            poly = poly_mul_linear(&poly, &neg);
            add_into(&mut poly, 0, c);
        }
        let poles = self.poles.iter().map(|(d, v)| (d - s, v.clone())).collect();
        Self::from_parts(poly, poles)
    }

    pub fn derivative(&self) -> Self {
        let poly = self.poly.iter().enumerate().skip(1).map(|(k, c)| c * &G::from(k as i64)).collect();
        let poles = self
            .poles
            .iter()
            .map(|(d, v)| {
                let mut out = vec![G::zero(); v.len() + 1];
                for (j, r) in v.iter().enumerate() {
                    out[j + 1] = -(r * &G::from(j as i64 + 1));
                }
                (d.clone(), out)
            })
            .collect();
        Self::from_parts(poly, poles)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut acc = Self::zero();
        let mut power = self.clone();
        for (k, c) in other.poly.iter().enumerate() {
            if k > 0 {
                power = power.mul_linear(&G::zero());
            }
            acc = &acc + &power.scale(c);
        }
        for (d, coeffs) in &other.poles {
            let mut q = self.clone();
            for r in coeffs {
                q = q.div_linear(d);
                acc = &acc + &q.scale(r);
            }
        }
        acc
    }

    pub fn eval(&self, t: &G) -> Result<G> {
        let mut acc = poly_eval(&self.poly, t);
        for (d, coeffs) in &self.poles {
            let inv = (t - d).inv().ok_or_else(|| Error::Pole(format!("evaluation at pole {d}")))?;
            let mut pw = G::one();
            for r in coeffs {
                pw = &pw * &inv;
                acc += &(r * &pw);
            }
        }
        Ok(acc)
    }

    pub fn to_float(&self) -> FloatRational {
        FloatRational {
            poly: self.poly.iter().map(G::to_complex).collect(),
            poles: self.poles.iter().map(|(d, v)| (d.to_complex(), v.iter().map(G::to_complex).collect())).collect(),
        }
    }
}

impl Add<&RationalFunction> for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, o: &RationalFunction) -> RationalFunction {
        let mut poly = self.poly.clone();
        for (k, c) in o.poly.iter().enumerate() {
            add_into(&mut poly, k, c);
        }
        let mut poles = self.poles.clone();
        for (d, v) in &o.poles {
            let e = poles.entry(d.clone()).or_default();
            for (j, r) in v.iter().enumerate() {
                add_into(e, j, r);
            }
        }
        RationalFunction::from_parts(poly, poles)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        self.scale(&-G::one())
    }
}

impl Sub<&RationalFunction> for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, o: &RationalFunction) -> RationalFunction {
        self + &(-o)
    }
}

impl Mul<&RationalFunction> for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, o: &RationalFunction) -> RationalFunction {
        RationalFunction::mul(self, o)
    }
}

/// Floating-point image of a [`RationalFunction`] for quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatRational {
    poly: Vec<Complex>,
    poles: Vec<(Complex, Vec<Complex>)>,
}

impl FloatRational {
    pub fn pole_locations(&self) -> Vec<Complex> {
        self.poles.iter().map(|(d, _)| *d).collect()
    }

    pub fn eval(&self, t: Complex) -> Complex {
        let mut acc = self.poly.iter().rev().fold(Complex::new(0.0, 0.0), |acc, c| acc * t + c);
        for (d, coeffs) in &self.poles {
            let inv = (t - d).inv();
            let mut pw = Complex::new(1.0, 0.0);
            for r in coeffs {
                pw *= inv;
                acc += r * pw;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(s: &str) -> G {
        s.parse().unwrap()
    }

    fn sample() -> RationalFunction {
        let f = RationalFunction::polynomial(vec![g("1"), g("-1/2+ i"), g("3")]);
        let f = &f + &RationalFunction::pole(g("1/3"), 2, g("2-i"));
        &f + &RationalFunction::pole(g("-1+2 i"), 1, g("5/7"))
    }

    #[test]
    fn evaluation_matches_definition() {
        let f = sample();
        let t = g("2/5+1/9 i");
        let direct = &(&(&g("1") + &(&g("-1/2+ i") * &t)) + &(&g("3") * &(&t * &t)))
            + &(&(&g("2-i") / &(&(&t - &g("1/3")) * &(&t - &g("1/3")))) + &(&g("5/7") / &(&t - &g("-1+2 i"))));
        assert_eq!(f.eval(&t).unwrap(), direct);
        assert!(matches!(f.eval(&g("1/3")), Err(Error::Pole(_))));
    }

    #[test]
    fn linear_factors_invert() {
        let f = sample();
        for c in ["0", "1/3", "7/2-i", "-1+2 i"] {
            let c = g(c);
            assert_eq!(f.mul_linear(&c).div_linear(&c), f);
            assert_eq!(f.div_linear(&c).mul_linear(&c), f);
        }
    }

    #[test]
    fn num_den_round_trip() {
        let f = sample();
        let (num, den) = f.to_num_den();
        assert_eq!(RationalFunction::from_num_den(&num, &den), f);
        // (t^2 - 1)/(t - 1) cancels to t + 1
        let h = RationalFunction::from_num_den(&[g("-1"), g("0"), g("1")], &[(g("1"), 1)]);
        assert_eq!(h, RationalFunction::polynomial(vec![g("1"), g("1")]));
    }

    #[test]
    fn shift_and_derivative() {
        let f = sample();
        let s = g("1/2-1/3 i");
        let t = g("3/7+2 i");
        assert_eq!(f.shift(&s).eval(&t).unwrap(), f.eval(&(&t + &s)).unwrap());
        // derivative of 1/(t-c)^2 is -2/(t-c)^3
        let d = RationalFunction::pole(g("1"), 2, g("1")).derivative();
        assert_eq!(d, RationalFunction::pole(g("1"), 3, g("-2")));
        let product_rule = &(&f.derivative() * &f) + &(&f * &f.derivative());
        assert_eq!((&f * &f).derivative(), product_rule);
    }

    #[test]
    fn json_round_trip() {
        let f = sample();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.starts_with("{\"poly\":[\"1\",\"-1/2+1 i\",\"3\"],\"poles\":["));
        let back: RationalFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        let zero_top: RationalFunction = serde_json::from_str(r#"{"poly":["0"],"poles":[{"loc":"1","coeffs":["2","0"]}]}"#).unwrap();
        assert_eq!(zero_top, RationalFunction::pole(g("1"), 1, g("2")));
    }

    #[test]
    fn float_image_agrees() {
        let f = sample();
        let t = g("2/5+1/9 i");
        let exact = f.eval(&t).unwrap().to_complex();
        assert!((f.to_float().eval(t.to_complex()) - exact).norm() < 1e-13 * exact.norm());
    }

    fn small() -> impl Strategy<Value = G> {
        (-6i64..=6, 1i64..=4, -6i64..=6, 1i64..=4).prop_map(|(a, b, c, d)| &G::from_frac(a, b) + &(&G::from_frac(c, d) * &G::i()))
    }

    fn rf() -> impl Strategy<Value = RationalFunction> {
        (
            proptest::collection::vec(small(), 0..3),
            proptest::collection::vec((0i64..4, 1usize..3, small()), 0..3),
        )
            .prop_map(|(poly, poles)| {
                poles.into_iter().fold(RationalFunction::polynomial(poly), |acc, (k, ord, c)| {
                    &acc + &RationalFunction::pole(G::from_frac(k, 3), ord, c)
                })
            })
    }

    proptest! {
        #[test]
        fn product_evaluates_pointwise(f in rf(), h in rf(), t in small()) {
            let fh = &f * &h;
            prop_assume!(f.eval(&t).is_ok() && h.eval(&t).is_ok());
            prop_assert_eq!(fh.eval(&t).unwrap(), &f.eval(&t).unwrap() * &h.eval(&t).unwrap());
        }

        #[test]
        fn ring_laws(f in rf(), h in rf(), k in rf()) {
            prop_assert_eq!(&f * &h, &h * &f);
            prop_assert_eq!(&(&f + &h) * &k, &(&f * &k) + &(&h * &k));
            prop_assert!((&f - &f).is_zero());
        }
    }
}
