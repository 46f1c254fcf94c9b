//! Master functions, their shift coefficients, the weight functions `w_j`
//! and the singular lattices.
//!
//! Index arguments (`ell`, `j`, `m`) are the 1-based labels of the points
//! `z_1..z_n`; storage is 0-based.

use std::f64::consts::PI;

use crate::complexfn::{log_gamma, Complex};
use crate::error::{Error, Result};

/// Relative tolerance (in units of `|p|`) for lattice-point collisions.
pub const COLLISION_TOL: f64 = 1e-9;

/// Points `z`, weights `a`, step `p` and the classical parameter `kappa`.
///
/// [`ParameterSet::new`] accepts arbitrary finite complex data (the algebraic
/// identities do not care); [`ParameterSet::contour_domain`] enforces real
/// increasing `z`, imaginary `a` in the upper half plane and imaginary `p`
/// with positive imaginary part, which is what the real-line cycles need.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    z: Vec<Complex>,
    a: Vec<Complex>,
    p: Complex,
    kappa: Complex,
}

impl ParameterSet {
    pub fn new(z: Vec<Complex>, a: Vec<Complex>, p: Complex, kappa: Complex) -> Result<Self> {
        if z.is_empty() || z.len() != a.len() {
            return Err(Error::Domain(format!(
                "need n >= 1 points with matching weights, got {} and {}",
                z.len(),
                a.len()
            )));
        }
        let finite = |c: &Complex| c.re.is_finite() && c.im.is_finite();
        if !z.iter().chain(a.iter()).all(finite) || !finite(&p) || !finite(&kappa) {
            return Err(Error::Domain("non-finite parameter".into()));
        }
        if p.norm() == 0.0 {
            return Err(Error::Domain("step p must be nonzero".into()));
        }
        Ok(Self { z, a, p, kappa })
    }

    pub fn contour_domain(z: &[f64], a_imag: &[f64], p_imag: f64, kappa: Complex) -> Result<Self> {
        if z.len() < 2 {
            return Err(Error::Domain(format!("need n >= 2, got {}", z.len())));
        }
        if z.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("z must be strictly increasing".into()));
        }
        if a_imag.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::Domain("Im a_l must be positive".into()));
        }
        if !(p_imag > 0.0) {
            return Err(Error::Domain("Im p must be positive".into()));
        }
        Self::new(
            z.iter().map(|&x| Complex::new(x, 0.0)).collect(),
            a_imag.iter().map(|&x| Complex::new(0.0, x)).collect(),
            Complex::new(0.0, p_imag),
            kappa,
        )
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[Complex] {
        &self.z
    }

    pub fn a(&self) -> &[Complex] {
        &self.a
    }

    pub fn p(&self) -> Complex {
        self.p
    }

    pub fn kappa(&self) -> Complex {
        self.kappa
    }

    /// Classical exponents `a_l / kappa`.
    pub fn alpha(&self) -> Vec<Complex> {
        self.a.iter().map(|a| a / self.kappa).collect()
    }

    /// True when the data lie in the real-line integration domain.
    pub fn is_contour_domain(&self) -> bool {
        self.p.re == 0.0
            && self.p.im > 0.0
            && self.z.iter().all(|z| z.im == 0.0)
            && self.z.windows(2).all(|w| w[0].re < w[1].re)
            && self.a.iter().all(|a| a.re == 0.0 && a.im > 0.0)
    }

    /// Checks that the real line separates the descending pole families of
    /// `Phi_p` from the ascending ones, and that the weight-function poles
    /// `z_l + a_l` sit above it. Holds on the contour domain and on
    /// shifted points `z + p e_l` as long as `Im a_l > Im p`.
    pub fn check_separation(&self) -> Result<()> {
        if self.p.re != 0.0 || !(self.p.im > 0.0) {
            return Err(Error::Domain(format!("p = {} is not on the positive imaginary axis", self.p)));
        }
        for (l, (z, a)) in self.z.iter().zip(&self.a).enumerate() {
            if !((z - a).im < 0.0) || !((z + a).im > 0.0) {
                return Err(Error::Domain(format!(
                    "real line does not separate the poles generated by z_{} = {z}, a_{} = {a}",
                    l + 1,
                    l + 1
                )));
            }
        }
        Ok(())
    }

    /// Rejects parameter points where two of the lattices `z_l +- a_l + Z p`
    /// meet within `depth` steps.
    pub fn check_genericity(&self, depth: usize) -> Result<()> {
        let bases: Vec<(usize, f64, Complex)> = (0..self.n())
            .flat_map(|l| [(l, 1.0, self.z[l] + self.a[l]), (l, -1.0, self.z[l] - self.a[l])])
            .collect();
        let reach = 2.0 * (depth as f64 + 1.0);
        for i in 0..bases.len() {
            for k in (i + 1)..bases.len() {
                let q = (bases[i].2 - bases[k].2) / self.p;
                let r = q.re.round();
                if r.abs() <= reach && (q - Complex::new(r, 0.0)).norm() <= COLLISION_TOL {
                    return Err(Error::Genericity(format!(
                        "lattices of z_{}{}a and z_{}{}a collide at offset {r}",
                        bases[i].0 + 1,
                        if bases[i].1 > 0.0 { '+' } else { '-' },
                        bases[k].0 + 1,
                        if bases[k].1 > 0.0 { '+' } else { '-' },
                    )));
                }
            }
        }
        Ok(())
    }

    /// The same data with `z_ell` moved by `k p`.
    pub fn shifted(&self, ell: usize, k: i64) -> Self {
        let mut out = self.clone();
        out.z[ell - 1] += self.p * k as f64;
        out
    }

    /// The same data with every `z_l` multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for z in &mut out.z {
            *z *= s;
        }
        out
    }
}

fn checked_ratio(num: Complex, den: Complex, scale: f64, what: &str) -> Result<Complex> {
    if den.norm() <= 4.0 * f64::EPSILON * scale.max(1.0) {
        return Err(Error::Pole(format!("{what}: denominator vanishes")));
    }
    Ok(num / den)
}

/// `log Phi_p(t, z)` as a sum of `2n` log-gamma terms and the exponential
/// factor. Only its exponential is meaningful; the branch is whatever the
/// principal log-gammas produce.
pub fn log_phi_p(t: Complex, params: &ParameterSet) -> Result<Complex> {
    let p = params.p;
    let mut acc = Complex::new(0.0, 0.0);
    for (z, a) in params.z.iter().zip(&params.a) {
        let u = t - z;
        acc += log_gamma((u + a) / p)?;
        acc += log_gamma(1.0 - (u - a) / p)?;
        acc -= Complex::new(0.0, PI) * u / p;
    }
    Ok(acc)
}

/// `b_0(t) = prod_l (t - z_l + a_l) / (t - z_l - a_l)`, the ratio
/// `Phi_p(t + p) / Phi_p(t)`.
pub fn b0(t: Complex, params: &ParameterSet) -> Result<Complex> {
    let mut acc = Complex::new(1.0, 0.0);
    for (z, a) in params.z.iter().zip(&params.a) {
        acc *= checked_ratio(t - z + a, t - z - a, t.norm() + z.norm(), "b_0")?;
    }
    Ok(acc)
}

/// `b_ell(t) = (t - z_ell - a_ell - p) / (t - z_ell + a_ell - p)`, the ratio
/// `Phi_p(t, z + p e_ell) / Phi_p(t, z)`.
pub fn b_ell(t: Complex, params: &ParameterSet, ell: usize) -> Result<Complex> {
    check_index(ell, params.n(), "ell")?;
    let (z, a, p) = (params.z[ell - 1], params.a[ell - 1], params.p);
    checked_ratio(t - z - a - p, t - z + a - p, t.norm() + z.norm(), "b_ell")
}

/// `b_0` for `k = 0`, otherwise `b_k`.
pub fn b_index(k: usize, t: Complex, params: &ParameterSet) -> Result<Complex> {
    if k == 0 {
        b0(t, params)
    } else {
        b_ell(t, params, k)
    }
}

fn check_index(i: usize, upper: usize, name: &str) -> Result<()> {
    if i == 0 || i > upper {
        return Err(Error::Domain(format!("{name} = {i} outside 1..={upper}")));
    }
    Ok(())
}

/// `w_j(t) = 1/(t - z_j - a_j) prod_{l<j} (t - z_l + a_l)/(t - z_l - a_l)`.
///
/// `j = n` is accepted as well (it is not a basis element but is a
/// convenient member of the function space).
pub fn weight_w(j: usize, t: Complex, params: &ParameterSet) -> Result<Complex> {
    check_index(j, params.n(), "j")?;
    let scale = t.norm() + params.z[j - 1].norm();
    let mut acc = checked_ratio(
        Complex::new(1.0, 0.0),
        t - params.z[j - 1] - params.a[j - 1],
        scale,
        "w_j",
    )?;
    for (z, a) in params.z[..j - 1].iter().zip(&params.a) {
        acc *= checked_ratio(t - z + a, t - z - a, scale, "w_j")?;
    }
    Ok(acc)
}

/// `log prod (t - z_l)^{alpha_l}` on the real line with the branch
/// `arg(t - z_l) = pi` for every `z_l > t` (points to the right are
/// approached from the upper half plane).
pub fn log_phi_classical(t: f64, params: &ParameterSet) -> Result<Complex> {
    let alpha = params.alpha();
    let mut acc = Complex::new(0.0, 0.0);
    for (z, al) in params.z.iter().zip(&alpha) {
        let d = t - z.re;
        if d == 0.0 {
            return Err(Error::Domain(format!("t = {t} coincides with a point z_l")));
        }
        acc += al * d.abs().ln();
        if d < 0.0 {
            acc += al * Complex::new(0.0, PI);
        }
    }
    Ok(acc)
}

/// Exponential decay rates `(c_minus, c_plus)` of `|G_m(t) Phi_p(t)|` as
/// `t -> -inf` and `t -> +inf` along the real line, from the Stirling
/// asymptotics `|Gamma(s + i y)| ~ |y|^{s - 1/2} e^{-pi |y| / 2}`:
/// `c_minus = 2 pi m / |p|`, `c_plus = 2 pi (n - m) / |p|`.
pub fn decay_exponents(params: &ParameterSet, m: i64) -> (f64, f64) {
    let step = params.p.norm();
    let n = params.n() as f64;
    let m = m as f64;
    (2.0 * PI * m / step, 2.0 * PI * (n - m) / step)
}

/// `e^{2 pi i m t / p}`, the simplest p-periodic weights (log form).
pub fn log_periodic_weight(m: i64, t: Complex, p: Complex) -> Complex {
    Complex::new(0.0, 2.0 * PI * m as f64) * t / p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LatticeKind {
    /// Poles of `Phi_p`.
    Sing,
    /// The dual set carrying the poles of the function space.
    SingDual,
}

/// Which of `z_l - a_l` or `z_l + a_l` generates the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

/// One lattice point with its generator tag `(ell, sign, depth)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePoint {
    pub point: Complex,
    pub ell: usize,
    pub sign: Sign,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularLattice {
    pub kind: LatticeKind,
    pub points: Vec<LatticePoint>,
}

/// Offset in units of `p` of the point with tag `(sign, depth)`.
///
/// Sing:    `z - a - N p`,       `z + a + (N+1) p`
/// SingDual: `z - a + (N+1) p`,  `z + a - N p`
pub fn lattice_offset(kind: LatticeKind, sign: Sign, depth: u32) -> i64 {
    let n = depth as i64;
    match (kind, sign) {
        (LatticeKind::Sing, Sign::Minus) => -n,
        (LatticeKind::Sing, Sign::Plus) => n + 1,
        (LatticeKind::SingDual, Sign::Minus) => n + 1,
        (LatticeKind::SingDual, Sign::Plus) => -n,
    }
}

pub fn lattice_point(params: &ParameterSet, kind: LatticeKind, ell: usize, sign: Sign, depth: u32) -> Complex {
    let base = match sign {
        Sign::Minus => params.z[ell - 1] - params.a[ell - 1],
        Sign::Plus => params.z[ell - 1] + params.a[ell - 1],
    };
    base + params.p * lattice_offset(kind, sign, depth) as f64
}

/// All points with depth `N <= depth`, ordered by `(ell, sign, N)`.
pub fn singular_lattice(params: &ParameterSet, kind: LatticeKind, depth: u32) -> SingularLattice {
    let mut points = Vec::new();
    for ell in 1..=params.n() {
        for sign in [Sign::Minus, Sign::Plus] {
            for d in 0..=depth {
                points.push(LatticePoint { point: lattice_point(params, kind, ell, sign, d), ell, sign, depth: d });
            }
        }
    }
    SingularLattice { kind, points }
}

/// Recovers the generator tag of `t`, if `t` lies on the lattice within
/// [`COLLISION_TOL`] `* |p|`.
pub fn locate(params: &ParameterSet, kind: LatticeKind, t: Complex, max_depth: u32) -> Option<LatticePoint> {
    for ell in 1..=params.n() {
        for sign in [Sign::Minus, Sign::Plus] {
            let base = lattice_point(params, kind, ell, sign, 0);
            let q = ((t - base) / params.p).re.round() as i64;
            let step = lattice_offset(kind, sign, 1) - lattice_offset(kind, sign, 0);
            let depth = q * step;
            if depth < 0 || depth > max_depth as i64 {
                continue;
            }
            let cand = lattice_point(params, kind, ell, sign, depth as u32);
            if (cand - t).norm() <= COLLISION_TOL * params.p.norm() {
                return Some(LatticePoint { point: cand, ell, sign, depth: depth as u32 });
            }
        }
    }
    None
}
