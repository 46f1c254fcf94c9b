//! Quadrature engines.
//!
//! * [`integrate_real_line`]: integrands on the whole real line with known
//!   exponential decay rates. Integrands are supplied in log form; the
//!   engine subtracts a common log scale before exponentiating.
//! * [`integrate_interval`]: finite intervals with algebraic endpoint
//!   singularities, via the tanh-sinh substitution.
//! * [`jackson_sum`]: the lattice sum `p * sum_l h(xi + l p)`.

use std::collections::BinaryHeap;
use std::ops::RangeInclusive;
use std::sync::OnceLock;

use crate::complexfn::Complex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Absolute tolerance in units of the L1 mass of the (rescaled) integrand.
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Truncate the line once the modelled tail is below `eps_trunc` of the
    /// running value.
    pub eps_trunc: f64,
    /// Hard cap on the truncation radius.
    pub r_max: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-13, max_panels: 20_000, eps_trunc: 1e-12, r_max: 1e4 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol >= 0.0) || !(self.eps_trunc > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !self.r_max.is_finite() || !(self.r_max > 0.0) || self.max_panels == 0 {
            return Err(Error::Config("r_max must be finite and max_panels nonzero".into()));
        }
        Ok(())
    }

    pub fn with_rel_tol(&self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self.clone() }
    }
}

/// An integral `value * e^{log_scale}` with its error estimate (in the same
/// units as `value`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: Complex,
    pub log_scale: f64,
    pub error_estimate: f64,
    /// Integral of the modulus, same units as `value`.
    pub abs_mass: f64,
    pub panels_used: usize,
    pub truncation_radius: f64,
}

impl IntegralResult {
    pub fn scaled_value(&self) -> Complex {
        self.value * self.log_scale.exp()
    }

    pub fn log_value(&self) -> Complex {
        self.value.ln() + self.log_scale
    }

    pub fn rel_error(&self) -> f64 {
        self.error_estimate / self.value.norm()
    }

    /// `value` re-expressed relative to `e^{log_scale}`.
    pub fn value_at_scale(&self, log_scale: f64) -> Complex {
        self.value * (self.log_scale - log_scale).exp()
    }
}

struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const GAUSS_POINTS: usize = 20;

fn gauss_legendre(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

fn rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_POINTS))
}

fn gauss<F: Fn(f64) -> Result<Complex>>(f: &F, a: f64, b: f64) -> Result<(Complex, f64)> {
    let r = rule();
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = Complex::new(0.0, 0.0);
    let mut mass = 0.0;
    for (x, w) in r.nodes.iter().zip(&r.weights) {
        let v = f(c + h * x)?;
        acc += v * *w;
        mass += v.norm() * w;
    }
    Ok((acc * h, mass * h.abs()))
}

struct Panel {
    a: f64,
    b: f64,
    left: (Complex, f64),
    right: (Complex, f64),
    err: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> Result<Complex>>(f: &F, a: f64, b: f64, coarse: Complex) -> Result<Self> {
        let m = 0.5 * (a + b);
        let left = gauss(f, a, m)?;
        let right = gauss(f, m, b)?;
        let fine = left.0 + right.0;
        let err = (fine - coarse).norm() + 50.0 * f64::EPSILON * (left.1 + right.1);
        Ok(Self { a, b, left, right, err })
    }

    fn value(&self) -> Complex {
        self.left.0 + self.right.0
    }

    fn mass(&self) -> f64 {
        self.left.1 + self.right.1
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Piece {
    value: Complex,
    err: f64,
    mass: f64,
    panels: usize,
}

/// Globally adaptive bisection on `[a, b]`: each panel compares the 20-point
/// Gauss rule against the same rule on its two halves.
fn adaptive<F: Fn(f64) -> Result<Complex>>(
    f: &F,
    a: f64,
    b: f64,
    pieces: usize,
    rel_tol: f64,
    abs_floor: f64,
    budget: usize,
) -> Result<Piece> {
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let mut heap = BinaryHeap::with_capacity(pieces * 2);
    for k in 0..pieces {
        let (lo, hi) = (a + h * k as f64, if k + 1 == pieces { b } else { a + h * (k + 1) as f64 });
        let coarse = gauss(f, lo, hi)?.0;
        heap.push(Panel::new(f, lo, hi, coarse)?);
    }
    loop {
        let value: Complex = heap.iter().map(Panel::value).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        let mass: f64 = heap.iter().map(Panel::mass).sum();
        if err <= rel_tol * value.norm() + abs_floor.max(1e-15 * mass) {
            return Ok(Piece { value, err, mass, panels: heap.len() });
        }
        if heap.len() >= budget {
            return Err(Error::NoConvergence(format!(
                "panel budget {budget} exhausted on [{a}, {b}] (error {err:e}, value {:e})",
                value.norm()
            )));
        }
        let worst = heap.pop().expect("nonempty panel heap");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::NoConvergence(format!("panel [{}, {}] cannot be split", worst.a, worst.b)));
        }
        heap.push(Panel::new(f, worst.a, m, worst.left.0)?);
        heap.push(Panel::new(f, m, worst.b, worst.right.0)?);
    }
}

/// Region of the real line where the integrand has its structure, and the
/// smallest length scale there (distance of the nearest poles to the line).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineWindow {
    pub lo: f64,
    pub hi: f64,
    pub resolution: f64,
}

/// Integrates `exp(log_f(t))` over the real line.
///
/// The window is integrated adaptively; each tail is then extended by
/// segments of doubling length until the modelled remainder
/// `|f(R)| / c` (exponential decay with the supplied rates) drops below
/// `eps_trunc` of the running value and the last segment no longer moves
/// the result at `rel_tol`.
pub fn integrate_real_line<F>(log_f: F, decay: (f64, f64), window: LineWindow, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(f64) -> Result<Complex>,
{
    let (c_minus, c_plus) = decay;
    if !(c_minus > 0.0) || !(c_plus > 0.0) {
        return Err(Error::DivergentIntegral { c_minus, c_plus });
    }
    spec.validate()?;
    let LineWindow { lo, hi, resolution } = window;
    if !(hi > lo) || !(resolution > 0.0) {
        return Err(Error::Domain(format!("bad integration window [{lo}, {hi}] / {resolution}")));
    }

    let samples = (((hi - lo) / resolution * 2.0).ceil() as usize).clamp(64, 4096);
    let mut log_scale = f64::NEG_INFINITY;
    for k in 0..=samples {
        let v = log_f(lo + (hi - lo) * k as f64 / samples as f64)?.re;
        if v.is_finite() && v > log_scale {
            log_scale = v;
        }
    }
    if !log_scale.is_finite() {
        log_scale = 0.0;
    }
    let f = |t: f64| -> Result<Complex> {
        let l = log_f(t)?;
        if l.re == f64::NEG_INFINITY {
            return Ok(Complex::new(0.0, 0.0));
        }
        Ok((l - log_scale).exp())
    };

    let pieces = (((hi - lo) / resolution).ceil() as usize).clamp(4, 2000);
    let core = adaptive(&f, lo, hi, pieces, spec.rel_tol, 0.0, spec.max_panels)?;
    let mut value = core.value;
    let mut err = core.err;
    let mut mass = core.mass;
    let mut panels = core.panels;
    let center = 0.5 * (lo + hi);
    let mut radius: f64 = 0.5 * (hi - lo);
    let mut tails = 0.0;

    for (dir, rate) in [(1.0, c_plus), (-1.0, c_minus)] {
        let mut edge = if dir > 0.0 { hi } else { lo };
        let mut len = (hi - lo).max(4.0 * resolution).max(4.0 / rate);
        loop {
            let (a, b) = if dir > 0.0 { (edge, edge + len) } else { (edge - len, edge) };
            let floor = 0.1 * spec.rel_tol * value.norm() + spec.abs_tol * mass;
            let seg = adaptive(&f, a, b, 8, spec.rel_tol, floor, spec.max_panels.saturating_sub(panels).max(1))?;
            value += seg.value;
            err += seg.err;
            mass += seg.mass;
            panels += seg.panels;
            edge = if dir > 0.0 { b } else { a };
            radius = radius.max((edge - center).abs());

            let here = log_f(edge)?.re - log_scale;
            let inward = log_f(edge - dir * resolution.min(len / 8.0))?.re - log_scale;
            let decaying = here <= inward;
            let tail = here.exp() / rate;
            let small = tail <= spec.eps_trunc * value.norm() + spec.abs_tol * mass;
            let settled = seg.value.norm() <= spec.rel_tol * value.norm() + spec.abs_tol * mass;
            if decaying && small && settled {
                tails += tail;
                break;
            }
            if radius > spec.r_max {
                return Err(Error::NoConvergence(format!("truncation radius exceeded r_max = {}", spec.r_max)));
            }
            len *= 2.0;
        }
    }

    Ok(IntegralResult {
        value,
        log_scale,
        error_estimate: err + tails,
        abs_mass: mass,
        panels_used: panels,
        truncation_radius: radius,
    })
}

/// A tanh-sinh node: the abscissa together with its distances to both
/// endpoints, computed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalNode {
    pub t: f64,
    pub from_lo: f64,
    pub from_hi: f64,
}

const MAX_TS_LEVEL: u32 = 14;

/// Integrates `f` over `[lo, hi]` where the integrand behaves like
/// `(t - lo)^{alpha_lo}` and `(hi - t)^{alpha_hi}` at the ends.
///
/// The double-exponential substitution `t = c + h tanh(pi/2 sinh u)` flattens
/// both algebraic endpoint behaviours; levels are halved until two successive
/// trapezoid sums agree to `rel_tol`.
pub fn integrate_interval<F>(f: F, lo: f64, hi: f64, exponents: (Complex, Complex), spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(IntervalNode) -> Result<Complex>,
{
    if !(exponents.0.re > -1.0) || !(exponents.1.re > -1.0) {
        return Err(Error::Domain(format!(
            "endpoint exponents ({}, {}) are not integrable",
            exponents.0, exponents.1
        )));
    }
    if !(hi > lo) {
        return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
    }
    spec.validate()?;
    let half = 0.5 * (hi - lo);
    let center = 0.5 * (lo + hi);
    let half_pi = std::f64::consts::FRAC_PI_2;

    let node_sum = |u: f64| -> Result<Option<(Complex, f64)>> {
        let v = half_pi * u.sinh();
        let ev = (-2.0 * v.abs()).exp();
        let small = half * 2.0 * ev / (1.0 + ev);
        if small < f64::MIN_POSITIVE * 1e20 {
            return Ok(None);
        }
        let (from_lo, from_hi) = if v >= 0.0 { (2.0 * half - small, small) } else { (small, 2.0 * half - small) };
        let cosh_v = v.cosh();
        let w = half * half_pi * u.cosh() / (cosh_v * cosh_v);
        let node = IntervalNode { t: lo + from_lo, from_lo, from_hi };
        let _ = center;
        let val = f(node)?;
        Ok(Some((val * w, val.norm() * w)))
    };

    // Sum over u = k * step for k in the given parity class, walking outwards
    // until terms become negligible or the node hits the endpoint.
    let sweep = |step: f64, odd_only: bool, scale: f64| -> Result<(Complex, f64, usize)> {
        let mut acc = Complex::new(0.0, 0.0);
        let mut mass = 0.0;
        let mut count = 0;
        if !odd_only {
            if let Some((v, m)) = node_sum(0.0)? {
                acc += v;
                mass += m;
                count += 1;
            }
        }
        for sgn in [1.0, -1.0] {
            let mut k: u64 = 1;
            let mut quiet = 0;
            loop {
                let u = sgn * step * k as f64;
                match node_sum(u)? {
                    None => break,
                    Some((v, m)) => {
                        acc += v;
                        mass += m;
                        count += 1;
                        if m <= 1e-20 * scale.max(mass) {
                            quiet += 1;
                            if quiet >= 3 {
                                break;
                            }
                        } else {
                            quiet = 0;
                        }
                    }
                }
                k += if odd_only { 2 } else { 1 };
                if u.abs() > 8.0 {
                    break;
                }
            }
        }
        Ok((acc, mass, count))
    };

    let mut step = 1.0;
    let (s0, m0, mut evals) = sweep(step, false, 0.0)?;
    let mut sum = s0;
    let mut mass = m0;
    let mut estimate = sum * step;
    let mut prev_diff = f64::INFINITY;
    for level in 1..=MAX_TS_LEVEL {
        step *= 0.5;
        let (s, m, c) = sweep(step, true, mass)?;
        sum += s;
        mass += m;
        evals += c;
        let next = sum * step;
        let diff = (next - estimate).norm();
        estimate = next;
        if level >= 3 && diff <= spec.rel_tol * estimate.norm() + spec.abs_tol * mass * step {
            return Ok(IntegralResult {
                value: estimate,
                log_scale: 0.0,
                error_estimate: diff.min(prev_diff),
                abs_mass: mass * step,
                panels_used: evals,
                truncation_radius: half,
            });
        }
        prev_diff = diff;
    }
    Err(Error::NoConvergence(format!(
        "tanh-sinh did not settle after {MAX_TS_LEVEL} levels on [{lo}, {hi}]"
    )))
}

/// `p * sum_{l in window} h(xi + l p)`.
pub fn jackson_sum<H: Fn(Complex) -> Complex>(h: H, xi: Complex, p: Complex, window: RangeInclusive<i64>) -> Complex {
    let mut acc = Complex::new(0.0, 0.0);
    for l in window {
        acc += h(xi + p * l as f64);
    }
    p * acc
}
