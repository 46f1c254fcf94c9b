//! Reduction modulo the image of the discrete differential
//! `D_p g(t) = g(t + p) b_0(t) - g(t)`.
//!
//! Elements of the function space are rational functions with simple poles
//! on the dual lattice `z_l - a_l + (N+1) p`, `z_l + a_l - N p`. Poles are
//! walked down to the fundamental layer (`N = 0`) with the images of
//! `1/(t - c)`, polynomial parts are removed with the images of `t^k`, the
//! layer `z_l - a_l + p` is cleared with one more pole image, and what is left
//! (simple poles at `z_l + a_l`) is solved against `w_1..w_{n-1}` and
//! `D_p 1 = b_0 - 1`.

use num::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::G;
use super::linalg::ExactMatrix;
use super::ratfunc::RationalFunction as RF;
use crate::complexfn::Complex;
use crate::error::{Error, Result};
use crate::master::{ParameterSet, Sign};

/// Deepest supported lattice depth of an input pole.
pub const MAX_DEPTH: u32 = 32;

/// Exact parameter point `(z, a, p, kappa)`. No reality conditions are
/// imposed; use [`ExactParams::check_contour_domain`] where they matter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactParams {
    z: Vec<G>,
    a: Vec<G>,
    p: G,
    kappa: G,
}

impl ExactParams {
    pub fn new(z: Vec<G>, a: Vec<G>, p: G, kappa: G) -> Result<Self> {
        if z.is_empty() || z.len() != a.len() {
            return Err(Error::Domain(format!("need n >= 1 points with matching weights, got {} and {}", z.len(), a.len())));
        }
        if p.is_zero() || kappa.is_zero() {
            return Err(Error::Domain("p and kappa must be nonzero".into()));
        }
        Ok(Self { z, a, p, kappa })
    }

    /// Real `z`, `a = i a_imag`, `p = i p_imag`.
    pub fn from_imag(z: Vec<G>, a_imag: Vec<G>, p_imag: G, kappa: G) -> Result<Self> {
        let i = G::i();
        Self::new(z, a_imag.iter().map(|x| x * &i).collect(), &p_imag * &i, kappa)
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[G] {
        &self.z
    }

    pub fn a(&self) -> &[G] {
        &self.a
    }

    pub fn p(&self) -> &G {
        &self.p
    }

    pub fn kappa(&self) -> &G {
        &self.kappa
    }

    /// Classical exponents `a_l / kappa`.
    pub fn alpha(&self) -> Vec<G> {
        self.a.iter().map(|a| a / &self.kappa).collect()
    }

    pub fn shifted(&self, ell: usize, k: i64) -> Self {
        let mut out = self.clone();
        out.z[ell - 1] = &out.z[ell - 1] + &(&self.p * &G::from(k));
        out
    }

    pub fn scaled(&self, s: &G) -> Self {
        let mut out = self.clone();
        out.z = out.z.iter().map(|z| z * s).collect();
        out
    }

    pub fn with_kappa(&self, kappa: G) -> Result<Self> {
        Self::new(self.z.clone(), self.a.clone(), self.p.clone(), kappa)
    }

    pub fn to_parameter_set(&self) -> Result<ParameterSet> {
        ParameterSet::new(
            self.z.iter().map(G::to_complex).collect(),
            self.a.iter().map(G::to_complex).collect(),
            self.p.to_complex(),
            self.kappa.to_complex(),
        )
    }

    /// Real increasing `z`, `a` and `p` on the positive imaginary axis.
    pub fn check_contour_domain(&self) -> Result<()> {
        let real = |g: &G| g.im().is_zero();
        let up = |g: &G| g.re().is_zero() && *g.im() > num::BigRational::zero();
        if self.n() < 2 || !self.z.iter().all(real) || self.z.windows(2).any(|w| w[0].re() >= w[1].re()) {
            return Err(Error::Domain("z must be real and strictly increasing, n >= 2".into()));
        }
        if !self.a.iter().all(up) || !up(&self.p) {
            return Err(Error::Domain("a_l and p must lie on the positive imaginary axis".into()));
        }
        Ok(())
    }

    /// Generic complex parameters with small numerators and denominators.
    pub fn random_generic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        loop {
            let z = (0..n).map(|_| G::random(rng, 9, 5)).collect();
            let a = (0..n).map(|_| G::random(rng, 9, 5)).collect();
            let p = G::random(rng, 9, 5);
            let kappa = G::random(rng, 9, 5);
            if let Ok(params) = Self::new(z, a, p, kappa) {
                if Reducer::new(&params).is_ok() {
                    return params;
                }
            }
        }
    }

    /// Parameters in the contour domain with `Im a_l / Im p` in
    /// `[min_ratio, min_ratio + 1.5]`, neighbouring points 1/2 to 2 apart.
    pub fn random_domain<R: Rng + ?Sized>(n: usize, min_ratio: f64, rng: &mut R) -> Self {
        loop {
            let p_imag = G::random_real(rng, 0.6, 1.4, 5);
            let pf = p_imag.to_complex().re;
            let mut z = vec![G::random_real(rng, -1.0, 1.0, 5)];
            for _ in 1..n {
                let step = G::random_real(rng, 0.5, 2.0, 5);
                z.push(z.last().unwrap() + &step);
            }
            let a = (0..n).map(|_| G::random_real(rng, min_ratio * pf + 0.05, (min_ratio + 1.5) * pf, 7)).collect();
            let params = Self::from_imag(z, a, p_imag, G::from(2)).expect("nonzero p");
            if Reducer::new(&params).is_ok() {
                return params;
            }
        }
    }
}

/// Generator tag of a dual-lattice point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DualTag {
    pub ell: usize,
    pub sign: Sign,
    pub depth: u32,
}

/// Coordinates in the `w_j` basis together with the certificate `g` of
/// `f = sum_j c_j w_j + D_p g`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohomologyClass {
    pub coords: Vec<G>,
    pub certificate: RF,
}

impl CohomologyClass {
    /// Checks the defining identity exactly.
    pub fn verify(&self, f: &RF, reducer: &Reducer) -> bool {
        let mut rhs = reducer.dp_unchecked(&self.certificate);
        for (c, w) in self.coords.iter().zip(&reducer.weights) {
            rhs = &rhs + &w.scale(c);
        }
        &rhs == f
    }
}

/// `b_0 = prod (t - z_l + a_l)/(t - z_l - a_l)`.
pub fn b0_rf(params: &ExactParams) -> RF {
    let num: Vec<G> = params.z.iter().zip(&params.a).map(|(z, a)| z - a).collect();
    let roots: Vec<(G, usize)> = params.z.iter().zip(&params.a).map(|(z, a)| (z + a, 1)).collect();
    RF::from_num_den(&super::ratfunc::poly_from_roots(&num), &roots)
}

/// `b_ell = (t - z_ell - a_ell - p)/(t - z_ell + a_ell - p)`.
pub fn b_ell_rf(params: &ExactParams, ell: usize) -> RF {
    let (z, a, p) = (&params.z[ell - 1], &params.a[ell - 1], &params.p);
    let root = &(z + a) + p;
    let pole = &(z - a) + p;
    RF::from_num_den(&[-root, G::one()], &[(pole, 1)])
}

/// `w_j` as an exact rational function, `1 <= j <= n`.
pub fn weight_rf(params: &ExactParams, j: usize) -> RF {
    let zeros: Vec<G> = (0..j - 1).map(|l| &params.z[l] - &params.a[l]).collect();
    let roots: Vec<(G, usize)> = (0..j).map(|l| (&params.z[l] + &params.a[l], 1)).collect();
    RF::from_num_den(&super::ratfunc::poly_from_roots(&zeros), &roots)
}

/// Precomputed data for reductions at one parameter point.
#[derive(Clone, Debug)]
pub struct Reducer {
    params: ExactParams,
    b0: RF,
    sum_a: G,
    weights: Vec<RF>,
    /// Residues of `w_1..w_{n-1}, b_0 - 1` at `z_k + a_k`.
    layer: ExactMatrix,
}

impl Reducer {
    pub fn new(params: &ExactParams) -> Result<Self> {
        let n = params.n();
        if let Some(l) = params.a.iter().position(Zero::is_zero) {
            return Err(Error::Genericity(format!("a_{} = 0 degenerates the lattice", l + 1)));
        }
        let mut points: Vec<(G, DualTag)> = Vec::with_capacity(2 * n * (MAX_DEPTH as usize + 1));
        for ell in 1..=n {
            for sign in [Sign::Minus, Sign::Plus] {
                for depth in 0..=MAX_DEPTH {
                    points.push((dual_point(params, ell, sign, depth), DualTag { ell, sign, depth }));
                }
            }
        }
        points.sort();
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Genericity(format!("dual lattice collision at {} between {:?} and {:?}", w[0].0, w[0].1, w[1].1)));
        }
        let b0 = b0_rf(params);
        let weights: Vec<RF> = (1..=n).map(|j| weight_rf(params, j)).collect();
        let mut columns: Vec<Vec<G>> = weights[..n - 1]
            .iter()
            .map(|w| plus0(params).iter().map(|c| w.residue(c)).collect())
            .collect();
        let dp_one = &b0 - &RF::constant(G::one());
        columns.push(plus0(params).iter().map(|c| dp_one.residue(c)).collect());
        let layer = ExactMatrix::from_columns(&columns);
        if layer.det().is_zero() {
            return Err(Error::Genericity("w_1..w_{n-1}, D_p 1 are dependent on the fundamental layer".into()));
        }
        let sum_a = params.a.iter().fold(G::zero(), |acc, a| &acc + a);
        Ok(Self { params: params.clone(), b0, sum_a, weights, layer })
    }

    pub fn params(&self) -> &ExactParams {
        &self.params
    }

    pub fn b0(&self) -> &RF {
        &self.b0
    }

    /// `w_1..w_n`.
    pub fn weights(&self) -> &[RF] {
        &self.weights
    }

    /// Tag of `loc` on the dual lattice (depth up to [`MAX_DEPTH`]).
    pub fn classify(&self, loc: &G) -> Result<Option<DualTag>> {
        let mut found = None;
        for ell in 1..=self.params.n() {
            let (z, a, p) = (&self.params.z[ell - 1], &self.params.a[ell - 1], &self.params.p);
            let minus = &(&(loc - z) + a) / p - G::one();
            let plus = &(z + a) - loc;
            let plus = &plus / p;
            for (sign, q) in [(Sign::Minus, minus), (Sign::Plus, plus)] {
                let Some(k) = q.as_integer() else { continue };
                let Ok(depth) = u32::try_from(k) else { continue };
                if depth > MAX_DEPTH {
                    continue;
                }
                if found.is_some() {
                    return Err(Error::Genericity(format!("point {loc} has two dual-lattice tags")));
                }
                found = Some(DualTag { ell, sign, depth });
            }
        }
        Ok(found)
    }

    fn check_class(&self, f: &RF) -> Result<Vec<(G, DualTag, G)>> {
        let mut tags = Vec::with_capacity(f.poles().len());
        for (loc, coeffs) in f.poles() {
            if coeffs.len() > 1 {
                return Err(Error::ClassViolation(format!("pole of order {} at {loc}", coeffs.len())));
            }
            let tag = self
                .classify(loc)?
                .ok_or_else(|| Error::ClassViolation(format!("pole at {loc} is not on the dual lattice (depth <= {MAX_DEPTH})")))?;
            tags.push((loc.clone(), tag, coeffs[0].clone()));
        }
        Ok(tags)
    }

    pub(crate) fn dp_unchecked(&self, g: &RF) -> RF {
        &g.shift(&self.params.p).mul(&self.b0) - g
    }

    /// `D_p g`, rejecting images that leave the function space.
    pub fn apply_dp(&self, g: &RF) -> Result<RF> {
        let img = self.dp_unchecked(g);
        self.check_class(&img)?;
        Ok(img)
    }

    /// Subtracts `lambda D_p h` from `f` and records `lambda h` in `g`.
    fn eliminate(&self, f: &mut RF, g: &mut RF, h: RF, lambda: &G) {
        let img = self.dp_unchecked(&h).scale(lambda);
        *f = &*f - &img;
        *g = &*g + &h.scale(lambda);
    }

    pub fn reduce(&self, f: &RF) -> Result<CohomologyClass> {
        let p = self.params.p.clone();
        let mut f = f.clone();
        let mut g = RF::zero();
        self.check_class(&f)?;

        // walk poles down to the fundamental layer, deepest first
        loop {
            let tags = self.check_class(&f)?;
            let Some((loc, tag, r)) = tags
                .into_iter()
                .filter(|(_, t, _)| t.depth > 0)
                .max_by(|x, y| x.1.depth.cmp(&y.1.depth).then((y.1.ell, y.1.sign).cmp(&(x.1.ell, x.1.sign))))
            else {
                break;
            };
            match tag.sign {
                Sign::Plus => {
                    // D_p 1/(t - loc - p) = b_0(t)/(t - loc) - 1/(t - loc - p)
                    let b = self.b0.eval(&loc)?;
                    let lambda = r.checked_div(&b).ok_or_else(|| Error::Genericity(format!("b_0 vanishes at {loc}")))?;
                    self.eliminate(&mut f, &mut g, RF::pole(&loc + &p, 1, G::one()), &lambda);
                }
                Sign::Minus => {
                    // D_p 1/(t - loc) = b_0(t)/(t - loc + p) - 1/(t - loc)
                    self.eliminate(&mut f, &mut g, RF::pole(loc, 1, G::one()), &-r);
                }
            }
        }

        // the layer z_l - a_l + p: b_0 vanishes at z_l - a_l, so the image
        // only has poles at z_k + a_k
        for (loc, tag, r) in self.check_class(&f)? {
            if tag.sign == Sign::Minus {
                self.eliminate(&mut f, &mut g, RF::pole(loc, 1, G::one()), &-r);
            }
        }

        // D_p t^{d+1} = ((d+1) p + 2 sum a) t^d + lower terms + poles at z_k + a_k
        while let Some(d) = f.degree() {
            let lead = &(&p * &G::from(d as i64 + 1)) + &(&self.sum_a * &G::from(2));
            let lambda = f.poly()[d]
                .checked_div(&lead)
                .ok_or_else(|| Error::Genericity(format!("(d+1) p + 2 sum a vanishes for d = {d}")))?;
            self.eliminate(&mut f, &mut g, RF::monomial(G::one(), d + 1), &lambda);
        }

        let layer = plus0(&self.params);
        if let Some((loc, _)) = f.poles().iter().find(|(loc, c)| c.len() > 1 || !layer.contains(loc)) {
            return Err(Error::ClassViolation(format!("unreduced pole at {loc}")));
        }
        let rhs: Vec<G> = layer.iter().map(|c| f.residue(c)).collect();
        let x = self.layer.solve(&rhs).ok_or_else(|| Error::Genericity("singular fundamental layer".into()))?;
        let n = self.params.n();
        g = &g + &RF::constant(x[n - 1].clone());
        Ok(CohomologyClass { coords: x[..n - 1].to_vec(), certificate: g })
    }
}

fn dual_point(params: &ExactParams, ell: usize, sign: Sign, depth: u32) -> G {
    let (z, a, p) = (&params.z[ell - 1], &params.a[ell - 1], &params.p);
    match sign {
        Sign::Minus => &(z - a) + &(p * &G::from(depth as i64 + 1)),
        Sign::Plus => &(z + a) - &(p * &G::from(depth as i64)),
    }
}

/// The points `z_k + a_k`.
fn plus0(params: &ExactParams) -> Vec<G> {
    params.z.iter().zip(&params.a).map(|(z, a)| z + a).collect()
}

pub fn apply_dp(g: &RF, params: &ExactParams) -> Result<RF> {
    Reducer::new(params)?.apply_dp(g)
}

pub fn reduce(f: &RF, params: &ExactParams) -> Result<CohomologyClass> {
    Reducer::new(params)?.reduce(f)
}

/// The matrix `beta_ell(z)` of the discrete connection: column `j` holds the
/// coordinates of `b_ell(t, z) w_j(t, z + p e_ell)`, so that a row of
/// pairings transforms as `Theta(z + p e_ell) = Theta(z) beta_ell(z)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionMatrix {
    pub ell: usize,
    pub entries: ExactMatrix,
}

impl ConnectionMatrix {
    pub fn to_complex(&self) -> nalgebra::DMatrix<Complex> {
        self.entries.to_complex()
    }
}

pub fn beta_matrix(params: &ExactParams, ell: usize) -> Result<ConnectionMatrix> {
    let n = params.n();
    if ell == 0 || ell > n {
        return Err(Error::Domain(format!("ell = {ell} outside 1..={n}")));
    }
    if n < 2 {
        return Err(Error::Domain("the connection needs n >= 2".into()));
    }
    let reducer = Reducer::new(params)?;
    let shifted = params.shifted(ell, 1);
    let b = b_ell_rf(params, ell);
    let columns: Result<Vec<Vec<G>>> = (1..n)
        .into_par_iter()
        .map(|j| Ok(reducer.reduce(&b.mul(&weight_rf(&shifted, j)))?.coords))
        .collect();
    Ok(ConnectionMatrix { ell, entries: ExactMatrix::from_columns(&columns?) })
}

/// Random elements of the function space and of its subspace of
/// certificates, for property tests.
pub mod sample {
    use super::*;

    pub fn dual_point_of(params: &ExactParams, tag: DualTag) -> G {
        dual_point(params, tag.ell, tag.sign, tag.depth)
    }

    /// Random `f` with up to `poles` simple poles of depth `<= max_depth`
    /// and a polynomial part of degree `< poly_len`.
    pub fn random_element<R: Rng + ?Sized>(params: &ExactParams, poles: usize, max_depth: u32, poly_len: usize, rng: &mut R) -> RF {
        let mut f = RF::polynomial((0..rng.random_range(0..=poly_len)).map(|_| G::random(rng, 5, 4)).collect());
        for _ in 0..rng.random_range(1..=poles.max(1)) {
            let tag = DualTag {
                ell: rng.random_range(1..=params.n()),
                sign: if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus },
                depth: rng.random_range(0..=max_depth),
            };
            f = &f + &RF::pole(dual_point_of(params, tag), 1, G::random(rng, 5, 4));
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(s: &str) -> G {
        s.parse().unwrap()
    }

    fn params3() -> ExactParams {
        ExactParams::new(
            vec![g("0"), g("7/10"), g("19/10")],
            vec![g("4/5 i"), g("13/10 i"), g("3/5 i")],
            g("11/10 i"),
            g("2"),
        )
        .unwrap()
    }

    #[test]
    fn dp_examples() {
        let params = params3();
        let r = Reducer::new(&params).unwrap();
        assert!(r.apply_dp(&RF::zero()).unwrap().is_zero());
        let img = r.apply_dp(&RF::constant(G::one())).unwrap();
        assert_eq!(img, &b0_rf(&params) - &RF::constant(G::one()));
        let layer: Vec<G> = plus0(&params);
        assert!(img.poles().keys().all(|k| layer.contains(k)) && img.poles().len() == 3);
        let c = &params.z[0] + &params.a[0];
        let h = RF::pole(c.clone(), 1, G::one());
        let expected = &b0_rf(&params).div_linear(&(&c - &params.p)) - &h;
        assert_eq!(r.apply_dp(&h).unwrap(), expected);
        // a pole on the lattice of Phi_p itself produces a double pole
        let bad = RF::pole(&c + &params.p, 1, G::one());
        assert!(matches!(r.apply_dp(&bad), Err(Error::ClassViolation(_))));
    }

    #[test]
    fn weights_reduce_to_unit_vectors() {
        let params = params3();
        let r = Reducer::new(&params).unwrap();
        for j in 1..3 {
            let class = r.reduce(&weight_rf(&params, j)).unwrap();
            let mut e = vec![G::zero(); 2];
            e[j - 1] = G::one();
            assert_eq!(class.coords, e);
            assert!(class.certificate.is_zero());
        }
        let wn = weight_rf(&params, 3);
        let class = r.reduce(&wn).unwrap();
        assert!(class.coords.iter().any(|c| !c.is_zero()));
        assert!(class.verify(&wn, &r));
    }

    #[test]
    fn images_reduce_to_zero_with_certificates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=4 {
            let params = ExactParams::random_generic(n, &mut rng);
            let r = Reducer::new(&params).unwrap();
            for _ in 0..5 {
                let h = sample::random_element(&params, 3, 4, 3, &mut rng);
                let img = r.apply_dp(&h).unwrap();
                let class = r.reduce(&img).unwrap();
                assert!(class.coords.iter().all(Zero::is_zero));
                assert!(class.verify(&img, &r));
                let f = sample::random_element(&params, 4, 6, 3, &mut rng);
                let class = r.reduce(&f).unwrap();
                assert!(class.verify(&f, &r));
            }
        }
    }

    #[test]
    fn class_and_genericity_errors() {
        let params = params3();
        let r = Reducer::new(&params).unwrap();
        let off = RF::pole(g("1/3"), 1, G::one());
        assert!(matches!(r.reduce(&off), Err(Error::ClassViolation(_))));
        let double = RF::pole(&params.z[0] + &params.a[0], 2, G::one());
        assert!(matches!(r.reduce(&double), Err(Error::ClassViolation(_))));
        let deep = RF::pole(sample::dual_point_of(&params, DualTag { ell: 1, sign: Sign::Plus, depth: MAX_DEPTH + 1 }), 1, G::one());
        assert!(matches!(r.reduce(&deep), Err(Error::ClassViolation(_))));
        let degenerate = ExactParams::new(vec![g("0"), g("1")], vec![g("0"), g("i")], g("i"), g("2")).unwrap();
        assert!(matches!(beta_matrix(&degenerate, 1), Err(Error::Genericity(_))));
        // z_2 + a_2 = z_1 + a_1 - p collides on the dual lattice
        let colliding = ExactParams::new(vec![g("0"), g("0")], vec![g("2 i"), g("i")], g("i"), g("2")).unwrap();
        assert!(matches!(Reducer::new(&colliding), Err(Error::Genericity(_))));
    }

    #[test]
    fn n2_beta_closed_form() {
        // Barnes' lemma gives beta = (z2 - z1 - a1 - a2)/(z2 - z1 + a1 + a2)
        let params = ExactParams::new(vec![g("1/3"), g("2")], vec![g("4/3 i"), g("5/4 i")], g("i"), g("2")).unwrap();
        let beta = beta_matrix(&params, 1).unwrap();
        let d = &params.z[1] - &params.z[0];
        let s = &params.a[0] + &params.a[1];
        assert_eq!(beta.entries[(0, 0)], &(&d - &s) / &(&d + &s));
    }

    #[test]
    fn b_compatibility_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = ExactParams::random_generic(3, &mut rng);
        // S_0 shifts t by p, S_k shifts z_k by p
        let b = |q: &ExactParams, k: usize| if k == 0 { b0_rf(q) } else { b_ell_rf(q, k) };
        let moved = |k: usize, m: usize| -> RF {
            if k == 0 { b(&params, m).shift(&params.p) } else { b(&params.shifted(k, 1), m) }
        };
        for k in 0..=3 {
            for m in 0..=3 {
                let lhs = moved(k, m).mul(&b(&params, k));
                let rhs = moved(m, k).mul(&b(&params, m));
                assert_eq!(lhs, rhs, "pair ({k}, {m})");
            }
        }
    }
}
