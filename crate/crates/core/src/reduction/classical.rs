//! Twisted de Rham reduction for `Phi = prod (t - z_l)^{alpha_l}`:
//! forms are taken modulo `nabla g = g' + g omega`, `omega = sum alpha_l/(t - z_l)`,
//! and reduced to the basis `1/(t - z_l)`, `l < n`.

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use super::discrete::ExactParams;
use super::gaussian::G;
use super::linalg::ExactMatrix;
use super::ratfunc::RationalFunction as RF;
use crate::error::{Error, Result};

/// `f = sum_l coords_l/(t - z_l) + nabla(certificate)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalClass {
    pub coords: Vec<G>,
    pub certificate: RF,
}

pub struct ClassicalReducer {
    z: Vec<G>,
    alpha: Vec<G>,
    omega: RF,
    sum_alpha: G,
}

impl ClassicalReducer {
    /// Exponents are `a_l / kappa`.
    pub fn new(params: &ExactParams) -> Result<Self> {
        let z = params.z().to_vec();
        let alpha = params.alpha();
        for i in 0..z.len() {
            if z[i + 1..].contains(&z[i]) {
                return Err(Error::Genericity(format!("z_{} repeats", i + 1)));
            }
        }
        if alpha.last().is_none_or(Zero::is_zero) {
            return Err(Error::Genericity("alpha_n = 0".into()));
        }
        let omega = z.iter().zip(&alpha).fold(RF::zero(), |acc, (z, a)| &acc + &RF::pole(z.clone(), 1, a.clone()));
        let sum_alpha = alpha.iter().fold(G::zero(), |acc, a| &acc + a);
        Ok(Self { z, alpha, omega, sum_alpha })
    }

    pub fn nabla(&self, g: &RF) -> RF {
        &g.derivative() + &g.mul(&self.omega)
    }

    fn eliminate(&self, f: &mut RF, g: &mut RF, h: RF, lambda: &G) {
        *f = &*f - &self.nabla(&h).scale(lambda);
        *g = &*g + &h.scale(lambda);
    }

    pub fn reduce(&self, f: &RF) -> Result<ClassicalClass> {
        let n = self.z.len();
        let mut f = f.clone();
        let mut g = RF::zero();
        if let Some(loc) = f.poles().keys().find(|k| !self.z.contains(k)) {
            return Err(Error::ClassViolation(format!("pole at {loc} is not one of the z_l")));
        }
        // lower pole orders: nabla (t - z_k)^{1-r} has top coefficient alpha_k - (r - 1)
        loop {
            let Some((k, r, coeff)) = self.z.iter().enumerate().find_map(|(k, zk)| {
                let c = f.poles().get(zk)?;
                (c.len() > 1).then(|| (k, c.len(), c[c.len() - 1].clone()))
            }) else {
                break;
            };
            let lead = &self.alpha[k] - &G::from(r as i64 - 1);
            let lambda = coeff
                .checked_div(&lead)
                .ok_or_else(|| Error::Genericity(format!("alpha_{} = {} is resonant", k + 1, r - 1)))?;
            self.eliminate(&mut f, &mut g, RF::pole(self.z[k].clone(), r - 1, G::one()), &lambda);
        }
        // nabla t^{d+1} = (d + 1 + sum alpha) t^d + ...
        while let Some(d) = f.degree() {
            let lead = &G::from(d as i64 + 1) + &self.sum_alpha;
            let lambda = f.poly()[d]
                .checked_div(&lead)
                .ok_or_else(|| Error::Genericity(format!("sum alpha = -{}", d + 1)))?;
            self.eliminate(&mut f, &mut g, RF::monomial(G::one(), d + 1), &lambda);
        }
        // nabla 1 = omega removes the residue at z_n
        let rn = f.residue(&self.z[n - 1]);
        if !rn.is_zero() {
            let lambda = &rn / &self.alpha[n - 1];
            self.eliminate(&mut f, &mut g, RF::constant(G::one()), &lambda);
        }
        let coords = self.z[..n - 1].iter().map(|z| f.residue(z)).collect();
        Ok(ClassicalClass { coords, certificate: g })
    }

    pub fn verify(&self, f: &RF, class: &ClassicalClass) -> bool {
        let mut rhs = self.nabla(&class.certificate);
        for (z, c) in self.z.iter().zip(&class.coords) {
            rhs = &rhs + &RF::pole(z.clone(), 1, c.clone());
        }
        &rhs == f
    }
}

pub fn classical_reduce(f: &RF, params: &ExactParams) -> Result<ClassicalClass> {
    ClassicalReducer::new(params)?.reduce(f)
}

/// `A_i` with `d/dz_i [Phi/(t - z_l)] = sum_k (A_i)_{kl} Phi/(t - z_k)` modulo
/// exact forms, `k, l < n`; for the row vector `Psi_l = int Phi/(t - z_l)` this
/// reads `dPsi/dz_i = Psi A_i`.
pub fn gauss_manin(params: &ExactParams, i: usize) -> Result<ExactMatrix> {
    let n = params.n();
    if i == 0 || i > n || n < 2 {
        return Err(Error::Domain(format!("i = {i} outside 1..={n}")));
    }
    let reducer = ClassicalReducer::new(params)?;
    let z = params.z();
    let ai = &params.alpha()[i - 1];
    let mut columns = Vec::with_capacity(n - 1);
    for l in 1..n {
        let mut form = RF::pole(z[i - 1].clone(), 1, -ai).div_linear(&z[l - 1]);
        if l == i {
            form = &form + &RF::pole(z[l - 1].clone(), 2, G::one());
        }
        columns.push(reducer.reduce(&form)?.coords);
    }
    Ok(ExactMatrix::from_columns(&columns))
}

/// The same matrices from the partial-fraction formulas
/// `dPsi_l/dz_i = -alpha_i/(z_i - z_l) (Psi_i - Psi_l)` for `l != i`,
/// `dPsi_i/dz_i = sum_{j != i} alpha_j/(z_i - z_j) (Psi_i - Psi_j)`,
/// with `Psi_n = -sum_{k<n} (alpha_k/alpha_n) Psi_k`.
pub fn gauss_manin_closed_form(params: &ExactParams, i: usize) -> Result<ExactMatrix> {
    let n = params.n();
    if i == 0 || i > n || n < 2 {
        return Err(Error::Domain(format!("i = {i} outside 1..={n}")));
    }
    let z = params.z();
    let alpha = params.alpha();
    // full n x (n-1) matrix in terms of Psi_1..Psi_n, then fold Psi_n away
    let mut full = ExactMatrix::zeros(n, n - 1);
    let i0 = i - 1;
    for l in 0..n - 1 {
        if l != i0 {
            let c = &-&alpha[i0] / &(&z[i0] - &z[l]);
            full[(i0, l)] += &c;
            full[(l, l)] -= &c;
        } else {
            for j in (0..n).filter(|&j| j != i0) {
                let c = &alpha[j] / &(&z[i0] - &z[j]);
                full[(i0, l)] += &c;
                full[(j, l)] -= &c;
            }
        }
    }
    let mut out = ExactMatrix::zeros(n - 1, n - 1);
    for l in 0..n - 1 {
        for k in 0..n - 1 {
            let fold = &(&alpha[k] / &alpha[n - 1]) * &full[(n - 1, l)];
            out[(k, l)] = &full[(k, l)] - &fold;
        }
    }
    Ok(out)
}

/// `sum_l alpha_l Psi_l = 0`: the coordinates of `1/(t - z_n)`.
pub fn last_pole_coords(params: &ExactParams) -> Vec<G> {
    let alpha = params.alpha();
    let n = params.n();
    alpha[..n - 1].iter().map(|a| -(a / &alpha[n - 1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::ratfunc::RationalFunction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(s: &str) -> G {
        s.parse().unwrap()
    }

    fn params() -> ExactParams {
        ExactParams::new(vec![g("0"), g("1"), g("3")], vec![g("1/3"), g("1/2"), g("1/4")], g("i"), g("1")).unwrap()
    }

    #[test]
    fn basis_and_exact_forms() {
        let p = params();
        let r = ClassicalReducer::new(&p).unwrap();
        let e1 = r.reduce(&RF::pole(g("0"), 1, G::one())).unwrap();
        assert_eq!(e1.coords, vec![G::one(), G::zero()]);
        assert!(e1.certificate.is_zero());
        let h = RationalFunction::polynomial(vec![g("2"), g("-1/3+i"), g("5")]);
        let exact = r.nabla(&h);
        let class = r.reduce(&exact).unwrap();
        assert!(class.coords.iter().all(Zero::is_zero));
        let last = RF::pole(g("3"), 1, G::one());
        let class = r.reduce(&last).unwrap();
        assert_eq!(class.coords, last_pole_coords(&p));
        assert!(r.verify(&last, &class));
        let messy = &RF::pole(g("1"), 3, g("2")) + &RationalFunction::polynomial(vec![g("1"), g("1")]);
        let class = r.reduce(&messy).unwrap();
        assert!(r.verify(&messy, &class));
        assert!(matches!(r.reduce(&RF::pole(g("2"), 1, G::one())), Err(Error::ClassViolation(_))));
    }

    #[test]
    fn resonance_is_rejected() {
        let p = ExactParams::new(vec![g("0"), g("1")], vec![g("1"), g("1/2")], g("i"), g("1")).unwrap();
        // alpha_1 = 1 makes the order-2 elimination at z_1 singular
        assert!(matches!(classical_reduce(&RF::pole(g("0"), 2, G::one()), &p), Err(Error::Genericity(_))));
    }

    #[test]
    fn gauss_manin_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4 {
            let p = ExactParams::random_generic(n, &mut rng);
            for i in 1..=n {
                assert_eq!(gauss_manin(&p, i).unwrap(), gauss_manin_closed_form(&p, i).unwrap());
            }
        }
    }

    #[test]
    fn gauss_manin_translation_covariant() {
        let p = params();
        let c = g("7/3-2 i");
        let moved = ExactParams::new(p.z().iter().map(|z| z + &c).collect(), p.a().to_vec(), p.p().clone(), p.kappa().clone()).unwrap();
        for i in 1..=3 {
            assert_eq!(gauss_manin(&p, i).unwrap(), gauss_manin(&moved, i).unwrap());
        }
        // sum over i of A_i vanishes: translating all points leaves Psi fixed
        let total = (1..=3).fold(ExactMatrix::zeros(2, 2), |acc, i| acc.sub(&gauss_manin(&p, i).unwrap().scale(&-G::one())));
        assert!(total.is_zero());
    }
}
