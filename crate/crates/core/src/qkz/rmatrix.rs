//! R-matrix providers, the Yang-Baxter residual, and the qKZ operators
//! `K_m` assembled from them.

use nalgebra::DMatrix;

use crate::complexfn::Complex;
use crate::error::{Error, Result};

/// A family `R_{V_i, V_j}(x)` acting on `V_i (x) V_j`; basis index
/// `a * dim(j) + b` for `v_a (x) v_b`.
pub trait RProvider: Sync {
    fn dim(&self, i: usize) -> usize;

    fn r_matrix(&self, i: usize, j: usize, x: Complex) -> Result<DMatrix<Complex>>;

    /// Index of the highest-weight vector `v_i` in `V_i`.
    fn highest_weight(&self, _i: usize) -> usize {
        0
    }

    /// Weight grading of basis vectors; `R` must preserve the total weight.
    fn weight(&self, _i: usize, _basis: usize) -> i64 {
        0
    }
}

fn one() -> Complex {
    Complex::new(1.0, 0.0)
}

/// `R = 1` on `C^d (x) C^d`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityR {
    pub d: usize,
}

impl RProvider for IdentityR {
    fn dim(&self, _i: usize) -> usize {
        self.d
    }

    fn r_matrix(&self, _i: usize, _j: usize, _x: Complex) -> Result<DMatrix<Complex>> {
        Ok(DMatrix::identity(self.d * self.d, self.d * self.d))
    }
}

fn flip(d: usize) -> DMatrix<Complex> {
    let mut m = DMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            m[(b * d + a, a * d + b)] = one();
        }
    }
    m
}

/// The constant permutation `v (x) w -> w (x) v`.
#[derive(Clone, Copy, Debug)]
pub struct FlipR {
    pub d: usize,
}

impl RProvider for FlipR {
    fn dim(&self, _i: usize) -> usize {
        self.d
    }

    fn r_matrix(&self, _i: usize, _j: usize, _x: Complex) -> Result<DMatrix<Complex>> {
        Ok(flip(self.d))
    }
}

/// The rational solution `(x + eta P) / (x + eta)` on `C^2 (x) C^2`, with the
/// weight of a basis vector its excitation number.
#[derive(Clone, Copy, Debug)]
pub struct YangR {
    pub eta: Complex,
}

impl RProvider for YangR {
    fn dim(&self, _i: usize) -> usize {
        2
    }

    fn r_matrix(&self, _i: usize, _j: usize, x: Complex) -> Result<DMatrix<Complex>> {
        let den = x + self.eta;
        if den.norm() == 0.0 {
            return Err(Error::Pole(format!("R(x) has a pole at x = {x}")));
        }
        Ok((DMatrix::identity(4, 4) * x + flip(2) * self.eta) / den)
    }

    fn weight(&self, _i: usize, basis: usize) -> i64 {
        basis as i64
    }
}

/// Restriction of `R_{ij}(x)` to the one-excitation sector
/// `{v_0 (x) v_1, v_1 (x) v_0}`.
pub fn one_excitation_sector<R: RProvider + ?Sized>(r: &R, i: usize, j: usize, x: Complex) -> Result<DMatrix<Complex>> {
    let full = r.r_matrix(i, j, x)?;
    let dj = r.dim(j);
    let idx = [1, dj];
    Ok(DMatrix::from_fn(2, 2, |a, b| full[(idx[a], idx[b])]))
}

/// Lifts an operator on legs `(a, b)` (in that order) to the full product.
pub fn embed(op: &DMatrix<Complex>, dims: &[usize], a: usize, b: usize) -> Result<DMatrix<Complex>> {
    if a == b || a >= dims.len() || b >= dims.len() {
        return Err(Error::Shape(format!("legs ({a}, {b}) invalid for {} factors", dims.len())));
    }
    let (da, db) = (dims[a], dims[b]);
    if op.nrows() != da * db || op.ncols() != da * db {
        return Err(Error::Shape(format!("operator is {}x{}, legs need {}", op.nrows(), op.ncols(), da * db)));
    }
    let total: usize = dims.iter().product();
    let mut strides = vec![1; dims.len()];
    for k in (0..dims.len() - 1).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let mut out = DMatrix::zeros(total, total);
    for col in 0..total {
        let (ja, jb) = ((col / strides[a]) % da, (col / strides[b]) % db);
        let base = col - ja * strides[a] - jb * strides[b];
        for p in 0..da {
            for q in 0..db {
                let v = op[(p * db + q, ja * db + jb)];
                if v != Complex::new(0.0, 0.0) {
                    out[(base + p * strides[a] + q * strides[b], col)] += v;
                }
            }
        }
    }
    Ok(out)
}

/// Frobenius norm of
/// `R_ij(x) R_ik(x+y) R_jk(y) - R_jk(y) R_ik(x+y) R_ij(x)` on `V_i (x) V_j (x) V_k`.
pub fn yang_baxter_check<R: RProvider + ?Sized>(r: &R, i: usize, j: usize, k: usize, x: Complex, y: Complex) -> Result<f64> {
    let dims = [r.dim(i), r.dim(j), r.dim(k)];
    let rij = embed(&r.r_matrix(i, j, x)?, &dims, 0, 1)?;
    let rik = embed(&r.r_matrix(i, k, x + y)?, &dims, 0, 2)?;
    let rjk = embed(&r.r_matrix(j, k, y)?, &dims, 1, 2)?;
    Ok((&rij * &rik * &rjk - &rjk * &rik * &rij).norm())
}

/// Checks that `R_ij(x)` fixes `v_i (x) v_j` and preserves total weight.
pub fn check_normalization<R: RProvider + ?Sized>(r: &R, i: usize, j: usize, x: Complex) -> Result<f64> {
    let m = r.r_matrix(i, j, x)?;
    let dj = r.dim(j);
    let hw = r.highest_weight(i) * dj + r.highest_weight(j);
    let mut dev: f64 = 0.0;
    for row in 0..m.nrows() {
        let target = if row == hw { one() } else { Complex::new(0.0, 0.0) };
        dev = dev.max((m[(row, hw)] - target).norm());
        for col in 0..m.ncols() {
            let w = |idx: usize| r.weight(i, idx / dj) + r.weight(j, idx % dj);
            if w(row) != w(col) {
                dev = dev.max(m[(row, col)].norm());
            }
        }
    }
    Ok(dev)
}

/// `K_m = R_{m,m-1}(z_m - z_{m-1} + p) ... R_{m,1}(z_m - z_1 + p)
///        R_{m,n}(z_m - z_n) ... R_{m,m+1}(z_m - z_{m+1})`, `m` 1-based.
pub fn assemble_k<R: RProvider + ?Sized>(r: &R, z: &[Complex], p: Complex, m: usize) -> Result<DMatrix<Complex>> {
    let n = z.len();
    if m == 0 || m > n {
        return Err(Error::Shape(format!("m = {m} outside 1..={n}")));
    }
    let dims: Vec<usize> = (1..=n).map(|i| r.dim(i)).collect();
    let total: usize = dims.iter().product();
    let mut k = DMatrix::identity(total, total);
    let zm = z[m - 1];
    for j in (1..m).rev() {
        k *= embed(&r.r_matrix(m, j, zm - z[j - 1] + p)?, &dims, m - 1, j - 1)?;
    }
    for j in (m + 1..=n).rev() {
        k *= embed(&r.r_matrix(m, j, zm - z[j - 1])?, &dims, m - 1, j - 1)?;
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn yang_baxter_examples() {
        let (x, y) = (c(0.3, 0.7), c(-1.1, 0.2));
        assert_eq!(yang_baxter_check(&IdentityR { d: 3 }, 1, 2, 3, x, y).unwrap(), 0.0);
        assert_eq!(yang_baxter_check(&FlipR { d: 2 }, 1, 2, 3, x, y).unwrap(), 0.0);
        let yang = YangR { eta: c(0.0, 1.3) };
        assert!(yang_baxter_check(&yang, 1, 2, 3, x, y).unwrap() < 1e-12);
        assert!(check_normalization(&yang, 1, 2, x).unwrap() < 1e-15);
        // the one-excitation block of R(x) is [[x, eta], [eta, x]] / (x + eta)
        let s = one_excitation_sector(&yang, 1, 2, x).unwrap();
        let den = x + yang.eta;
        assert!((s[(0, 0)] - x / den).norm() < 1e-15 && (s[(0, 1)] - yang.eta / den).norm() < 1e-15);
    }

    #[test]
    fn yang_baxter_fails_for_a_wrong_family() {
        // (x + eta P)/(x + eta) with the sign of the spectral shift flipped on one factor
        struct Broken;
        impl RProvider for Broken {
            fn dim(&self, _i: usize) -> usize {
                2
            }
            fn r_matrix(&self, _i: usize, _j: usize, x: Complex) -> Result<DMatrix<Complex>> {
                Ok(DMatrix::identity(4, 4) * x * x + flip(2))
            }
        }
        assert!(yang_baxter_check(&Broken, 1, 2, 3, c(0.3, 0.1), c(0.5, -0.2)).unwrap() > 1e-3);
    }

    #[test]
    fn embed_rejects_bad_shapes() {
        let op = DMatrix::<Complex>::identity(4, 4);
        assert!(matches!(embed(&op, &[2, 3], 0, 1), Err(Error::Shape(_))));
        assert!(matches!(embed(&op, &[2, 2], 1, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn k_products() {
        let z = [c(0.1, 0.0), c(1.3, 0.0), c(2.2, 0.0)];
        let p = c(0.0, 0.9);
        let id = assemble_k(&IdentityR { d: 2 }, &z, p, 2).unwrap();
        assert_eq!(id, DMatrix::identity(8, 8));
        let yang = YangR { eta: c(0.0, 1.3) };
        let k1 = assemble_k(&yang, &z[..2], p, 1).unwrap();
        assert!((k1 - yang.r_matrix(1, 2, z[0] - z[1]).unwrap()).norm() < 1e-15);
        // hand-expanded n = 3 products
        let dims = [2, 2, 2];
        let r = |i: usize, j: usize, x: Complex| embed(&yang.r_matrix(i, j, x).unwrap(), &dims, i - 1, j - 1).unwrap();
        let k2 = r(2, 1, z[1] - z[0] + p) * r(2, 3, z[1] - z[2]);
        assert!((assemble_k(&yang, &z, p, 2).unwrap() - k2).norm() < 1e-14);
        let k3 = r(3, 2, z[2] - z[1] + p) * r(3, 1, z[2] - z[0] + p);
        assert!((assemble_k(&yang, &z, p, 3).unwrap() - k3).norm() < 1e-14);
        let k1 = r(1, 3, z[0] - z[2]) * r(1, 2, z[0] - z[1]);
        assert!((assemble_k(&yang, &z, p, 1).unwrap() - k1).norm() < 1e-14);
    }

    #[test]
    fn k_operators_are_compatible() {
        // K_l(z + p e_m) K_m(z) = K_m(z + p e_l) K_l(z) for a unitary Yang-Baxter family
        let z = [c(0.1, 0.0), c(1.3, 0.0), c(2.2, 0.0)];
        let p = c(0.0, 0.9);
        let yang = YangR { eta: c(0.0, 1.3) };
        let shift = |k: usize| {
            let mut out = z;
            out[k - 1] += p;
            out
        };
        for l in 1..=3 {
            for m in 1..=3 {
                let lhs = assemble_k(&yang, &shift(m), p, l).unwrap() * assemble_k(&yang, &z, p, m).unwrap();
                let rhs = assemble_k(&yang, &shift(l), p, m).unwrap() * assemble_k(&yang, &z, p, l).unwrap();
                assert!((lhs - rhs).norm() < 1e-12, "({l}, {m})");
            }
        }
    }
}
