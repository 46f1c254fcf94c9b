//! Dense matrices over the Gaussian rationals.

use std::fmt;
use std::ops::Mul;

use nalgebra::DMatrix;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use super::gaussian::G;
use crate::complexfn::Complex;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<G>,
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![G::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = G::one();
        }
        m
    }

    pub fn from_columns(columns: &[Vec<G>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged columns");
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<G> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: &G) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn to_complex(&self) -> DMatrix<Complex> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_complex())
    }

    /// Solves `self * x = b` by Gaussian elimination; `None` if singular.
    pub fn solve(&self, b: &[G]) -> Option<Vec<G>> {
        let n = self.rows;
        assert_eq!(n, self.cols, "square system expected");
        assert_eq!(n, b.len());
        let mut a: Vec<Vec<G>> = (0..n).map(|i| (0..n).map(|j| self[(i, j)].clone()).chain([b[i].clone()]).collect()).collect();
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, piv);
            let inv = a[col][col].inv()?;
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let factor = &a[r][col] * &inv;
                for k in col..=n {
                    let delta = &factor * &a[col][k];
                    a[r][k] -= &delta;
                }
            }
        }
        Some((0..n).map(|i| &a[i][n] / &a[i][i]).collect())
    }

    pub fn det(&self) -> G {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a: Vec<Vec<G>> = (0..n).map(|i| (0..n).map(|j| self[(i, j)].clone()).collect()).collect();
        let mut det = G::one();
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
                return G::zero();
            };
            if piv != col {
                a.swap(col, piv);
                det = -det;
            }
            det *= &a[col][col];
            let inv = a[col][col].inv().expect("nonzero pivot");
            for r in col + 1..n {
                let factor = &a[r][col] * &inv;
                for k in col..n {
                    let delta = &factor * &a[col][k];
                    a[r][k] -= &delta;
                }
            }
        }
        det
    }

    pub fn checked_mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::Shape(format!("{}x{} times {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = G::zero();
                for k in 0..self.cols {
                    acc += &(&self[(i, k)] * &o[(k, j)]);
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for ExactMatrix {
    type Output = G;
    fn index(&self, (i, j): (usize, usize)) -> &G {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ExactMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut G {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul<&ExactMatrix> for &ExactMatrix {
    type Output = ExactMatrix;
    fn mul(self, o: &ExactMatrix) -> ExactMatrix {
        self.checked_mul(o).expect("matrix shapes agree")
    }
}

impl fmt::Display for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> G {
        s.parse().unwrap()
    }

    #[test]
    fn solve_and_det() {
        let m = ExactMatrix::from_columns(&[vec![g("0"), g("2"), g("1")], vec![g("1+i"), g("1/2"), g("0")], vec![g("3"), g("0"), g("-1")]]);
        let b = vec![g("1"), g("2 i"), g("-3/4")];
        let x = m.solve(&b).unwrap();
        let mx = &m * &ExactMatrix::from_columns(&[x]);
        assert_eq!(mx.column(0), b);
        // cofactor expansion along the first row
        let det = &(&g("0") * &(&(&g("1/2") * &g("-1")) - &(&g("0") * &g("0"))))
            - &(&g("1+i") * &(&(&g("2") * &g("-1")) - &(&g("0") * &g("1"))))
            + &g("3") * &(&(&g("2") * &g("0")) - &(&g("1/2") * &g("1")));
        assert_eq!(m.det(), det);
        let singular = ExactMatrix::from_columns(&[vec![g("1"), g("2")], vec![g("2"), g("4")]]);
        assert!(singular.solve(&[g("1"), g("1")]).is_none());
        assert!(singular.det().is_zero());
    }
}
