//! Exact rational matrices: products, Gauss–Jordan inversion, rank and the
//! Moore–Penrose pseudo-inverse via a full-rank factorization.

use alloc::vec;
use alloc::vec::Vec;

pub use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Dense row-major matrix of exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> RatMatrix {
        RatMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> RatMatrix {
        let mut m = RatMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> BigRational>(rows: usize, cols: usize, mut f: F) -> RatMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RatMatrix { rows, cols, data }
    }

    pub fn transpose(&self) -> RatMatrix {
        RatMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, o: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, o.rows);
        let mut r = RatMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        r.data[i * o.cols + j] += a * b;
                    }
                }
            }
        }
        r
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = BigRational::zero();
                for (k, vk) in v.iter().enumerate() {
                    let a = &self[(i, k)];
                    if !a.is_zero() && !vk.is_zero() {
                        acc += a * vk;
                    }
                }
                acc
            })
            .collect()
    }

    pub fn sub(&self, o: &RatMatrix) -> RatMatrix {
        RatMatrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &o[(i, j)])
    }

    pub fn add(&self, o: &RatMatrix) -> RatMatrix {
        RatMatrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &o[(i, j)])
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Reduced row-echelon form and the pivot columns.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(piv) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, piv);
            let inv = m[(row, col)].recip();
            for j in 0..m.cols {
                let v = &m[(row, j)] * &inv;
                m[(row, j)] = v;
            }
            for r in 0..m.rows {
                if r != row && !m[(r, col)].is_zero() {
                    let f = m[(r, col)].clone();
                    for j in 0..m.cols {
                        let v = &m[(row, j)] * &f;
                        if !v.is_zero() {
                            m.data[r * m.cols + j] -= v;
                        }
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Exact inverse, or `None` when singular.
    pub fn inverse(&self) -> Option<RatMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = RatMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = BigRational::one();
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(RatMatrix::from_fn(n, n, |i, j| r[(i, n + j)].clone()))
    }

    /// Moore–Penrose pseudo-inverse from the full-rank factorization
    /// `A = C·F` (C = pivot columns of A, F = nonzero rows of rref(A)):
    /// `A⁺ = Fᵀ (F Fᵀ)⁻¹ (Cᵀ C)⁻¹ Cᵀ`.
    pub fn pseudo_inverse(&self) -> RatMatrix {
        let (r, pivots) = self.rref();
        let k = pivots.len();
        if k == 0 {
            return RatMatrix::zeros(self.cols, self.rows);
        }
        let c = RatMatrix::from_fn(self.rows, k, |i, j| self[(i, pivots[j])].clone());
        let f = RatMatrix::from_fn(k, self.cols, |i, j| r[(i, j)].clone());
        let ft = f.transpose();
        let ct = c.transpose();
        let ffi = f.mul(&ft).inverse().expect("full-rank factor");
        let cci = ct.mul(&c).inverse().expect("full-rank factor");
        ft.mul(&ffi).mul(&cci).mul(&ct)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

impl core::ops::Index<(usize, usize)> for RatMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

/// Convert an exact rational to the nearest `f64`.
pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational from an integer.
pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Exact rational `n/d`.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[i64]) -> RatMatrix {
        RatMatrix::from_fn(rows, cols, |i, j| rat(v[i * cols + j]))
    }

    #[test]
    fn inverse_of_s2_gram() {
        // [[d², d],[d, d²]]⁻¹ = (d²−1)⁻¹ [[1, −1/d],[−1/d, 1]] at d=3.
        let g = m(2, 2, &[9, 3, 3, 9]);
        let w = g.inverse().unwrap();
        assert_eq!(w[(0, 0)], ratio(1, 8));
        assert_eq!(w[(0, 1)], ratio(-1, 24));
        assert_eq!(g.mul(&w), RatMatrix::identity(2));
    }

    #[test]
    fn pseudo_inverse_penrose_conditions() {
        let a = m(3, 3, &[1, 2, 3, 2, 4, 6, 1, 0, 1]);
        assert_eq!(a.rank(), 2);
        assert!(a.inverse().is_none());
        let p = a.pseudo_inverse();
        assert_eq!(a.mul(&p).mul(&a), a);
        assert_eq!(p.mul(&a).mul(&p), p);
        assert!(a.mul(&p).is_symmetric());
        assert!(p.mul(&a).is_symmetric());
    }
}
