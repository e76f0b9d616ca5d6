//! Small dense symmetric linear algebra.
//!
//! The regression estimator maintains a d x d inverse covariance through
//! rank-one updates and cross-checks it against fresh Cholesky solves, and
//! the families expose their Hessians as matrices. Dimensions stay in the
//! single digits, so a hand-rolled row-major matrix is simpler than pulling
//! in a full linear-algebra stack and keeps everything generic over the
//! scalar type.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, S::one())
    }

    pub fn scaled_identity(dim: usize, scale: S) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, scale);
        }
        m
    }

    pub fn diagonal(entries: &[S]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from row-major entries; `data.len()` must be `dim^2`.
    pub fn from_row_major(dim: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> S {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: S) {
        self.data[row * self.dim + col] = value;
    }

    pub fn is_symmetric(&self, tol: S) -> bool {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// `self += scale * x x^T`
    pub fn add_outer(&mut self, x: &[S], scale: S) {
        debug_assert_eq!(x.len(), self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j) + scale * x[i] * x[j];
                self.set(i, j, v);
            }
        }
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                let aik = self.get(i, k);
                for j in 0..self.dim {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// `x^T self x`
    pub fn quad_form(&self, x: &[S]) -> S {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = S::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += x[i] * self.get(i, j) * x[j];
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn cholesky(&self) -> Result<Cholesky<S>> {
        let n = self.dim;
        let mut lower = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= lower.get(i, k) * lower.get(j, k);
                }
                if i == j {
                    if !(sum > S::zero()) || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    lower.set(i, i, sum.sqrt());
                } else {
                    lower.set(i, j, sum / lower.get(j, j));
                }
            }
        }
        Ok(Cholesky { lower })
    }

    /// Solves `self * out = rhs` through a fresh Cholesky factorization.
    pub fn solve(&self, rhs: &[S]) -> Result<Vec<S>> {
        Ok(self.cholesky()?.solve(rhs))
    }

    pub fn inverse(&self) -> Result<Self> {
        let chol = self.cholesky()?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        let mut unit = vec![S::zero(); n];
        for col in 0..n {
            unit[col] = S::one();
            let solved = chol.solve(&unit);
            unit[col] = S::zero();
            for (row, &v) in solved.iter().enumerate() {
                out.set(row, col, v);
            }
        }
        Ok(out)
    }

    /// Treats `self` as the inverse of some positive definite `A` and
    /// rewrites it in place as the inverse of `A + x x^T`:
    ///
    /// `(A + x x^T)^-1 = A^-1 - (A^-1 x)(A^-1 x)^T / (1 + x^T A^-1 x)`
    pub fn rank_one_inverse_update(&mut self, x: &[S]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        let u = self.mul_vec(x);
        let denom = S::one() + dot(x, &u);
        if !(denom > S::zero()) || !denom.is_finite() {
            return Err(Error::Numerical(format!(
                "rank-one update denominator {denom} is not positive"
            )));
        }
        self.add_outer(&u, -denom.recip());
        Ok(())
    }
}

pub struct Cholesky<S> {
    lower: Matrix<S>,
}

impl<S: Scalar> Cholesky<S> {
    pub fn solve(&self, rhs: &[S]) -> Vec<S> {
        let n = self.lower.dim();
        debug_assert_eq!(rhs.len(), n);
        // forward substitution: L y = rhs
        let mut y = vec![S::zero(); n];
        for i in 0..n {
            let mut sum = rhs[i];
            for (k, &yk) in y.iter().enumerate().take(i) {
                sum -= self.lower.get(i, k) * yk;
            }
            y[i] = sum / self.lower.get(i, i);
        }
        // back substitution: L^T x = y
        let mut x = vec![S::zero(); n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for (k, &xk) in x.iter().enumerate().skip(i + 1) {
                sum -= self.lower.get(k, i) * xk;
            }
            x[i] = sum / self.lower.get(i, i);
        }
        x
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
