//! Dense helpers for the small matrices that appear in the models
//! (state dimension and the 2x2 information matrices).

use crate::scalar::Scalar;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> SquareMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, S::one());
        }
        m
    }

    /// Builds a matrix from row-major data; `None` when the length is not a square.
    pub fn from_row_major(data: Vec<S>) -> Option<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        (dim * dim == data.len()).then_some(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Option<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn transpose_mul_self(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = (0..n).map(|k| self.get(k, i) * self.get(k, j)).sum();
                out.set(i, j, v);
            }
        }
        out
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> S {
        if self.dim == 1 {
            return self.data[0].abs();
        }
        let (eig, _) = symmetric_eigen(&self.transpose_mul_self());
        eig.into_iter()
            .fold(S::zero(), |m, v| m.max(v))
            .max(S::zero())
            .sqrt()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, eigenvectors)` where eigenvector `k` is column `k`
/// of the returned matrix.
pub fn symmetric_eigen<S: Scalar>(m: &SquareMatrix<S>) -> (Vec<S>, SquareMatrix<S>) {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = SquareMatrix::identity(n);
    let two = S::lit(2.0);
    for _sweep in 0..100 {
        let off: S = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j) * a.get(i, j))
            .sum();
        let scale: S = a.as_slice().iter().map(|x| *x * *x).sum();
        if off <= S::epsilon() * S::epsilon() * scale.max(S::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == S::zero() {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| a.get(i, i)).collect(), v)
}

/// Moore-Penrose pseudoinverse of a symmetric positive semidefinite matrix.
/// Eigenvalues below `rel_tol * max_eigenvalue` are treated as zero.
pub fn pinv_symmetric<S: Scalar>(m: &SquareMatrix<S>, rel_tol: S) -> SquareMatrix<S> {
    let n = m.dim();
    let (eig, vecs) = symmetric_eigen(m);
    let max = eig.iter().fold(S::zero(), |acc, v| acc.max(v.abs()));
    let mut out = SquareMatrix::zeros(n);
    if max == S::zero() {
        return out;
    }
    for (k, &lambda) in eig.iter().enumerate() {
        if lambda.abs() <= rel_tol * max {
            continue;
        }
        let inv = S::one() / lambda;
        for i in 0..n {
            for j in 0..n {
                let v = out.get(i, j) + inv * vecs.get(i, k) * vecs.get(j, k);
                out.set(i, j, v);
            }
        }
    }
    out
}

/// `v^T M v`.
pub fn quadratic_form<S: Scalar>(m: &SquareMatrix<S>, v: &[S]) -> S {
    let mv = m.mul_vec(v);
    v.iter().zip(mv).map(|(a, b)| *a * b).sum()
}
