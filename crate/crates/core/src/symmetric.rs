//! Symmetric matrices with packed upper-triangle storage and a cyclic
//! Jacobi eigenvalue solver.

use crate::linalg::Matrix;
use crate::scalar::Real;

/// Exactly symmetric by storage: only the upper triangle is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T> {
    dim: usize,
    upper: Vec<T>,
}

impl<T: Real> SymmetricMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            upper: vec![T::zero(); dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); dim])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Reads the upper triangle of a dense square matrix.
    pub fn from_upper(m: &Matrix<T>) -> Self {
        Self::from_fn(m.rows().min(m.cols()), |i, j| m[(i, j)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.upper[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.offset(i, j);
        self.upper[k] = v;
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    /// Principal submatrix on rows/columns `start..start + len`.
    pub fn principal_block(&self, start: usize, len: usize) -> Self {
        Self::from_fn(len, |i, j| self.get(start + i, start + j))
    }

    /// `x' M x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            acc += self.get(i, i) * x[i] * x[i];
            for j in i + 1..self.dim {
                acc += T::lit(2.0) * self.get(i, j) * x[i] * x[j];
            }
        }
        acc
    }
}

/// All eigenvalues in ascending order, by cyclic Jacobi rotations iterated
/// until every off-diagonal entry is below `1e-12` (or the precision floor
/// of the scalar type relative to the matrix norm).
pub fn sym_eigenvalues<T: Real>(m: &SymmetricMatrix<T>) -> Vec<T> {
    let n = m.dim();
    let mut a = m.to_dense();
    let frob = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)] * a[(i, j)])
        .sum::<T>()
        .sqrt();
    let threshold = T::tol(1e-12, 1.0).max(T::epsilon() * frob);
    const MAX_SWEEPS: usize = 100;

    for _ in 0..MAX_SWEEPS {
        let off_max = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc.max(a[(i, j)].abs()));
        if off_max < threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // A <- J' A J on rows/cols p, q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

pub fn max_eigenvalue<T: Real>(m: &SymmetricMatrix<T>) -> T {
    sym_eigenvalues(m)
        .last()
        .copied()
        .unwrap_or_else(T::neg_infinity)
}
