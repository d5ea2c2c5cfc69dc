//! Small dense linear algebra: just what the generation blocks, the flow
//! solver and the certificate checks need.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix row",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Solves `self * x = b` by LU decomposition with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "linear solve right-hand side",
                expected: n,
                found: b.len(),
            });
        }
        let mut a = self.clone();
        let mut x = b.to_vec();
        let scale = self
            .data
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()));
        let tiny = T::epsilon() * scale * T::lit(n.max(1) as f64);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .abs()
                        .partial_cmp(&a[(j, col)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if !(a[(pivot, col)].abs() > tiny) {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(pivot, j)];
                    a[(pivot, j)] = tmp;
                }
                x.swap(col, pivot);
            }
            for i in col + 1..n {
                let f = a[(i, col)] / a[(col, col)];
                if f == T::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(i, j)] -= f * v;
                }
                let xc = x[col];
                x[i] -= f * xc;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= a[(i, j)] * x[j];
            }
            x[i] = s / a[(i, i)];
        }
        Ok(x)
    }

    /// Eigenvalues `(re, im)` of a general square matrix of order at most 10.
    ///
    /// Orders up to 3 go through the characteristic polynomial; larger
    /// matrices are reduced to Hessenberg form and iterated with Francis
    /// double-shift QR.
    pub fn eigenvalues(&self) -> Result<Vec<(T, T)>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        match self.rows {
            0 => Ok(Vec::new()),
            1 => Ok(vec![(self[(0, 0)], T::zero())]),
            2 => Ok(quadratic_roots(
                -(self[(0, 0)] + self[(1, 1)]),
                self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)],
            )
            .to_vec()),
            3 => Ok(self.cubic_eigenvalues()),
            n if n <= 10 => self.hessenberg_qr_eigenvalues(),
            n => Err(Error::UnsupportedOrder(n)),
        }
    }

    fn cubic_eigenvalues(&self) -> Vec<(T, T)> {
        let a = |i, j| self[(i, j)];
        let tr = a(0, 0) + a(1, 1) + a(2, 2);
        let minors = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2)
            - a(0, 2) * a(2, 0)
            + a(1, 1) * a(2, 2)
            - a(1, 2) * a(2, 1);
        let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
            - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        // λ³ + c2 λ² + c1 λ + c0
        let (c2, c1, c0) = (-tr, minors, -det);
        let p = |x: T| ((x + c2) * x + c1) * x + c0;
        let dp = |x: T| (T::lit(3.0) * x + T::lit(2.0) * c2) * x + c1;

        // Cauchy bound brackets the real root that every real cubic has.
        let bound = T::one() + c2.abs().max(c1.abs()).max(c0.abs());
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = (lo + hi) / T::lit(2.0);
            if p(mid) <= T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() * bound {
                break;
            }
        }
        let mut root = (lo + hi) / T::lit(2.0);
        for _ in 0..3 {
            let d = dp(root);
            if d == T::zero() {
                break;
            }
            let next = root - p(root) / d;
            if next.is_finite() && p(next).abs() < p(root).abs() {
                root = next;
            } else {
                break;
            }
        }
        // Deflate: λ² + (c2 + r) λ + (c1 + r (c2 + r))
        let b1 = c2 + root;
        let b0 = c1 + root * b1;
        let [e1, e2] = quadratic_roots(b1, b0);
        vec![(root, T::zero()), e1, e2]
    }

    fn hessenberg_qr_eigenvalues(&self) -> Result<Vec<(T, T)>> {
        let mut h = self.clone();
        reduce_to_hessenberg(&mut h);
        francis_qr(&mut h)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Roots of `λ² + bλ + c`.
fn quadratic_roots<T: Real>(b: T, c: T) -> [(T, T); 2] {
    let two = T::lit(2.0);
    let disc = b * b - T::lit(4.0) * c;
    if disc >= T::zero() {
        // Avoid cancellation: q = -(b + sign(b) sqrt(disc)) / 2
        let sq = disc.sqrt();
        let q = -(b + b.signum() * sq) / two;
        if q == T::zero() {
            return [(T::zero(), T::zero()), (T::zero(), T::zero())];
        }
        let (r1, r2) = (q, c / q);
        if r1 <= r2 {
            [(r1, T::zero()), (r2, T::zero())]
        } else {
            [(r2, T::zero()), (r1, T::zero())]
        }
    } else {
        let re = -b / two;
        let im = (-disc).sqrt() / two;
        [(re, -im), (re, im)]
    }
}

fn reduce_to_hessenberg<T: Real>(h: &mut Matrix<T>) {
    let n = h.rows;
    for k in 0..n.saturating_sub(2) {
        let alpha_sq: T = (k + 1..n).map(|i| h[(i, k)] * h[(i, k)]).sum();
        if alpha_sq == T::zero() {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = if x0 >= T::zero() {
            -alpha_sq.sqrt()
        } else {
            alpha_sq.sqrt()
        };
        let mut v: Vec<T> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm_sq: T = v.iter().map(|&x| x * x).sum();
        if vnorm_sq == T::zero() {
            continue;
        }
        let two = T::lit(2.0);
        // H <- (I - 2vv'/v'v) H (I - 2vv'/v'v)
        for j in 0..n {
            let s: T = (0..v.len()).map(|i| v[i] * h[(k + 1 + i, j)]).sum();
            let f = two * s / vnorm_sq;
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let s: T = (0..v.len()).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            let f = two * s / vnorm_sq;
            for j in 0..v.len() {
                h[(i, k + 1 + j)] -= f * v[j];
            }
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, deflating 1x1
/// and 2x2 blocks from the bottom. Destroys `a`.
fn francis_qr<T: Real>(a: &mut Matrix<T>) -> Result<Vec<(T, T)>> {
    let n = a.rows;
    let zero = T::zero();
    let mut eig = vec![(zero, zero); n];
    let mut anorm = zero;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let max_its = 30 * n.max(1);
    let sign = |x: T, s: T| if s >= zero { x.abs() } else { -x.abs() };

    let mut nn = n as isize - 1;
    let mut shift = zero;
    while nn >= 0 {
        let m_ = nn as usize;
        let mut its = 0;
        loop {
            let mut l = m_;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == zero {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() + s == s {
                    a[(l, l - 1)] = zero;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(m_, m_)];
            if l == m_ {
                eig[m_] = (x + shift, zero);
                nn -= 1;
                break;
            }
            let mut y = a[(m_ - 1, m_ - 1)];
            let mut w = a[(m_, m_ - 1)] * a[(m_ - 1, m_)];
            if l == m_ - 1 {
                let p = T::lit(0.5) * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= zero {
                    let z = p + sign(z, p);
                    let hi = x + z;
                    let lo = if z != zero { x - w / z } else { hi };
                    eig[m_ - 1] = (hi, zero);
                    eig[m_] = (lo, zero);
                } else {
                    eig[m_ - 1] = (x + p, -z);
                    eig[m_] = (x + p, z);
                }
                nn -= 2;
                break;
            }
            if its == max_its {
                return Err(Error::NoConvergence);
            }
            if its > 0 && its % 10 == 0 {
                // Exceptional shift.
                shift += x;
                for i in 0..=m_ {
                    a[(i, i)] -= x;
                }
                let s = a[(m_, m_ - 1)].abs() + a[(m_ - 1, m_ - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;

            let mut m = m_ - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=m_ {
                a[(i, i - 2)] = zero;
                if i != m + 2 {
                    a[(i, i - 3)] = zero;
                }
            }
            let mut k = m;
            while k < m_ {
                let mut xk = zero;
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k + 1 != m_ { a[(k + 2, k - 1)] } else { zero };
                    xk = p.abs() + q.abs() + r.abs();
                    if xk != zero {
                        p /= xk;
                        q /= xk;
                        r /= xk;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != zero {
                    if k == m {
                        if l != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * xk;
                    }
                    p += s;
                    let (xx, yy, zz) = (p / s, q / s, r / s);
                    q /= p;
                    r /= p;
                    for j in k..=m_ {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k + 1 != m_ {
                            pp += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= pp * zz;
                        }
                        a[(k + 1, j)] -= pp * yy;
                        a[(k, j)] -= pp * xx;
                    }
                    for i in l..=m_.min(k + 3) {
                        let mut pp = xx * a[(i, k)] + yy * a[(i, k + 1)];
                        if k + 1 != m_ {
                            pp += zz * a[(i, k + 2)];
                            a[(i, k + 2)] -= pp * r;
                        }
                        a[(i, k + 1)] -= pp * q;
                        a[(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_real_parts(m: &Matrix<f64>) -> Vec<f64> {
        let mut re: Vec<f64> = m.eigenvalues().unwrap().iter().map(|e| e.0).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        re
    }

    #[test]
    fn solve_small_system() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x: Vec<f64> = a.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(a.solve(&[1.0, 1.0]), Err(Error::Singular));
    }

    #[test]
    fn rotation_eigenvalues_are_imaginary() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let e: Vec<(f64, f64)> = a.eigenvalues().unwrap();
        assert_eq!(e[0].0, 0.0);
        assert!((e[0].1.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cubic_path_matches_triangular_diagonal() {
        let a = Matrix::from_rows(&[
            vec![-1.0, 4.0, 2.0],
            vec![0.0, -3.0, 7.0],
            vec![0.0, 0.0, 0.5],
        ])
        .unwrap();
        let re = sorted_real_parts(&a);
        for (got, want) in re.iter().zip([-3.0, -1.0, 0.5]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn qr_path_handles_complex_pairs() {
        // Block diagonal: rotation-like 2x2 blocks with real parts -1 and -2,
        // plus real eigenvalues -0.5 and -4, mixed by a permutation.
        let mut a = Matrix::zeros(6, 6);
        let blocks = [(-1.0, 3.0), (-2.0, 0.5)];
        for (b, &(re, im)) in blocks.iter().enumerate() {
            let o = 2 * b;
            a[(o, o)] = re;
            a[(o, o + 1)] = im;
            a[(o + 1, o)] = -im;
            a[(o + 1, o + 1)] = re;
        }
        a[(4, 4)] = -0.5;
        a[(5, 5)] = -4.0;
        a[(0, 5)] = 1.0;
        a[(3, 4)] = 2.0;
        let re = sorted_real_parts(&a);
        let want = [-4.0, -2.0, -2.0, -1.0, -1.0, -0.5];
        for (got, want) in re.iter().zip(want) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn equal_modulus_spectrum_converges() {
        // Cyclic shift: eigenvalues are the fifth roots of unity.
        let mut a = Matrix::<f64>::zeros(5, 5);
        for i in 0..5 {
            a[(i, (i + 1) % 5)] = 1.0;
        }
        let eig = a.eigenvalues().unwrap();
        for (re, im) in &eig {
            assert!((re.hypot(*im) - 1.0).abs() < 1e-10);
        }
        assert!(eig.iter().map(|e| e.0).sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn companion_matrix_roots() {
        // (x + 1)(x + 2)(x + 3)(x + 4)(x^2 + 2x + 5)
        let coeffs = [120.0, 298.0, 299.0, 170.0, 60.0, 12.0];
        let n = coeffs.len();
        let mut a = Matrix::<f64>::zeros(n, n);
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        for (i, c) in coeffs.iter().enumerate() {
            a[(i, n - 1)] = -c;
        }
        let eig = a.eigenvalues().unwrap();
        let want = [(-4.0, 0.0), (-3.0, 0.0), (-2.0, 0.0), (-1.0, 0.0), (-1.0, 2.0), (-1.0, -2.0)];
        for w in want {
            let nearest = eig
                .iter()
                .map(|e: &(f64, f64)| (e.0 - w.0).hypot(e.1 - w.1))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-8, "{w:?} missing from {eig:?}");
        }
    }

    #[test]
    fn order_above_ten_rejected() {
        let a = Matrix::<f64>::identity(11);
        assert_eq!(a.eigenvalues(), Err(Error::UnsupportedOrder(11)));
    }
}
