//! Linear time-invariant generation blocks
//!
//! ```text
//! x' = A x + B u
//! p  = C x + D u
//! ```
//!
//! with a Hurwitz `A`, so every constant input `u` settles to an output
//! `K u` where `K = -C A^-1 B + D` is the DC gain.

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Real;

/// Largest supported generator order.
pub const MAX_ORDER: usize = 10;

/// Eigenvalues with real part above `-TOL_HURWITZ` are not accepted as stable.
pub const TOL_HURWITZ: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LtiGenerator<T> {
    a: Matrix<T>,
    b: Vec<T>,
    c: Vec<T>,
    d: T,
}

/// True iff every eigenvalue of `a` has real part below `-TOL_HURWITZ`.
pub fn is_hurwitz<T: Real>(a: &Matrix<T>) -> Result<bool> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let tol = T::lit(TOL_HURWITZ);
    Ok(a.eigenvalues()?.iter().all(|&(re, _)| re < -tol))
}

impl<T: Real> LtiGenerator<T> {
    /// Checks dimensions, order bounds and the Hurwitz property.
    pub fn new(a: Matrix<T>, b: Vec<T>, c: Vec<T>, d: T) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        if n == 0 || n > MAX_ORDER {
            return Err(Error::UnsupportedOrder(n));
        }
        for (context, len) in [("input vector B", b.len()), ("output vector C", c.len())] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: n,
                    found: len,
                });
            }
        }
        if !is_hurwitz(&a)? {
            return Err(Error::NotHurwitz);
        }
        Ok(Self { a, b, c, d })
    }

    /// First-order lag `tau p' = -p + k u`.
    pub fn first_order(tau: T, k: T) -> Result<Self> {
        positive("tau", tau)?;
        positive("k", k)?;
        Self::new(
            Matrix::from_diagonal(&[-T::one() / tau]),
            vec![k / tau],
            vec![T::one()],
            T::zero(),
        )
    }

    /// Turbine-governor cascade with state `(alpha, p)`:
    /// `alpha' = -(alpha - k u) / tau_a`, `p' = -(p - alpha) / tau_p`.
    pub fn second_order(tau_a: T, tau_p: T, k: T) -> Result<Self> {
        positive("tau_a", tau_a)?;
        positive("tau_p", tau_p)?;
        positive("k", k)?;
        let a = Matrix::from_rows(&[
            vec![-T::one() / tau_a, T::zero()],
            vec![T::one() / tau_p, -T::one() / tau_p],
        ])?;
        Self::new(a, vec![k / tau_a, T::zero()], vec![T::zero(), T::one()], T::zero())
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }

    pub fn d(&self) -> T {
        self.d
    }

    pub fn derivative(&self, state: &[T], input: T) -> Result<Vec<T>> {
        let mut dx = self.a.mul_vec(state)?;
        for (v, &b) in dx.iter_mut().zip(&self.b) {
            *v += b * input;
        }
        Ok(dx)
    }

    pub fn output(&self, state: &[T], input: T) -> Result<T> {
        self.check_state(state)?;
        Ok(dot(&self.c, state) + self.d * input)
    }

    /// `-C A^-1 B + D`.
    pub fn dc_gain(&self) -> Result<T> {
        let x = self.a.solve(&self.b)?;
        Ok(self.d - dot(&self.c, &x))
    }

    /// State `x` solving `A x + B u = 0`.
    pub fn equilibrium_state(&self, input: T) -> Result<Vec<T>> {
        let rhs: Vec<T> = self.b.iter().map(|&b| -b * input).collect();
        self.a.solve(&rhs)
    }

    /// Slowest time constant `1 / min |Re(lambda)|`.
    pub fn slowest_time_constant(&self) -> Result<T> {
        let eig = self.a.eigenvalues()?;
        let slowest = eig
            .iter()
            .map(|e| e.0.abs())
            .fold(T::infinity(), T::min);
        Ok(T::one() / slowest)
    }

    /// Recovers `(tau_a, tau_p, k)` when the block has exactly the
    /// turbine-governor cascade structure.
    pub fn as_second_order(&self) -> Option<(T, T, T)> {
        if self.order() != 2 {
            return None;
        }
        let a = &self.a;
        let zero = T::zero();
        let structural = a[(0, 1)] == zero
            && a[(1, 0)] == -a[(1, 1)]
            && self.b[1] == zero
            && self.c[0] == zero
            && self.c[1] == T::one()
            && self.d == zero;
        if !structural {
            return None;
        }
        let tau_a = -T::one() / a[(0, 0)];
        let tau_p = -T::one() / a[(1, 1)];
        let k = self.b[0] * tau_a;
        (tau_a > zero && tau_p > zero && k > zero).then_some((tau_a, tau_p, k))
    }

    fn check_state(&self, state: &[T]) -> Result<()> {
        if state.len() != self.order() {
            return Err(Error::DimensionMismatch {
                context: "generator state",
                expected: self.order(),
                found: state.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn positive<T: Real>(name: &'static str, value: T) -> Result<()> {
    if value > T::zero() && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            name,
            value: value.to_f64_lossy(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type G = LtiGenerator<f64>;

    #[test]
    fn first_order_derivative() {
        let g = G::first_order(1.0, 1.0).unwrap();
        assert_eq!(g.derivative(&[0.0], 0.0).unwrap(), vec![0.0]);
        assert_eq!(g.derivative(&[1.0], 0.0).unwrap(), vec![-1.0]);
    }

    #[test]
    fn second_order_derivative() {
        let g = G::second_order(2.0, 4.0, 1.0).unwrap();
        assert_eq!(g.derivative(&[1.0, 0.0], 0.0).unwrap(), vec![-0.5, 0.25]);
    }

    #[test]
    fn derivative_rejects_wrong_length() {
        let g = G::first_order(1.0, 1.0).unwrap();
        assert!(matches!(
            g.derivative(&[0.0, 1.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(g.output(&[], 0.0).is_err());
    }

    #[test]
    fn output_projection_and_feedthrough() {
        let a = Matrix::from_diagonal(&[-1.0, -2.0]);
        let g = G::new(a.clone(), vec![1.0, 1.0], vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(g.output(&[0.3, 0.9], 0.0).unwrap(), 0.3);
        let g = G::new(a, vec![1.0, 1.0], vec![1.0, 0.0], 0.5).unwrap();
        assert_eq!(g.output(&[0.0, 0.0], 2.0).unwrap(), 1.0);
    }

    #[test]
    fn first_order_output_at_equilibrium() {
        let g = G::first_order(3.0, 2.5).unwrap();
        let x = g.equilibrium_state(0.4).unwrap();
        assert!((g.output(&x, 0.4).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dc_gains() {
        assert!((G::first_order(3.0, 2.5).unwrap().dc_gain().unwrap() - 2.5).abs() < 1e-15);
        assert!((G::second_order(1.0, 2.0, 0.7).unwrap().dc_gain().unwrap() - 0.7).abs() < 1e-15);
        assert!((G::second_order(2.0, 4.0, 0.7).unwrap().dc_gain().unwrap() - 0.7).abs() < 1e-15);
        let g = G::new(
            Matrix::from_diagonal(&[-2.0, -1.0]),
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            0.0,
        )
        .unwrap();
        assert!((g.dc_gain().unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn hurwitz_classification() {
        let m = |rows: &[Vec<f64>]| Matrix::from_rows(rows).unwrap();
        assert!(is_hurwitz(&m(&[vec![-1.0]])).unwrap());
        assert!(!is_hurwitz(&m(&[vec![0.0, 1.0], vec![-1.0, 0.0]])).unwrap());
        assert!(!is_hurwitz(&m(&[vec![1.0]])).unwrap());
        assert!(!is_hurwitz(&m(&[vec![-1e-10]])).unwrap());
        assert!(matches!(
            is_hurwitz(&m(&[vec![1.0, 2.0]])),
            Err(Error::NotSquare { rows: 1, cols: 2 })
        ));
    }

    #[test]
    fn constructors_match_closed_forms() {
        let g = G::first_order(1.0, 1.0).unwrap();
        assert_eq!(g.a().to_rows(), vec![vec![-1.0]]);
        assert_eq!((g.b(), g.c(), g.d()), (&[1.0][..], &[1.0][..], 0.0));
        let g = G::first_order(2.0, 3.0).unwrap();
        assert_eq!(g.a().to_rows(), vec![vec![-0.5]]);
        assert_eq!(g.b(), &[1.5]);

        let g = G::second_order(1.0, 1.0, 1.0).unwrap();
        assert_eq!(g.a().to_rows(), vec![vec![-1.0, 0.0], vec![1.0, -1.0]]);
        let g = G::second_order(2.0, 4.0, 0.7).unwrap();
        let mut eig: Vec<f64> = g.a().eigenvalues().unwrap().iter().map(|e| e.0).collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(eig, vec![-0.5, -0.25]);
        assert_eq!(g.as_second_order(), Some((2.0, 4.0, 0.7)));
    }

    #[test]
    fn constructors_reject_non_positive() {
        assert!(matches!(G::first_order(0.0, 1.0), Err(Error::NonPositive { name: "tau", .. })));
        assert!(matches!(G::first_order(1.0, -1.0), Err(Error::NonPositive { name: "k", .. })));
        assert!(G::second_order(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn non_hurwitz_and_oversized_rejected() {
        let a = Matrix::from_diagonal(&[0.5]);
        assert_eq!(G::new(a, vec![1.0], vec![1.0], 0.0), Err(Error::NotHurwitz));
        let a = Matrix::from_diagonal(&[-1.0; 11]);
        assert_eq!(
            G::new(a, vec![1.0; 11], vec![1.0; 11], 0.0),
            Err(Error::UnsupportedOrder(11))
        );
    }
}
