//! Distributed averaging power-command controller.
//!
//! Each generator integrates
//!
//! ```text
//! gamma pc' = pm - K u - k_f omega + sum_i alpha_i (pc_i - pc)
//! u         = k_c pc - k_d omega
//! ```
//!
//! where `K` is the DC gain of its generation block. The controller holds no
//! state of its own; `pc` lives in the simulator state.

use crate::error::Result;
use crate::generation::positive;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DadocParams<T> {
    pub gamma: T,
    pub k_f: T,
    pub k_c: T,
    pub k_d: T,
    /// Quadratic cost coefficient of the generator.
    pub q: T,
}

impl<T: Real> DadocParams<T> {
    pub fn new(gamma: T, k_f: T, k_c: T, k_d: T, q: T) -> Result<Self> {
        let p = Self { gamma, k_f, k_c, k_d, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("gamma", self.gamma)?;
        positive("k_f", self.k_f)?;
        positive("k_c", self.k_c)?;
        positive("k_d", self.k_d)?;
        positive("q", self.q)
    }

    /// Same parameters with `k_c` replaced by the cost-optimal value.
    pub fn with_optimal_kc(self, k_gain: T) -> Result<Self> {
        Ok(Self {
            k_c: optimal_kc(self.q, k_gain)?,
            ..self
        })
    }
}

/// Generation input `k_c pc - k_d omega`.
#[inline]
pub fn control_input<T: Real>(params: &DadocParams<T>, p_c: T, omega: T) -> T {
    params.k_c * p_c - params.k_d * omega
}

/// Primary (droop only) input `-k_d omega`.
#[inline]
pub fn droop_input<T: Real>(k_d: T, omega: T) -> T {
    -k_d * omega
}

/// Sum of `alpha (pc_neighbor - own_pc)` over the communication neighbours.
pub fn averaging_term<T: Real>(own_pc: T, neighbor_terms: &[(T, T)]) -> T {
    neighbor_terms
        .iter()
        .map(|&(alpha, pc)| alpha * (pc - own_pc))
        .sum()
}

/// Rate of change of the power command.
pub fn dadoc_derivative<T: Real>(
    params: &DadocParams<T>,
    p_m: T,
    u: T,
    k_gain: T,
    omega: T,
    own_pc: T,
    neighbor_terms: &[(T, T)],
) -> T {
    let local = p_m - k_gain * u - params.k_f * omega;
    (local + averaging_term(own_pc, neighbor_terms)) / params.gamma
}

/// `k_c = 1 / (q K)`: makes equilibrium generation cost-optimal.
pub fn optimal_kc<T: Real>(q: T, k_gain: T) -> Result<T> {
    positive("q", q)?;
    positive("k_gain", k_gain)?;
    Ok(T::one() / (q * k_gain))
}

/// Default frequency gain `K (k_c + k_d) / 2`.
pub fn default_kf<T: Real>(k_gain: T, k_c: T, k_d: T) -> T {
    k_gain * (k_c + k_d) / T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn params(gamma: f64, k_f: f64, k_c: f64, k_d: f64) -> DadocParams<f64> {
        DadocParams::new(gamma, k_f, k_c, k_d, 1.0).unwrap()
    }

    #[test]
    fn control_input_examples() {
        let p = params(1.0, 1.0, 2.0, 3.0);
        assert!((control_input(&p, 0.1, 0.01) - 0.17).abs() < 1e-15);
        assert_eq!(control_input(&p, 0.0, 0.0), 0.0);
    }

    #[test]
    fn zero_droop_rejected() {
        assert!(matches!(
            DadocParams::new(1.0, 1.0, 1.0, 0.0, 1.0),
            Err(Error::NonPositive { name: "k_d", .. })
        ));
    }

    #[test]
    fn droop_examples() {
        assert_eq!(droop_input(1.0, 0.5), -0.5);
        assert_eq!(droop_input(2.0, -0.25), 0.5);
        assert_eq!(droop_input(3.0, 0.0), 0.0);
    }

    #[test]
    fn dadoc_derivative_examples() {
        // p_m = 0.5, K u = 0.3 (K = 1, u = 0.3), omega = 0.01, averaging = 0.1.
        let p = params(1.0, 2.0, 1.0, 1.0);
        let nb = [(1.0, 0.1)];
        let d = dadoc_derivative(&p, 0.5, 0.3, 1.0, 0.01, 0.0, &nb);
        assert!((d - 0.28).abs() < 1e-15);
        let p = params(2.0, 2.0, 1.0, 1.0);
        let d = dadoc_derivative(&p, 0.5, 0.3, 1.0, 0.01, 0.0, &nb);
        assert!((d - 0.14).abs() < 1e-15);
    }

    #[test]
    fn dadoc_zero_at_equilibrium() {
        let p = params(1.3, 0.7, 2.0, 0.4);
        let (k, pc) = (1.7, 0.25);
        let u = control_input(&p, pc, 0.0);
        let nb = [(0.5, pc), (2.0, pc)];
        assert_eq!(dadoc_derivative(&p, k * u, u, k, 0.0, pc, &nb), 0.0);
    }

    #[test]
    fn optimal_kc_examples() {
        assert_eq!(optimal_kc(2.0, 0.5).unwrap(), 1.0);
        assert_eq!(optimal_kc(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(optimal_kc(0.5, 4.0).unwrap(), 0.5);
        assert!(optimal_kc(0.0, 1.0).is_err());
        assert!(optimal_kc(1.0, -1.0).is_err());
    }
}
