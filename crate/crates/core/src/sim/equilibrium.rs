use std::f64::consts::FRAC_PI_2;

use super::{Scenario, SystemState};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::line_power;
use crate::scalar::Real;

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 100;

/// Post-disturbance equilibrium: zero frequency everywhere and a common
/// power command `nu` at every generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium<T> {
    /// Bus angles with bus 0 pinned to zero.
    pub angles_star: Vec<T>,
    pub omega_star: Vec<T>,
    pub nu: T,
    pub gen_states_star: Vec<Vec<T>>,
    pub p_m_star: Vec<T>,
    /// Angle difference across each line.
    pub eta_star: Vec<T>,
    /// Flow on each line.
    pub flows_star: Vec<T>,
    /// All line angle differences strictly inside `(-pi/2, pi/2)`.
    pub angles_secure: bool,
    pub newton_iterations: usize,
}

impl<T: Real> Equilibrium<T> {
    pub fn max_abs_eta(&self) -> T {
        self.eta_star.iter().fold(T::zero(), |m, e| m.max(e.abs()))
    }

    pub fn to_state(&self) -> SystemState<T> {
        SystemState {
            angles: self.angles_star.clone(),
            gen_freqs: self.omega_star.clone(),
            gen_states: self.gen_states_star.clone(),
            power_commands: vec![self.nu; self.p_m_star.len()],
        }
    }
}

/// Equilibrium under the post-step loads.
///
/// `nu = sum(load) / sum(K_j k_c,j)`, `p^M_j = K_j k_c,j nu`, generator
/// states from `A x + B u = 0`, and angles from the lossless flow balance by
/// damped Newton iteration with bus 0 as reference.
pub fn compute_equilibrium<T: Real>(scn: &Scenario<T>) -> Result<Equilibrium<T>> {
    scn.validate()?;
    let net = &scn.network;
    let n = net.bus_count();
    let g = net.generator_count();
    let loads = scn.loads(true);

    let mut gain_sum = T::zero();
    let mut gains = Vec::with_capacity(g);
    for j in 0..g {
        let k = scn.generators[&j].dc_gain()?;
        let kc = scn.controllers[&j].k_c;
        gains.push((k, kc));
        gain_sum += k * kc;
    }
    let total: T = loads.iter().copied().sum();
    let nu = total / gain_sum;
    let p_m_star: Vec<T> = gains.iter().map(|&(k, kc)| k * kc * nu).collect();
    let gen_states_star = (0..g)
        .map(|j| scn.generators[&j].equilibrium_state(gains[j].1 * nu))
        .collect::<Result<Vec<_>>>()?;

    // Required net line inflow at each bus.
    let target: Vec<T> = (0..n)
        .map(|j| if j < g { loads[j] - p_m_star[j] } else { loads[j] })
        .collect();
    let (angles, iterations) = solve_flow_angles(scn, &target)?;

    let eta_star = net.line_angles(&angles);
    let flows_star = eta_star
        .iter()
        .zip(&net.lines)
        .map(|(&e, l)| line_power(e, l.susceptance))
        .collect();
    let half_pi = T::lit(FRAC_PI_2);
    let angles_secure = eta_star.iter().all(|e| e.abs() < half_pi);
    Ok(Equilibrium {
        angles_star: angles,
        omega_star: vec![T::zero(); g],
        nu,
        gen_states_star,
        p_m_star,
        eta_star,
        flows_star,
        angles_secure,
        newton_iterations: iterations,
    })
}

fn solve_flow_angles<T: Real>(scn: &Scenario<T>, target: &[T]) -> Result<(Vec<T>, usize)> {
    let net = &scn.network;
    let n = net.bus_count();
    let mut theta = vec![T::zero(); n];
    let residual = |theta: &[T]| -> Result<Vec<T>> {
        let inj = net.net_injections(theta)?;
        Ok(inj.iter().zip(target).map(|(&a, &b)| a - b).collect())
    };
    let max_abs = |r: &[T]| r.iter().skip(1).fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::tol(NEWTON_TOL, 64.0 * n as f64);

    let mut r = residual(&theta)?;
    let mut norm = max_abs(&r);
    if n == 1 {
        return Ok((theta, 0));
    }
    for iter in 0..NEWTON_MAX_ITER {
        if norm <= tol {
            return Ok((theta, iter));
        }
        // Jacobian of the injections with bus 0 removed.
        let mut jac = Matrix::zeros(n - 1, n - 1);
        for line in &net.lines {
            let (f, t) = (line.from, line.to);
            let c = line.susceptance * (theta[f] - theta[t]).cos();
            let mut add = |i: usize, k: usize, v: T| {
                if i > 0 && k > 0 {
                    jac[(i - 1, k - 1)] += v;
                }
            };
            add(t, f, c);
            add(t, t, -c);
            add(f, f, -c);
            add(f, t, c);
        }
        let rhs: Vec<T> = r[1..].iter().map(|&v| -v).collect();
        let step = match jac.solve(&rhs) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut damping = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = theta.clone();
            for (i, s) in step.iter().enumerate() {
                trial[i + 1] += damping * *s;
            }
            let r_trial = residual(&trial)?;
            let n_trial = max_abs(&r_trial);
            if n_trial < norm {
                theta = trial;
                r = r_trial;
                norm = n_trial;
                accepted = true;
                break;
            }
            damping *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    if norm <= tol {
        return Ok((theta, NEWTON_MAX_ITER));
    }
    Err(Error::FlowSolve {
        iterations: NEWTON_MAX_ITER,
        residual: norm.to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::DadocParams;
    use crate::generation::LtiGenerator;
    use crate::network::{Bus, CommEdge, Line, PowerNetwork};
    use crate::sim::closed_loop_derivative;
    use crate::sim::tests::two_gen_one_load;

    fn two_bus(loads: (f64, f64), susceptance: f64) -> Scenario<f64> {
        let net = PowerNetwork::new(
            vec![
                Bus::generator(0, 1.0, 1.0).with_load(loads.0),
                Bus::generator(1, 1.0, 1.0).with_load(loads.1),
            ],
            vec![Line { from: 0, to: 1, susceptance }],
            vec![CommEdge { a: 0, b: 1, weight: 1.0 }],
        );
        let gen = LtiGenerator::first_order(1.0, 1.0).unwrap();
        let p = DadocParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        Scenario::new(
            net,
            [(0, gen.clone()), (1, gen)].into_iter().collect(),
            [(0, p), (1, p)].into_iter().collect(),
            1.0,
            10.0,
        )
    }

    /// Bisection on B sin(eta) = flow over (-pi/2, pi/2).
    fn bisect_eta(flow: f64, b: f64) -> f64 {
        let (mut lo, mut hi) = (-FRAC_PI_2, FRAC_PI_2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if b * mid.sin() < flow {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn two_bus_example() {
        let eq = compute_equilibrium(&two_bus((0.3, 0.1), 1.0)).unwrap();
        assert!((eq.nu - 0.2).abs() < 1e-15);
        assert!((eq.p_m_star[0] - 0.2).abs() < 1e-15 && (eq.p_m_star[1] - 0.2).abs() < 1e-15);
        // Bus 0 imports 0.1: flow 0->1 is -0.1.
        let oracle = bisect_eta(-0.1, 1.0);
        assert!((eq.eta_star[0] - oracle).abs() < 1e-10);
        assert!((eq.eta_star[0] - (-0.1f64).asin()).abs() < 1e-10);
        assert!(eq.angles_secure);
    }

    #[test]
    fn zero_loads_give_flat_equilibrium() {
        let eq = compute_equilibrium(&two_bus((0.0, 0.0), 1.0)).unwrap();
        assert_eq!(eq.nu, 0.0);
        assert!(eq.angles_star.iter().all(|&a| a == 0.0));
        assert!(eq.gen_states_star.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn overloaded_line_fails() {
        // Bus 0 must import 1.0 over a line of capacity 0.5.
        let err = compute_equilibrium(&two_bus((2.0, 0.0), 0.5)).unwrap_err();
        assert!(matches!(err, Error::FlowSolve { .. }));
        assert!(err.to_string().contains("susceptance"));
    }

    #[test]
    fn derivative_vanishes_at_equilibrium() {
        let scn = two_gen_one_load(0.4);
        let eq = compute_equilibrium(&scn).unwrap();
        let d = closed_loop_derivative(&scn, &eq.to_state(), 5.0).unwrap();
        for v in d.to_flat() {
            assert!(v.abs() < 1e-12, "{v}");
        }
    }
}
