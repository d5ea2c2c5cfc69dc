use std::collections::BTreeMap;

use super::{Equilibrium, Scenario, SystemState, Trajectory};
use crate::certify::Certificate;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Slack allowed on increases of V between consecutive samples.
pub const EPS_V: f64 = 1e-8;

/// The four components of the Lyapunov function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovParts<T> {
    /// Rotor kinetic energy about the equilibrium frequency.
    pub frequency: T,
    /// Power-command deviation weighted by `gamma`.
    pub command: T,
    /// Line potential energy about the equilibrium angles.
    pub potential: T,
    /// Generator storage `(x - x*)' P (x - x*) / 2`.
    pub storage: T,
}

impl<T: Real> LyapunovParts<T> {
    pub fn total(&self) -> T {
        self.frequency + self.command + self.potential + self.storage
    }

    pub fn evaluate(
        scn: &Scenario<T>,
        certs: &BTreeMap<usize, Certificate<T>>,
        eq: &Equilibrium<T>,
        state: &SystemState<T>,
    ) -> Result<Self> {
        let net = &scn.network;
        let g = net.generator_count();
        let half = T::lit(0.5);

        let mut frequency = T::zero();
        let mut command = T::zero();
        let mut storage = T::zero();
        for j in 0..g {
            let cert = certs.get(&j).ok_or(Error::MissingCertificate(j))?;
            let dw = state.gen_freqs[j] - eq.omega_star[j];
            frequency += half * net.buses[j].inertia * dw * dw;
            let dp = state.power_commands[j] - eq.nu;
            command += half * scn.controllers[&j].gamma * dp * dp;
            let dx: Vec<T> = state.gen_states[j]
                .iter()
                .zip(&eq.gen_states_star[j])
                .map(|(&x, &xs)| x - xs)
                .collect();
            if cert.p_matrix.dim() != dx.len() {
                return Err(Error::DimensionMismatch {
                    context: "certificate matrix P",
                    expected: dx.len(),
                    found: cert.p_matrix.dim(),
                });
            }
            storage += half * cert.p_matrix.quadratic_form(&dx);
        }

        let mut potential = T::zero();
        for (line, &eta_s) in net.lines.iter().zip(&eq.eta_star) {
            let eta = state.angles[line.from] - state.angles[line.to];
            potential += line.susceptance
                * ((eta_s.cos() - eta.cos()) - eta_s.sin() * (eta - eta_s));
        }
        Ok(Self {
            frequency,
            command,
            potential,
            storage,
        })
    }
}

pub fn lyapunov_value<T: Real>(
    scn: &Scenario<T>,
    certs: &BTreeMap<usize, Certificate<T>>,
    eq: &Equilibrium<T>,
    state: &SystemState<T>,
) -> Result<T> {
    Ok(LyapunovParts::evaluate(scn, certs, eq, state)?.total())
}

/// Largest increase `V(t_{k+1}) - V(t_k)` along the trajectory, clamped at
/// zero.
pub fn dissipation_check<T: Real>(
    scn: &Scenario<T>,
    certs: &BTreeMap<usize, Certificate<T>>,
    eq: &Equilibrium<T>,
    traj: &Trajectory<T>,
) -> Result<T> {
    let values = match &traj.lyapunov {
        Some(v) => v.clone(),
        None => traj
            .states
            .iter()
            .map(|s| lyapunov_value(scn, certs, eq, s))
            .collect::<Result<Vec<T>>>()?,
    };
    Ok(values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(T::zero(), T::max))
}
