use std::collections::BTreeMap;

use super::{Model, Scenario, SystemState};
use crate::certify::Certificate;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sim::{lyapunov_value, Equilibrium};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_OUTPUT_STRIDE: usize = 10;

/// Recorded states plus the derived series.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<SystemState<T>>,
    /// Frequency at every bus, load buses included.
    pub bus_freqs: Vec<Vec<T>>,
    /// Mechanical power per generator.
    pub p_m: Vec<Vec<T>>,
    /// `q_j p^M_j` per generator.
    pub marginal_costs: Vec<Vec<T>>,
    /// Lyapunov value per sample, once attached.
    pub lyapunov: Option<Vec<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&SystemState<T>> {
        self.states.last()
    }

    /// Evaluates the Lyapunov function at every sample.
    pub fn attach_lyapunov(
        &mut self,
        scn: &Scenario<T>,
        certs: &BTreeMap<usize, Certificate<T>>,
        eq: &Equilibrium<T>,
    ) -> Result<()> {
        let values = self
            .states
            .iter()
            .map(|s| lyapunov_value(scn, certs, eq, s))
            .collect::<Result<Vec<T>>>()?;
        self.lyapunov = Some(values);
        Ok(())
    }

    /// Largest `|omega|` over all buses and samples.
    pub fn max_abs_frequency(&self) -> T {
        self.bus_freqs
            .iter()
            .flatten()
            .fold(T::zero(), |m, w| m.max(w.abs()))
    }

    /// First sample time after which every bus stays within `band`, or
    /// `None` if the last sample is still outside.
    pub fn settling_time(&self, band: T) -> Option<T> {
        let outside = |w: &Vec<T>| w.iter().any(|v| v.abs() >= band);
        match self.bus_freqs.iter().rposition(outside) {
            None => self.times.first().copied(),
            Some(k) if k + 1 < self.times.len() => Some(self.times[k + 1]),
            Some(_) => None,
        }
    }

    /// Spread `max - min` of the final marginal costs.
    pub fn final_marginal_spread(&self) -> T {
        self.marginal_costs.last().map_or(T::zero(), |mc| {
            let hi = mc.iter().copied().fold(T::neg_infinity(), T::max);
            let lo = mc.iter().copied().fold(T::infinity(), T::min);
            if mc.is_empty() {
                T::zero()
            } else {
                hi - lo
            }
        })
    }
}

/// Fixed-step RK4 from the all-zero state.
pub fn integrate<T: Real>(scn: &Scenario<T>) -> Result<Trajectory<T>> {
    integrate_from(scn, &SystemState::zeros(scn))
}

/// Fixed-step RK4 from `initial`. Loads switch on at the first step whose
/// start time is at or after the disturbance time; samples are recorded
/// every `output_stride` steps and at the final step.
pub fn integrate_from<T: Real>(scn: &Scenario<T>, initial: &SystemState<T>) -> Result<Trajectory<T>> {
    let model = Model::new(scn)?;
    model.check_state(initial)?;
    let dt = scn.dt;
    let steps = (scn.t_end / dt).round().to_usize().unwrap_or(0);
    let stride = scn.output_stride;

    let mut y = initial.to_flat();
    let len = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len]);
    let mut tmp = vec![T::zero(); len];
    let loads_off = scn.loads(false);
    let loads_on = scn.loads(true);

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps / stride + 2),
        states: Vec::with_capacity(steps / stride + 2),
        bus_freqs: Vec::new(),
        p_m: Vec::new(),
        marginal_costs: Vec::new(),
        lyapunov: None,
    };
    let record = |traj: &mut Trajectory<T>, t: T, y: &[T]| {
        let loads = if t >= scn.disturbance_time { &loads_on } else { &loads_off };
        let pm = model.generator_outputs(y);
        traj.marginal_costs
            .push(pm.iter().zip(&model.params).map(|(&p, c)| c.q * p).collect());
        traj.p_m.push(pm);
        traj.bus_freqs.push(model.bus_frequencies(y, loads));
        traj.states.push(SystemState::from_flat(y, &model.layout));
        traj.times.push(t);
    };
    record(&mut traj, T::zero(), &y);

    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    for k in 0..steps {
        let t = T::lit(k as f64) * dt;
        let loads = if t >= scn.disturbance_time { &loads_on } else { &loads_off };

        model.rhs(&y, loads, &mut k1);
        for i in 0..len {
            tmp[i] = y[i] + half * dt * k1[i];
        }
        model.rhs(&tmp, loads, &mut k2);
        for i in 0..len {
            tmp[i] = y[i] + half * dt * k2[i];
        }
        model.rhs(&tmp, loads, &mut k3);
        for i in 0..len {
            tmp[i] = y[i] + dt * k3[i];
        }
        model.rhs(&tmp, loads, &mut k4);
        for i in 0..len {
            y[i] += dt * sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }

        let t_next = T::lit((k + 1) as f64) * dt;
        if let Some(variable) = model.first_non_finite(&y) {
            return Err(Error::NonFinite {
                variable,
                time: t_next.to_f64_lossy(),
            });
        }
        if (k + 1) % stride == 0 || k + 1 == steps {
            record(&mut traj, t_next, &y);
        }
    }
    Ok(traj)
}
