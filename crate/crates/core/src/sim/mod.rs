//! Closed-loop time-domain model: swing dynamics on the lossless network,
//! LTI generation blocks and distributed averaging power commands.

mod equilibrium;
mod integrate;
mod lyapunov;

use std::collections::BTreeMap;

pub use equilibrium::{compute_equilibrium, Equilibrium, NEWTON_MAX_ITER, NEWTON_TOL};
pub use integrate::{integrate, integrate_from, Trajectory, DEFAULT_DT, DEFAULT_OUTPUT_STRIDE};
pub use lyapunov::{dissipation_check, lyapunov_value, LyapunovParts, EPS_V};

use crate::control::{control_input, dadoc_derivative, DadocParams};
use crate::error::{Error, Result};
use crate::generation::LtiGenerator;
use crate::network::PowerNetwork;
use crate::scalar::Real;

/// Full dynamic state. Generators occupy bus ids `0..G`, so the per-generator
/// vectors are indexed by bus id.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState<T> {
    pub angles: Vec<T>,
    pub gen_freqs: Vec<T>,
    pub gen_states: Vec<Vec<T>>,
    pub power_commands: Vec<T>,
}

impl<T: Real> SystemState<T> {
    /// All-zero state: the pre-disturbance equilibrium.
    pub fn zeros(scn: &Scenario<T>) -> Self {
        let g = scn.network.generator_count();
        Self {
            angles: vec![T::zero(); scn.network.bus_count()],
            gen_freqs: vec![T::zero(); g],
            gen_states: (0..g)
                .map(|j| vec![T::zero(); scn.generators[&j].order()])
                .collect(),
            power_commands: vec![T::zero(); g],
        }
    }

    fn flat_len(&self) -> usize {
        self.angles.len()
            + self.gen_freqs.len()
            + self.gen_states.iter().map(Vec::len).sum::<usize>()
            + self.power_commands.len()
    }

    pub(crate) fn to_flat(&self) -> Vec<T> {
        let mut y = Vec::with_capacity(self.flat_len());
        y.extend_from_slice(&self.angles);
        y.extend_from_slice(&self.gen_freqs);
        for x in &self.gen_states {
            y.extend_from_slice(x);
        }
        y.extend_from_slice(&self.power_commands);
        y
    }

    pub(crate) fn from_flat(y: &[T], layout: &Layout) -> Self {
        let angles = y[..layout.buses].to_vec();
        let gen_freqs = y[layout.freq_offset..layout.freq_offset + layout.gens].to_vec();
        let gen_states = layout
            .state_offsets
            .iter()
            .zip(&layout.orders)
            .map(|(&o, &n)| y[o..o + n].to_vec())
            .collect();
        let power_commands = y[layout.pc_offset..layout.pc_offset + layout.gens].to_vec();
        Self {
            angles,
            gen_freqs,
            gen_states,
            power_commands,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub network: PowerNetwork<T>,
    pub generators: BTreeMap<usize, LtiGenerator<T>>,
    pub controllers: BTreeMap<usize, DadocParams<T>>,
    pub disturbance_time: T,
    /// Load steps per bus, active from the first step at or after
    /// `disturbance_time`.
    pub step_loads: BTreeMap<usize, T>,
    pub t_end: T,
    pub dt: T,
    pub output_stride: usize,
}

impl<T: Real> Scenario<T> {
    /// Takes the step loads from the buses' `load` fields.
    pub fn new(
        network: PowerNetwork<T>,
        generators: BTreeMap<usize, LtiGenerator<T>>,
        controllers: BTreeMap<usize, DadocParams<T>>,
        disturbance_time: T,
        t_end: T,
    ) -> Self {
        let step_loads = network
            .buses
            .iter()
            .filter(|b| b.load != T::zero())
            .map(|b| (b.id, b.load))
            .collect();
        Self {
            network,
            generators,
            controllers,
            disturbance_time,
            step_loads,
            t_end,
            dt: T::lit(DEFAULT_DT),
            output_stride: DEFAULT_OUTPUT_STRIDE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.ensure_valid()?;
        let gens: Vec<usize> = self.network.generator_ids().collect();
        let keys_match = |keys: Vec<usize>| keys == gens;
        if !keys_match(self.generators.keys().copied().collect()) {
            return Err(Error::Precondition(
                "generation blocks must be given for exactly the generator buses".into(),
            ));
        }
        if !keys_match(self.controllers.keys().copied().collect()) {
            return Err(Error::Precondition(
                "controller parameters must be given for exactly the generator buses".into(),
            ));
        }
        for p in self.controllers.values() {
            p.validate()?;
        }
        if let Some(&bad) = self.step_loads.keys().find(|&&b| b >= self.network.bus_count()) {
            return Err(Error::UnknownBus(bad));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::NonPositive {
                name: "dt",
                value: self.dt.to_f64_lossy(),
            });
        }
        if self.output_stride == 0 {
            return Err(Error::Precondition("output stride must be at least 1".into()));
        }
        if !(self.disturbance_time < self.t_end) {
            return Err(Error::Precondition(
                "disturbance time must precede the end time".into(),
            ));
        }
        Ok(())
    }

    /// Loads in effect at time `t` (indexed by bus).
    pub fn loads_at(&self, t: T) -> Vec<T> {
        self.loads(t >= self.disturbance_time)
    }

    pub(crate) fn loads(&self, active: bool) -> Vec<T> {
        let mut loads = vec![T::zero(); self.network.bus_count()];
        if active {
            for (&bus, &p) in &self.step_loads {
                loads[bus] = p;
            }
        }
        loads
    }

    pub fn total_step_load(&self) -> T {
        self.step_loads.values().copied().sum()
    }

    /// Replaces every `k_c` with the cost-optimal `1 / (q K)`.
    pub fn apply_optimal_gains(&mut self) -> Result<()> {
        for (id, params) in self.controllers.iter_mut() {
            let k = self.generators[id].dc_gain()?;
            *params = params.with_optimal_kc(k)?;
        }
        Ok(())
    }
}

/// Offsets of each block of variables inside the flat state vector.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub buses: usize,
    pub gens: usize,
    pub freq_offset: usize,
    pub state_offsets: Vec<usize>,
    pub orders: Vec<usize>,
    pub pc_offset: usize,
}

impl Layout {
    fn variable_name(&self, idx: usize) -> String {
        if idx < self.freq_offset {
            return format!("theta[{idx}]");
        }
        if idx < self.freq_offset + self.gens {
            return format!("omega[{}]", idx - self.freq_offset);
        }
        if idx >= self.pc_offset {
            return format!("p_c[{}]", idx - self.pc_offset);
        }
        for (g, (&o, &n)) in self.state_offsets.iter().zip(&self.orders).enumerate() {
            if idx >= o && idx < o + n {
                return format!("x[{g}][{}]", idx - o);
            }
        }
        format!("y[{idx}]")
    }
}

/// Scenario compiled for repeated right-hand-side evaluation.
pub(crate) struct Model<'a, T> {
    pub scn: &'a Scenario<T>,
    pub layout: Layout,
    pub gens: Vec<&'a LtiGenerator<T>>,
    pub params: Vec<DadocParams<T>>,
    pub k_gains: Vec<T>,
    /// `(neighbor, alpha)` per generator.
    pub neighbors: Vec<Vec<(usize, T)>>,
}

impl<'a, T: Real> Model<'a, T> {
    pub fn new(scn: &'a Scenario<T>) -> Result<Self> {
        scn.validate()?;
        let buses = scn.network.bus_count();
        let g = scn.network.generator_count();
        let gens: Vec<&LtiGenerator<T>> = (0..g).map(|j| &scn.generators[&j]).collect();
        let params: Vec<DadocParams<T>> = (0..g).map(|j| scn.controllers[&j]).collect();
        let k_gains = gens.iter().map(|gen| gen.dc_gain()).collect::<Result<Vec<_>>>()?;
        let orders: Vec<usize> = gens.iter().map(|gen| gen.order()).collect();
        let freq_offset = buses;
        let mut state_offsets = Vec::with_capacity(g);
        let mut off = freq_offset + g;
        for &n in &orders {
            state_offsets.push(off);
            off += n;
        }
        let pc_offset = off;
        let mut neighbors = vec![Vec::new(); g];
        for e in &scn.network.comm {
            neighbors[e.a].push((e.b, e.weight));
            neighbors[e.b].push((e.a, e.weight));
        }
        Ok(Self {
            scn,
            layout: Layout {
                buses,
                gens: g,
                freq_offset,
                state_offsets,
                orders,
                pc_offset,
            },
            gens,
            params,
            k_gains,
            neighbors,
        })
    }

    pub fn check_state(&self, state: &SystemState<T>) -> Result<()> {
        let l = &self.layout;
        let mismatch = |context, expected, found| {
            Err(Error::DimensionMismatch {
                context,
                expected,
                found,
            })
        };
        if state.angles.len() != l.buses {
            return mismatch("bus angles", l.buses, state.angles.len());
        }
        if state.gen_freqs.len() != l.gens {
            return mismatch("generator frequencies", l.gens, state.gen_freqs.len());
        }
        if state.power_commands.len() != l.gens {
            return mismatch("power commands", l.gens, state.power_commands.len());
        }
        if state.gen_states.len() != l.gens {
            return mismatch("generator states", l.gens, state.gen_states.len());
        }
        for (x, &n) in state.gen_states.iter().zip(&l.orders) {
            if x.len() != n {
                return mismatch("generator state", n, x.len());
            }
        }
        Ok(())
    }

    /// Frequencies at every bus; load buses from their algebraic balance.
    pub fn bus_frequencies(&self, y: &[T], loads: &[T]) -> Vec<T> {
        let l = &self.layout;
        let inj = self
            .scn
            .network
            .net_injections(&y[..l.buses])
            .expect("layout matches network");
        let mut omega = Vec::with_capacity(l.buses);
        omega.extend_from_slice(&y[l.freq_offset..l.freq_offset + l.gens]);
        for j in l.gens..l.buses {
            let damping = self.scn.network.buses[j].damping;
            omega.push((inj[j] - loads[j]) / damping);
        }
        omega
    }

    /// Mechanical power of each generator.
    pub fn generator_outputs(&self, y: &[T]) -> Vec<T> {
        let l = &self.layout;
        (0..l.gens)
            .map(|j| {
                let omega = y[l.freq_offset + j];
                let pc = y[l.pc_offset + j];
                let u = control_input(&self.params[j], pc, omega);
                let o = l.state_offsets[j];
                self.gens[j]
                    .output(&y[o..o + l.orders[j]], u)
                    .expect("layout matches generator order")
            })
            .collect()
    }

    pub fn rhs(&self, y: &[T], loads: &[T], dy: &mut [T]) {
        let l = &self.layout;
        let net = &self.scn.network;
        let angles = &y[..l.buses];
        let inj = net.net_injections(angles).expect("layout matches network");

        for j in l.gens..l.buses {
            dy[j] = (inj[j] - loads[j]) / net.buses[j].damping;
        }
        let mut nb = Vec::new();
        for j in 0..l.gens {
            let bus = &net.buses[j];
            let omega = y[l.freq_offset + j];
            let pc = y[l.pc_offset + j];
            let params = &self.params[j];
            let u = control_input(params, pc, omega);
            let o = l.state_offsets[j];
            let n = l.orders[j];
            let x = &y[o..o + n];
            let gen = self.gens[j];
            let p_m = crate::linalg::dot(gen.c(), x) + gen.d() * u;

            dy[j] = omega;
            dy[l.freq_offset + j] =
                (-loads[j] + p_m - bus.damping * omega + inj[j]) / bus.inertia;
            let a = gen.a();
            for r in 0..n {
                dy[o + r] = crate::linalg::dot(a.row(r), x) + gen.b()[r] * u;
            }
            nb.clear();
            nb.extend(
                self.neighbors[j]
                    .iter()
                    .map(|&(i, alpha)| (alpha, y[l.pc_offset + i])),
            );
            dy[l.pc_offset + j] =
                dadoc_derivative(params, p_m, u, self.k_gains[j], omega, pc, &nb);
        }
    }

    pub fn first_non_finite(&self, y: &[T]) -> Option<String> {
        y.iter()
            .position(|v| !v.is_finite())
            .map(|i| self.layout.variable_name(i))
    }
}

/// Time derivative of the closed loop at `(state, t)`, in the same shape as
/// the state. Loads are active for `t >= disturbance_time`.
pub fn closed_loop_derivative<T: Real>(
    scn: &Scenario<T>,
    state: &SystemState<T>,
    t: T,
) -> Result<SystemState<T>> {
    let model = Model::new(scn)?;
    model.check_state(state)?;
    let y = state.to_flat();
    let mut dy = vec![T::zero(); y.len()];
    model.rhs(&y, &scn.loads_at(t), &mut dy);
    Ok(SystemState::from_flat(&dy, &model.layout))
}

/// Frequencies at every bus (generator states and algebraic load buses).
pub fn bus_frequencies<T: Real>(scn: &Scenario<T>, state: &SystemState<T>, t: T) -> Result<Vec<T>> {
    let model = Model::new(scn)?;
    model.check_state(state)?;
    Ok(model.bus_frequencies(&state.to_flat(), &scn.loads_at(t)))
}

/// Frequency of a load bus from its algebraic power balance.
pub fn load_bus_frequency<T: Real>(
    net: &PowerNetwork<T>,
    bus: usize,
    angles: &[T],
    load: T,
) -> Result<T> {
    let b = net.bus(bus)?;
    if b.is_generator() {
        return Err(Error::NotLoad(bus));
    }
    if !(b.damping > T::zero()) {
        return Err(Error::NonPositive {
            name: "load bus damping",
            value: b.damping.to_f64_lossy(),
        });
    }
    Ok((net.net_injection(bus, angles)? - load) / b.damping)
}
