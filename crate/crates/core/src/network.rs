//! Electrical network, controller communication graph and lossless line flows.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BusKind {
    Generator,
    Load,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus<T> {
    pub id: usize,
    pub kind: BusKind,
    /// Rotor inertia, only meaningful on generator buses.
    pub inertia: T,
    /// Frequency damping coefficient.
    pub damping: T,
    /// Step load applied at the disturbance time.
    pub load: T,
}

impl<T: Real> Bus<T> {
    pub fn generator(id: usize, inertia: T, damping: T) -> Self {
        Self {
            id,
            kind: BusKind::Generator,
            inertia,
            damping,
            load: T::zero(),
        }
    }

    pub fn load_bus(id: usize, damping: T) -> Self {
        Self {
            id,
            kind: BusKind::Load,
            inertia: T::zero(),
            damping,
            load: T::zero(),
        }
    }

    pub fn with_load(mut self, load: T) -> Self {
        self.load = load;
        self
    }

    pub fn is_generator(&self) -> bool {
        self.kind == BusKind::Generator
    }
}

/// Lossless line with an arbitrary stored orientation `from -> to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Line<T> {
    pub from: usize,
    pub to: usize,
    pub susceptance: T,
}

/// Undirected communication link between two generator buses.
#[derive(Debug, Clone, PartialEq)]
pub struct CommEdge<T> {
    pub a: usize,
    pub b: usize,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork<T> {
    /// Generators first, then loads; ids equal positions.
    pub buses: Vec<Bus<T>>,
    pub lines: Vec<Line<T>>,
    pub comm: Vec<CommEdge<T>>,
}

/// Power carried by a line with angle difference `eta`.
#[inline]
pub fn line_power<T: Real>(eta: T, susceptance: T) -> T {
    susceptance * eta.sin()
}

impl<T: Real> PowerNetwork<T> {
    pub fn new(buses: Vec<Bus<T>>, lines: Vec<Line<T>>, comm: Vec<CommEdge<T>>) -> Self {
        Self { buses, lines, comm }
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn generator_count(&self) -> usize {
        self.buses.iter().filter(|b| b.is_generator()).count()
    }

    pub fn generator_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.buses.iter().filter(|b| b.is_generator()).map(|b| b.id)
    }

    pub fn load_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.buses.iter().filter(|b| !b.is_generator()).map(|b| b.id)
    }

    pub fn bus(&self, id: usize) -> Result<&Bus<T>> {
        self.buses.get(id).ok_or(Error::UnknownBus(id))
    }

    pub fn total_load(&self) -> T {
        self.buses.iter().map(|b| b.load).sum()
    }

    /// Every invariant violation, sorted and deduplicated. Empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut v = BTreeSet::new();
        let n = self.buses.len();
        if n == 0 {
            v.insert("network has no buses".to_string());
        }

        let mut seen_load = false;
        for (pos, bus) in self.buses.iter().enumerate() {
            if bus.id != pos {
                v.insert(format!("bus at position {pos} has id {}", bus.id));
            }
            let finite = bus.inertia.is_finite() && bus.damping.is_finite() && bus.load.is_finite();
            if !finite {
                v.insert(format!("bus {}: non-finite parameter", bus.id));
            }
            match bus.kind {
                BusKind::Generator => {
                    if seen_load {
                        v.insert(format!("generator bus {} listed after a load bus", bus.id));
                    }
                    if !(bus.inertia > T::zero()) {
                        v.insert(format!("generator bus {}: inertia must be positive", bus.id));
                    }
                    if !(bus.damping >= T::zero()) {
                        v.insert(format!(
                            "generator bus {}: damping must be non-negative",
                            bus.id
                        ));
                    }
                }
                BusKind::Load => {
                    seen_load = true;
                    if !(bus.damping > T::zero()) {
                        v.insert(format!("load bus damping must be positive (bus {})", bus.id));
                    }
                }
            }
        }
        if n > 0 && self.generator_count() == 0 {
            v.insert("network has no generator buses".to_string());
        }

        let mut pairs = BTreeSet::new();
        for line in &self.lines {
            let (i, j) = (line.from, line.to);
            if i >= n || j >= n {
                v.insert(format!("line {i}->{j}: unknown bus"));
                continue;
            }
            if i == j {
                v.insert(format!("line {i}->{j}: self-loop"));
            }
            if !(line.susceptance > T::zero()) || !line.susceptance.is_finite() {
                v.insert(format!("line {i}->{j}: susceptance must be positive"));
            }
            if !pairs.insert((i.min(j), i.max(j))) {
                v.insert(format!("line {i}->{j}: duplicate or antiparallel line"));
            }
        }

        let mut comm_pairs = BTreeSet::new();
        for edge in &self.comm {
            let (a, b) = (edge.a, edge.b);
            let gen = |id: usize| self.buses.get(id).is_some_and(Bus::is_generator);
            if !gen(a) || !gen(b) {
                v.insert(format!("comm edge {a}-{b}: endpoints must be generator buses"));
            }
            if a == b {
                v.insert(format!("comm edge {a}-{b}: self-loop"));
            }
            if !(edge.weight > T::zero()) || !edge.weight.is_finite() {
                v.insert(format!("comm edge {a}-{b}: weight must be positive"));
            }
            if !comm_pairs.insert((a.min(b), a.max(b))) {
                v.insert(format!("comm edge {a}-{b}: duplicate edge"));
            }
        }

        if n > 0 {
            let edges = self.lines.iter().map(|l| (l.from, l.to));
            if !connected(n, (0..n).collect(), edges) {
                v.insert("power network not connected".to_string());
            }
            let gens: Vec<usize> = self.generator_ids().collect();
            if !gens.is_empty() {
                let edges = self.comm.iter().map(|e| (e.a, e.b));
                if !connected(n, gens, edges) {
                    v.insert("communication graph over generators not connected".to_string());
                }
            }
        }
        v.into_iter().collect()
    }

    /// Returns `Err(InvalidNetwork)` carrying every violation.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(v))
        }
    }

    /// Net power flowing into `bus` over the lines, given all bus angles.
    pub fn net_injection(&self, bus: usize, angles: &[T]) -> Result<T> {
        if bus >= self.buses.len() {
            return Err(Error::UnknownBus(bus));
        }
        self.check_angles(angles)?;
        let mut acc = T::zero();
        for line in &self.lines {
            let flow = line_power(angles[line.from] - angles[line.to], line.susceptance);
            if line.to == bus {
                acc += flow;
            }
            if line.from == bus {
                acc -= flow;
            }
        }
        Ok(acc)
    }

    /// Net line inflow at every bus in one pass.
    pub fn net_injections(&self, angles: &[T]) -> Result<Vec<T>> {
        self.check_angles(angles)?;
        let mut out = vec![T::zero(); self.buses.len()];
        for line in &self.lines {
            let flow = line_power(angles[line.from] - angles[line.to], line.susceptance);
            out[line.to] += flow;
            out[line.from] -= flow;
        }
        Ok(out)
    }

    /// Angle difference `theta_from - theta_to` for each line.
    pub fn line_angles(&self, angles: &[T]) -> Vec<T> {
        self.lines
            .iter()
            .map(|l| angles[l.from] - angles[l.to])
            .collect()
    }

    fn check_angles(&self, angles: &[T]) -> Result<()> {
        if angles.len() != self.buses.len() {
            return Err(Error::DimensionMismatch {
                context: "bus angles",
                expected: self.buses.len(),
                found: angles.len(),
            });
        }
        Ok(())
    }
}

fn connected(n: usize, nodes: Vec<usize>, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (a, b) in edges {
        if a >= n || b >= n {
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let Some(&first) = nodes.first() else {
        return true;
    };
    let root = find(&mut parent, first);
    nodes.iter().all(|&x| find(&mut parent, x) == root)
}
