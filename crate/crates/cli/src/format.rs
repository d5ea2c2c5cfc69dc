//! Scenario files.
//!
//! ```text
//! # two generators feeding one load
//! [buses]
//! id=0 kind=generator inertia=2 damping=1
//! id=1 kind=generator inertia=1.5 damping=1
//! id=2 kind=load damping=1
//! [lines]
//! from=0 to=2 susceptance=2
//! from=2 to=1 susceptance=1.5
//! [comm]
//! a=0 b=1 weight=1
//! [generators]
//! bus=0 kind=first_order tau=0.5 gain=1
//! bus=1 kind=second_order tau_a=0.3 tau_p=0.6 gain=1
//! [controllers]
//! bus=0 gamma=1 k_c=1 k_d=1 q=1
//! bus=1 gamma=1 k_c=1 k_d=1 q=2
//! [disturbance]
//! time=1
//! bus=2 load=0.4
//! [sim]
//! t_end=30 dt=0.001 stride=10
//! ```
//!
//! A general block is written `kind=lti a=r00,r01;r10,r11 b=b0,b1 c=c0,c1 d=0`.
//! `weight` defaults to 1, `k_f` to `K (k_c + k_d) / 2` and `stride` to 10.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use secfreq_core::control::default_kf;
use secfreq_core::network::BusKind;
use secfreq_core::sim::DEFAULT_OUTPUT_STRIDE;
use secfreq_core::{
    Bus, CommEdge, DadocParams, Line, LtiGenerator, Matrix, PowerNetwork, Scenario,
};

use crate::error::{CliError, Result};

const SECTIONS: [&str; 7] = [
    "buses",
    "lines",
    "comm",
    "generators",
    "controllers",
    "disturbance",
    "sim",
];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

struct Record {
    line: usize,
    fields: BTreeMap<String, String>,
}

impl Record {
    fn parse(line: usize, text: &str) -> Result<Self> {
        let mut fields = BTreeMap::new();
        for tok in text.split_whitespace() {
            let Some((k, v)) = tok.split_once('=') else {
                return Err(CliError::Parse {
                    line,
                    message: format!("expected key=value, got `{tok}`"),
                });
            };
            if k.is_empty() || v.is_empty() {
                return Err(CliError::Parse {
                    line,
                    message: format!("empty key or value in `{tok}`"),
                });
            }
            if fields.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Field {
                    line,
                    field: k.to_string(),
                    message: "given twice".into(),
                });
            }
        }
        Ok(Self { line, fields })
    }

    fn err(&self, field: &str, message: impl Into<String>) -> CliError {
        CliError::Field {
            line: self.line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn take(&mut self, key: &str) -> Result<String> {
        self.fields.remove(key).ok_or_else(|| CliError::Parse {
            line: self.line,
            message: format!("missing field `{key}`"),
        })
    }

    fn num_from(&self, key: &str, v: &str) -> Result<f64> {
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.err(key, format!("expected a finite number, got `{v}`"))),
        }
    }

    fn num(&mut self, key: &str) -> Result<f64> {
        let v = self.take(key)?;
        self.num_from(key, &v)
    }

    fn opt_num(&mut self, key: &str) -> Result<Option<f64>> {
        match self.fields.remove(key) {
            Some(v) => self.num_from(key, &v).map(Some),
            None => Ok(None),
        }
    }

    fn id(&mut self, key: &str) -> Result<usize> {
        let v = self.take(key)?;
        v.parse()
            .map_err(|_| self.err(key, format!("expected a non-negative integer, got `{v}`")))
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>> {
        let v = self.take(key)?;
        v.split(',').map(|s| self.num_from(key, s)).collect()
    }

    fn matrix(&mut self, key: &str) -> Result<Matrix> {
        let v = self.take(key)?;
        let rows = v
            .split(';')
            .map(|r| r.split(',').map(|s| self.num_from(key, s)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Matrix::from_rows(&rows).map_err(|e| self.err(key, e.to_string()))
    }

    /// Rejects any field that was not consumed.
    fn finish(self) -> Result<()> {
        match self.fields.keys().next() {
            Some(k) => Err(self.err(k, "unknown field")),
            None => Ok(()),
        }
    }
}

fn core_err(line: usize, e: secfreq_core::Error) -> CliError {
    CliError::Parse {
        line,
        message: e.to_string(),
    }
}

fn parse_generator(mut r: Record) -> Result<(usize, LtiGenerator)> {
    let bus = r.id("bus")?;
    let kind = r.take("kind")?;
    let line = r.line;
    let gen = match kind.as_str() {
        "first_order" => {
            let (tau, k) = (r.num("tau")?, r.num("gain")?);
            LtiGenerator::first_order(tau, k)
        }
        "second_order" => {
            let (ta, tp, k) = (r.num("tau_a")?, r.num("tau_p")?, r.num("gain")?);
            LtiGenerator::second_order(ta, tp, k)
        }
        "lti" => {
            let a = r.matrix("a")?;
            let (b, c) = (r.list("b")?, r.list("c")?);
            let d = r.opt_num("d")?.unwrap_or(0.0);
            LtiGenerator::new(a, b, c, d)
        }
        other => {
            return Err(r.err(
                "kind",
                format!("expected first_order, second_order or lti, got `{other}`"),
            ))
        }
    }
    .map_err(|e| core_err(line, e))?;
    r.finish()?;
    Ok((bus, gen))
}

#[derive(Default)]
struct Raw {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    comm: Vec<CommEdge>,
    generators: Vec<(usize, usize, LtiGenerator)>,
    controllers: Vec<(usize, usize, f64, f64, f64, f64, Option<f64>)>,
    time: Option<f64>,
    steps: Vec<(usize, usize, f64)>,
    sim: BTreeMap<String, (usize, String)>,
}

/// Parses and validates scenario text. Every structural problem is
/// collected into a single [`CliError::Validation`].
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut raw = Raw::default();
    let mut section: Option<&str> = None;
    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let body = full.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            section = Some(SECTIONS.iter().copied().find(|s| *s == name).ok_or_else(|| {
                CliError::Parse {
                    line,
                    message: format!("unknown section [{name}]"),
                }
            })?);
            continue;
        }
        let Some(sec) = section else {
            return Err(CliError::Parse {
                line,
                message: "record outside of any section".into(),
            });
        };
        let mut r = Record::parse(line, body)?;
        match sec {
            "buses" => {
                let id = r.id("id")?;
                let kind = r.take("kind")?;
                let bus = match kind.as_str() {
                    "generator" => Bus::generator(id, r.num("inertia")?, r.num("damping")?),
                    "load" => Bus::load_bus(id, r.num("damping")?),
                    other => {
                        return Err(r.err("kind", format!("expected generator or load, got `{other}`")))
                    }
                };
                r.finish()?;
                raw.buses.push(bus);
            }
            "lines" => {
                let l = Line {
                    from: r.id("from")?,
                    to: r.id("to")?,
                    susceptance: r.num("susceptance")?,
                };
                r.finish()?;
                raw.lines.push(l);
            }
            "comm" => {
                let e = CommEdge {
                    a: r.id("a")?,
                    b: r.id("b")?,
                    weight: r.opt_num("weight")?.unwrap_or(1.0),
                };
                r.finish()?;
                raw.comm.push(e);
            }
            "generators" => {
                let (bus, gen) = parse_generator(r)?;
                raw.generators.push((line, bus, gen));
            }
            "controllers" => {
                let c = (
                    line,
                    r.id("bus")?,
                    r.num("gamma")?,
                    r.num("k_c")?,
                    r.num("k_d")?,
                    r.num("q")?,
                    r.opt_num("k_f")?,
                );
                r.finish()?;
                raw.controllers.push(c);
            }
            "disturbance" => {
                if r.fields.contains_key("time") {
                    if raw.time.is_some() {
                        return Err(r.err("time", "given twice"));
                    }
                    raw.time = Some(r.num("time")?);
                } else {
                    raw.steps.push((line, r.id("bus")?, r.num("load")?));
                }
                r.finish()?;
            }
            "sim" => {
                for (k, v) in std::mem::take(&mut r.fields) {
                    if raw.sim.insert(k.clone(), (line, v)).is_some() {
                        return Err(r.err(&k, "given twice"));
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    build(raw)
}

fn dup<K: Ord + Copy>(items: impl Iterator<Item = (usize, K)>) -> Result<BTreeMap<K, usize>> {
    let mut seen = BTreeMap::new();
    for (line, k) in items {
        if seen.insert(k, line).is_some() {
            return Err(CliError::Parse {
                line,
                message: "duplicate record for this bus".into(),
            });
        }
    }
    Ok(seen)
}

fn build(mut raw: Raw) -> Result<Scenario> {
    let mut sim_num = |key: &'static str| -> Result<Option<(usize, f64)>> {
        match raw.sim.remove(key) {
            None => Ok(None),
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some((line, x))),
                _ => Err(CliError::Field {
                    line,
                    field: key.into(),
                    message: format!("expected a finite number, got `{v}`"),
                }),
            },
        }
    };
    let t_end = sim_num("t_end")?;
    let dt = sim_num("dt")?;
    let stride = match raw.sim.remove("stride") {
        None => DEFAULT_OUTPUT_STRIDE,
        Some((line, v)) => v.parse().map_err(|_| CliError::Field {
            line,
            field: "stride".into(),
            message: format!("expected a positive integer, got `{v}`"),
        })?,
    };
    if let Some((k, (line, _))) = raw.sim.iter().next() {
        return Err(CliError::Field {
            line: *line,
            field: k.clone(),
            message: "unknown field".into(),
        });
    }
    let missing = |section, field| CliError::MissingField { section, field };
    let (_, t_end) = t_end.ok_or(missing("sim", "t_end"))?;
    let (_, dt) = dt.ok_or(missing("sim", "dt"))?;
    let time = raw.time.ok_or(missing("disturbance", "time"))?;

    dup(raw.generators.iter().map(|g| (g.0, g.1)))?;
    dup(raw.controllers.iter().map(|c| (c.0, c.1)))?;
    dup(raw.steps.iter().map(|s| (s.0, s.1)))?;

    let mut violations = Vec::new();
    for &(_, bus, load) in &raw.steps {
        match raw.buses.iter_mut().find(|b| b.id == bus) {
            Some(b) => b.load = load,
            None => violations.push(format!("disturbance: unknown bus {bus}")),
        }
    }
    let network = PowerNetwork::new(raw.buses, raw.lines, raw.comm);
    violations.extend(network.validate());

    let is_gen = |id: usize| network.buses.iter().any(|b| b.id == id && b.kind == BusKind::Generator);
    let generators: BTreeMap<usize, LtiGenerator> =
        raw.generators.into_iter().map(|(_, b, g)| (b, g)).collect();
    let mut controllers = BTreeMap::new();
    for (line, bus, gamma, k_c, k_d, q, k_f) in raw.controllers {
        let k_f = match (k_f, generators.get(&bus)) {
            (Some(v), _) => v,
            (None, Some(g)) => default_kf(g.dc_gain().map_err(|e| core_err(line, e))?, k_c, k_d),
            (None, None) => 1.0,
        };
        let p = DadocParams::new(gamma, k_f, k_c, k_d, q).map_err(|e| core_err(line, e))?;
        controllers.insert(bus, p);
    }
    for id in network.buses.iter().filter(|b| b.is_generator()).map(|b| b.id) {
        if !generators.contains_key(&id) {
            violations.push(format!("generator bus {id}: no generation block"));
        }
        if !controllers.contains_key(&id) {
            violations.push(format!("generator bus {id}: no controller"));
        }
    }
    for id in generators.keys().filter(|&&id| !is_gen(id)) {
        violations.push(format!("generation block for non-generator bus {id}"));
    }
    for id in controllers.keys().filter(|&&id| !is_gen(id)) {
        violations.push(format!("controller for non-generator bus {id}"));
    }
    if !(dt > 0.0) {
        violations.push("sim: dt must be positive".into());
    }
    if stride == 0 {
        violations.push("sim: stride must be at least 1".into());
    }
    if !(time < t_end) {
        violations.push("disturbance time must precede t_end".into());
    }
    if !violations.is_empty() {
        violations.sort();
        violations.dedup();
        return Err(CliError::Validation(violations));
    }

    let mut scn = Scenario::new(network, generators, controllers, time, t_end);
    scn.dt = dt;
    scn.output_stride = stride;
    scn.validate()
        .map_err(|e| CliError::Validation(vec![e.to_string()]))?;
    Ok(scn)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_scenario(&text)
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(",")
}

fn write_generator(out: &mut String, bus: usize, g: &LtiGenerator) {
    if g.order() == 1 && g.c() == [1.0] && g.d() == 0.0 {
        let tau = -1.0 / g.a()[(0, 0)];
        let k = g.b()[0] * tau;
        if LtiGenerator::first_order(tau, k).ok().as_ref() == Some(g) {
            let _ = writeln!(out, "bus={bus} kind=first_order tau={} gain={}", fmt_num(tau), fmt_num(k));
            return;
        }
    }
    if let Some((ta, tp, k)) = g.as_second_order() {
        if LtiGenerator::second_order(ta, tp, k).ok().as_ref() == Some(g) {
            let _ = writeln!(
                out,
                "bus={bus} kind=second_order tau_a={} tau_p={} gain={}",
                fmt_num(ta),
                fmt_num(tp),
                fmt_num(k)
            );
            return;
        }
    }
    let rows: Vec<String> = g.a().to_rows().iter().map(|r| join(r)).collect();
    let _ = writeln!(
        out,
        "bus={bus} kind=lti a={} b={} c={} d={}",
        rows.join(";"),
        join(g.b()),
        join(g.c()),
        fmt_num(g.d())
    );
}

/// Writes `scn` in the format read by [`parse_scenario`].
pub fn serialize_scenario(scn: &Scenario) -> String {
    let mut s = String::new();
    let net = &scn.network;
    s.push_str("[buses]\n");
    for b in &net.buses {
        let _ = match b.kind {
            BusKind::Generator => writeln!(
                s,
                "id={} kind=generator inertia={} damping={}",
                b.id,
                fmt_num(b.inertia),
                fmt_num(b.damping)
            ),
            BusKind::Load => writeln!(s, "id={} kind=load damping={}", b.id, fmt_num(b.damping)),
        };
    }
    s.push_str("[lines]\n");
    for l in &net.lines {
        let _ = writeln!(s, "from={} to={} susceptance={}", l.from, l.to, fmt_num(l.susceptance));
    }
    s.push_str("[comm]\n");
    for e in &net.comm {
        let _ = writeln!(s, "a={} b={} weight={}", e.a, e.b, fmt_num(e.weight));
    }
    s.push_str("[generators]\n");
    for (&bus, g) in &scn.generators {
        write_generator(&mut s, bus, g);
    }
    s.push_str("[controllers]\n");
    for (&bus, p) in &scn.controllers {
        let _ = writeln!(
            s,
            "bus={bus} gamma={} k_f={} k_c={} k_d={} q={}",
            fmt_num(p.gamma),
            fmt_num(p.k_f),
            fmt_num(p.k_c),
            fmt_num(p.k_d),
            fmt_num(p.q)
        );
    }
    s.push_str("[disturbance]\n");
    let _ = writeln!(s, "time={}", fmt_num(scn.disturbance_time));
    for (&bus, &load) in &scn.step_loads {
        let _ = writeln!(s, "bus={bus} load={}", fmt_num(load));
    }
    s.push_str("[sim]\n");
    let _ = writeln!(
        s,
        "t_end={} dt={} stride={}",
        fmt_num(scn.t_end),
        fmt_num(scn.dt),
        scn.output_stride
    );
    s
}
