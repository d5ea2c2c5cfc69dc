//! Parameter sweeps over copies of one scenario.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use secfreq_core::Scenario;

use crate::error::{CliError, Result};
use crate::format::fmt_num;
use crate::run::{run, RunFlags, RunReport};

/// Sets one parameter addressed by a dotted path:
///
/// - `buses.<id>.inertia|damping`
/// - `lines.<index>.susceptance`
/// - `comm.<index>.weight`
/// - `controllers.<id>.gamma|k_f|k_c|k_d|q`
/// - `disturbance.time`, `disturbance.load.<bus>`
/// - `sim.dt|t_end`
pub fn set_param(scn: &mut Scenario, path: &str, value: f64) -> Result<()> {
    let bad = || CliError::Usage(format!("unknown parameter path `{path}`"));
    let parts: Vec<&str> = path.split('.').collect();
    let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match parts.as_slice() {
        ["buses", i, field] => {
            let bus = scn.network.buses.get_mut(idx(i)?).ok_or_else(bad)?;
            match *field {
                "inertia" => bus.inertia = value,
                "damping" => bus.damping = value,
                _ => return Err(bad()),
            }
        }
        ["lines", i, "susceptance"] => {
            scn.network.lines.get_mut(idx(i)?).ok_or_else(bad)?.susceptance = value;
        }
        ["comm", i, "weight"] => {
            scn.network.comm.get_mut(idx(i)?).ok_or_else(bad)?.weight = value;
        }
        ["controllers", i, field] => {
            let p = scn.controllers.get_mut(&idx(i)?).ok_or_else(bad)?;
            match *field {
                "gamma" => p.gamma = value,
                "k_f" => p.k_f = value,
                "k_c" => p.k_c = value,
                "k_d" => p.k_d = value,
                "q" => p.q = value,
                _ => return Err(bad()),
            }
        }
        ["disturbance", "time"] => scn.disturbance_time = value,
        ["disturbance", "load", b] => {
            let b = idx(b)?;
            let bus = scn.network.buses.get_mut(b).ok_or_else(bad)?;
            bus.load = value;
            scn.step_loads.insert(b, value);
        }
        ["sim", "dt"] => scn.dt = value,
        ["sim", "t_end"] => scn.t_end = value,
        _ => return Err(bad()),
    }
    Ok(())
}

pub fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad sweep value `{s}`")))
        })
        .collect()
}

#[derive(Debug)]
pub struct SweepRun {
    pub value: f64,
    pub dir: PathBuf,
    pub outcome: Result<RunReport>,
}

/// Runs one scenario per value, each on its own thread and writing into
/// `out/run_<k>`. Results come back in input order.
pub fn sweep(scn: &Scenario, path: &str, values: &[f64], flags: RunFlags, out: &Path) -> Result<Vec<SweepRun>> {
    let mut scenarios = Vec::with_capacity(values.len());
    for &v in values {
        let mut s = scn.clone();
        set_param(&mut s, path, v)?;
        scenarios.push(s);
    }
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .zip(values)
            .enumerate()
            .map(|(k, (s, &value))| {
                let dir = out.join(format!("run_{k}"));
                scope.spawn(move || {
                    let outcome = run(s, flags, &dir).map(|o| o.report);
                    SweepRun { value, dir, outcome }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Vec<_>>()
    });
    Ok(runs)
}

pub fn sweep_summary(path: &str, runs: &[SweepRun]) -> String {
    let mut s = format!("secfreq sweep over {path}\n");
    for (k, r) in runs.iter().enumerate() {
        let status = match &r.outcome {
            Ok(rep) if rep.passed() => "PASS".to_string(),
            Ok(_) => "FAIL".to_string(),
            Err(e) => format!("ERROR: {e}"),
        };
        let _ = writeln!(s, "run_{k}: {path} = {}: {status}", fmt_num(r.value));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_parse() {
        assert_eq!(parse_values("1, 2.5,1e-3").unwrap(), vec![1.0, 2.5, 1e-3]);
        assert!(parse_values("1,x").is_err());
    }
}
