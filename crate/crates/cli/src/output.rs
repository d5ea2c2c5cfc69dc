//! Trajectory CSV and gnuplot scripts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use secfreq_core::Trajectory;

use crate::error::{CliError, Result};
use crate::format::fmt_num;

pub const FREQUENCY_PLOT: &str = "plot_frequency.gp";
pub const MARGINAL_PLOT: &str = "plot_marginal_cost.gp";

fn counts(traj: &Trajectory) -> (usize, usize) {
    let buses = traj.bus_freqs.first().map_or(0, Vec::len);
    let gens = traj.p_m.first().map_or(0, Vec::len);
    (buses, gens)
}

pub fn csv_header(traj: &Trajectory) -> String {
    let (n, g) = counts(traj);
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("omega_{i}")));
    for prefix in ["pm", "pc", "mc"] {
        cols.extend((0..g).map(|j| format!("{prefix}_{j}")));
    }
    cols.push("V".into());
    cols.join(",")
}

/// One header row, then one row per sample. `V` is left blank when the
/// trajectory carries no Lyapunov values.
pub fn to_csv(traj: &Trajectory) -> String {
    let mut s = csv_header(traj);
    s.push('\n');
    for k in 0..traj.len() {
        let mut row = vec![fmt_num(traj.times[k])];
        row.extend(traj.bus_freqs[k].iter().map(|&v| fmt_num(v)));
        row.extend(traj.p_m[k].iter().map(|&v| fmt_num(v)));
        row.extend(traj.states[k].power_commands.iter().map(|&v| fmt_num(v)));
        row.extend(traj.marginal_costs[k].iter().map(|&v| fmt_num(v)));
        row.push(traj.lyapunov.as_ref().map_or(String::new(), |v| fmt_num(v[k])));
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn write_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(traj)).map_err(CliError::io(path))
}

fn script(title: &str, ylabel: &str, csv: &str, series: &[(usize, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel 't [s]'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set grid");
    let plots: Vec<String> = series
        .iter()
        .map(|(col, name)| format!("'{csv}' using 1:{col} skip 1 with lines title '{name}'"))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

/// Writes a frequency and a marginal-cost script that plot columns of
/// `csv_name` (relative to `outdir`).
pub fn emit_plots(traj: &Trajectory, outdir: &Path, csv_name: &str) -> Result<[PathBuf; 2]> {
    if traj.is_empty() {
        return Err(CliError::Usage("cannot plot an empty trajectory".into()));
    }
    let (n, g) = counts(traj);
    let freq: Vec<(usize, String)> = (0..n).map(|i| (2 + i, format!("bus {i}"))).collect();
    let mc_start = 2 + n + 2 * g;
    let mc: Vec<(usize, String)> = (0..g).map(|j| (mc_start + j, format!("generator {j}"))).collect();

    let f = outdir.join(FREQUENCY_PLOT);
    let m = outdir.join(MARGINAL_PLOT);
    std::fs::write(&f, script("Bus frequency deviation", "omega [p.u.]", csv_name, &freq))
        .map_err(CliError::io(&f))?;
    std::fs::write(&m, script("Marginal cost of generation", "q p_M", csv_name, &mc))
        .map_err(CliError::io(&m))?;
    Ok([f, m])
}
