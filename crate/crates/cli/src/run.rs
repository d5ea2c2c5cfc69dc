//! Certification, equilibrium, simulation and the run report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use secfreq_core::certify::search_certificate;
use secfreq_core::dispatch::{check_kkt, solve_ogr};
use secfreq_core::sim::{compute_equilibrium, dissipation_check, integrate, EPS_V};
use secfreq_core::{Certificate, Dispatch, Equilibrium, OgrProblem, Scenario, Trajectory};

use crate::error::{CliError, Result};
use crate::format::fmt_num;
use crate::output::{emit_plots, write_csv};

/// Band for the settling time and the restoration check.
pub const SETTLE_BAND: f64 = 1e-4;
/// Tolerance on the converged marginal costs.
pub const KKT_TOL: f64 = 1e-3;

pub const CSV_NAME: &str = "trajectory.csv";
pub const REPORT_NAME: &str = "report.txt";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunFlags {
    pub optimal_gains: bool,
    pub skip_certify: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertStatus {
    Found(Certificate),
    NotFound,
    Skipped,
}

impl CertStatus {
    fn describe(&self) -> String {
        match self {
            CertStatus::Found(c) => format!(
                "found (k_f = {}, P = diag({}), lambda_hat = {}, margin = {})",
                fmt_num(c.k_f),
                c.p_matrix
                    .diagonal()
                    .iter()
                    .map(|&v| fmt_num(v))
                    .collect::<Vec<_>>()
                    .join(", "),
                fmt_num(c.lambda_hat),
                fmt_num(c.margin)
            ),
            CertStatus::NotFound => "no diagonal certificate found".into(),
            CertStatus::Skipped => "skipped".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub certificates: BTreeMap<usize, CertStatus>,
    pub nu: f64,
    pub max_abs_eta: f64,
    pub assumption2: bool,
    pub max_abs_omega: f64,
    pub settling_time: Option<f64>,
    pub final_marginal_spread: f64,
    /// `None` when some generator has no certificate.
    pub max_lyapunov_jump: Option<f64>,
    pub ogr: Dispatch,
    /// Only evaluated with optimal gains.
    pub kkt: Option<bool>,
    pub t_end: f64,
    /// Relative to the output directory.
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn certified(&self) -> bool {
        !self
            .certificates
            .values()
            .any(|c| matches!(c, CertStatus::NotFound))
    }

    /// Exit-code contract: certification, Assumption 2, settling and KKT.
    pub fn passed(&self) -> bool {
        self.certified()
            && self.assumption2
            && self.settling_time.is_some()
            && self.kkt != Some(false)
    }

    pub fn render(&self) -> String {
        let mut s = String::from("secfreq run report\n");
        s.push_str("certificates:\n");
        for (id, c) in &self.certificates {
            let _ = writeln!(s, "  generator {id}: {}", c.describe());
        }
        s.push_str("equilibrium:\n");
        let _ = writeln!(s, "  nu = {}", fmt_num(self.nu));
        let _ = writeln!(s, "  max |eta*| = {}", fmt_num(self.max_abs_eta));
        let _ = writeln!(
            s,
            "  {}",
            if self.assumption2 { "Assumption 2: pass" } else { "Assumption 2 violated" }
        );
        s.push_str("trajectory:\n");
        let _ = writeln!(s, "  max |omega| = {}", fmt_num(self.max_abs_omega));
        let settle = match self.settling_time {
            Some(t) => fmt_num(t),
            None => "not settled".into(),
        };
        let _ = writeln!(s, "  settling time (|omega| < {}) = {settle}", fmt_num(SETTLE_BAND));
        let _ = writeln!(s, "  final marginal-cost spread = {}", fmt_num(self.final_marginal_spread));
        let jump = match self.max_lyapunov_jump {
            Some(j) => format!(
                "{} ({})",
                fmt_num(j),
                if j <= EPS_V { "within slack" } else { "exceeds slack" }
            ),
            None => "n/a (no certificates)".into(),
        };
        let _ = writeln!(s, "  max Lyapunov jump = {jump}");
        s.push_str("dispatch:\n");
        let _ = writeln!(s, "  optimal nu = {}", fmt_num(self.ogr.nu));
        for (id, p) in &self.ogr.allocation {
            let _ = writeln!(s, "  p[{id}] = {}", fmt_num(*p));
        }
        let kkt = match self.kkt {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "not requested",
        };
        let _ = writeln!(s, "  KKT (tol {}): {kkt}", fmt_num(KKT_TOL));
        let _ = writeln!(s, "status: {}", if self.passed() { "PASS" } else { "FAIL" });
        if !self.files.is_empty() {
            s.push_str("files:\n");
            for f in &self.files {
                let _ = writeln!(s, "  {}", f.display());
            }
        }
        s
    }
}

/// Certifies every generator, replacing each controller's `k_f` with the
/// certificate's.
pub fn certify_all(scn: &mut Scenario) -> BTreeMap<usize, CertStatus> {
    let mut out = BTreeMap::new();
    for (&id, gen) in &scn.generators {
        let lambda = scn.network.buses[id].damping;
        let params = scn.controllers.get_mut(&id).expect("validated scenario");
        let status = match search_certificate(gen, params, lambda) {
            Some(c) => {
                params.k_f = c.k_f;
                CertStatus::Found(c)
            }
            None => CertStatus::NotFound,
        };
        out.insert(id, status);
    }
    out
}

pub fn dispatch_problem(scn: &Scenario) -> OgrProblem {
    OgrProblem::new(
        scn.controllers.iter().map(|(&id, p)| (id, p.q)).collect(),
        scn.total_step_load(),
    )
}

/// Everything a run produces before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub equilibrium: Equilibrium,
    pub trajectory: Trajectory,
    pub report: RunReport,
}

/// Runs the full pipeline in memory. With optimal gains the `k_c` values
/// are replaced before certification, since the certificate depends on
/// them.
pub fn simulate(scn: &Scenario, flags: RunFlags) -> Result<RunOutput> {
    let mut scn = scn.clone();
    scn.validate().map_err(CliError::stage("validation"))?;
    if flags.optimal_gains {
        scn.apply_optimal_gains().map_err(CliError::stage("optimal gains"))?;
    }
    let certificates = if flags.skip_certify {
        scn.generators.keys().map(|&id| (id, CertStatus::Skipped)).collect()
    } else {
        certify_all(&mut scn)
    };
    let eq = compute_equilibrium(&scn).map_err(CliError::stage("equilibrium"))?;
    let mut traj = integrate(&scn).map_err(CliError::stage("integration"))?;

    let certs: Option<BTreeMap<usize, Certificate>> = certificates
        .iter()
        .map(|(&id, c)| match c {
            CertStatus::Found(c) => Some((id, c.clone())),
            _ => None,
        })
        .collect();
    let max_lyapunov_jump = match certs {
        Some(certs) if !certs.is_empty() => {
            traj.attach_lyapunov(&scn, &certs, &eq)
                .map_err(CliError::stage("lyapunov"))?;
            Some(dissipation_check(&scn, &certs, &eq, &traj).map_err(CliError::stage("lyapunov"))?)
        }
        _ => None,
    };

    let prob = dispatch_problem(&scn);
    let ogr = solve_ogr(&prob).map_err(CliError::stage("dispatch"))?;
    let kkt = flags.optimal_gains.then(|| {
        let last = traj.p_m.last().cloned().unwrap_or_default();
        let alloc: BTreeMap<usize, f64> = last.into_iter().enumerate().collect();
        let marginals_match = traj
            .marginal_costs
            .last()
            .is_some_and(|mc| mc.iter().all(|m| (m - ogr.nu).abs() <= KKT_TOL * ogr.nu.abs().max(1.0)));
        check_kkt(&alloc, &prob, KKT_TOL) && marginals_match
    });

    let report = RunReport {
        certificates,
        nu: eq.nu,
        max_abs_eta: eq.max_abs_eta(),
        assumption2: eq.angles_secure,
        max_abs_omega: traj.max_abs_frequency(),
        settling_time: traj.settling_time(SETTLE_BAND),
        final_marginal_spread: traj.final_marginal_spread(),
        max_lyapunov_jump,
        ogr,
        kkt,
        t_end: scn.t_end,
        files: Vec::new(),
    };
    Ok(RunOutput {
        scenario: scn,
        equilibrium: eq,
        trajectory: traj,
        report,
    })
}

/// Runs and writes the CSV, plot scripts and report into `out`.
pub fn run(scn: &Scenario, flags: RunFlags, out: &Path) -> Result<RunOutput> {
    let mut result = simulate(scn, flags)?;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let csv = out.join(CSV_NAME);
    write_csv(&result.trajectory, &csv)?;
    let plots = emit_plots(&result.trajectory, out, CSV_NAME)?;
    let mut files = vec![PathBuf::from(CSV_NAME)];
    files.extend(plots.iter().filter_map(|p| p.file_name().map(PathBuf::from)));
    files.push(PathBuf::from(REPORT_NAME));
    result.report.files = files;
    let path = out.join(REPORT_NAME);
    std::fs::write(&path, result.report.render()).map_err(CliError::io(&path))?;
    Ok(result)
}

/// Certificate listing for the `certify` subcommand.
pub fn certify_report(scn: &Scenario, flags: RunFlags) -> Result<(String, bool)> {
    let mut scn = scn.clone();
    if flags.optimal_gains {
        scn.apply_optimal_gains().map_err(CliError::stage("optimal gains"))?;
    }
    let certs = certify_all(&mut scn);
    let mut s = String::from("secfreq certificates\n");
    for (id, c) in &certs {
        let p = &scn.controllers[id];
        let _ = writeln!(
            s,
            "generator {id} (k_c = {}, k_d = {}, damping = {}): {}",
            fmt_num(p.k_c),
            fmt_num(p.k_d),
            fmt_num(scn.network.buses[*id].damping),
            c.describe()
        );
    }
    let ok = !certs.values().any(|c| matches!(c, CertStatus::NotFound));
    Ok((s, ok))
}

pub fn dispatch_report(scn: &Scenario) -> Result<String> {
    let prob = dispatch_problem(scn);
    let d = solve_ogr(&prob).map_err(CliError::stage("dispatch"))?;
    let mut s = String::from("secfreq optimal dispatch\n");
    let _ = writeln!(s, "total load = {}", fmt_num(prob.total_load));
    let _ = writeln!(s, "nu = {}", fmt_num(d.nu));
    for (id, p) in &d.allocation {
        let _ = writeln!(
            s,
            "generator {id}: p = {}, marginal cost = {}",
            fmt_num(*p),
            fmt_num(prob.costs[id] * p)
        );
    }
    Ok(s)
}

pub fn equilibrium_report(scn: &Scenario, flags: RunFlags) -> Result<(String, bool)> {
    let mut scn = scn.clone();
    if flags.optimal_gains {
        scn.apply_optimal_gains().map_err(CliError::stage("optimal gains"))?;
    }
    let eq = compute_equilibrium(&scn).map_err(CliError::stage("equilibrium"))?;
    let mut s = String::from("secfreq equilibrium\n");
    let _ = writeln!(s, "nu = {}", fmt_num(eq.nu));
    let _ = writeln!(s, "newton iterations = {}", eq.newton_iterations);
    for (i, a) in eq.angles_star.iter().enumerate() {
        let _ = writeln!(s, "theta[{i}] = {}", fmt_num(*a));
    }
    for (j, p) in eq.p_m_star.iter().enumerate() {
        let _ = writeln!(s, "p_m[{j}] = {}", fmt_num(*p));
    }
    for ((l, eta), f) in scn.network.lines.iter().zip(&eq.eta_star).zip(&eq.flows_star) {
        let _ = writeln!(s, "line {}->{}: eta = {}, flow = {}", l.from, l.to, fmt_num(*eta), fmt_num(*f));
    }
    let _ = writeln!(s, "max |eta*| = {}", fmt_num(eq.max_abs_eta()));
    let _ = writeln!(
        s,
        "{}",
        if eq.angles_secure { "Assumption 2: pass" } else { "Assumption 2 violated" }
    );
    Ok((s, eq.angles_secure))
}
