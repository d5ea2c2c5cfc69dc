use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use secfreq::run::{certify_report, dispatch_report, equilibrium_report};
use secfreq::sweep::{parse_values, sweep, sweep_summary};
use secfreq::{load_scenario, run, CliError, RunFlags};
use secfreq_core::Scenario;

#[derive(Parser)]
#[command(name = "secfreq", version, about = "Distributed secondary frequency control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file
    scenario: PathBuf,
    /// Replace every k_c by the cost-optimal 1 / (q K)
    #[arg(long)]
    optimal_gains: bool,
    /// Do not search for certificates
    #[arg(long)]
    skip_certify: bool,
    /// Override the integration step
    #[arg(long)]
    dt: Option<f64>,
    /// Override the end time
    #[arg(long)]
    t_end: Option<f64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized harnesses; simulations are deterministic
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify, simulate and write CSV, plot scripts and report
    Simulate(Common),
    /// Search a certificate for every generator
    Certify(Common),
    /// Solve the optimal dispatch for the step load
    Dispatch(Common),
    /// Compute the post-disturbance equilibrium
    Equilibrium(Common),
    /// Run one simulation per parameter value in parallel
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted parameter path, e.g. controllers.0.k_c
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long)]
        values: String,
    },
}

impl Common {
    fn load(&self) -> Result<Scenario, CliError> {
        let mut scn = load_scenario(&self.scenario)?;
        if let Some(dt) = self.dt {
            scn.dt = dt;
        }
        if let Some(t) = self.t_end {
            scn.t_end = t;
        }
        if self.dt.is_some() || self.t_end.is_some() {
            scn.validate()
                .map_err(|e| CliError::Validation(vec![e.to_string()]))?;
        }
        Ok(scn)
    }

    fn flags(&self) -> RunFlags {
        RunFlags {
            optimal_gains: self.optimal_gains,
            skip_certify: self.skip_certify,
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    }
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Simulate(c) => {
            let scn = c.load()?;
            let out = run(&scn, c.flags(), &c.out)?;
            print!("{}", out.report.render());
            Ok(out.report.passed())
        }
        Command::Certify(c) => {
            let (text, ok) = certify_report(&c.load()?, c.flags())?;
            print!("{text}");
            Ok(ok)
        }
        Command::Dispatch(c) => {
            print!("{}", dispatch_report(&c.load()?)?);
            Ok(true)
        }
        Command::Equilibrium(c) => {
            let (text, ok) = equilibrium_report(&c.load()?, c.flags())?;
            print!("{text}");
            Ok(ok)
        }
        Command::Sweep { common, param, values } => {
            let scn = common.load()?;
            let values = parse_values(&values)?;
            let runs = sweep(&scn, &param, &values, common.flags(), &common.out)?;
            let summary = sweep_summary(&param, &runs);
            write(&common.out.join("sweep.txt"), &summary)?;
            print!("{summary}");
            Ok(runs.iter().all(|r| matches!(&r.outcome, Ok(rep) if rep.passed())))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
