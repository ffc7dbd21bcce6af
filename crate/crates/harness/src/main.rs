use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use ensemble_harness::error::{HarnessError, Result};
use ensemble_harness::experiment::{ConfigFile, ExperimentSpec, Format, Protocol};
use ensemble_harness::output::{emit, Report};
use ensemble_harness::runner::{run_sweep, run_trials_with, Execution, Grid, SweepParameter};
use ensemble_harness::self_check::run_self_check;

const DEFAULT_TRIALS: u64 = 1000;

#[derive(Parser, Debug)]
#[command(
    name = "ensemble-sim",
    version,
    about = "Seeded Monte Carlo runs of the atomic-ensemble protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bell measurement of a prepared Bell state.
    Bell(RunArgs),
    /// Preparation of the four-ensemble C-NOT resource.
    Chi(RunArgs),
    /// Teleported C-NOT on a product input.
    Cnot(RunArgs),
    /// Two-qubit Deutsch-Jozsa with one oracle.
    Dj(RunArgs),
    /// Repeats a protocol over a grid of detector efficiencies or dark-count
    /// probabilities.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Bell input (phi+, phi-, psi+, psi-) or C-NOT input `C,T` with C, T in 0 1 + - +i -i.
    #[arg(long)]
    state: Option<String>,
    /// Oracle for dj: F1, F2, F3 or F4.
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long, value_parser = ["ideal", "physical"])]
    backend: Option<String>,
    /// Which Bell pair the physical measurement certifies.
    #[arg(long, value_parser = ["psi", "phi"])]
    config: Option<String>,
    /// Detector efficiency.
    #[arg(long)]
    eta: Option<f64>,
    /// Dark-count probability per detector per round.
    #[arg(long)]
    dark: Option<f64>,
    /// Detectors report photon numbers instead of a single click.
    #[arg(long)]
    number_resolving: bool,
    /// How dj executes oracle C-NOTs.
    #[arg(long, value_parser = ["direct", "teleported"])]
    cnot: Option<String>,
    /// Oracle form for dj.
    #[arg(long, value_parser = ["direct", "decomposed"])]
    oracle_impl: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; required here or in the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["json", "csv"])]
    format: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value file with defaults for the flags above.
    #[arg(long)]
    config_file: Option<PathBuf>,
    /// Run the exact Bell, correction-table and oracle checks first.
    #[arg(long)]
    self_check: bool,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
    /// Report a wall time of zero so repeated runs produce identical bytes.
    #[arg(long)]
    omit_timing: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_parser = ["bell", "chi", "cnot", "dj"])]
    protocol: String,
    #[arg(long, value_parser = ["eta", "dark"])]
    parameter: String,
    #[arg(long)]
    start: f64,
    #[arg(long)]
    stop: f64,
    #[arg(long)]
    step: f64,
    #[command(flatten)]
    run: RunArgs,
}

fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| HarnessError::config(format!("unexpected value `{s}`")))
}

struct Resolved {
    spec: ExperimentSpec,
    format: Format,
    out: Option<PathBuf>,
}

fn resolve(protocol: Protocol, args: &RunArgs) -> Result<Resolved> {
    let file = match &args.config_file {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let seed = args.seed.or(file.seed).ok_or_else(|| {
        HarnessError::config("a seed is required (--seed or `seed` in the config file)")
    })?;
    let trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
    let mut spec = ExperimentSpec::new(protocol, trials, seed);

    spec.state = args.state.clone().or(file.state);
    if let Some(o) = args.oracle.clone().or(file.oracle) {
        spec.oracle = Some(o.parse().map_err(HarnessError::Config)?);
    }
    if let Some(b) = &args.backend {
        spec.backend = parse_name(b)?;
    } else if let Some(b) = file.backend {
        spec.backend = b;
    }
    if let Some(c) = &args.config {
        spec.config = parse_name(c)?;
    } else if let Some(c) = file.config {
        spec.config = c;
    }
    if let Some(c) = &args.cnot {
        spec.cnot = parse_name(c)?;
    } else if let Some(c) = file.cnot {
        spec.cnot = c;
    }
    if let Some(o) = &args.oracle_impl {
        spec.oracle_impl = parse_name(o)?;
    } else if let Some(o) = file.oracle_impl {
        spec.oracle_impl = o;
    }
    if let Some(eta) = args.eta.or(file.eta) {
        spec.detectors.efficiency = eta;
    }
    if let Some(dark) = args.dark.or(file.dark) {
        spec.detectors.dark_count_prob = dark;
    }
    spec.detectors.number_resolving =
        args.number_resolving || file.number_resolving.unwrap_or(false);

    let format = match &args.format {
        Some(f) => parse_name(f)?,
        None => file.format.unwrap_or_default(),
    };
    let out = args.out.clone().or(file.out.map(PathBuf::from));
    spec.plan()?;
    Ok(Resolved { spec, format, out })
}

enum Failure {
    Harness(HarnessError),
    SelfCheck(Vec<String>),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Self::Harness(e)
    }
}

fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    let (protocol, args, sweep) = match &cli.command {
        Command::Bell(a) => (Protocol::Bell, a, None),
        Command::Chi(a) => (Protocol::Chi, a, None),
        Command::Cnot(a) => (Protocol::Cnot, a, None),
        Command::Dj(a) => (Protocol::Dj, a, None),
        Command::Sweep(s) => (s.protocol.parse()?, &s.run, Some(s)),
    };
    let resolved = resolve(protocol, args)?;
    if args.self_check {
        let failures = run_self_check()?;
        if !failures.is_empty() {
            return Err(Failure::SelfCheck(failures));
        }
    }
    let execution = if args.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let strip = |mut stats: ensemble_harness::TrialStats| {
        if args.omit_timing {
            stats = stats.without_timing();
        }
        stats
    };
    let report = match sweep {
        None => Report::Single(strip(run_trials_with(&resolved.spec, execution)?)),
        Some(s) => {
            let parameter = match s.parameter.as_str() {
                "eta" => SweepParameter::Efficiency,
                _ => SweepParameter::DarkCountProb,
            };
            let grid = Grid {
                start: s.start,
                stop: s.stop,
                step: s.step,
            };
            let mut sweep = run_sweep(&resolved.spec, parameter, grid, execution)?;
            sweep.rows = sweep.rows.into_iter().map(strip).collect();
            Report::Sweep(sweep)
        }
    };
    emit(&report, resolved.format, resolved.out.as_deref())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Harness(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::SelfCheck(failures)) => {
            for f in failures {
                eprintln!("self-check failed: {f}");
            }
            ExitCode::from(3)
        }
    }
}
