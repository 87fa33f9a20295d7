use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kinetic_cli::commands::{execute, Outcome};
use kinetic_cli::config::{Command, Protocol, RunConfig, Sweep};
use kinetic_cli::{CliError, EXIT_VALIDATION};

/// Floquet-engineered kinetic constraints: Bessel factors, drive search,
/// gate and state-preparation runs.
#[derive(Debug, Parser)]
#[command(name = "kinetic", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Run from a JSON config instead of a subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

/// Comma-separated floats; the empty string is the empty list.
fn list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(|x| x.parse().map_err(|_| format!("not a number: {x:?}"))).collect()
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Evaluate 𝒥(F_N, …, F_2, z) and its gradient, or sweep z.
    Bessel {
        /// Tilt amplitudes `F_N,…,F_2` (may be empty).
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        f: String,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "scan")]
        z: Option<f64>,
        /// `lo:hi:n` (a leading `v1:` is accepted).
        #[arg(long, allow_hyphen_values = true)]
        scan: Option<Sweep>,
    },
    /// Search for a drive profile closing the given channels.
    Optimize {
        /// cnot, qutrit-cnot, toffoli-N or qutrit-ctrl-N.
        #[arg(long, conflicts_with_all = ["closed", "open", "harmonics"])]
        preset: Option<String>,
        /// Multipliers of channels to close.
        #[arg(long, allow_hyphen_values = true)]
        closed: Option<String>,
        /// Multipliers of channels to keep open.
        #[arg(long, allow_hyphen_values = true)]
        open: Option<String>,
        /// Highest tilt harmonic (0 for none).
        #[arg(long)]
        harmonics: Option<u32>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Extra explicit start `F_N,…,F_2,V_1`.
        #[arg(long, allow_hyphen_values = true)]
        profile: Option<String>,
    },
    /// Run a protocol and write its report and trajectories.
    Run {
        #[arg(value_enum)]
        protocol: Protocol,
        #[arg(long, default_value_t = 100.0)]
        omega: f64,
        /// Qubit count, or control count for qutrit-ctrl.
        #[arg(long)]
        n: Option<usize>,
        /// Canonical profile `F_N,…,F_2,V_1`.
        #[arg(long, allow_hyphen_values = true)]
        profile: Option<String>,
        /// CNOT interaction amplitude (default: the bracketed root).
        #[arg(long, allow_hyphen_values = true)]
        v1: Option<f64>,
        /// Explicit ω grid for error-scan.
        #[arg(long)]
        omegas: Option<String>,
        #[arg(long)]
        t_max: Option<f64>,
        /// Force the Floquet leg of toffoli or qutrit-ctrl on or off.
        #[arg(long)]
        floquet: Option<bool>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Re-polish a published profile table and check every row.
    Verify {
        /// table1 or table2.
        table: String,
        /// Also require the raw printed profiles to reach g ≤ this value.
        #[arg(long)]
        strict: Option<f64>,
    },
}

fn lists(name: &str, v: Option<String>) -> Result<Option<Vec<f64>>, CliError> {
    v.map(|s| list(&s).map_err(|e| CliError::Validation(format!("--{name}: {e}")))).transpose()
}

fn to_config(cmd: Cmd) -> Result<RunConfig, CliError> {
    Ok(match cmd {
        Cmd::Bessel { f, z, scan } => RunConfig { f: lists("f", Some(f))?, z: if scan.is_none() { Some(z.unwrap_or(0.0)) } else { z }, scan, ..RunConfig::new(Command::Bessel) },
        Cmd::Optimize { preset, closed, open, harmonics, floor, starts, seed, profile } => RunConfig {
            preset,
            closed: lists("closed", closed)?,
            open: lists("open", open)?,
            harmonics,
            floor,
            starts,
            seed,
            profile: lists("profile", profile)?,
            ..RunConfig::new(Command::Optimize)
        },
        Cmd::Run { protocol, omega, n, profile, v1, omegas, t_max, floquet, seed, starts } => RunConfig {
            protocol: Some(protocol),
            omega,
            n,
            profile: lists("profile", profile)?,
            v1,
            omegas: lists("omegas", omegas)?,
            t_max,
            floquet,
            seed,
            starts,
            ..RunConfig::new(Command::Run)
        },
        Cmd::Verify { table, strict } => RunConfig { table: Some(table), strict, ..RunConfig::new(Command::Verify) },
    })
}

fn configure_threads(jobs: Option<usize>) -> Result<(), CliError> {
    let Some(jobs) = jobs else {
        return Ok(());
    };
    if jobs == 0 {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(|e| CliError::Validation(format!("--jobs: {e}")))?;
    Ok(())
}

fn load(cli: Cli) -> Result<RunConfig, CliError> {
    configure_threads(cli.jobs)?;
    let mut cfg = match (cli.config, cli.command) {
        (Some(_), Some(_)) => return Err(CliError::Validation("give either a subcommand or --config, not both".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        (None, Some(cmd)) => to_config(cmd)?,
        (None, None) => return Err(CliError::Validation("give a subcommand or --config (see --help)".into())),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(outcome: Outcome) -> ExitCode {
    print!("{}", outcome.stdout);
    if let Some(w) = outcome.warning {
        eprintln!("warning: {w}");
    }
    ExitCode::from(outcome.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION as u8 } else { 0 });
        }
    };
    match load(cli).and_then(|cfg| execute(&cfg)) {
        Ok(outcome) => report(outcome),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
