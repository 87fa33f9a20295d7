//! Command bodies. Each returns an [`Outcome`]; hard failures are errors,
//! while a missing optimizer solution or a failed verification still writes
//! its report and only changes the exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kinetic_core::bessel::{eval_batch, eval_with_gradient, HarmonicPhase};
use kinetic_core::optimize::{optimize_profile, verify_table, CgSettings, ChannelSpec, MultistartSettings, OpenChannel, TableId, DEFAULT_FLOOR};
use kinetic_core::protocols::{
    geometric_grid, run_cnot, run_error_scan, run_ghz, run_qutrit_cnot, run_qutrit_controlled, run_toffoli, run_w_state, GhzOptions,
    ProtocolReport, ScanReport, ToffoliOptions,
};
use kinetic_core::report::{render_columns, render_trajectory, write_json, write_text, Header};
use serde::Serialize;

use crate::config::{Command, Protocol, RunConfig};
use crate::{CliError, EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFICATION};

/// Default ω grid of `run error-scan`.
pub const SCAN_LO: f64 = 50.0;
pub const SCAN_HI: f64 = 800.0;
pub const SCAN_POINTS: usize = 8;
pub const SCAN_T_MAX: f64 = 5.0;
/// Random starts of `optimize` when `starts` is not given.
pub const OPTIMIZE_STARTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    /// Printed to stdout.
    pub stdout: String,
    /// Printed to stderr.
    pub warning: Option<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn ok(stdout: String, files: Vec<PathBuf>) -> Self {
        Self { exit_code: EXIT_OK, stdout, warning: None, files }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Bessel => bessel(cfg),
        Command::Optimize => optimize(cfg),
        Command::Run => run(cfg),
        Command::Verify => verify(cfg),
    }
}

fn header(cfg: &RunConfig) -> Header {
    Header::new(&cfg.canonical(), None)
}

fn output_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    Ok(&cfg.output_dir)
}

fn canonical(f: &[f64], z: f64) -> Vec<f64> {
    f.iter().copied().chain(std::iter::once(z)).collect()
}

fn bessel(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = cfg.f.as_deref().unwrap_or_default();
    let h = header(cfg);
    let text = if let Some(s) = cfg.scan {
        let zs: Vec<f64> = (0..s.n).map(|i| s.lo + (s.hi - s.lo) * i as f64 / (s.n - 1) as f64).collect();
        let phases = zs.iter().map(|&z| HarmonicPhase::from_canonical(&canonical(f, z))).collect::<Result<Vec<_>, _>>()?;
        let values = eval_batch(&phases)?;
        let rows: Vec<Vec<f64>> = zs.iter().zip(values).map(|(&z, v)| vec![z, v]).collect();
        render_columns(&h, &["z".into(), "J".into()], &rows)?
    } else {
        let z = cfg.z.unwrap_or_default();
        let (v, grad) = eval_with_gradient(&HarmonicPhase::from_canonical(&canonical(f, z))?)?;
        let top = f.len() + 1;
        let mut names = vec!["z".to_string(), "J".to_string()];
        names.extend((0..f.len()).map(|i| format!("dJ_dF{}", top - i)));
        names.push("dJ_dz".into());
        let row: Vec<f64> = [z, v].into_iter().chain(grad).collect();
        render_columns(&h, &names, &[row])?
    };
    Ok(Outcome::ok(text, vec![]))
}

#[derive(Serialize)]
struct OptimizeBody<'a> {
    spec: &'a ChannelSpec,
    settings: &'a MultistartSettings,
    result: &'a kinetic_core::optimize::OptimizationReport,
}

fn spec_of(cfg: &RunConfig) -> Result<ChannelSpec, CliError> {
    let mut spec = match &cfg.preset {
        Some(name) => ChannelSpec::preset(name)?,
        None => {
            let open = cfg.open.iter().flatten().map(|&m| OpenChannel::new(m)).collect();
            ChannelSpec::new(cfg.harmonics.unwrap_or(0), cfg.closed.clone().unwrap_or_default(), open, DEFAULT_FLOOR)?
        }
    };
    if let Some(fl) = cfg.floor {
        spec.floor = fl;
    }
    spec.validate()?;
    Ok(spec)
}

fn optimize(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = spec_of(cfg)?;
    let settings = MultistartSettings {
        starts: cfg.starts.unwrap_or(OPTIMIZE_STARTS),
        seed: cfg.seed,
        explicit_starts: cfg.profile.iter().cloned().collect(),
        ..Default::default()
    };
    let result = optimize_profile(&spec, &settings)?;
    let dir = output_dir(cfg)?;
    let path = dir.join("optimize.json");
    write_json(&path, &header(cfg), &OptimizeBody { spec: &spec, settings: &settings, result: &result })?;
    let mut out = String::new();
    let _ = writeln!(out, "profile {:?}", result.params);
    let _ = writeln!(out, "g = {:.3e} ({} of {} starts accepted)", result.g, result.starts_accepted, result.starts_attempted);
    for c in &result.open {
        let _ = writeln!(out, "open {}·V1: {:.6}", c.multiplier, c.value);
    }
    let _ = writeln!(out, "wrote {}", path.display());
    let mut outcome = Outcome::ok(out, vec![path]);
    if !result.success {
        outcome.exit_code = EXIT_NUMERICAL;
        outcome.warning = Some(format!("no start kept every open channel above the floor {:.1e}; reporting the lowest-cost start", spec.floor));
    }
    Ok(outcome)
}

/// File-name-safe trajectory label.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '↑' => 'u',
            '↓' => 'd',
            c if c.is_ascii_alphanumeric() || c == '-' || c == '_' => c,
            _ => '_',
        })
        .collect()
}

fn stem(p: Protocol, n: Option<usize>) -> String {
    match n {
        Some(n) => format!("{}-{n}", p.name()),
        None => p.name().to_string(),
    }
}

fn write_protocol(cfg: &RunConfig, stem: &str, report: &ProtocolReport) -> Result<Vec<PathBuf>, CliError> {
    let dir = output_dir(cfg)?;
    let h = header(cfg);
    let json = dir.join(format!("{stem}.json"));
    write_json(&json, &h.with_basis(report.basis.clone()), report)?;
    let mut files = vec![json];
    for t in &report.trajectories {
        let path = dir.join(format!("{stem}_{}.csv", slug(&t.name)));
        write_text(&path, &render_trajectory(&h.with_basis(t.basis.clone()), &t.result)?)?;
        files.push(path);
    }
    Ok(files)
}

fn summarize(report: &ProtocolReport, files: &[PathBuf]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} at ω = {}", report.protocol, report.omega);
    for s in report.schedule.stages() {
        let _ = writeln!(out, "stage {:?}: duration {:.6}", s.label, s.duration);
    }
    for g in &report.gates {
        let _ = writeln!(out, "{:?} leg: min population {:.6} at t = {:.6}", g.leg, g.min_population, g.gate_time);
    }
    for (k, v) in &report.metrics {
        let _ = writeln!(out, "{k} = {v:.6e}");
    }
    for f in files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    out
}

fn write_scan(cfg: &RunConfig, stem: &str, report: &ScanReport) -> Result<Vec<PathBuf>, CliError> {
    let dir = output_dir(cfg)?;
    let h = header(cfg).with_basis(report.basis.clone());
    let json = dir.join(format!("{stem}.json"));
    write_json(&json, &h, report)?;
    let points = dir.join(format!("{stem}_points.csv"));
    let rows: Vec<Vec<f64>> = report.points.iter().map(|p| vec![p.omega, p.deviation]).collect();
    write_text(&points, &render_columns(&h, &["omega".into(), "deviation".into()], &rows)?)?;
    let mut files = vec![json, points];
    for (i, p) in report.points.iter().enumerate() {
        let path = dir.join(format!("{stem}_trace_{i}.csv"));
        let rows: Vec<Vec<f64>> = (0..p.trace.times.len()).map(|k| vec![p.trace.times[k], p.trace.floquet[k], p.trace.effective[k]]).collect();
        let names = ["t", "sz_floquet", "sz_effective"].map(String::from);
        write_text(&path, &render_columns(&h, &names, &rows)?)?;
        files.push(path);
    }
    Ok(files)
}

fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = cfg.protocol.ok_or_else(|| CliError::Validation("run needs a protocol".into()))?;
    let s = &cfg.integrator;
    let w = cfg.omega;
    let (n, report) = match p {
        Protocol::Cnot => (None, run_cnot(w, cfg.v1, s)?),
        Protocol::Toffoli => {
            let n = cfg.n.unwrap_or(4);
            let opts = ToffoliOptions { profile: cfg.profile.clone(), floquet: cfg.floquet, ..Default::default() };
            (Some(n), run_toffoli(n, w, &opts, s)?)
        }
        Protocol::WState => (None, run_w_state(w, s)?),
        Protocol::Ghz => {
            let n = cfg.n.unwrap_or(4);
            let mut opts = GhzOptions::default();
            opts.search.seed = cfg.seed;
            if let Some(k) = cfg.starts {
                opts.search.starts = k;
            }
            (Some(n), run_ghz(n, w, &opts, s)?)
        }
        Protocol::QutritCnot => (None, run_qutrit_cnot(w, s)?),
        Protocol::QutritCtrl => {
            let n = cfg.n.unwrap_or(2);
            (Some(n), run_qutrit_controlled(n, w, cfg.profile.clone(), cfg.floquet, s)?)
        }
        Protocol::ErrorScan => {
            let n = cfg.n.unwrap_or(4);
            let omegas = match &cfg.omegas {
                Some(o) => o.clone(),
                None => geometric_grid(SCAN_LO, SCAN_HI, SCAN_POINTS)?,
            };
            let report = run_error_scan(n, &omegas, cfg.t_max.unwrap_or(SCAN_T_MAX), cfg.profile.clone(), s)?;
            let stem = stem(p, Some(n));
            let files = write_scan(cfg, &stem, &report)?;
            let mut out = String::new();
            for pt in &report.points {
                let _ = writeln!(out, "ω = {:>10.4}  D = {:.6e}", pt.omega, pt.deviation);
            }
            let _ = writeln!(out, "slope = {:.4}, r² = {:.4}", report.fit.slope, report.fit.r2);
            for f in &files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            return Ok(Outcome::ok(out, files));
        }
    };
    let stem = stem(p, n);
    let files = write_protocol(cfg, &stem, &report)?;
    Ok(Outcome::ok(summarize(&report, &files), files))
}

fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let table: TableId = cfg
        .table
        .as_deref()
        .unwrap_or_default()
        .parse()
        .map_err(|e: kinetic_core::optimize::OptimizeError| CliError::Validation(e.to_string()))?;
    let report = verify_table(table, &CgSettings::default())?;
    let dir = output_dir(cfg)?;
    let path = dir.join(format!("verify-{table}.json"));
    write_json(&path, &header(cfg), &report)?;
    let mut out = String::new();
    let _ = writeln!(out, "{:>3}  {:>10}  {:>10}  {:>10}  {:>10}  verdict", "row", "printed g", "raw g", "polished g", "bar");
    let mut failed = Vec::new();
    for r in &report.rows {
        let strict_ok = cfg.strict.is_none_or(|tol| r.raw_g <= tol);
        let verdict = match (r.pass, strict_ok) {
            (true, true) => "pass",
            (false, _) => "FAIL",
            (true, false) => "FAIL (strict)",
        };
        if verdict != "pass" {
            failed.push(r.label);
        }
        let _ = writeln!(out, "{:>3}  {:>10.3e}  {:>10.3e}  {:>10.3e}  {:>10.3e}  {verdict}", r.label, r.published_g, r.raw_g, r.polished_g, r.threshold);
    }
    if let Some(tol) = cfg.strict {
        let _ = writeln!(out, "strict: raw printed profiles must reach g ≤ {tol:.1e}");
    }
    let _ = writeln!(out, "wrote {}", path.display());
    let mut outcome = Outcome::ok(out, vec![path]);
    if !failed.is_empty() {
        outcome.exit_code = EXIT_VERIFICATION;
        outcome.warning = Some(format!("{table}: rows {failed:?} failed"));
    }
    Ok(outcome)
}
