//! Run configuration: every command is first turned into a [`RunConfig`],
//! validated, hashed and only then executed. The schema is documented in
//! `docs/config.md` and `docs/run-config.schema.json`.

use std::path::PathBuf;

use kinetic_core::evolve::IntegratorSettings;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bessel,
    Optimize,
    Run,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Cnot,
    Toffoli,
    WState,
    Ghz,
    ErrorScan,
    QutritCnot,
    QutritCtrl,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Cnot => "cnot",
            Self::Toffoli => "toffoli",
            Self::WState => "w-state",
            Self::Ghz => "ghz",
            Self::ErrorScan => "error-scan",
            Self::QutritCnot => "qutrit-cnot",
            Self::QutritCtrl => "qutrit-ctrl",
        }
    }
}

/// `lo:hi:n` sweep of the fundamental slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl std::str::FromStr for Sweep {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.strip_prefix("v1:").unwrap_or(s);
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("expected lo:hi:n, got {s:?}"));
        };
        let bad = |what: &str| format!("bad {what} in sweep {s:?}");
        Ok(Self { lo: lo.parse().map_err(|_| bad("lo"))?, hi: hi.parse().map_err(|_| bad("hi"))?, n: n.parse().map_err(|_| bad("n"))? })
    }
}

/// Everything a command needs. Fields that a command does not use must be
/// absent (or null).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// bessel: tilt amplitudes `F_N … F_2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    /// bessel: fundamental argument.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// bessel: sweep of `z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Sweep>,
    /// optimize: named channel preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// optimize: explicit channel lists instead of a preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonics: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// run: protocol preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<Protocol>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    /// run: qubit count (Toffoli, GHZ, error scan) or control count (qutrit-ctrl).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// run: canonical profile `(F_N, …, F_2, V_1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// run toffoli, qutrit-ctrl: force the Floquet leg on or off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floquet: Option<bool>,
    /// verify: `table1` or `table2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    /// verify: check printed profiles without polish against this bar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<f64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub integrator: IntegratorSettings,
}

fn default_omega() -> f64 {
    100.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            f: None,
            z: None,
            scan: None,
            preset: None,
            closed: None,
            open: None,
            harmonics: None,
            floor: None,
            starts: None,
            seed: 0,
            protocol: None,
            omega: default_omega(),
            n: None,
            profile: None,
            v1: None,
            omegas: None,
            t_max: None,
            floquet: None,
            table: None,
            strict: None,
            output_dir: default_output(),
            integrator: IntegratorSettings::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text the output header hashes.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Optional fields each command reads. `command`, `omega`, `seed`,
    /// `output_dir` and `integrator` always carry a value and are not listed.
    fn used_fields(&self) -> &'static [&'static str] {
        match self.command {
            Command::Bessel => &["f", "z", "scan"],
            Command::Optimize => &["preset", "closed", "open", "harmonics", "floor", "starts", "profile"],
            Command::Run => &["protocol", "n", "profile", "v1", "omegas", "t_max", "floquet", "starts"],
            Command::Verify => &["table", "strict"],
        }
    }

    fn check_fields(&self) -> Result<(), CliError> {
        let always = ["command", "omega", "seed", "output_dir", "integrator"];
        let serde_json::Value::Object(map) = serde_json::to_value(self).expect("config serializes") else {
            unreachable!("config is a struct")
        };
        let used = self.used_fields();
        match map.keys().find(|k| !always.contains(&k.as_str()) && !used.contains(&k.as_str())) {
            Some(k) => Err(CliError::Validation(format!("field {k:?} is not used by {:?}", self.command))),
            None => Ok(()),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        let finite = |name: &str, v: &[f64]| -> Result<(), CliError> {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Validation(format!("{name} must be finite")));
            }
            Ok(())
        };
        self.check_fields()?;
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        let ig = &self.integrator;
        if !(ig.courant > 0.0 && ig.courant <= 1.0 && ig.drift_tol > 0.0 && ig.drift_tol < 1.0) {
            return bad("integrator: courant must be in (0, 1] and drift_tol in (0, 1)".into());
        }
        for (name, v) in [("f", &self.f), ("closed", &self.closed), ("open", &self.open), ("profile", &self.profile), ("omegas", &self.omegas)] {
            if let Some(v) = v {
                finite(name, v)?;
            }
        }
        match self.command {
            Command::Bessel => {
                if self.f.is_none() {
                    return bad("bessel needs f (tilt amplitudes, possibly empty)".into());
                }
                match (self.z, self.scan) {
                    (Some(z), None) if z.is_finite() => {}
                    (None, Some(s)) if s.lo.is_finite() && s.hi.is_finite() && s.hi > s.lo && s.n >= 2 => {}
                    (Some(_), Some(_)) => return bad("give either z or scan, not both".into()),
                    (None, None) => return bad("bessel needs z or scan".into()),
                    _ => return bad("scan needs finite lo < hi and n ≥ 2; z must be finite".into()),
                }
            }
            Command::Optimize => {
                match (&self.preset, &self.closed, &self.open) {
                    (Some(_), None, None) if self.harmonics.is_none() => {}
                    (None, Some(_), Some(_)) if self.harmonics.is_some() => {}
                    _ => return bad("optimize needs either preset, or closed + open + harmonics".into()),
                }
                if let Some(fl) = self.floor {
                    if !(fl.is_finite() && fl >= 0.0) {
                        return bad("floor must be non-negative".into());
                    }
                }
                if self.starts == Some(0) && self.profile.is_none() {
                    return bad("starts = 0 needs a profile as explicit start".into());
                }
            }
            Command::Run => {
                let Some(p) = self.protocol else {
                    return bad("run needs a protocol".into());
                };
                if let Some(t) = self.t_max {
                    if !(t.is_finite() && t > 0.0) {
                        return bad("t_max must be positive".into());
                    }
                }
                if let Some(w) = &self.omegas {
                    if w.len() < 2 || w.iter().any(|x| *x <= 0.0) {
                        return bad("omegas needs two or more positive values".into());
                    }
                    if p != Protocol::ErrorScan {
                        return bad("omegas is only used by error-scan".into());
                    }
                }
                if self.v1.is_some() && p != Protocol::Cnot {
                    return bad("v1 is only used by cnot".into());
                }
            }
            Command::Verify => {
                match self.table.as_deref() {
                    Some(t) if t.parse::<kinetic_core::optimize::TableId>().is_ok() => {}
                    _ => return bad("verify needs table = table1 | table2".into()),
                }
                if let Some(s) = self.strict {
                    if !(s.is_finite() && s > 0.0) {
                        return bad("strict must be positive".into());
                    }
                }
            }
        }
        Ok(())
    }
}
