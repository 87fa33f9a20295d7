//! Named experiments: controlled gates, W and GHZ state preparation, and the
//! ω-scan of the Floquet/effective deviation.

mod gates;
mod scan;
mod states;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use gates::{cnot_root, default_toffoli_profile, run_cnot, run_qutrit_cnot, run_qutrit_controlled, run_toffoli, ToffoliOptions};
pub use scan::{fit_loglog, geometric_grid, run_error_scan, LogLogFit, ScanPoint, ScanReport};
pub use states::{run_ghz, run_w_state, GhzOptions};

use crate::bessel::BesselError;
use crate::evolve::{EvolutionResult, EvolveError, GateReport, IntegratorSettings};
use crate::hamiltonian::{DriveProfile, HamiltonianError};
use crate::lattice::{BasisTag, LatticeError};
use crate::optimize::{ChannelValue, OptimizeError};

/// `(F_3, F_2, V_1)` of the four-qubit Toffoli drive; also opens only the
/// `n↑ = 3 ↔ 4` rung when every qubit tunnels.
pub const TOFFOLI4_PROFILE: [f64; 3] = [-6.38, -5.09, 1.15];
/// `(F_3, F_2, V_1)` making `n↑ = 1 ↔ 2 ↔ 3` a degenerate chain.
pub const CHAIN_PROFILE: [f64; 3] = [0.0, -1.01, 0.82];
/// `(F_4, F_3, F_2, V_1)` of the two-qutrit CNOT.
pub const QUTRIT_CNOT_PROFILE: [f64; 4] = [-7.624, -7.092, 0.592, -6.403];
/// Smallest open channel a gate protocol accepts by default. The gate time is
/// `π/(2|𝒥|)`, about 1600 at this floor.
pub const GATE_FLOOR: f64 = 1e-3;
/// Closed-channel bound of the qutrit CNOT profile check.
pub const QUTRIT_CLOSED_MAX: f64 = 1e-3;
/// Samples per recorded trajectory.
pub const TRAJECTORY_SAMPLES: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("stage {stage:?} failed channel sanity: {detail}")]
    Sanity { stage: String, detail: String },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl From<BesselError> for ProtocolError {
    fn from(e: BesselError) -> Self {
        ProtocolError::Hamiltonian(e.into())
    }
}

/// Declared open/closed channels of one stage and their values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelCheck {
    pub closed: Vec<ChannelValue>,
    pub open: Vec<ChannelValue>,
    /// Every closed channel must stay below this magnitude.
    pub closed_max: f64,
    /// Every open channel must reach this magnitude.
    pub open_floor: f64,
}

impl ChannelCheck {
    pub fn evaluate(profile: &DriveProfile, closed: &[f64], open: &[f64], closed_max: f64, open_floor: f64) -> Result<Self, ProtocolError> {
        let values = |ms: &[f64]| {
            ms.iter()
                .map(|&m| Ok(ChannelValue { multiplier: m, value: profile.bessel(m)? }))
                .collect::<Result<Vec<_>, BesselError>>()
        };
        Ok(Self { closed: values(closed)?, open: values(open)?, closed_max, open_floor })
    }

    /// `None` when the stage passes, otherwise what failed.
    pub fn failure(&self) -> Option<String> {
        if let Some(c) = self.closed.iter().find(|c| c.value.abs() >= self.closed_max) {
            return Some(format!("closed channel {}·V1 has |𝒥| = {:.3e} ≥ {:.1e}", c.multiplier, c.value.abs(), self.closed_max));
        }
        if let Some(c) = self.open.iter().find(|c| c.value.abs() < self.open_floor) {
            return Some(format!("open channel {}·V1 has |𝒥| = {:.3e} < {:.1e}", c.multiplier, c.value.abs(), self.open_floor));
        }
        None
    }

    pub fn open_value(&self, multiplier: f64) -> Option<f64> {
        self.open.iter().find(|c| c.multiplier == multiplier).map(|c| c.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub label: String,
    pub profile: DriveProfile,
    pub duration: f64,
    /// Duration before rounding to whole drive periods.
    pub nominal_duration: f64,
    /// `duration − nominal_duration`.
    pub rounding_error: f64,
    pub channels: ChannelCheck,
}

impl Stage {
    pub fn new(label: impl Into<String>, profile: DriveProfile, duration: f64, channels: ChannelCheck) -> Result<Self, ProtocolError> {
        let label = label.into();
        if !(duration.is_finite() && duration > 0.0) {
            return Err(ProtocolError::Validation(format!("stage {label:?} needs a positive duration, got {duration}")));
        }
        Ok(Self { label, profile, duration, nominal_duration: duration, rounding_error: 0.0, channels })
    }

    /// Rounds the duration to the nearest whole number of drive periods
    /// (at least one), so the drive phases vanish at both ends.
    pub fn rounded_to_period(mut self) -> Self {
        let period = self.profile.period();
        let n = (self.nominal_duration / period).round().max(1.0);
        self.duration = n * period;
        self.rounding_error = self.duration - self.nominal_duration;
        self
    }
}

/// Ordered stages; every stage has passed its channel check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    stages: Vec<Stage>,
}

impl Schedule {
    pub fn new(stages: Vec<Stage>) -> Result<Self, ProtocolError> {
        if stages.is_empty() {
            return Err(ProtocolError::Validation("schedule has no stages".into()));
        }
        for s in &stages {
            if let Some(detail) = s.channels.failure() {
                return Err(ProtocolError::Sanity { stage: s.label.clone(), detail });
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn total_duration(&self) -> f64 {
        self.stages.iter().map(|s| s.duration).sum()
    }

    /// Cumulative end time of every stage.
    pub fn boundaries(&self) -> Vec<f64> {
        self.stages
            .iter()
            .scan(0.0, |t, s| {
                *t += s.duration;
                Some(*t)
            })
            .collect()
    }
}

/// Named trajectory for the CSV output.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub name: String,
    pub basis: BasisTag,
    pub result: EvolutionResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageOutcome {
    pub label: String,
    /// Quantities measured at the end of the stage.
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolReport {
    pub protocol: String,
    pub omega: f64,
    pub basis: BasisTag,
    /// Definition of the target state or gate.
    pub target: String,
    pub schedule: Schedule,
    pub stage_outcomes: Vec<StageOutcome>,
    pub gates: Vec<GateReport>,
    /// Final fidelities, overlaps and derived numbers by name.
    pub metrics: BTreeMap<String, f64>,
    pub integrator: IntegratorSettings,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

impl ProtocolReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn gate(&self, leg: crate::evolve::Leg) -> Option<&GateReport> {
        self.gates.iter().find(|g| g.leg == leg)
    }
}

fn profile(omega: f64, amplitudes: &[f64]) -> Result<DriveProfile, ProtocolError> {
    Ok(DriveProfile::from_vector(omega, amplitudes)?)
}

fn check_omega(omega: f64) -> Result<(), ProtocolError> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(ProtocolError::Validation(format!("omega must be positive, got {omega}")));
    }
    Ok(())
}

/// Union of a uniform grid on `[0, total]` and the given extra times.
fn sample_grid(total: f64, extra: &[f64]) -> Vec<f64> {
    let mut t = crate::evolve::uniform_grid(total, TRAJECTORY_SAMPLES);
    t.extend(extra.iter().copied().filter(|x| *x <= total));
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * total);
    t
}

fn nearest(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
