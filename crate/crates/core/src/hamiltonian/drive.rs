use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::HamiltonianError;
use crate::bessel::{self, BesselError, HarmonicPhase};

/// Multi-harmonic drive: tilt `F(t) = Σ_j jωF_j cos(jωt)` on harmonics
/// `j = N…2` and global interaction `V(t) = ωV_1 cos(ωt)`.
///
/// Amplitudes are stored in canonical order `(F_N, …, F_2, V_1)`; a zero entry
/// simply leaves that harmonic off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct DriveProfile {
    omega: f64,
    amplitudes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    omega: f64,
    /// `(F_N, …, F_2, V_1)`
    amplitudes: Vec<f64>,
}

impl TryFrom<RawProfile> for DriveProfile {
    type Error = HamiltonianError;
    fn try_from(raw: RawProfile) -> Result<Self, Self::Error> {
        DriveProfile::from_vector(raw.omega, &raw.amplitudes)
    }
}

impl From<DriveProfile> for RawProfile {
    fn from(p: DriveProfile) -> Self {
        RawProfile { omega: p.omega, amplitudes: p.amplitudes }
    }
}

impl DriveProfile {
    /// From the canonical vector `(F_N, …, F_2, V_1)`.
    pub fn from_vector(omega: f64, amplitudes: &[f64]) -> Result<Self, HamiltonianError> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(HamiltonianError::InvalidProfile(format!("omega must be positive, got {omega}")));
        }
        if amplitudes.is_empty() {
            return Err(HamiltonianError::InvalidProfile("profile needs at least V_1".into()));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(HamiltonianError::InvalidProfile("non-finite amplitude".into()));
        }
        Ok(Self { omega, amplitudes: amplitudes.to_vec() })
    }

    /// Two-harmonic drive `(F_3, F_2, V_1)` used throughout the qubit protocols.
    pub fn three_two(omega: f64, f3: f64, f2: f64, v1: f64) -> Result<Self, HamiltonianError> {
        Self::from_vector(omega, &[f3, f2, v1])
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self, HamiltonianError> {
        Self::from_vector(omega, &self.amplitudes)
    }

    pub fn with_vector(&self, amplitudes: &[f64]) -> Result<Self, HamiltonianError> {
        Self::from_vector(self.omega, amplitudes)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Canonical vector `(F_N, …, F_2, V_1)`.
    pub fn vector(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn v1(&self) -> f64 {
        *self.amplitudes.last().expect("validated non-empty")
    }

    /// `(harmonic, F_j)` pairs, descending harmonic.
    pub fn tilt(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        let top = self.amplitudes.len() as u32;
        self.amplitudes[..self.amplitudes.len() - 1]
            .iter()
            .enumerate()
            .map(move |(i, &f)| (top - i as u32, f))
    }

    /// Highest harmonic carrying a nonzero amplitude (1 if only `V_1`).
    pub fn max_harmonic(&self) -> u32 {
        self.tilt().find(|&(_, f)| f != 0.0).map_or(1, |(j, _)| j)
    }

    /// `θ(t) = Σ_j F_j sin(jωt)`.
    pub fn theta(&self, t: f64) -> f64 {
        let x = self.omega * t;
        self.tilt().map(|(j, f)| f * (j as f64 * x).sin()).sum()
    }

    /// `β(t) = V_1 sin(ωt)`.
    pub fn beta(&self, t: f64) -> f64 {
        self.v1() * (self.omega * t).sin()
    }

    /// `F(t) = θ'(t)`.
    pub fn tilt_field(&self, t: f64) -> f64 {
        let x = self.omega * t;
        self.tilt().map(|(j, f)| j as f64 * self.omega * f * (j as f64 * x).cos()).sum()
    }

    /// `V(t) = β'(t)`.
    pub fn interaction_field(&self, t: f64) -> f64 {
        self.omega * self.v1() * (self.omega * t).cos()
    }

    /// Upper bound on `|θ'(t)|`.
    pub fn tilt_rate_bound(&self) -> f64 {
        self.tilt().map(|(j, f)| j as f64 * f.abs()).sum::<f64>() * self.omega
    }

    /// Bessel phase of the channel `𝒥(F_N, …, F_2, m·V_1)`.
    pub fn phase(&self, multiplier: f64) -> HarmonicPhase {
        let mut v = self.amplitudes.clone();
        *v.last_mut().expect("non-empty") *= multiplier;
        HarmonicPhase::from_canonical(&v).expect("validated amplitudes")
    }

    /// `𝒥(F_N, …, F_2, m·V_1)`.
    pub fn bessel(&self, multiplier: f64) -> Result<f64, BesselError> {
        bessel::eval_bessel(&self.phase(multiplier))
    }
}
