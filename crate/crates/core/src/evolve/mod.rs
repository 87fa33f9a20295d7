//! Time evolution under the driven Hamiltonian and under static effective
//! Hamiltonians, with observables recorded on a sample grid.

mod effective;
mod fidelity;
mod floquet;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub use effective::{evolve_effective, evolve_effective_schedule, EffectivePropagator};
pub use fidelity::{deviation_d, deviation_trace, gate_fidelity, mean_abs_deviation, DeviationTrace, GateReport, Leg, RowPopulation, TruthTable, SAMPLES_PER_UNIT_TIME};
pub use floquet::{evolve_floquet, evolve_schedule, DrivenSystem, Frame, IntegratorSettings, Segment};

use crate::hamiltonian::HamiltonianError;
use crate::lattice::{BasisTag, BlockLattice, LatticeError, LogicalState};

/// Normalization tolerance for states handed to the integrators.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("invalid time: {0}")]
    InvalidTime(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("step size underflow (step {step:.3e} after {halvings} halvings)")]
    StepUnderflow { step: f64, halvings: u32 },
    #[error("norm drift {drift:.3e} exceeds tolerance {tolerance:.1e}")]
    NormDrift { drift: f64, tolerance: f64 },
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl From<crate::bessel::BesselError> for EvolveError {
    fn from(e: crate::bessel::BesselError) -> Self {
        EvolveError::Hamiltonian(e.into())
    }
}

/// Normalized state over a tagged basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
    basis: BasisTag,
}

impl StateVector {
    pub fn new(amplitudes: DVector<Complex64>, basis: BasisTag) -> Result<Self, EvolveError> {
        if amplitudes.len() != basis.dimension() {
            return Err(EvolveError::BasisMismatch(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dimension()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(EvolveError::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, basis })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: DVector<Complex64>, basis: BasisTag) -> Result<Self, EvolveError> {
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(EvolveError::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(amplitudes / Complex64::new(norm, 0.0), basis)
    }

    pub fn basis_state(basis: BasisTag, index: usize) -> Result<Self, EvolveError> {
        let dim = basis.dimension();
        if index >= dim {
            return Err(EvolveError::InvalidState(format!("index {index} outside dimension {dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v, basis })
    }

    pub fn logical(lattice: &BlockLattice, state: &LogicalState) -> Result<Self, EvolveError> {
        Self::basis_state(lattice.basis_tag(), lattice.index_of_logical(state)?)
    }

    pub(crate) fn from_raw(amplitudes: DVector<Complex64>, basis: BasisTag) -> Self {
        Self { amplitudes, basis }
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Quantities recorded at every sample time.
///
/// Diagonal observables are given by their eigenvalue on each basis state;
/// overlap observables record `|⟨target|ψ⟩|²`.
#[derive(Debug, Clone, Default)]
pub struct Observables {
    diagonal: Vec<(String, Vec<f64>)>,
    overlaps: Vec<(String, StateVector)>,
}

impl Observables {
    pub fn new() -> Self {
        Self::default()
    }

    /// `⟨n_{2q−1} − n_{2q}⟩` per block, named `sz_1 … sz_N`; equal to `⟨σ^z_q⟩`
    /// on qubit blocks.
    pub fn magnetizations(lattice: &BlockLattice) -> Self {
        let basis = lattice.enumerate_basis();
        let mut obs = Self::new();
        for q in 0..lattice.num_blocks() {
            let values = basis
                .iter()
                .map(|s| s.occupations[2 * q] as f64 - s.occupations[2 * q + 1] as f64)
                .collect();
            obs.diagonal.push((format!("sz_{}", q + 1), values));
        }
        obs
    }

    pub fn with_diagonal(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.diagonal.push((name.into(), values));
        self
    }

    pub fn with_overlap(mut self, name: impl Into<String>, target: StateVector) -> Self {
        self.overlaps.push((name.into(), target));
        self
    }

    pub fn names(&self) -> Vec<String> {
        self.diagonal.iter().map(|(n, _)| n.clone()).chain(self.overlaps.iter().map(|(n, _)| n.clone())).collect()
    }

    fn check(&self, dim: usize) -> Result<(), EvolveError> {
        let bad = self.diagonal.iter().any(|(_, v)| v.len() != dim) || self.overlaps.iter().any(|(_, s)| s.dimension() != dim);
        if bad {
            return Err(EvolveError::BasisMismatch("observable dimension differs from the state".into()));
        }
        Ok(())
    }

    fn record(&self, psi: &DVector<Complex64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.diagonal.len() + self.overlaps.len());
        for (_, values) in &self.diagonal {
            out.push(psi.iter().zip(values).map(|(z, v)| z.norm_sqr() * v).sum());
        }
        for (_, target) in &self.overlaps {
            out.push(target.amplitudes.dotc(psi).norm_sqr());
        }
        out
    }
}

/// Sampled trajectory of one evolution.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `records[i][k]` is observable `k` at `times[i]`.
    pub records: Vec<Vec<f64>>,
    #[serde(skip)]
    pub final_state: StateVector,
    /// Integrator step actually used (0 for the static propagator).
    pub step: f64,
}

impl EvolutionResult {
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.records.iter().map(|r| r[k]).collect())
    }
}

/// `n + 1` uniformly spaced times on `[0, t_final]`.
pub fn uniform_grid(t_final: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    // the last point is exactly t_final, not a rounded product
    (0..=n).map(|i| if i == n { t_final } else { t_final * i as f64 / n as f64 }).collect()
}

fn check_times(t_final: f64, samples: &[f64]) -> Result<(), EvolveError> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(EvolveError::InvalidTime(format!("final time must be positive, got {t_final}")));
    }
    if samples.iter().any(|t| !(0.0..=t_final).contains(t)) {
        return Err(EvolveError::InvalidTime("sample times must lie in [0, t_final]".into()));
    }
    if samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvolveError::InvalidTime("sample times must be strictly increasing".into()));
    }
    Ok(())
}

fn check_initial(initial: &StateVector, basis: &BasisTag) -> Result<(), EvolveError> {
    if initial.basis() != basis {
        return Err(EvolveError::BasisMismatch("initial state lives in a different basis".into()));
    }
    if (initial.norm() - 1.0).abs() > NORM_TOL {
        return Err(EvolveError::InvalidState(format!("initial norm {} is not 1", initial.norm())));
    }
    Ok(())
}
