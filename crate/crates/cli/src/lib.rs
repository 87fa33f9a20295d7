//! `kinetic` command-line runner. Commands are parsed into a validated
//! [`config::RunConfig`] and executed by [`commands::execute`]; every output
//! file carries the SHA-256 of that config.

pub mod commands;
pub mod config;

use kinetic_core::bessel::BesselError;
use kinetic_core::evolve::EvolveError;
use kinetic_core::hamiltonian::HamiltonianError;
use kinetic_core::optimize::OptimizeError;
use kinetic_core::protocols::ProtocolError;
use kinetic_core::report::ReportError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => EXIT_VALIDATION,
            Self::Numerical(_) | Self::Io(_) => EXIT_NUMERICAL,
            Self::Verification(_) => EXIT_VERIFICATION,
        }
    }
}

fn bessel_is_numerical(e: &BesselError) -> bool {
    match e {
        BesselError::Accuracy { .. } => true,
        BesselError::AtIndex { source, .. } => bessel_is_numerical(source),
        _ => false,
    }
}

fn hamiltonian_is_numerical(e: &HamiltonianError) -> bool {
    match e {
        HamiltonianError::NotHermitian { .. } => true,
        HamiltonianError::Bessel(b) => bessel_is_numerical(b),
        _ => false,
    }
}

fn evolve_is_numerical(e: &EvolveError) -> bool {
    match e {
        EvolveError::StepUnderflow { .. } | EvolveError::NormDrift { .. } | EvolveError::Eigen(_) => true,
        EvolveError::Hamiltonian(h) => hamiltonian_is_numerical(h),
        _ => false,
    }
}

fn optimize_is_numerical(e: &OptimizeError) -> bool {
    matches!(e, OptimizeError::Bessel(b) if bessel_is_numerical(b))
}

fn split(numerical: bool, message: String) -> CliError {
    if numerical {
        CliError::Numerical(message)
    } else {
        CliError::Validation(message)
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        let numerical = match &e {
            ProtocolError::Validation(_) | ProtocolError::Sanity { .. } | ProtocolError::Lattice(_) => false,
            ProtocolError::NoSolution(_) => true,
            ProtocolError::Evolve(x) => evolve_is_numerical(x),
            ProtocolError::Hamiltonian(x) => hamiltonian_is_numerical(x),
            ProtocolError::Optimize(x) => optimize_is_numerical(x),
        };
        split(numerical, e.to_string())
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        split(optimize_is_numerical(&e), e.to_string())
    }
}

impl From<BesselError> for CliError {
    fn from(e: BesselError) -> Self {
        split(bessel_is_numerical(&e), e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Io(e.to_string())
    }
}
