//! Floquet-engineered global kinetic constraints on a chain of double wells.
//!
//! [`bessel`] evaluates the generalized Bessel factors that renormalize every
//! tunneling amplitude, [`optimize`] searches drive profiles that close chosen
//! channels, [`evolve`] runs the exact driven dynamics next to the
//! period-averaged model, and [`protocols`] assembles gates and state
//! preparation on top of them.

pub mod bessel;
pub mod evolve;
pub mod hamiltonian;
pub mod lattice;
pub mod optimize;
pub mod par;
pub mod protocols;
pub mod report;

use thiserror::Error;

/// Any failure of the library, for callers that do not care which layer
/// raised it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Bessel(#[from] bessel::BesselError),
    #[error(transparent)]
    Lattice(#[from] lattice::LatticeError),
    #[error(transparent)]
    Hamiltonian(#[from] hamiltonian::HamiltonianError),
    #[error(transparent)]
    Evolve(#[from] evolve::EvolveError),
    #[error(transparent)]
    Optimize(#[from] optimize::OptimizeError),
    #[error(transparent)]
    Protocol(#[from] protocols::ProtocolError),
    #[error(transparent)]
    Report(#[from] report::ReportError),
}
