//! Block-structured Fock space of the bosonic chain.
//!
//! The chain has `2N` sites labelled `1..=2N`; block `q` (1-based) is the
//! double well on sites `(2q−1, 2q)` and holds a fixed number of bosons (one
//! for a qubit, two for a qutrit). Hopping between blocks is forbidden, so the
//! per-block particle number is conserved and the Hilbert space factorizes into
//! one `(p+1)`-level system per block.
//!
//! Sign conventions hinge on the 1-based site labels: the odd (left) site of
//! every block carries weight `(−1)^l = −1` in the imbalance `Σ_l (−1)^l n_l`,
//! so a qubit in `|↑⟩ = |10⟩` contributes `−1` and the imbalance equals
//! `−Σ_q σ^z_q`.
//!
//! Basis ordering is big-endian over blocks (block 1 most significant); within
//! a block, states with more particles on the left site come first. For qubits
//! this puts `|↑…↑⟩` at index 0. Every matrix and result file uses this order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest Hilbert-space dimension the dense machinery accepts.
pub const MAX_DIMENSION: usize = 1 << 24;

pub const ORDERING_TAG: &str = "block-major/left-occupation-descending";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("lattice needs at least one block")]
    Empty,
    #[error("block {block} must hold at least one particle")]
    EmptyBlock { block: usize },
    #[error("expected {expected} bare rates, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error("bare rate for block {block} is not finite")]
    NonFiniteRate { block: usize },
    #[error("Hilbert-space dimension exceeds {MAX_DIMENSION}")]
    DimensionOverflow,
    #[error("invalid state: {0}")]
    InvalidState(String),
}

/// Double-well chain with per-block particle numbers and intra-block rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLattice {
    occupancy: Vec<u32>,
    rates: Vec<f64>,
}

impl BlockLattice {
    pub fn new(occupancy: Vec<u32>, rates: Vec<f64>) -> Result<Self, LatticeError> {
        if occupancy.is_empty() {
            return Err(LatticeError::Empty);
        }
        if rates.len() != occupancy.len() {
            return Err(LatticeError::RateCount { expected: occupancy.len(), got: rates.len() });
        }
        if let Some(block) = occupancy.iter().position(|&p| p == 0) {
            return Err(LatticeError::EmptyBlock { block: block + 1 });
        }
        if let Some(block) = rates.iter().position(|r| !r.is_finite()) {
            return Err(LatticeError::NonFiniteRate { block: block + 1 });
        }
        let mut dim: usize = 1;
        for &p in &occupancy {
            dim = dim.checked_mul(p as usize + 1).ok_or(LatticeError::DimensionOverflow)?;
            if dim > MAX_DIMENSION {
                return Err(LatticeError::DimensionOverflow);
            }
        }
        Ok(Self { occupancy, rates })
    }

    /// `N` qubit blocks with the given bare rates `t_q`.
    pub fn qubits(rates: Vec<f64>) -> Result<Self, LatticeError> {
        Self::new(vec![1; rates.len()], rates)
    }

    /// `N` qutrit blocks (two bosons each).
    pub fn qutrits(rates: Vec<f64>) -> Result<Self, LatticeError> {
        Self::new(vec![2; rates.len()], rates)
    }

    /// Qubit lattice where only block 1 (the target) tunnels.
    pub fn controlled_qubits(n: usize, target_rate: f64) -> Result<Self, LatticeError> {
        let mut rates = vec![0.0; n];
        if let Some(first) = rates.first_mut() {
            *first = target_rate;
        }
        Self::qubits(rates)
    }

    /// Qutrit target (block 1, the only tunneling block) followed by
    /// `n_controls` qubit blocks.
    pub fn qubit_controlled_qutrit(n_controls: usize, target_rate: f64) -> Result<Self, LatticeError> {
        let mut occupancy = vec![1; n_controls + 1];
        occupancy[0] = 2;
        let mut rates = vec![0.0; n_controls + 1];
        rates[0] = target_rate;
        Self::new(occupancy, rates)
    }

    pub fn num_blocks(&self) -> usize {
        self.occupancy.len()
    }

    pub fn num_sites(&self) -> usize {
        2 * self.occupancy.len()
    }

    pub fn occupancy(&self) -> &[u32] {
        &self.occupancy
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn total_particles(&self) -> u32 {
        self.occupancy.iter().sum()
    }

    pub fn is_qubit_lattice(&self) -> bool {
        self.occupancy.iter().all(|&p| p == 1)
    }

    pub fn dimension(&self) -> usize {
        self.occupancy.iter().map(|&p| p as usize + 1).product()
    }

    pub fn with_rates(&self, rates: Vec<f64>) -> Result<Self, LatticeError> {
        Self::new(self.occupancy.clone(), rates)
    }

    pub fn basis_tag(&self) -> BasisTag {
        BasisTag::fock(self)
    }

    /// All constrained Fock states in basis order.
    pub fn enumerate_basis(&self) -> Vec<FockState> {
        (0..self.dimension()).map(|i| self.fock_at(i)).collect()
    }

    /// Fock state at basis index `index`.
    pub fn fock_at(&self, index: usize) -> FockState {
        let digits = self.digits_at(index);
        let occupations = digits
            .iter()
            .zip(&self.occupancy)
            .flat_map(|(&d, &p)| [d, p - d])
            .collect();
        FockState { occupations }
    }

    /// Logical digits (left-site occupations) at basis index `index`.
    pub fn digits_at(&self, index: usize) -> Vec<u32> {
        let mut digits = vec![0; self.num_blocks()];
        let mut rest = index;
        for (q, &p) in self.occupancy.iter().enumerate().rev() {
            let radix = p as usize + 1;
            digits[q] = p - (rest % radix) as u32;
            rest /= radix;
        }
        digits
    }

    /// Basis index of a Fock state, validating the per-block constraint.
    pub fn index_of(&self, state: &FockState) -> Result<usize, LatticeError> {
        self.validate(state)?;
        Ok(self.index_of_digits(&self.to_logical(state)?.digits))
    }

    pub fn index_of_logical(&self, state: &LogicalState) -> Result<usize, LatticeError> {
        self.validate_logical(state)?;
        Ok(self.index_of_digits(&state.digits))
    }

    fn index_of_digits(&self, digits: &[u32]) -> usize {
        digits
            .iter()
            .zip(&self.occupancy)
            .fold(0, |acc, (&d, &p)| acc * (p as usize + 1) + (p - d) as usize)
    }

    pub fn validate(&self, state: &FockState) -> Result<(), LatticeError> {
        if state.occupations.len() != self.num_sites() {
            return Err(LatticeError::InvalidState(format!(
                "{} sites given, lattice has {}",
                state.occupations.len(),
                self.num_sites()
            )));
        }
        for (q, &p) in self.occupancy.iter().enumerate() {
            let sum = state.occupations[2 * q] + state.occupations[2 * q + 1];
            if sum != p {
                return Err(LatticeError::InvalidState(format!(
                    "block {} holds {sum} particles, expected {p}",
                    q + 1
                )));
            }
        }
        Ok(())
    }

    fn validate_logical(&self, state: &LogicalState) -> Result<(), LatticeError> {
        if state.digits.len() != self.num_blocks() {
            return Err(LatticeError::InvalidState(format!(
                "{} digits given, lattice has {} blocks",
                state.digits.len(),
                self.num_blocks()
            )));
        }
        for (q, (&d, &p)) in state.digits.iter().zip(&self.occupancy).enumerate() {
            if d > p {
                return Err(LatticeError::InvalidState(format!("digit {d} out of range on block {}", q + 1)));
            }
        }
        Ok(())
    }

    /// Logical digit of each block: the occupation of its odd (left) site.
    pub fn to_logical(&self, state: &FockState) -> Result<LogicalState, LatticeError> {
        self.validate(state)?;
        Ok(LogicalState { digits: state.occupations.iter().step_by(2).copied().collect() })
    }

    pub fn from_logical(&self, state: &LogicalState) -> Result<FockState, LatticeError> {
        self.validate_logical(state)?;
        Ok(FockState {
            occupations: state
                .digits
                .iter()
                .zip(&self.occupancy)
                .flat_map(|(&d, &p)| [d, p - d])
                .collect(),
        })
    }
}

/// Site occupations `n_1 … n_{2N}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockState {
    pub occupations: Vec<u32>,
}

impl FockState {
    pub fn new(occupations: Vec<u32>) -> Self {
        Self { occupations }
    }

    /// `n_l` for the 1-based site label `l`.
    pub fn site(&self, l: usize) -> u32 {
        self.occupations[l - 1]
    }
}

/// One digit per block. Qubits: `1 = ↑` (particle on the left site).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogicalState {
    pub digits: Vec<u32>,
}

impl LogicalState {
    pub fn new(digits: Vec<u32>) -> Self {
        Self { digits }
    }

    /// Parse a qubit string such as `"↑↓"` or `"ud"`; qutrit digits `0`–`2`
    /// are accepted as-is.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '↑' | 'u' | 'U' => Some(1),
                '↓' | 'd' | 'D' => Some(0),
                c => c.to_digit(10),
            })
            .collect::<Option<Vec<_>>>()
            .map(Self::new)
    }

    /// Number of `1` digits (`n↑` for qubits).
    pub fn ups(&self) -> usize {
        self.digits.iter().filter(|&&d| d == 1).count()
    }

    /// Render qubit digits as arrows, others as numerals.
    pub fn label(&self, qubit: bool) -> String {
        self.digits
            .iter()
            .map(|&d| match (qubit, d) {
                (true, 1) => '↑',
                (true, 0) => '↓',
                (_, d) => char::from_digit(d, 10).unwrap_or('?'),
            })
            .collect()
    }
}

/// `Σ_l (−1)^l n_l` with 1-based site labels; `−Σ σ^z` on qubit states.
pub fn imbalance(state: &FockState) -> i64 {
    state
        .occupations
        .iter()
        .enumerate()
        .map(|(i, &n)| if (i + 1) % 2 == 0 { n as i64 } else { -(n as i64) })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Constrained Fock basis of a [`BlockLattice`].
    Fock,
    /// Permutation-symmetric qubit sector `|n↑⟩`, `n↑ = 0..=N`.
    Dicke,
}

/// Basis descriptor attached to every operator, state and result file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisTag {
    pub kind: BasisKind,
    pub blocks: usize,
    pub particles_per_block: Vec<u32>,
    pub ordering: String,
}

impl BasisTag {
    pub fn fock(lattice: &BlockLattice) -> Self {
        Self {
            kind: BasisKind::Fock,
            blocks: lattice.num_blocks(),
            particles_per_block: lattice.occupancy.clone(),
            ordering: ORDERING_TAG.to_string(),
        }
    }

    pub fn dicke(n: usize) -> Self {
        Self {
            kind: BasisKind::Dicke,
            blocks: n,
            particles_per_block: vec![1; n],
            ordering: "n_up-ascending".to_string(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            BasisKind::Fock => self.particles_per_block.iter().map(|&p| p as usize + 1).product(),
            BasisKind::Dicke => self.blocks + 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(v: &[u32]) -> FockState {
        FockState::new(v.to_vec())
    }

    #[test]
    fn single_qubit_basis() {
        let l = BlockLattice::qubits(vec![1.0]).unwrap();
        assert_eq!(l.enumerate_basis(), vec![fs(&[1, 0]), fs(&[0, 1])]);
    }

    #[test]
    fn two_qubit_basis_contains_up_up() {
        let l = BlockLattice::qubits(vec![1.0, 1.0]).unwrap();
        let basis = l.enumerate_basis();
        assert_eq!(basis.len(), 4);
        assert_eq!(basis[0], fs(&[1, 0, 1, 0]));
        assert_eq!(l.to_logical(&basis[0]).unwrap().label(true), "↑↑");
        assert_eq!(basis[3], fs(&[0, 1, 0, 1]));
    }

    #[test]
    fn single_qutrit_basis() {
        let l = BlockLattice::qutrits(vec![1.0]).unwrap();
        assert_eq!(l.enumerate_basis(), vec![fs(&[2, 0]), fs(&[1, 1]), fs(&[0, 2])]);
        assert_eq!(l.to_logical(&fs(&[2, 0])).unwrap().digits, vec![2]);
    }

    #[test]
    fn qubit_mapping() {
        let l = BlockLattice::qubits(vec![1.0, 0.0]).unwrap();
        assert_eq!(l.to_logical(&fs(&[1, 0, 0, 1])).unwrap().label(true), "↑↓");
        assert_eq!(l.to_logical(&fs(&[0, 1, 1, 0])).unwrap().label(true), "↓↑");
        assert_eq!(l.from_logical(&LogicalState::parse("↓↓").unwrap()).unwrap(), fs(&[0, 1, 0, 1]));
    }

    #[test]
    fn round_trip_mixed() {
        let l = BlockLattice::new(vec![2, 1, 1], vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(l.dimension(), 12);
        for (i, s) in l.enumerate_basis().into_iter().enumerate() {
            let logical = l.to_logical(&s).unwrap();
            assert_eq!(l.from_logical(&logical).unwrap(), s);
            assert_eq!(l.index_of(&s).unwrap(), i);
            assert_eq!(l.digits_at(i), logical.digits);
        }
    }

    #[test]
    fn constraint_violation() {
        let l = BlockLattice::qubits(vec![1.0, 1.0]).unwrap();
        assert!(matches!(l.to_logical(&fs(&[1, 1, 0, 0])), Err(LatticeError::InvalidState(_))));
        assert!(matches!(l.to_logical(&fs(&[1, 0])), Err(LatticeError::InvalidState(_))));
        assert!(l.from_logical(&LogicalState::new(vec![2, 0])).is_err());
    }

    #[test]
    fn imbalance_examples() {
        assert_eq!(imbalance(&fs(&[1, 0, 1, 0])), -2);
        assert_eq!(imbalance(&fs(&[0, 1, 0, 1])), 2);
        assert_eq!(imbalance(&fs(&[1, 0, 0, 1])), 0);
    }

    #[test]
    fn imbalance_is_minus_total_sz() {
        let l = BlockLattice::qubits(vec![1.0; 4]).unwrap();
        for s in l.enumerate_basis() {
            let sz: i64 = l.to_logical(&s).unwrap().digits.iter().map(|&d| if d == 1 { 1 } else { -1 }).sum();
            assert_eq!(imbalance(&s), -sz);
        }
    }

    #[test]
    fn dimension_guard() {
        assert_eq!(BlockLattice::qubits(vec![0.0; 25]).unwrap_err(), LatticeError::DimensionOverflow);
        assert!(BlockLattice::qubits(vec![0.0; 24]).is_ok());
        assert_eq!(BlockLattice::qubits(vec![]).unwrap_err(), LatticeError::Empty);
        assert!(matches!(BlockLattice::new(vec![1, 0], vec![1.0, 1.0]), Err(LatticeError::EmptyBlock { block: 2 })));
    }

    #[test]
    fn parse_labels() {
        assert_eq!(LogicalState::parse("udU").unwrap().digits, vec![1, 0, 1]);
        assert_eq!(LogicalState::parse("210").unwrap().digits, vec![2, 1, 0]);
        assert!(LogicalState::parse("x").is_none());
    }
}
