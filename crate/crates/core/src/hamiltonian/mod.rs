//! Hamiltonians of the driven double-well chain.
//!
//! * [`build_bare`]: the lab-frame Hamiltonian with intra-block hopping, the
//!   driven tilt `F(t) Σ_j j n_j` and the staggered global interaction
//!   `V(t) Σ_{k≠j} (−1)^{k+j} n_k n_j / 2` (ordered pairs, halved).
//! * [`build_rotating`]: hopping in the frame generated by the diagonal drive
//!   terms. Each hop `c_j† c_k` acquires the phase
//!   `exp[iθ(t)(ε_j − ε_k)] exp[iβ(t)Δ_jk/2]` with `ε_j = j`.
//! * [`build_lab_generator`]: the lab-frame Hamiltonian that maps exactly onto
//!   [`build_rotating`]; its interaction diagonal is half that of [`build_bare`].
//! * [`build_effective_boson`]: the period average of the rotating-frame
//!   Hamiltonian, where every hop is renormalized by a generalized Bessel
//!   factor that depends on the global density distribution.
//! * [`build_effective_spin`] and [`dicke_effective`]: the same operator written
//!   on qubits and on the permutation-symmetric sector.
//!
//! `Δ_jk = 2(−1)^j Σ_l (−1)^l n_l − n_j + n_k` is evaluated on the state left
//! behind after `c_k` has removed the hopping particle, so the block being
//! acted on only contributes through the particles that stay put.

mod drive;
mod tower;

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub use drive::DriveProfile;
pub use tower::{build_tower, TowerGraph, TowerLink};

use crate::bessel::BesselError;
use crate::lattice::{imbalance, BasisTag, BlockLattice, FockState, LatticeError};

/// Tolerance on `‖H − H†‖_max`, relative to `max(1, ‖H‖_max)`.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error("invalid drive profile: {0}")]
    InvalidProfile(String),
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Dense Hermitian matrix with the basis it is written in.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
    basis: BasisTag,
}

impl HermitianOperator {
    pub fn new(matrix: DMatrix<Complex64>, basis: BasisTag) -> Result<Self, HamiltonianError> {
        if !matrix.is_square() || matrix.nrows() != basis.dimension() {
            return Err(HamiltonianError::BasisMismatch(format!(
                "{}x{} matrix for a basis of dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                basis.dimension()
            )));
        }
        let deviation = hermiticity_deviation(&matrix);
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if deviation > HERMITICITY_TOL * scale {
            return Err(HamiltonianError::NotHermitian { deviation });
        }
        Ok(Self { matrix, basis })
    }

    pub fn zeros(basis: BasisTag) -> Self {
        let n = basis.dimension();
        Self { matrix: DMatrix::zeros(n, n), basis }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.matrix)
    }

    /// Largest element-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// One intra-block move `c_j† c_k` acting on a basis state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub from: usize,
    pub to: usize,
    /// 1-based block index.
    pub block: usize,
    /// `t_q √n_k √(n_j+1)`.
    pub amplitude: f64,
    /// `ε_j − ε_k = j − k`, always ±1.
    pub direction: i64,
    /// `Δ_jk` on the post-annihilation state.
    pub delta: i64,
}

impl Hop {
    /// Bessel multiplier `m` such that the effective element is
    /// `amplitude · 𝒥(F_N, …, F_2, m·V_1)`.
    ///
    /// For `direction = −1` the tilt amplitudes enter with flipped sign; a
    /// global sign flip moves that onto the fundamental slot.
    pub fn bessel_multiplier(&self) -> f64 {
        (self.direction * self.delta) as f64 / 2.0
    }

    /// Rotating-frame phase `(ε_j − ε_k)θ + βΔ_jk/2`.
    pub fn phase(&self, theta: f64, beta: f64) -> f64 {
        self.direction as f64 * theta + beta * self.delta as f64 / 2.0
    }
}

/// `Δ_jk = 2(−1)^j Σ_l (−1)^l n_l − n_j + n_k` on `state` (1-based sites).
pub fn delta_jk(state: &FockState, j: usize, k: usize) -> i64 {
    let sign = if j % 2 == 0 { 1 } else { -1 };
    2 * sign * imbalance(state) - state.site(j) as i64 + state.site(k) as i64
}

/// `Σ_l ε_l n_l` with `ε_l = l`.
pub fn tilt_energy(state: &FockState) -> f64 {
    state.occupations.iter().enumerate().map(|(i, &n)| ((i + 1) as u64 * n as u64) as f64).sum()
}

/// `Σ_{k≠j} (−1)^{k+j} n_k n_j / 2` by the ordered double sum.
pub fn interaction_energy(state: &FockState) -> f64 {
    let n = &state.occupations;
    let mut total: i64 = 0;
    for j in 0..n.len() {
        for k in 0..n.len() {
            if j != k {
                let sign = if (j + k) % 2 == 0 { 1 } else { -1 };
                total += sign * n[j] as i64 * n[k] as i64;
            }
        }
    }
    total as f64 / 2.0
}

/// Every nonzero intra-block hop, ordered by source state then block.
pub fn hops(lattice: &BlockLattice) -> Vec<Hop> {
    let mut out = Vec::new();
    for (from, state) in lattice.enumerate_basis().into_iter().enumerate() {
        for (q, &rate) in lattice.rates().iter().enumerate() {
            if rate == 0.0 {
                continue;
            }
            let left = 2 * q + 1;
            let right = left + 1;
            for (j, k) in [(right, left), (left, right)] {
                let nk = state.site(k);
                if nk == 0 {
                    continue;
                }
                let mut mid = state.clone();
                mid.occupations[k - 1] -= 1;
                let delta = delta_jk(&mid, j, k);
                let nj = mid.site(j);
                let mut target = mid;
                target.occupations[j - 1] += 1;
                let to = lattice.index_of(&target).expect("intra-block hop stays in the constrained space");
                out.push(Hop {
                    from,
                    to,
                    block: q + 1,
                    amplitude: rate * (nk as f64).sqrt() * ((nj + 1) as f64).sqrt(),
                    direction: j as i64 - k as i64,
                    delta,
                });
            }
        }
    }
    out
}

/// Diagonal drive coefficients per basis state: `(Σ_l l n_l, interaction)`.
pub fn drive_diagonals(lattice: &BlockLattice) -> Vec<(f64, f64)> {
    lattice.enumerate_basis().iter().map(|s| (tilt_energy(s), interaction_energy(s))).collect()
}

/// Lab-frame Hamiltonian at time `t`.
pub fn build_bare(lattice: &BlockLattice, profile: &DriveProfile, t: f64) -> Result<HermitianOperator, HamiltonianError> {
    let n = lattice.dimension();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for hop in hops(lattice) {
        m[(hop.to, hop.from)] += Complex64::new(hop.amplitude, 0.0);
    }
    let f = profile.tilt_field(t);
    let v = profile.interaction_field(t);
    for (i, (tilt, inter)) in drive_diagonals(lattice).into_iter().enumerate() {
        m[(i, i)] += Complex64::new(f * tilt + v * inter, 0.0);
    }
    HermitianOperator::new(m, lattice.basis_tag())
}

/// Lab-frame generator whose exact rotating-frame transform is [`build_rotating`].
///
/// The interaction diagonal of [`build_bare`] changes by `Δ_jk` under a hop,
/// whereas the rotating frame and the effective model carry `Δ_jk/2`. This
/// generator uses half the interaction diagonal so the two frames describe the
/// same dynamics; it is what the lab-frame integrator evolves with.
pub fn build_lab_generator(
    lattice: &BlockLattice,
    profile: &DriveProfile,
    t: f64,
) -> Result<HermitianOperator, HamiltonianError> {
    let n = lattice.dimension();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for hop in hops(lattice) {
        m[(hop.to, hop.from)] += Complex64::new(hop.amplitude, 0.0);
    }
    let f = profile.tilt_field(t);
    let v = profile.interaction_field(t);
    for (i, (tilt, inter)) in drive_diagonals(lattice).into_iter().enumerate() {
        m[(i, i)] += Complex64::new(f * tilt + v * inter / 2.0, 0.0);
    }
    HermitianOperator::new(m, lattice.basis_tag())
}

/// Diagonal of the frame transformation `U(t) = exp[iφ(t)]`, with
/// `φ = θ(t) Σ_l l n_l + β(t) E_int / 2` per basis state.
pub fn frame_phases(diagonals: &[(f64, f64)], profile: &DriveProfile, t: f64) -> Vec<f64> {
    let (theta, beta) = (profile.theta(t), profile.beta(t));
    diagonals.iter().map(|&(tilt, inter)| theta * tilt + beta * inter / 2.0).collect()
}

/// Rotating-frame Hamiltonian at time `t`.
pub fn build_rotating(
    lattice: &BlockLattice,
    profile: &DriveProfile,
    t: f64,
) -> Result<HermitianOperator, HamiltonianError> {
    let n = lattice.dimension();
    let (theta, beta) = (profile.theta(t), profile.beta(t));
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for hop in hops(lattice) {
        m[(hop.to, hop.from)] += Complex64::from_polar(hop.amplitude, hop.phase(theta, beta));
    }
    HermitianOperator::new(m, lattice.basis_tag())
}

/// Memoized channel factors `𝒥(…, m·V_1)` keyed by `2m`.
struct ChannelCache<'a> {
    profile: &'a DriveProfile,
    values: HashMap<i64, f64>,
}

impl<'a> ChannelCache<'a> {
    fn new(profile: &'a DriveProfile) -> Self {
        Self { profile, values: HashMap::new() }
    }

    fn get(&mut self, twice_multiplier: i64) -> Result<f64, BesselError> {
        if let Some(&v) = self.values.get(&twice_multiplier) {
            return Ok(v);
        }
        let v = self.profile.bessel(twice_multiplier as f64 / 2.0)?;
        self.values.insert(twice_multiplier, v);
        Ok(v)
    }
}

/// Period-averaged Hamiltonian in the constrained Fock basis.
pub fn build_effective_boson(
    lattice: &BlockLattice,
    profile: &DriveProfile,
) -> Result<HermitianOperator, HamiltonianError> {
    let n = lattice.dimension();
    let mut cache = ChannelCache::new(profile);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for hop in hops(lattice) {
        let factor = cache.get(hop.direction * hop.delta)?;
        m[(hop.to, hop.from)] += Complex64::new(hop.amplitude * factor, 0.0);
    }
    HermitianOperator::new(m, lattice.basis_tag())
}

/// `Σ_q t_q 𝒥(F_N, …, F_2, −V_1 Σ_{p≠q} σ^z_p) σ^x_q` on `N` qubits, in the
/// same basis order as the qubit [`BlockLattice`].
pub fn build_effective_spin(rates: &[f64], profile: &DriveProfile) -> Result<HermitianOperator, HamiltonianError> {
    let lattice = BlockLattice::qubits(rates.to_vec())?;
    let n_qubits = rates.len();
    let dim = lattice.dimension();
    let mut cache = ChannelCache::new(profile);
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for from in 0..dim {
        let digits = lattice.digits_at(from);
        let spins: Vec<i64> = digits.iter().map(|&d| if d == 1 { 1 } else { -1 }).collect();
        let total: i64 = spins.iter().sum();
        for q in 0..n_qubits {
            if rates[q] == 0.0 {
                continue;
            }
            let others = total - spins[q];
            let factor = cache.get(-2 * others)?;
            // flipping qubit q toggles its radix-2 digit; index weight 2^(N-1-q)
            let to = from ^ (1 << (n_qubits - 1 - q));
            m[(to, from)] += Complex64::new(rates[q] * factor, 0.0);
        }
    }
    HermitianOperator::new(m, lattice.basis_tag())
}

/// Effective Hamiltonian restricted to the symmetric sector `|n↑⟩`, uniform
/// rate `t`: `⟨n↑+1|H|n↑⟩ = t 𝒥(…, −(2n↑−N+1)V_1) √((N−n↑)(n↑+1))`.
pub fn dicke_effective(n_qubits: usize, rate: f64, profile: &DriveProfile) -> Result<HermitianOperator, HamiltonianError> {
    let tower = build_tower(n_qubits, profile)?;
    let mut m = DMatrix::<Complex64>::zeros(n_qubits + 1, n_qubits + 1);
    for link in tower.links() {
        let k = link.lower;
        let c = rate * link.factor * (((n_qubits - k) * (k + 1)) as f64).sqrt();
        m[(k + 1, k)] = Complex64::new(c, 0.0);
        m[(k, k + 1)] = Complex64::new(c, 0.0);
    }
    HermitianOperator::new(m, BasisTag::dicke(n_qubits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::{eval_bessel, HarmonicPhase};
    use crate::lattice::LogicalState;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn delta_matches_energy_difference() {
        // Δ_jk is the change of the interaction diagonal under the hop
        let lattice = BlockLattice::new(vec![2, 1, 2], vec![1.0, 1.0, 1.0]).unwrap();
        let basis = lattice.enumerate_basis();
        for hop in hops(&lattice) {
            let de = interaction_energy(&basis[hop.to]) - interaction_energy(&basis[hop.from]);
            assert_eq!(de, hop.delta as f64, "{hop:?}");
            let dt = tilt_energy(&basis[hop.to]) - tilt_energy(&basis[hop.from]);
            assert_eq!(dt, hop.direction as f64);
        }
    }

    #[test]
    fn interaction_sum_by_hand() {
        let s = FockState::new(vec![1, 0, 1, 0]);
        assert_eq!(interaction_energy(&s), 1.0);
        let s = FockState::new(vec![1, 0, 0, 1]);
        assert_eq!(interaction_energy(&s), -1.0);
        let s = FockState::new(vec![2, 0]);
        assert_eq!(interaction_energy(&s), 0.0);
    }

    #[test]
    fn bare_single_block_quarter_period() {
        let lattice = BlockLattice::qubits(vec![0.7]).unwrap();
        let profile = DriveProfile::three_two(4.0, 1.0, 2.0, 0.5).unwrap();
        let t = profile.period() / 4.0;
        // cos(3π/2) = 0, cos(π) = −1, cos(π/2) = 0
        let f = 2.0 * 4.0 * 2.0 * -1.0;
        let h = build_bare(&lattice, &profile, t).unwrap();
        let m = h.matrix();
        assert!((m[(0, 1)] - c(0.7)).norm() < 1e-12);
        assert!((m[(1, 0)] - c(0.7)).norm() < 1e-12);
        // |10⟩: tilt 1, interaction 0; |01⟩: tilt 2
        assert!((m[(0, 0)] - c(f * 1.0)).norm() < 1e-9);
        assert!((m[(1, 1)] - c(f * 2.0)).norm() < 1e-9);
    }

    #[test]
    fn bare_without_drive_is_pure_hopping() {
        let lattice = BlockLattice::qubits(vec![1.0, 0.5]).unwrap();
        let profile = DriveProfile::from_vector(10.0, &[0.0, 0.0, 0.0]).unwrap();
        let h = build_bare(&lattice, &profile, 0.3).unwrap();
        for i in 0..4 {
            assert_eq!(h.matrix()[(i, i)], c(0.0));
        }
        let r = build_rotating(&lattice, &profile, 0.3).unwrap();
        assert!(h.max_abs_diff(&r) < 1e-15);
    }

    #[test]
    fn lab_generator_transforms_into_rotating_frame() {
        let lattice = BlockLattice::new(vec![1, 2, 1], vec![0.6, 1.1, 0.9]).unwrap();
        let profile = DriveProfile::from_vector(3.0, &[0.7, -1.2, 0.4, 1.9]).unwrap();
        let diag = drive_diagonals(&lattice);
        let h = 1e-6;
        for &t in &[0.0, 0.13, 0.71, 1.9] {
            let lab = build_lab_generator(&lattice, &profile, t).unwrap();
            let rot = build_rotating(&lattice, &profile, t).unwrap();
            let phi = frame_phases(&diag, &profile, t);
            let plus = frame_phases(&diag, &profile, t + h);
            let minus = frame_phases(&diag, &profile, t - h);
            for a in 0..lattice.dimension() {
                for b in 0..lattice.dimension() {
                    let mut e = Complex64::from_polar(1.0, phi[a] - phi[b]) * lab.matrix()[(a, b)];
                    if a == b {
                        e -= (plus[a] - minus[a]) / (2.0 * h);
                    }
                    assert!((e - rot.matrix()[(a, b)]).norm() < 1e-6, "t={t} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn bare_interaction_entry_by_hand() {
        let lattice = BlockLattice::qubits(vec![1.0, 1.0]).unwrap();
        let profile = DriveProfile::from_vector(2.0, &[0.0, 0.0, 1.5]).unwrap();
        let h = build_bare(&lattice, &profile, 0.0).unwrap();
        // (1,0,1,0) is index 0; V(0) = ωV_1 = 3
        assert!((h.matrix()[(0, 0)] - c(3.0)).norm() < 1e-12);
    }

    #[test]
    fn rotating_at_zero_is_bare_hopping() {
        let lattice = BlockLattice::qutrits(vec![1.0, 0.4]).unwrap();
        let profile = DriveProfile::from_vector(10.0, &[1.0, -2.0, 0.5, 3.0]).unwrap();
        let r = build_rotating(&lattice, &profile, 0.0).unwrap();
        let zero = DriveProfile::from_vector(10.0, &[0.0]).unwrap();
        let b = build_bare(&lattice, &zero, 0.0).unwrap();
        assert!(r.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn rotating_phase_by_hand() {
        // (1,0,1,0) → (0,1,1,0): c_2† c_1, intermediate (0,0,1,0), Δ = −2
        let lattice = BlockLattice::qubits(vec![1.0, 1.0]).unwrap();
        let profile = DriveProfile::three_two(5.0, 0.8, -1.1, 2.0).unwrap();
        let t = PI / 2.0 / 5.0;
        let theta = 0.8 * (1.5 * PI).sin() + -1.1 * PI.sin();
        let beta = 2.0;
        let expected = Complex64::from_polar(1.0, theta - beta);
        let r = build_rotating(&lattice, &profile, t).unwrap();
        assert!((r.matrix()[(2, 0)] - expected).norm() < 1e-12);
    }

    #[test]
    fn two_qubit_effective_elements() {
        let profile = DriveProfile::three_two(100.0, 1.0, 2.0, 4.26).unwrap();
        let lattice = BlockLattice::qubits(vec![1.0, 0.0]).unwrap();
        let h = build_effective_boson(&lattice, &profile).unwrap();
        let up_up = lattice.index_of_logical(&LogicalState::parse("↑↑").unwrap()).unwrap();
        let down_up = lattice.index_of_logical(&LogicalState::parse("↓↑").unwrap()).unwrap();
        let up_down = lattice.index_of_logical(&LogicalState::parse("↑↓").unwrap()).unwrap();
        let down_down = lattice.index_of_logical(&LogicalState::parse("↓↓").unwrap()).unwrap();
        let j_minus = profile.bessel(-1.0).unwrap();
        let j_plus = profile.bessel(1.0).unwrap();
        assert!((h.matrix()[(down_up, up_up)].re - j_minus).abs() < 1e-14);
        assert!((h.matrix()[(down_down, up_down)].re - j_plus).abs() < 1e-14);
        let nonzero = h.matrix().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn qutrit_channel_with_bosonic_enhancement() {
        let profile = DriveProfile::from_vector(100.0, &[-7.624, -7.092, 0.592, -6.403]).unwrap();
        let lattice = BlockLattice::qutrits(vec![1.0, 0.0]).unwrap();
        let h = build_effective_boson(&lattice, &profile).unwrap();
        let idx = |s: &str| lattice.index_of_logical(&LogicalState::parse(s).unwrap()).unwrap();
        let direct = eval_bessel(
            &HarmonicPhase::new([(4, -7.624), (3, -7.092), (2, 0.592)], -2.5 * -6.403).unwrap(),
        )
        .unwrap();
        let element = h.matrix()[(idx("12"), idx("22"))].re;
        assert!((element - 2f64.sqrt() * direct).abs() < 1e-13);
        // the remaining five channels of the two-qutrit gate
        for (from, to, m) in [("20", "10", 1.5), ("21", "11", -0.5), ("00", "10", 2.5), ("02", "12", -1.5), ("01", "11", 0.5)] {
            let e = h.matrix()[(idx(to), idx(from))].re;
            assert!((e - 2f64.sqrt() * profile.bessel(m).unwrap()).abs() < 1e-13, "{from}->{to}");
        }
    }

    #[test]
    fn spin_form_matches_boson_form() {
        let profile = DriveProfile::from_vector(50.0, &[2.1, -0.7, 1.3]).unwrap();
        let rates = vec![0.9, 0.4, 1.7];
        let boson = build_effective_boson(&BlockLattice::qubits(rates.clone()).unwrap(), &profile).unwrap();
        let spin = build_effective_spin(&rates, &profile).unwrap();
        assert!(boson.max_abs_diff(&spin) < 1e-12);
    }

    #[test]
    fn undriven_effective_is_bare_hopping() {
        let lattice = BlockLattice::new(vec![1, 2, 1], vec![0.3, 1.2, 0.8]).unwrap();
        let zero = DriveProfile::from_vector(10.0, &[0.0, 0.0]).unwrap();
        let eff = build_effective_boson(&lattice, &zero).unwrap();
        let bare = build_bare(&lattice, &zero, 0.0).unwrap();
        assert!(eff.max_abs_diff(&bare) < 1e-14);
    }

    #[test]
    fn dicke_matches_projection() {
        let profile = DriveProfile::three_two(100.0, -6.38, -5.09, 1.15).unwrap();
        let n = 4;
        let full = build_effective_spin(&vec![1.0; n], &profile).unwrap();
        let dicke = dicke_effective(n, 1.0, &profile).unwrap();
        let lattice = BlockLattice::qubits(vec![1.0; n]).unwrap();
        // symmetric states: |k⟩ = C(n,k)^{-1/2} Σ_{|s|=k} |s⟩
        let dim = lattice.dimension();
        let sym: Vec<Vec<f64>> = (0..=n)
            .map(|k| {
                let members: Vec<usize> = (0..dim).filter(|&i| lattice.digits_at(i).iter().filter(|&&d| d == 1).count() == k).collect();
                let norm = (members.len() as f64).sqrt();
                (0..dim).map(|i| if members.contains(&i) { 1.0 / norm } else { 0.0 }).collect()
            })
            .collect();
        for a in 0..=n {
            for b in 0..=n {
                let mut e = Complex64::new(0.0, 0.0);
                for i in 0..dim {
                    for j in 0..dim {
                        e += full.matrix()[(i, j)] * sym[a][i] * sym[b][j];
                    }
                }
                assert!((e - dicke.matrix()[(a, b)]).norm() < 1e-12, "{a},{b}");
            }
        }
    }

    #[test]
    fn operator_rejects_non_hermitian() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 1)] = c(1.0);
        let tag = BlockLattice::qubits(vec![1.0]).unwrap().basis_tag();
        assert!(matches!(HermitianOperator::new(m, tag.clone()), Err(HamiltonianError::NotHermitian { .. })));
        let m = DMatrix::<Complex64>::zeros(3, 3);
        assert!(matches!(HermitianOperator::new(m, tag), Err(HamiltonianError::BasisMismatch(_))));
    }
}
