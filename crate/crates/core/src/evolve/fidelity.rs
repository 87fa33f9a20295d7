use serde::{Deserialize, Serialize};

use super::effective::{evolve_with, EffectivePropagator};
use super::floquet::{evolve_schedule, DrivenSystem, IntegratorSettings, Segment};
use super::{uniform_grid, EvolveError, Observables, StateVector};
use crate::hamiltonian::{build_effective_boson, DriveProfile};
use crate::lattice::{BlockLattice, LogicalState};
use crate::par;

/// Sampling density of the deviation integral.
pub const SAMPLES_PER_UNIT_TIME: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    /// Exact driven dynamics.
    Floquet,
    /// Static period-averaged Hamiltonian.
    Effective,
}

/// Map from every logical input to the basis state the gate should produce.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    rows: Vec<(LogicalState, LogicalState)>,
}

impl TruthTable {
    pub fn from_fn<F>(lattice: &BlockLattice, f: F) -> Self
    where
        F: Fn(&[u32]) -> Vec<u32>,
    {
        let rows = (0..lattice.dimension())
            .map(|i| {
                let digits = lattice.digits_at(i);
                let target = f(&digits);
                (LogicalState::new(digits), LogicalState::new(target))
            })
            .collect();
        Self { rows }
    }

    pub fn identity(lattice: &BlockLattice) -> Self {
        Self::from_fn(lattice, |d| d.to_vec())
    }

    /// Block 1 is the target; it maps `d → n − d` (σ^x on a qubit, the `0 ↔ 2`
    /// exchange on a qutrit) iff every other block sits at its top level
    /// (`↑` for a qubit, `2` for a qutrit). Covers CNOT, Toffoli, the qutrit
    /// CNOT and the qubit-controlled qutrit gates.
    pub fn controlled_flip(lattice: &BlockLattice) -> Self {
        let occ = lattice.occupancy().to_vec();
        Self::from_fn(lattice, move |d| {
            let mut out = d.to_vec();
            if d.iter().zip(&occ).skip(1).all(|(x, n)| x == n) {
                out[0] = occ[0] - d[0];
            }
            out
        })
    }

    pub fn rows(&self) -> &[(LogicalState, LogicalState)] {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowPopulation {
    pub input: String,
    pub target: String,
    pub population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub leg: Leg,
    pub gate_time: f64,
    pub rows: Vec<RowPopulation>,
    /// Phase-insensitive truth-table fidelity.
    pub min_population: f64,
}

/// Evolves every logical basis input for `gate_time` and reports the
/// population left on its truth-table target.
pub fn gate_fidelity(
    lattice: &BlockLattice,
    profile: &DriveProfile,
    gate_time: f64,
    table: &TruthTable,
    leg: Leg,
    settings: &IntegratorSettings,
) -> Result<GateReport, EvolveError> {
    if !(gate_time.is_finite() && gate_time > 0.0) {
        return Err(EvolveError::InvalidTime(format!("gate time must be positive, got {gate_time}")));
    }
    let qubit = lattice.is_qubit_lattice();
    let indices: Vec<(usize, usize)> = table
        .rows()
        .iter()
        .map(|(i, t)| Ok((lattice.index_of_logical(i)?, lattice.index_of_logical(t)?)))
        .collect::<Result<_, EvolveError>>()?;
    let populations: Vec<f64> = match leg {
        Leg::Effective => {
            let prop = EffectivePropagator::new(&build_effective_boson(lattice, profile)?)?;
            let u = prop.unitary(gate_time);
            indices.iter().map(|&(i, t)| u[(t, i)].norm_sqr()).collect()
        }
        Leg::Floquet => {
            let system = DrivenSystem::new(lattice);
            let segment = [Segment { profile: profile.clone(), duration: gate_time }];
            par::try_map(&indices, |_, &(i, t)| {
                let init = StateVector::basis_state(lattice.basis_tag(), i)?;
                let r = evolve_schedule(&system, &segment, &init, &[], &Observables::new(), settings)?;
                Ok::<f64, EvolveError>(r.final_state.population(t))
            })?
        }
    };
    let rows: Vec<RowPopulation> = table
        .rows()
        .iter()
        .zip(&populations)
        .map(|((i, t), &p)| RowPopulation { input: i.label(qubit), target: t.label(qubit), population: p })
        .collect();
    let min_population = populations.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GateReport { leg, gate_time, rows, min_population })
}

/// Both magnetization trajectories of one block and their mean deviation.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationTrace {
    pub times: Vec<f64>,
    pub floquet: Vec<f64>,
    pub effective: Vec<f64>,
    pub deviation: f64,
}

/// Trapezoid average of `|a − b|` over a uniform grid.
pub fn mean_abs_deviation(times: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    if span <= 0.0 {
        return 0.0;
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    let area: f64 = times.windows(2).zip(d.windows(2)).map(|(t, v)| (t[1] - t[0]) * (v[0] + v[1]) / 2.0).sum();
    area / span
}

/// `D = (1/t_max)∫₀^{t_max} |⟨σ^z⟩_Floquet − ⟨σ^z⟩_eff| dt` for block `target`
/// (1-based).
pub fn deviation_trace(
    lattice: &BlockLattice,
    profile: &DriveProfile,
    initial: &StateVector,
    t_max: f64,
    target: usize,
    settings: &IntegratorSettings,
) -> Result<DeviationTrace, EvolveError> {
    if target == 0 || target > lattice.num_blocks() {
        return Err(EvolveError::InvalidState(format!("no block {target}")));
    }
    let n = (SAMPLES_PER_UNIT_TIME * t_max).ceil() as usize;
    let times = uniform_grid(t_max, n);
    let obs = Observables::magnetizations(lattice);
    let name = format!("sz_{target}");
    let system = DrivenSystem::new(lattice);
    let segment = [Segment { profile: profile.clone(), duration: t_max }];
    let floquet = evolve_schedule(&system, &segment, initial, &times, &obs, settings)?;
    let prop = EffectivePropagator::new(&build_effective_boson(lattice, profile)?)?;
    let effective = evolve_with(&prop, initial, t_max, &times, &obs)?;
    let floquet = floquet.series(&name).expect("magnetization recorded");
    let effective = effective.series(&name).expect("magnetization recorded");
    let deviation = mean_abs_deviation(&times, &floquet, &effective);
    Ok(DeviationTrace { times, floquet, effective, deviation })
}

pub fn deviation_d(
    lattice: &BlockLattice,
    profile: &DriveProfile,
    initial: &StateVector,
    t_max: f64,
    target: usize,
    settings: &IntegratorSettings,
) -> Result<f64, EvolveError> {
    Ok(deviation_trace(lattice, profile, initial, t_max, target, settings)?.deviation)
}
