use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use super::{
    check_omega, nearest, profile, sample_grid, ChannelCheck, ProtocolError, ProtocolReport, Schedule, Stage, StageOutcome, Trajectory,
    CHAIN_PROFILE, GATE_FLOOR, TOFFOLI4_PROFILE,
};
use crate::evolve::{
    evolve_effective_schedule, evolve_schedule, DrivenSystem, EvolutionResult, IntegratorSettings, Observables, Segment, StateVector,
};
use crate::hamiltonian::{build_effective_boson, build_tower, dicke_effective, HermitianOperator};
use crate::lattice::{BasisTag, BlockLattice};
use crate::optimize::{optimize_profile, ChannelSpec, MultistartSettings, OpenChannel, DEFAULT_FLOOR};

/// Multipliers of the closed and open rungs for `N` qubits when only the rung
/// from `n↑ = lower` is kept open.
fn rung_channels(n: usize, open_lower: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let m = |k: usize| -((2 * k) as f64 - n as f64 + 1.0);
    let closed = (0..n).filter(|k| !open_lower.contains(k)).map(m).collect();
    let open = open_lower.iter().map(|&k| m(k)).collect();
    (closed, open)
}

/// Dicke coupling `𝒥·√((N − k)(k + 1))` of the rung `k → k + 1`.
fn rung_coupling(n: usize, k: usize, factor: f64) -> f64 {
    factor * (((n - k) * (k + 1)) as f64).sqrt()
}

/// Projectors onto every `n↑` layer of a qubit lattice, named `layer_k`.
fn layer_observables(lattice: &BlockLattice) -> Observables {
    let n = lattice.num_blocks();
    let ups: Vec<usize> = (0..lattice.dimension()).map(|i| lattice.digits_at(i).iter().filter(|&&d| d == 1).count()).collect();
    (0..=n).fold(Observables::new(), |obs, k| {
        obs.with_diagonal(format!("layer_{k}"), ups.iter().map(|&u| if u == k { 1.0 } else { 0.0 }).collect())
    })
}

fn dicke_layers(n: usize) -> Observables {
    (0..=n).fold(Observables::new(), |obs, k| {
        obs.with_diagonal(format!("layer_{k}"), (0..=n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
    })
}

/// Normalized equal-weight superposition of the given basis states.
fn superposition(basis: BasisTag, indices: &[usize]) -> Result<StateVector, ProtocolError> {
    let mut v = DVector::zeros(basis.dimension());
    for &i in indices {
        v[i] = Complex64::new(1.0, 0.0);
    }
    Ok(StateVector::normalized(v, basis)?)
}

/// Basis indices of the full qubit lattice with `k` spins up.
fn layer_indices(lattice: &BlockLattice, k: usize) -> Vec<usize> {
    (0..lattice.dimension()).filter(|&i| lattice.digits_at(i).iter().filter(|&&d| d == 1).count() == k).collect()
}

fn value_at(result: &EvolutionResult, name: &str, index: usize) -> f64 {
    result.series(name).map(|s| s[index]).unwrap_or(f64::NAN)
}

/// Largest `1 − Σ layers` along a trajectory.
fn max_leakage(result: &EvolutionResult, layers: &[usize]) -> f64 {
    let series: Vec<Vec<f64>> = layers.iter().filter_map(|k| result.series(&format!("layer_{k}"))).collect();
    (0..result.times.len()).map(|i| 1.0 - series.iter().map(|s| s[i]).sum::<f64>()).fold(0.0, f64::max)
}

/// W state on four qubits with every `t_q = 1`: the Toffoli drive opens only
/// the `n↑ = 4 → 3` rung, so `|↑↑↑↑⟩` is carried to the symmetric W state
/// after `π/(4|𝒥(F_3, F_2, −3V_1)|)`.
pub fn run_w_state(omega: f64, settings: &IntegratorSettings) -> Result<ProtocolReport, ProtocolError> {
    check_omega(omega)?;
    let n = 4;
    let drive = profile(omega, &TOFFOLI4_PROFILE)?;
    let (closed, open) = rung_channels(n, &[n - 1]);
    let check = ChannelCheck::evaluate(&drive, &closed, &open, DEFAULT_FLOOR, GATE_FLOOR)?;
    let j = check.open[0].value;
    let tau = PI / (4.0 * j.abs());
    let schedule = Schedule::new(vec![Stage::new("w", drive.clone(), tau, check)?])?;
    let times = sample_grid(tau, &[]);

    let lattice = BlockLattice::qubits(vec![1.0; n])?;
    let w_full = superposition(lattice.basis_tag(), &layer_indices(&lattice, n - 1))?;
    let top_full = StateVector::basis_state(lattice.basis_tag(), 0)?;
    let obs_full = layer_observables(&lattice).with_overlap("w", w_full.clone()).with_overlap("initial", top_full.clone());
    let h_full = build_effective_boson(&lattice, &drive)?;
    let eff_full = evolve_effective_schedule(&[(h_full, tau)], &top_full, &times, &obs_full)?;
    let system = DrivenSystem::new(&lattice);
    let seg = [Segment { profile: drive.clone(), duration: tau }];
    let floquet = evolve_schedule(&system, &seg, &top_full, &times, &obs_full, settings)?;

    let dicke = BasisTag::dicke(n);
    let w = StateVector::basis_state(dicke.clone(), n - 1)?;
    let top = StateVector::basis_state(dicke.clone(), n)?;
    let obs = dicke_layers(n).with_overlap("w", w).with_overlap("initial", top.clone());
    let h = dicke_effective(n, 1.0, &drive)?;
    let eff = evolve_effective_schedule(&[(h, tau)], &top, &times, &obs)?;

    let last = times.len() - 1;
    let two_level = |r: &EvolutionResult| {
        let (w, i) = (r.series("w").unwrap_or_default(), r.series("initial").unwrap_or_default());
        w.iter().zip(&i).map(|(a, b)| (1.0 - a - b).abs()).fold(0.0, f64::max)
    };
    let metrics = BTreeMap::from([
        ("gate_time".to_string(), tau),
        ("j_open".to_string(), j),
        ("w_overlap_effective".to_string(), value_at(&eff, "w", last)),
        ("w_overlap_effective_full".to_string(), value_at(&eff_full, "w", last)),
        ("w_overlap_floquet".to_string(), value_at(&floquet, "w", last)),
        ("initial_overlap_effective".to_string(), value_at(&eff, "initial", last)),
        ("initial_overlap_floquet".to_string(), value_at(&floquet, "initial", last)),
        ("two_level_deviation_effective".to_string(), two_level(&eff)),
        ("layers_34_leakage_effective".to_string(), max_leakage(&eff, &[3, 4])),
        ("layers_34_leakage_floquet".to_string(), max_leakage(&floquet, &[3, 4])),
        ("symmetric_sector_deviation".to_string(), symmetric_deviation(&eff_full, &eff)),
    ]);
    Ok(ProtocolReport {
        protocol: "w-state".into(),
        omega,
        basis: lattice.basis_tag(),
        target: "symmetric W state |n↑=3⟩ from |↑↑↑↑⟩".into(),
        schedule,
        stage_outcomes: vec![],
        gates: vec![],
        metrics,
        integrator: *settings,
        trajectories: vec![
            Trajectory { name: "effective_dicke".into(), basis: dicke, result: eff },
            Trajectory { name: "effective_full".into(), basis: lattice.basis_tag(), result: eff_full },
            Trajectory { name: "floquet".into(), basis: lattice.basis_tag(), result: floquet },
        ],
    })
}

/// Largest difference between full-space and Dicke-sector layer populations.
fn symmetric_deviation(full: &EvolutionResult, dicke: &EvolutionResult) -> f64 {
    dicke
        .names
        .iter()
        .filter(|n| n.starts_with("layer_"))
        .filter_map(|n| Some((full.series(n)?, dicke.series(n)?)))
        .flat_map(|(a, b)| a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhzOptions {
    /// Search for the first-stage profile; the mirrored four-qubit Toffoli
    /// drive is always tried as the first start.
    pub search: MultistartSettings,
    /// Round stage durations to whole drive periods.
    pub round_to_period: bool,
}

impl Default for GhzOptions {
    fn default() -> Self {
        Self { search: MultistartSettings { starts: 32, ..Default::default() }, round_to_period: true }
    }
}

/// Four-qubit GHZ preparation from `|↓↓↓↓⟩`, all `t_q = 1`:
/// a π/2 pulse on `n↑ = 0 ↔ 1`, the degenerate chain `1 → 2 → 3`, and a π
/// pulse on `3 ↔ 4`. The first-stage profile is optimized with the sign of
/// its open channel chosen so that the two GHZ branches end in phase.
pub fn run_ghz(n: usize, omega: f64, options: &GhzOptions, settings: &IntegratorSettings) -> Result<ProtocolReport, ProtocolError> {
    check_omega(omega)?;
    if n != 4 {
        return Err(ProtocolError::Validation(format!("the GHZ schedule is implemented for N = 4, got N = {n}")));
    }
    let chain = profile(omega, &CHAIN_PROFILE)?;
    let last = profile(omega, &TOFFOLI4_PROFILE)?;

    let (closed, open) = rung_channels(n, &[1, 2]);
    let chain_check = ChannelCheck::evaluate(&chain, &closed, &open, DEFAULT_FLOOR, GATE_FLOOR)?;
    let (closed, open) = rung_channels(n, &[n - 1]);
    let last_check = ChannelCheck::evaluate(&last, &closed, &open, DEFAULT_FLOOR, GATE_FLOOR)?;
    let a = rung_coupling(n, 1, chain_check.open[0].value);
    let b = rung_coupling(n, 2, chain_check.open[1].value);
    let c_last = rung_coupling(n, n - 1, last_check.open[0].value);

    // After the chain and the final π pulse the |n↑=N⟩ branch carries the
    // factor (−i s_1)(−sgn(ab))(−i s_N) = s_1 s_N sgn(ab); it must be +1.
    let required = c_last.signum() * (a * b).signum();
    let (closed, open) = rung_channels(n, &[0]);
    let spec = ChannelSpec::new(3, closed.clone(), vec![OpenChannel::with_sign(open[0], required)], DEFAULT_FLOOR)?;
    let mut search = options.search.clone();
    let mirrored = vec![TOFFOLI4_PROFILE[0], TOFFOLI4_PROFILE[1], -TOFFOLI4_PROFILE[2]];
    search.explicit_starts.insert(0, mirrored);
    let found = optimize_profile(&spec, &search)?;
    if !found.success {
        return Err(ProtocolError::NoSolution("no first-stage profile keeps the 0 ↔ 1 rung open with the required sign".into()));
    }
    let first = profile(omega, &found.params)?;
    let first_check = ChannelCheck::evaluate(&first, &closed, &open, DEFAULT_FLOOR, GATE_FLOOR)?;
    let c_first = rung_coupling(n, 0, first_check.open[0].value);

    let round = |s: Stage| if options.round_to_period { s.rounded_to_period() } else { s };
    let stages = vec![
        round(Stage::new("split 0↔1 (π/2)", first, PI / (4.0 * c_first.abs()), first_check)?),
        round(Stage::new("chain 1→3", chain.clone(), PI / (a * a + b * b).sqrt(), chain_check)?),
        round(Stage::new("raise 3→4 (π)", last, PI / (2.0 * c_last.abs()), last_check)?),
    ];
    let schedule = Schedule::new(stages)?;
    let total = schedule.total_duration();
    let boundaries = schedule.boundaries();
    let times = sample_grid(total, &boundaries);

    let lattice = BlockLattice::qubits(vec![1.0; n])?;
    let bottom = lattice.dimension() - 1;
    let ghz_full = superposition(lattice.basis_tag(), &[0, bottom])?;
    let init_full = StateVector::basis_state(lattice.basis_tag(), bottom)?;
    let obs_full = layer_observables(&lattice).with_overlap("ghz", ghz_full);
    let system = DrivenSystem::new(&lattice);
    let segments: Vec<Segment> = schedule.stages().iter().map(|s| Segment { profile: s.profile.clone(), duration: s.duration }).collect();
    let floquet = evolve_schedule(&system, &segments, &init_full, &times, &obs_full, settings)?;
    let full_ops = schedule
        .stages()
        .iter()
        .map(|s| Ok((build_effective_boson(&lattice, &s.profile)?, s.duration)))
        .collect::<Result<Vec<(HermitianOperator, f64)>, ProtocolError>>()?;
    let eff_full = evolve_effective_schedule(&full_ops, &init_full, &times, &obs_full)?;

    let dicke = BasisTag::dicke(n);
    let ghz = superposition(dicke.clone(), &[0, n])?;
    let init = StateVector::basis_state(dicke.clone(), 0)?;
    let obs = dicke_layers(n).with_overlap("ghz", ghz);
    let dicke_ops = schedule
        .stages()
        .iter()
        .map(|s| Ok((dicke_effective(n, 1.0, &s.profile)?, s.duration)))
        .collect::<Result<Vec<(HermitianOperator, f64)>, ProtocolError>>()?;
    let eff = evolve_effective_schedule(&dicke_ops, &init, &times, &obs)?;

    let stage_outcomes = schedule
        .stages()
        .iter()
        .zip(&boundaries)
        .map(|(s, &t)| {
            let i = nearest(&times, t);
            let mut values = BTreeMap::new();
            for (leg, r) in [("floquet", &floquet), ("effective", &eff)] {
                for k in 0..=n {
                    values.insert(format!("{leg}_layer_{k}"), value_at(r, &format!("layer_{k}"), i));
                }
                values.insert(format!("{leg}_ghz"), value_at(r, "ghz", i));
            }
            values.insert("rounding_error".into(), s.rounding_error);
            StageOutcome { label: s.label.clone(), values }
        })
        .collect();

    let tower = build_tower(n, &chain)?;
    let end = times.len() - 1;
    let metrics = BTreeMap::from([
        ("fidelity_floquet".to_string(), value_at(&floquet, "ghz", end)),
        ("fidelity_effective".to_string(), value_at(&eff, "ghz", end)),
        ("fidelity_effective_full".to_string(), value_at(&eff_full, "ghz", end)),
        ("total_time".to_string(), total),
        ("stage1_j_open".to_string(), found.open[0].value),
        ("stage1_g".to_string(), found.g),
        ("chain_asymmetry".to_string(), (chain.bessel(1.0)? - chain.bessel(-1.0)?).abs()),
        ("chain_outer_max".to_string(), [0, n - 1].iter().map(|&k| tower.links()[k].factor.abs()).fold(0.0, f64::max)),
        ("max_rounding_error".to_string(), schedule.stages().iter().map(|s| s.rounding_error.abs()).fold(0.0, f64::max)),
        ("symmetric_sector_deviation".to_string(), symmetric_deviation(&eff_full, &eff)),
    ]);
    Ok(ProtocolReport {
        protocol: "ghz".into(),
        omega,
        basis: lattice.basis_tag(),
        target: "(|n↑=0⟩ + |n↑=4⟩)/√2 from |↓↓↓↓⟩".into(),
        schedule,
        stage_outcomes,
        gates: vec![],
        metrics,
        integrator: *settings,
        trajectories: vec![
            Trajectory { name: "effective_dicke".into(), basis: dicke, result: eff },
            Trajectory { name: "effective_full".into(), basis: lattice.basis_tag(), result: eff_full },
            Trajectory { name: "floquet".into(), basis: lattice.basis_tag(), result: floquet },
        ],
    })
}
