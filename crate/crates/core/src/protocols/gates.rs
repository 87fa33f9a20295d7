use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{
    check_omega, profile, ChannelCheck, ProtocolError, ProtocolReport, Schedule, Stage, Trajectory, GATE_FLOOR, QUTRIT_CLOSED_MAX,
    QUTRIT_CNOT_PROFILE, TOFFOLI4_PROFILE, TRAJECTORY_SAMPLES,
};
use crate::evolve::{
    evolve_effective, evolve_floquet, gate_fidelity, uniform_grid, GateReport, IntegratorSettings, Leg, Observables, StateVector, TruthTable,
};
use crate::hamiltonian::{build_effective_boson, DriveProfile};
use crate::lattice::{BlockLattice, LogicalState};
use crate::optimize::{ChannelSpec, TableId, DEFAULT_FLOOR};

/// Root of `𝒥(F_3=1, F_2=2, V_1)` nearest 4.26, by bracketing on
/// `[4.0, 4.5]` and bisection to machine precision.
pub fn cnot_root() -> Result<f64, ProtocolError> {
    let f = |v: f64| -> Result<f64, ProtocolError> { Ok(profile(1.0, &[1.0, 2.0, v])?.bessel(1.0)?) };
    let grid: Vec<f64> = (0..=50).map(|i| 4.0 + 0.01 * i as f64).collect();
    let values = grid.iter().map(|&v| f(v)).collect::<Result<Vec<_>, _>>()?;
    let bracket = grid
        .windows(2)
        .zip(values.windows(2))
        .filter(|(_, y)| y[0] == 0.0 || y[0].signum() != y[1].signum())
        .map(|(x, y)| (x[0], x[1], y[0]))
        .min_by(|a, b| (a.0 - 4.26).abs().total_cmp(&(b.0 - 4.26).abs()));
    let Some((mut lo, mut hi, mut f_lo)) = bracket else {
        return Err(ProtocolError::NoSolution("𝒥(1, 2, V1) has no sign change on [4.0, 4.5]".into()));
    };
    if f_lo == 0.0 {
        return Ok(lo);
    }
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn legs(
    lattice: &BlockLattice,
    drive: &DriveProfile,
    tau: f64,
    floquet: bool,
    settings: &IntegratorSettings,
) -> Result<Vec<GateReport>, ProtocolError> {
    let table = TruthTable::controlled_flip(lattice);
    let mut out = vec![gate_fidelity(lattice, drive, tau, &table, Leg::Effective, settings)?];
    if floquet {
        out.push(gate_fidelity(lattice, drive, tau, &table, Leg::Floquet, settings)?);
    }
    Ok(out)
}

/// Target-block magnetization for each input on both legs over `[0, tau]`.
fn trajectories(
    lattice: &BlockLattice,
    drive: &DriveProfile,
    tau: f64,
    inputs: &[LogicalState],
    floquet: bool,
    settings: &IntegratorSettings,
) -> Result<Vec<Trajectory>, ProtocolError> {
    let times = uniform_grid(tau, TRAJECTORY_SAMPLES);
    let obs = Observables::magnetizations(lattice);
    let h = build_effective_boson(lattice, drive)?;
    let qubit = lattice.is_qubit_lattice();
    let mut out = Vec::new();
    for input in inputs {
        let init = StateVector::logical(lattice, input)?;
        let label = input.label(qubit);
        out.push(Trajectory {
            name: format!("effective_{label}"),
            basis: lattice.basis_tag(),
            result: evolve_effective(&h, &init, tau, &times, &obs)?,
        });
        if floquet {
            out.push(Trajectory {
                name: format!("floquet_{label}"),
                basis: lattice.basis_tag(),
                result: evolve_floquet(lattice, drive, &init, tau, &times, &obs, settings)?,
            });
        }
    }
    Ok(out)
}

fn gate_metrics(gates: &[GateReport], metrics: &mut BTreeMap<String, f64>) {
    for g in gates {
        let leg = match g.leg {
            Leg::Floquet => "floquet",
            Leg::Effective => "effective",
        };
        metrics.insert(format!("min_population_{leg}"), g.min_population);
    }
}

/// Upper bound on the population a closed channel moves within `tau`:
/// `sin²(c·τ) ≤ (c·τ)²` for a two-level coupling `c`.
fn leakage_bound(check: &ChannelCheck, coupling: f64, tau: f64) -> f64 {
    check.closed.iter().map(|c| (c.value.abs() * coupling * tau).powi(2).min(1.0)).fold(0.0, f64::max)
}

/// CNOT on two qubits: block 1 is the target (`t_1 = 1`), block 2 the control
/// (`t_2 = 0`); drive `(F_3, F_2, V_1) = (1, 2, V_1)` with `V_1` at the root
/// of the `+V_1` channel unless overridden.
pub fn run_cnot(omega: f64, v1_override: Option<f64>, settings: &IntegratorSettings) -> Result<ProtocolReport, ProtocolError> {
    check_omega(omega)?;
    let v1 = match v1_override {
        Some(v) => v,
        None => cnot_root()?,
    };
    let drive = profile(omega, &[1.0, 2.0, v1])?;
    let lattice = BlockLattice::qubits(vec![1.0, 0.0])?;
    let spec = ChannelSpec::cnot();
    let open: Vec<f64> = spec.open.iter().map(|o| o.multiplier).collect();
    let check = ChannelCheck::evaluate(&drive, &spec.closed, &open, DEFAULT_FLOOR, GATE_FLOOR)?;
    let j_open = check.open[0].value;
    let tau = PI / (2.0 * j_open.abs());
    let schedule = Schedule::new(vec![Stage::new("cnot", drive.clone(), tau, check.clone())?])?;
    let gates = legs(&lattice, &drive, tau, true, settings)?;
    let inputs = [LogicalState::parse("↑↑").expect("literal"), LogicalState::parse("↑↓").expect("literal")];
    let trajectories = trajectories(&lattice, &drive, tau, &inputs, true, settings)?;
    let mut metrics = BTreeMap::from([
        ("v1".to_string(), v1),
        ("j_closed".to_string(), check.closed[0].value),
        ("j_open".to_string(), j_open),
        ("gate_time".to_string(), tau),
        ("leakage_bound".to_string(), leakage_bound(&check, 1.0, tau)),
    ]);
    gate_metrics(&gates, &mut metrics);
    Ok(ProtocolReport {
        protocol: "cnot".into(),
        omega,
        basis: lattice.basis_tag(),
        target: "CNOT: block 1 (target) flips iff block 2 (control) is ↑".into(),
        schedule,
        stage_outcomes: vec![],
        gates,
        metrics,
        integrator: *settings,
        trajectories,
    })
}

/// `(F_3, F_2, V_1)` of the four-qubit drive for `n_total = 4`, otherwise the
/// printed row of the Toffoli table.
pub fn default_toffoli_profile(n_total: usize) -> Result<Vec<f64>, ProtocolError> {
    if n_total == 4 {
        return Ok(TOFFOLI4_PROFILE.to_vec());
    }
    let label = n_total;
    TableId::ToffoliTable1
        .row(label)
        .map(|r| r.profile)
        .map_err(|_| ProtocolError::Validation(format!("no default Toffoli profile for {n_total} qubits; supply one")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToffoliOptions {
    /// Canonical `(F_N, …, F_2, V_1)`; defaults to [`default_toffoli_profile`].
    pub profile: Option<Vec<f64>>,
    pub open_floor: f64,
    pub closed_max: f64,
    /// Run the Floquet leg; `None` runs it for up to five qubits.
    pub floquet: Option<bool>,
}

impl Default for ToffoliOptions {
    fn default() -> Self {
        Self { profile: None, open_floor: GATE_FLOOR, closed_max: DEFAULT_FLOOR, floquet: None }
    }
}

/// `n_total`-qubit Toffoli: block 1 is the target, all others are controls
/// with `t_q = 0`.
pub fn run_toffoli(n_total: usize, omega: f64, options: &ToffoliOptions, settings: &IntegratorSettings) -> Result<ProtocolReport, ProtocolError> {
    check_omega(omega)?;
    let spec = ChannelSpec::toffoli(n_total).map_err(|e| ProtocolError::Validation(e.to_string()))?;
    let amplitudes = match &options.profile {
        Some(p) => p.clone(),
        None => default_toffoli_profile(n_total)?,
    };
    if amplitudes.len() != spec.num_params() {
        return Err(ProtocolError::Validation(format!(
            "a {n_total}-qubit Toffoli profile has {} entries, got {}",
            spec.num_params(),
            amplitudes.len()
        )));
    }
    let drive = profile(omega, &amplitudes)?;
    let lattice = BlockLattice::controlled_qubits(n_total, 1.0)?;
    let open: Vec<f64> = spec.open.iter().map(|o| o.multiplier).collect();
    let check = ChannelCheck::evaluate(&drive, &spec.closed, &open, options.closed_max, options.open_floor)?;
    let j_open = check.open[0].value;
    let tau = PI / (2.0 * j_open.abs());
    let schedule = Schedule::new(vec![Stage::new("toffoli", drive.clone(), tau, check.clone())?])?;
    let floquet = options.floquet.unwrap_or(n_total <= 5);
    let gates = legs(&lattice, &drive, tau, floquet, settings)?;
    let all_up = LogicalState::new(vec![1; n_total]);
    let mut one_down = all_up.clone();
    one_down.digits[n_total - 1] = 0;
    let trajectories = trajectories(&lattice, &drive, tau, &[all_up, one_down], floquet, settings)?;
    let g: f64 = check.closed.iter().map(|c| c.value.abs()).sum();
    let mut metrics = BTreeMap::from([
        ("g".to_string(), g),
        ("j_open".to_string(), j_open),
        ("gate_time".to_string(), tau),
        ("leakage_bound".to_string(), leakage_bound(&check, 1.0, tau)),
    ]);
    gate_metrics(&gates, &mut metrics);
    Ok(ProtocolReport {
        protocol: format!("toffoli-{n_total}"),
        omega,
        basis: lattice.basis_tag(),
        target: "Toffoli: block 1 (target) flips iff every other block is ↑".into(),
        schedule,
        stage_outcomes: vec![],
        gates,
        metrics,
        integrator: *settings,
        trajectories,
    })
}

/// Gate time of the control-on chain `|2⟩ ↔ |1⟩ ↔ |0⟩` of a qutrit target,
/// whose couplings carry the bosonic `√2`: `π/√(a² + b²)`.
fn qutrit_gate_time(check: &ChannelCheck) -> (f64, f64) {
    let a = 2f64.sqrt() * check.open[0].value;
    let b = 2f64.sqrt() * check.open[1].value;
    let omega = (a * a + b * b).sqrt();
    // peak |2⟩ → |0⟩ population of the chain
    let transfer = 4.0 * a * a * b * b / omega.powi(4);
    (PI / omega, transfer)
}

fn qutrit_report(
    name: String,
    target: &str,
    omega: f64,
    lattice: BlockLattice,
    drive: DriveProfile,
    check: ChannelCheck,
    floquet: bool,
    settings: &IntegratorSettings,
) -> Result<ProtocolReport, ProtocolError> {
    let (tau, transfer) = qutrit_gate_time(&check);
    let schedule = Schedule::new(vec![Stage::new(name.clone(), drive.clone(), tau, check.clone())?])?;
    let gates = legs(&lattice, &drive, tau, floquet, settings)?;
    let top: Vec<u32> = lattice.occupancy().to_vec();
    let mut flip = top.clone();
    flip[0] = 2;
    let mut stay = top.clone();
    stay[0] = 2;
    stay[1] -= 1;
    let trajectories = trajectories(&lattice, &drive, tau, &[LogicalState::new(flip), LogicalState::new(stay)], floquet, settings)?;
    let mut metrics = BTreeMap::from([
        ("gate_time".to_string(), tau),
        ("chain_transfer_bound".to_string(), transfer),
        ("max_closed".to_string(), check.closed.iter().map(|c| c.value.abs()).fold(0.0, f64::max)),
        ("g".to_string(), check.closed.iter().map(|c| c.value.abs()).sum()),
        ("leakage_bound".to_string(), leakage_bound(&check, 2f64.sqrt(), tau)),
    ]);
    gate_metrics(&gates, &mut metrics);
    Ok(ProtocolReport {
        protocol: name,
        omega,
        basis: lattice.basis_tag(),
        target: target.into(),
        schedule,
        stage_outcomes: vec![],
        gates,
        metrics,
        integrator: *settings,
        trajectories,
    })
}

/// Two-qutrit CNOT: block 1 (target, `t_1 = 1`) exchanges `|0⟩ ↔ |2⟩` iff
/// block 2 (control, `t_2 = 0`) is in `|2⟩`.
pub fn run_qutrit_cnot(omega: f64, settings: &IntegratorSettings) -> Result<ProtocolReport, ProtocolError> {
    check_omega(omega)?;
    let drive = profile(omega, &QUTRIT_CNOT_PROFILE)?;
    let lattice = BlockLattice::qutrits(vec![1.0, 0.0])?;
    let spec = ChannelSpec::qutrit_cnot();
    let open: Vec<f64> = spec.open.iter().map(|o| o.multiplier).collect();
    let check = ChannelCheck::evaluate(&drive, &spec.closed, &open, QUTRIT_CLOSED_MAX, GATE_FLOOR)?;
    qutrit_report(
        "qutrit-cnot".into(),
        "qutrit CNOT: block 1 (target) maps d → 2 − d iff block 2 (control) is |2⟩",
        omega,
        lattice,
        drive,
        check,
        true,
        settings,
    )
}

/// Qutrit target with `n_controls` qubit controls; the profile defaults to
/// the printed row of the qutrit table. `floquet: None` runs the driven leg
/// for up to two controls only: at the table's open-channel magnitudes the
/// gate lasts thousands of time units.
pub fn run_qutrit_controlled(
    n_controls: usize,
    omega: f64,
    amplitudes: Option<Vec<f64>>,
    floquet: Option<bool>,
    settings: &IntegratorSettings,
) -> Result<ProtocolReport, ProtocolError> {
    check_omega(omega)?;
    let spec = ChannelSpec::qutrit_controlled(n_controls).map_err(|e| ProtocolError::Validation(e.to_string()))?;
    let amplitudes = match amplitudes {
        Some(a) => a,
        None => TableId::QutritTable2
            .row(n_controls)
            .map(|r| r.profile)
            .map_err(|_| ProtocolError::Validation(format!("no default profile for {n_controls} controls; supply one")))?,
    };
    if amplitudes.len() != spec.num_params() {
        return Err(ProtocolError::Validation(format!("expected {} profile entries, got {}", spec.num_params(), amplitudes.len())));
    }
    let drive = profile(omega, &amplitudes)?;
    let lattice = BlockLattice::qubit_controlled_qutrit(n_controls, 1.0)?;
    let open: Vec<f64> = spec.open.iter().map(|o| o.multiplier).collect();
    let check = ChannelCheck::evaluate(&drive, &spec.closed, &open, DEFAULT_FLOOR, GATE_FLOOR)?;
    qutrit_report(
        format!("qutrit-ctrl-{n_controls}"),
        "block 1 (qutrit target) maps d → 2 − d iff every control qubit is ↑",
        omega,
        lattice,
        drive,
        check,
        floquet.unwrap_or(n_controls <= 2),
        settings,
    )
}
