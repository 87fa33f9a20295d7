use std::collections::HashMap;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_initial, check_times, EvolutionResult, EvolveError, Observables, StateVector};
use crate::hamiltonian::{drive_diagonals, frame_phases, hops, DriveProfile};
use crate::lattice::{BasisTag, BlockLattice};

/// Frame the integrator works in. Populations and any diagonal observable are
/// identical in both; recorded overlaps and the final state are always
/// reported in the lab frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Hopping dressed by the drive phases; the only large scale is the phase
    /// velocity, not the diagonal energies.
    #[default]
    Rotating,
    /// Hopping plus the time-dependent diagonal. Needs steps that resolve the
    /// full tilt energy, so it is meant for diagnostics at small ω.
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    /// Largest phase advance per step, `h · rate_bound`.
    pub courant: f64,
    /// Allowed `|‖ψ‖ − 1|` over a run before the step is halved.
    pub drift_tol: f64,
    pub max_halvings: u32,
    pub frame: Frame,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { courant: 0.1, drift_tol: 1e-8, max_halvings: 12, frame: Frame::Rotating }
    }
}

/// One piece of a piecewise-constant drive schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub profile: DriveProfile,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy)]
struct HopEntry {
    from: usize,
    to: usize,
    amplitude: f64,
    key: usize,
}

/// Hop list and diagonal data of a lattice, shared by every evolution on it.
#[derive(Debug, Clone)]
pub struct DrivenSystem {
    basis: BasisTag,
    hops: Vec<HopEntry>,
    /// Distinct `(direction, Δ)` pairs.
    keys: Vec<(i64, i64)>,
    diagonals: Vec<(f64, f64)>,
    hop_norm: f64,
}

impl DrivenSystem {
    pub fn new(lattice: &BlockLattice) -> Self {
        let mut index = HashMap::new();
        let mut keys = Vec::new();
        let mut entries = Vec::new();
        let dim = lattice.dimension();
        let mut column = vec![0.0; dim];
        for hop in hops(lattice) {
            let key = *index.entry((hop.direction, hop.delta)).or_insert_with(|| {
                keys.push((hop.direction, hop.delta));
                keys.len() - 1
            });
            column[hop.from] += hop.amplitude.abs();
            entries.push(HopEntry { from: hop.from, to: hop.to, amplitude: hop.amplitude, key });
        }
        Self {
            basis: lattice.basis_tag(),
            hops: entries,
            keys,
            diagonals: drive_diagonals(lattice),
            hop_norm: column.into_iter().fold(0.0, f64::max),
        }
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.diagonals.len()
    }

    /// Bound on the fastest phase velocity of the generator.
    pub fn rate_bound(&self, profile: &DriveProfile, frame: Frame) -> f64 {
        let omega_v = profile.omega() * profile.v1().abs();
        match frame {
            Frame::Rotating => {
                let delta = self.keys.iter().map(|&(_, d)| d.abs()).max().unwrap_or(0) as f64;
                profile.tilt_rate_bound() + omega_v * delta / 2.0 + self.hop_norm
            }
            Frame::Lab => {
                let tilt = self.diagonals.iter().map(|d| d.0.abs()).fold(0.0, f64::max);
                let inter = self.diagonals.iter().map(|d| d.1.abs()).fold(0.0, f64::max);
                profile.tilt_rate_bound() * tilt + omega_v * inter / 2.0 + self.hop_norm
            }
        }
    }

    /// Nominal step before any halving.
    pub fn base_step(&self, profile: &DriveProfile, settings: &IntegratorSettings) -> f64 {
        let resolve = profile.period() / (50.0 * profile.max_harmonic() as f64);
        let rate = self.rate_bound(profile, settings.frame);
        if rate > 0.0 {
            resolve.min(settings.courant / rate)
        } else {
            resolve
        }
    }

    /// Basis states reachable by hopping from the support of `psi`, ascending.
    fn component(&self, psi: &[Complex64]) -> Vec<usize> {
        let dim = self.dimension();
        let mut adjacency = vec![Vec::new(); dim];
        for h in &self.hops {
            adjacency[h.from].push(h.to);
        }
        let mut seen = vec![false; dim];
        let mut stack: Vec<usize> = (0..dim).filter(|&i| psi[i] != Complex64::new(0.0, 0.0)).collect();
        stack.iter().for_each(|&i| seen[i] = true);
        while let Some(i) = stack.pop() {
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        (0..dim).filter(|&i| seen[i]).collect()
    }

    /// The same system on the basis states `keep` (closed under hopping).
    fn restrict(&self, keep: &[usize]) -> Self {
        let mut position = vec![usize::MAX; self.dimension()];
        for (k, &i) in keep.iter().enumerate() {
            position[i] = k;
        }
        let hops: Vec<HopEntry> = self
            .hops
            .iter()
            .filter(|h| position[h.from] != usize::MAX)
            .map(|h| HopEntry { from: position[h.from], to: position[h.to], ..*h })
            .collect();
        let mut column = vec![0.0; keep.len()];
        hops.iter().for_each(|h| column[h.from] += h.amplitude.abs());
        let mut used = vec![false; self.keys.len()];
        hops.iter().for_each(|h| used[h.key] = true);
        let mut remap = vec![usize::MAX; self.keys.len()];
        let mut keys = Vec::new();
        for (k, &key) in self.keys.iter().enumerate() {
            if used[k] {
                remap[k] = keys.len();
                keys.push(key);
            }
        }
        Self {
            basis: self.basis.clone(),
            hops: hops.into_iter().map(|h| HopEntry { key: remap[h.key], ..h }).collect(),
            keys,
            diagonals: keep.iter().map(|&i| self.diagonals[i]).collect(),
            hop_norm: column.into_iter().fold(0.0, f64::max),
        }
    }

    /// `out = −i H(t) ψ`.
    fn derivative(&self, profile: &DriveProfile, frame: Frame, t: f64, psi: &[Complex64], out: &mut [Complex64], phases: &mut [Complex64]) {
        let minus_i = Complex64::new(0.0, -1.0);
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        match frame {
            Frame::Rotating => {
                let (theta, beta) = (profile.theta(t), profile.beta(t));
                for (p, &(dir, delta)) in phases.iter_mut().zip(&self.keys) {
                    *p = minus_i * Complex64::from_polar(1.0, dir as f64 * theta + beta * delta as f64 / 2.0);
                }
                for h in &self.hops {
                    out[h.to] += phases[h.key] * (h.amplitude * psi[h.from]);
                }
            }
            Frame::Lab => {
                let (f, v) = (profile.tilt_field(t), profile.interaction_field(t));
                for h in &self.hops {
                    out[h.to] += minus_i * (h.amplitude * psi[h.from]);
                }
                for (i, &(tilt, inter)) in self.diagonals.iter().enumerate() {
                    out[i] += minus_i * ((f * tilt + v * inter / 2.0) * psi[i]);
                }
            }
        }
    }

    fn to_lab(&self, profile: &DriveProfile, frame: Frame, t: f64, psi: &[Complex64]) -> Vec<Complex64> {
        match frame {
            Frame::Lab => psi.to_vec(),
            Frame::Rotating => frame_phases(&self.diagonals, profile, t)
                .into_iter()
                .zip(psi)
                .map(|(phi, z)| Complex64::from_polar(1.0, -phi) * z)
                .collect(),
        }
    }
}

struct Workspace {
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
    phases: Vec<Complex64>,
}

impl Workspace {
    fn new(dim: usize, keys: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { k: std::array::from_fn(|_| vec![z; dim]), tmp: vec![z; dim], phases: vec![z; keys] }
    }
}

/// Classical RK4 from `t0` to `t1` in `ceil((t1 − t0)/h)` equal steps.
fn advance(
    system: &DrivenSystem,
    profile: &DriveProfile,
    frame: Frame,
    psi: &mut [Complex64],
    t0: f64,
    t1: f64,
    h: f64,
    ws: &mut Workspace,
) {
    let span = t1 - t0;
    if span <= 0.0 {
        return;
    }
    let n = (span / h).ceil().max(1.0) as usize;
    let dt = span / n as f64;
    let Workspace { k, tmp, phases } = ws;
    for s in 0..n {
        let t = t0 + s as f64 * dt;
        system.derivative(profile, frame, t, psi, &mut k[0], phases);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k[0][i] * (dt / 2.0);
        }
        system.derivative(profile, frame, t + dt / 2.0, tmp, &mut k[1], phases);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k[1][i] * (dt / 2.0);
        }
        system.derivative(profile, frame, t + dt / 2.0, tmp, &mut k[2], phases);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k[2][i] * dt;
        }
        system.derivative(profile, frame, t + dt, tmp, &mut k[3], phases);
        for i in 0..psi.len() {
            psi[i] += (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]) * (dt / 6.0);
        }
    }
}

fn norm(psi: &[Complex64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates `i∂_t ψ = H(t)ψ` for a single drive profile.
pub fn evolve_floquet(
    lattice: &BlockLattice,
    profile: &DriveProfile,
    initial: &StateVector,
    t_final: f64,
    sample_times: &[f64],
    observables: &Observables,
    settings: &IntegratorSettings,
) -> Result<EvolutionResult, EvolveError> {
    let system = DrivenSystem::new(lattice);
    let segment = Segment { profile: profile.clone(), duration: t_final };
    evolve_schedule(&system, std::slice::from_ref(&segment), initial, sample_times, observables, settings)
}

/// Integrates a piecewise drive. Each segment's drive phases restart at zero,
/// and the state is carried across boundaries in the lab frame, so
/// segments need not span whole periods.
pub fn evolve_schedule(
    system: &DrivenSystem,
    segments: &[Segment],
    initial: &StateVector,
    sample_times: &[f64],
    observables: &Observables,
    settings: &IntegratorSettings,
) -> Result<EvolutionResult, EvolveError> {
    if segments.is_empty() {
        return Err(EvolveError::InvalidTime("empty schedule".into()));
    }
    if segments.iter().any(|s| !(s.duration.is_finite() && s.duration > 0.0)) {
        return Err(EvolveError::InvalidTime("segment durations must be positive".into()));
    }
    let total: f64 = segments.iter().map(|s| s.duration).sum();
    check_times(total, sample_times)?;
    check_initial(initial, system.basis())?;
    observables.check(system.dimension())?;
    if !(settings.courant > 0.0 && settings.drift_tol > 0.0) {
        return Err(EvolveError::InvalidTime("integrator settings must be positive".into()));
    }
    let samples: Vec<f64> = if sample_times.is_empty() { vec![total] } else { sample_times.to_vec() };

    // hopping never leaves the connected component of the initial support
    let amplitudes: Vec<Complex64> = initial.amplitudes().iter().copied().collect();
    let keep = system.component(&amplitudes);
    let reduced;
    let (system, embed) = if keep.len() < system.dimension() {
        reduced = system.restrict(&keep);
        (&reduced, Some(keep.as_slice()))
    } else {
        (system, None)
    };
    let start: Vec<Complex64> = match embed {
        Some(keep) => keep.iter().map(|&i| amplitudes[i]).collect(),
        None => amplitudes,
    };

    let mut halvings = 0;
    loop {
        let scale = 0.5f64.powi(halvings as i32);
        match run_schedule(system, segments, &start, embed, &samples, observables, settings, scale) {
            Err(EvolveError::NormDrift { .. }) if halvings < settings.max_halvings => halvings += 1,
            Err(EvolveError::NormDrift { .. }) => {
                let step = segments
                    .iter()
                    .map(|s| system.base_step(&s.profile, settings) * scale)
                    .fold(f64::INFINITY, f64::min);
                return Err(EvolveError::StepUnderflow { step, halvings });
            }
            other => return other,
        }
    }
}

/// Lifts a state on `embed` back to the full basis.
fn lift(psi: Vec<Complex64>, embed: Option<&[usize]>, dim: usize) -> DVector<Complex64> {
    match embed {
        None => DVector::from_vec(psi),
        Some(keep) => {
            let mut full = DVector::zeros(dim);
            for (&i, z) in keep.iter().zip(psi) {
                full[i] = z;
            }
            full
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_schedule(
    system: &DrivenSystem,
    segments: &[Segment],
    initial: &[Complex64],
    embed: Option<&[usize]>,
    samples: &[f64],
    observables: &Observables,
    settings: &IntegratorSettings,
    scale: f64,
) -> Result<EvolutionResult, EvolveError> {
    let frame = settings.frame;
    let mut ws = Workspace::new(system.dimension(), system.keys.len());
    let full_dim = system.basis().dimension();
    let mut psi = initial.to_vec();
    let start_norm = norm(&psi);
    let mut records = Vec::with_capacity(samples.len());
    let mut next = 0;
    let mut offset = 0.0;
    let mut min_step = f64::INFINITY;

    while next < samples.len() && samples[next] <= 0.0 {
        records.push(observables.record(&lift(psi.clone(), embed, full_dim)));
        next += 1;
    }
    for (idx, seg) in segments.iter().enumerate() {
        let h = system.base_step(&seg.profile, settings) * scale;
        if !(h > seg.duration * 1e-13) {
            return Err(EvolveError::StepUnderflow { step: h, halvings: 0 });
        }
        min_step = min_step.min(h);
        let last = idx + 1 == segments.len();
        let end = offset + seg.duration;
        let mut local = 0.0;
        while next < samples.len() && (samples[next] <= end || last) {
            let target = (samples[next] - offset).min(seg.duration);
            advance(system, &seg.profile, frame, &mut psi, local, target, h, &mut ws);
            local = target;
            let drift = (norm(&psi) - start_norm).abs();
            if drift > settings.drift_tol {
                return Err(EvolveError::NormDrift { drift, tolerance: settings.drift_tol });
            }
            let lab = system.to_lab(&seg.profile, frame, local, &psi);
            records.push(observables.record(&lift(lab, embed, full_dim)));
            next += 1;
        }
        advance(system, &seg.profile, frame, &mut psi, local, seg.duration, h, &mut ws);
        let drift = (norm(&psi) - start_norm).abs();
        if drift > settings.drift_tol {
            return Err(EvolveError::NormDrift { drift, tolerance: settings.drift_tol });
        }
        psi = system.to_lab(&seg.profile, frame, seg.duration, &psi);
        offset = end;
    }
    Ok(EvolutionResult {
        times: samples.to_vec(),
        names: observables.names(),
        records,
        final_state: StateVector::from_raw(lift(psi, embed, full_dim), system.basis().clone()),
        step: min_step,
    })
}
