//! Search for drive profiles that close prescribed tunneling channels.
//!
//! A channel is a Bessel factor `𝒥(F_N, …, F_2, m·V_1)` labelled by its
//! multiplier `m`. The leakage cost of a profile is `g = Σ_closed |𝒥|`. Descent
//! runs on the smooth surrogate `Σ_closed 𝒥²`, since `|·|` has a kink exactly
//! at the roots being sought.

pub mod cg;
mod tables;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cg::{CgOutcome, CgSettings, StopReason};
pub use tables::{verify_table, PublishedRow, RowVerification, TableId, TableReport};

use crate::bessel::{self, BesselError, HarmonicPhase};
use crate::par;

pub const DEFAULT_FLOOR: f64 = 0.02;
pub const DEFAULT_BOX: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("invalid channel spec: {0}")]
    InvalidSpec(String),
    #[error("expected {expected} parameters, got {got}")]
    ParamLength { expected: usize, got: usize },
    #[error("unknown preset {0:?} (expected cnot, qutrit-cnot, toffoli-N or qutrit-ctrl-N)")]
    UnknownPreset(String),
    #[error("invalid multistart settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    Bessel(#[from] BesselError),
}

/// A channel that must stay open, optionally with a required sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenChannel {
    pub multiplier: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<f64>,
}

impl OpenChannel {
    pub fn new(multiplier: f64) -> Self {
        Self { multiplier, sign: None }
    }

    pub fn with_sign(multiplier: f64, sign: f64) -> Self {
        Self { multiplier, sign: Some(sign.signum()) }
    }

    fn accepts(&self, value: f64, floor: f64) -> bool {
        value.abs() >= floor && self.sign.is_none_or(|s| value * s > 0.0)
    }
}

/// Channels to close and channels to keep open, over tilt harmonics
/// `max_harmonic … 2` plus the interaction slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub max_harmonic: u32,
    pub closed: Vec<f64>,
    #[serde(default)]
    pub open: Vec<OpenChannel>,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

impl ChannelSpec {
    pub fn new(max_harmonic: u32, closed: Vec<f64>, open: Vec<OpenChannel>, floor: f64) -> Result<Self, OptimizeError> {
        let spec = Self { max_harmonic, closed, open, floor };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |m: &str| Err(OptimizeError::InvalidSpec(m.into()));
        if self.max_harmonic == 1 || self.max_harmonic > 64 {
            return bad("max_harmonic must be 0 (no tilt) or in 2..=64");
        }
        if self.closed.iter().chain(self.open.iter().map(|o| &o.multiplier)).any(|m| !m.is_finite()) {
            return bad("multipliers must be finite");
        }
        if self.open.iter().any(|o| self.closed.contains(&o.multiplier)) {
            return bad("a channel cannot be both closed and open");
        }
        if !(self.floor.is_finite() && self.floor >= 0.0) {
            return bad("floor must be non-negative");
        }
        Ok(())
    }

    /// Parameter vector length `(F_N, …, F_2, V_1)`.
    pub fn num_params(&self) -> usize {
        if self.max_harmonic == 0 {
            1
        } else {
            self.max_harmonic as usize
        }
    }

    /// CNOT on two qubits: close `+V_1`, keep `−V_1`, harmonics 3 and 2.
    pub fn cnot() -> Self {
        Self { max_harmonic: 3, closed: vec![1.0], open: vec![OpenChannel::new(-1.0)], floor: DEFAULT_FLOOR }
    }

    /// `(N+1)`-qubit Toffoli with `N = n_total − 1` controls: close
    /// `(2n − N)V_1` for `n = 1…N`, keep `−N·V_1`; harmonics `N … 2`.
    pub fn toffoli(n_total: usize) -> Result<Self, OptimizeError> {
        if n_total < 3 {
            return Err(OptimizeError::InvalidSpec("Toffoli needs at least 3 qubits".into()));
        }
        let n = n_total - 1;
        let closed = (1..=n).map(|k| (2 * k) as f64 - n as f64).collect();
        Self::new(n as u32, closed, vec![OpenChannel::new(-(n as f64))], DEFAULT_FLOOR)
    }

    /// Two qutrits, target flips only for control `|2⟩`.
    pub fn qutrit_cnot() -> Self {
        Self {
            max_harmonic: 4,
            closed: vec![1.5, -0.5, 2.5, 0.5],
            open: vec![OpenChannel::new(-2.5), OpenChannel::new(-1.5)],
            floor: DEFAULT_FLOOR,
        }
    }

    /// Qutrit target with `n` control qubits: close `((2n+3)/2 − k)V_1` for
    /// `k = 1…2n`, keep `(½ − n)V_1` and `(−½ − n)V_1`; harmonics `2n … 2`.
    pub fn qutrit_controlled(n: usize) -> Result<Self, OptimizeError> {
        if n == 0 {
            return Err(OptimizeError::InvalidSpec("need at least one control qubit".into()));
        }
        let top = (2 * n + 3) as f64 / 2.0;
        let closed = (1..=2 * n).map(|k| top - k as f64).collect();
        let nf = n as f64;
        let open = vec![OpenChannel::new(0.5 - nf), OpenChannel::new(-0.5 - nf)];
        Self::new(2 * n as u32, closed, open, DEFAULT_FLOOR)
    }

    /// `cnot`, `qutrit-cnot`, `toffoli-N`, `qutrit-ctrl-N`.
    pub fn preset(name: &str) -> Result<Self, OptimizeError> {
        let unknown = || OptimizeError::UnknownPreset(name.to_string());
        match name {
            "cnot" => Ok(Self::cnot()),
            "qutrit-cnot" => Ok(Self::qutrit_cnot()),
            _ => {
                let (family, size) = name.rsplit_once('-').ok_or_else(unknown)?;
                let size: usize = size.parse().map_err(|_| unknown())?;
                match family {
                    "toffoli" => Self::toffoli(size),
                    "qutrit-ctrl" => Self::qutrit_controlled(size),
                    _ => Err(unknown()),
                }
            }
        }
    }

    fn phase(&self, params: &[f64], multiplier: f64) -> Result<HarmonicPhase, BesselError> {
        let (v1, tilt) = params.split_last().expect("length checked");
        let mut canonical = tilt.to_vec();
        canonical.push(multiplier * v1);
        HarmonicPhase::from_canonical(&canonical)
    }

    fn check_len(&self, params: &[f64]) -> Result<(), OptimizeError> {
        if params.len() != self.num_params() {
            return Err(OptimizeError::ParamLength { expected: self.num_params(), got: params.len() });
        }
        Ok(())
    }

    /// `𝒥(…, m·V_1)` for every closed channel.
    pub fn closed_values(&self, params: &[f64]) -> Result<Vec<f64>, OptimizeError> {
        self.check_len(params)?;
        self.closed.iter().map(|&m| Ok(bessel::eval_bessel(&self.phase(params, m)?)?)).collect()
    }

    /// `𝒥(…, m·V_1)` for every open channel.
    pub fn open_values(&self, params: &[f64]) -> Result<Vec<f64>, OptimizeError> {
        self.check_len(params)?;
        self.open.iter().map(|o| Ok(bessel::eval_bessel(&self.phase(params, o.multiplier)?)?)).collect()
    }

    /// Whether every open channel clears the floor with its required sign.
    pub fn open_ok(&self, params: &[f64]) -> Result<bool, OptimizeError> {
        let values = self.open_values(params)?;
        Ok(self.open.iter().zip(values).all(|(o, v)| o.accepts(v, self.floor)))
    }

    /// Values and parameter gradients of the closed channels.
    fn closed_with_gradients(&self, params: &[f64]) -> Result<Vec<(f64, Vec<f64>)>, OptimizeError> {
        self.check_len(params)?;
        self.closed
            .iter()
            .map(|&m| {
                let (v, mut g) = bessel::eval_with_gradient(&self.phase(params, m)?)?;
                *g.last_mut().expect("fundamental slot") *= m;
                Ok((v, g))
            })
            .collect()
    }
}

/// `g` and `∂g/∂params`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostValue {
    pub g: f64,
    pub gradient: Vec<f64>,
}

/// `g = Σ_closed |𝒥(…, m·V_1)|` with its gradient (one-sided at exact roots).
pub fn cost(spec: &ChannelSpec, params: &[f64]) -> Result<CostValue, OptimizeError> {
    let mut gradient = vec![0.0; params.len()];
    let mut g = 0.0;
    for (v, grad) in spec.closed_with_gradients(params)? {
        g += v.abs();
        for (acc, d) in gradient.iter_mut().zip(grad) {
            *acc += v.signum() * d;
        }
    }
    Ok(CostValue { g, gradient })
}

/// `Σ_closed 𝒥²` with its gradient.
pub fn surrogate(spec: &ChannelSpec, params: &[f64]) -> Result<(f64, Vec<f64>), OptimizeError> {
    let mut gradient = vec![0.0; params.len()];
    let mut s = 0.0;
    for (v, grad) in spec.closed_with_gradients(params)? {
        s += v * v;
        for (acc, d) in gradient.iter_mut().zip(grad) {
            *acc += 2.0 * v * d;
        }
    }
    Ok((s, gradient))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultistartSettings {
    /// Random starts drawn in addition to `explicit_starts`.
    pub starts: usize,
    pub seed: u64,
    /// Random starts are uniform in `[−box_half_width, box_half_width]`.
    pub box_half_width: f64,
    /// `(index, value)` pairs held fixed during the search.
    pub fixed: Vec<(usize, f64)>,
    pub explicit_starts: Vec<Vec<f64>>,
    pub cg: CgSettings,
}

impl Default for MultistartSettings {
    fn default() -> Self {
        Self { starts: 100, seed: 0, box_half_width: DEFAULT_BOX, fixed: vec![], explicit_starts: vec![], cg: CgSettings::default() }
    }
}

/// Channel value at the reported optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelValue {
    pub multiplier: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationReport {
    pub params: Vec<f64>,
    pub g: f64,
    pub closed: Vec<ChannelValue>,
    pub open: Vec<ChannelValue>,
    pub floor: f64,
    pub starts_attempted: usize,
    pub starts_accepted: usize,
    pub best_start: usize,
    pub iterations: usize,
    pub seed: u64,
    /// False when no start met the open-channel requirements; `params` is then
    /// the lowest-cost start regardless.
    pub success: bool,
}

struct StartResult {
    x: Vec<f64>,
    g: f64,
    iterations: usize,
    accepted: bool,
}

fn embed(free: &[usize], fixed: &[(usize, f64)], n: usize, y: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for &(i, v) in fixed {
        x[i] = v;
    }
    for (&i, &v) in free.iter().zip(y) {
        x[i] = v;
    }
    x
}

/// Runs CG on the surrogate over the free parameters from `x0`. `guard` sees
/// full parameter vectors.
pub fn polish<G>(
    spec: &ChannelSpec,
    x0: &[f64],
    fixed: &[(usize, f64)],
    settings: &CgSettings,
    mut guard: G,
) -> Result<CgOutcome, OptimizeError>
where
    G: FnMut(&[f64]) -> bool,
{
    spec.check_len(x0)?;
    let n = x0.len();
    if fixed.iter().any(|&(i, _)| i >= n) {
        return Err(OptimizeError::InvalidSettings("fixed index out of range".into()));
    }
    let free: Vec<usize> = (0..n).filter(|i| !fixed.iter().any(|f| f.0 == *i)).collect();
    let y0: Vec<f64> = free.iter().map(|&i| x0[i]).collect();
    let objective = |y: &[f64]| {
        let (s, g) = surrogate(spec, &embed(&free, fixed, n, y))?;
        Ok::<_, OptimizeError>((s, free.iter().map(|&i| g[i]).collect()))
    };
    let mut out = cg::minimize(objective, &y0, settings, |y| guard(&embed(&free, fixed, n, y)))?;
    out.x = embed(&free, fixed, n, &out.x);
    Ok(out)
}

/// Start points: explicit ones first, then seeded uniform draws.
pub fn start_points(spec: &ChannelSpec, settings: &MultistartSettings) -> Result<Vec<Vec<f64>>, OptimizeError> {
    let n = spec.num_params();
    if settings.explicit_starts.iter().any(|s| s.len() != n) {
        return Err(OptimizeError::ParamLength { expected: n, got: settings.explicit_starts.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0) });
    }
    if !(settings.box_half_width.is_finite() && settings.box_half_width > 0.0) {
        return Err(OptimizeError::InvalidSettings("box half width must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let w = settings.box_half_width;
    let mut points: Vec<Vec<f64>> = settings.explicit_starts.clone();
    for _ in 0..settings.starts {
        points.push((0..n).map(|_| rng.random_range(-w..=w)).collect());
    }
    for p in &mut points {
        for &(i, v) in &settings.fixed {
            if i < n {
                p[i] = v;
            }
        }
    }
    if points.is_empty() {
        return Err(OptimizeError::InvalidSettings("no starts".into()));
    }
    Ok(points)
}

/// Multistart CG. Starts run in parallel; the winner is the accepted start
/// with the lowest `g`, ties going to the earlier start.
pub fn optimize_profile(spec: &ChannelSpec, settings: &MultistartSettings) -> Result<OptimizationReport, OptimizeError> {
    spec.validate()?;
    let points = start_points(spec, settings)?;
    let results: Vec<Option<StartResult>> = par::map(&points, |_, x0| {
        // a start that cannot be evaluated (e.g. quadrature cap) is skipped
        let out = polish(spec, x0, &settings.fixed, &settings.cg, |_| true).ok()?;
        let g = cost(spec, &out.x).ok()?.g;
        let accepted = spec.open_ok(&out.x).ok()?;
        Some(StartResult { x: out.x, g, iterations: out.iterations, accepted })
    });
    let rank = |accepted_only: bool| {
        results
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|r| (i, r)))
            .filter(|(_, r)| r.accepted || !accepted_only)
            .min_by(|a, b| a.1.g.total_cmp(&b.1.g).then(a.0.cmp(&b.0)))
    };
    let accepted = results.iter().flatten().filter(|r| r.accepted).count();
    let (best_start, best, success) = match rank(true) {
        Some((i, r)) => (i, r, true),
        None => {
            let (i, r) = rank(false).ok_or_else(|| OptimizeError::InvalidSettings("every start failed to evaluate".into()))?;
            (i, r, false)
        }
    };
    let closed = spec.closed.iter().zip(spec.closed_values(&best.x)?).map(|(&multiplier, value)| ChannelValue { multiplier, value }).collect();
    let open = spec.open.iter().zip(spec.open_values(&best.x)?).map(|(o, value)| ChannelValue { multiplier: o.multiplier, value }).collect();
    Ok(OptimizationReport {
        params: best.x.clone(),
        g: best.g,
        closed,
        open,
        floor: spec.floor,
        starts_attempted: points.len(),
        starts_accepted: accepted,
        best_start,
        iterations: best.iterations,
        seed: settings.seed,
        success,
    })
}
