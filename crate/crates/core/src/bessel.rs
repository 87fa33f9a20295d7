//! Zeroth-order multi-frequency generalized Bessel functions.
//!
//! For a phase `Φ(τ) = Σ_j F_j sin(jτ) + z sin(τ)` the generalized Bessel
//! function is the period average
//!
//! ```text
//! 𝒥(F_N, …, F_2, z) = (1/2π) ∫_0^{2π} exp(iΦ(τ)) dτ
//! ```
//!
//! which is real because `Φ(2π − τ) = −Φ(τ)`. The integral is evaluated in the
//! dimensionless variable `τ = ωt`, so nothing here depends on the drive
//! frequency.
//!
//! Quadrature is the uniform trapezoid rule, which converges geometrically for
//! smooth periodic integrands. Node counts start at [`MIN_NODES`] and double
//! until successive results agree to [`REFINE_TOL`]; hitting [`MAX_NODES`]
//! first is an error, never a silently degraded value. Amplitudes of order 50
//! and beyond make the integrand strongly oscillatory and push the node count
//! up accordingly.
//!
//! Every API orders amplitudes canonically: descending harmonic index, with the
//! fundamental slot `z` last, i.e. `(F_N, …, F_3, F_2, z)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;

pub const MIN_NODES: usize = 256;
pub const MAX_NODES: usize = 1 << 16;
/// Successive-refinement tolerance on value and gradient.
pub const REFINE_TOL: f64 = 1e-12;
/// Largest tolerated imaginary residue of the period average.
pub const REALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BesselError {
    #[error("harmonic index {0} is not allowed on the tilt (must be >= 2)")]
    InvalidHarmonic(u32),
    #[error("harmonic index {0} given more than once")]
    DuplicateHarmonic(u32),
    #[error("amplitude for harmonic {harmonic} is not finite")]
    NonFinite { harmonic: u32 },
    #[error("quadrature did not reach accuracy: residue {residue:.3e} at {nodes} nodes")]
    Accuracy { residue: f64, nodes: usize },
    #[error("element {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<BesselError>,
    },
}

/// Amplitudes of the periodic phase entering a generalized Bessel function.
///
/// Tilt harmonics live at integer indices `j >= 2`; the fundamental slot (the
/// `V_1`-weighted argument) sits at harmonic 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPhase {
    tilt: BTreeMap<u32, f64>,
    fundamental: f64,
}

impl HarmonicPhase {
    pub fn new<I>(tilt: I, fundamental: f64) -> Result<Self, BesselError>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut map = BTreeMap::new();
        for (j, f) in tilt {
            if j < 2 {
                return Err(BesselError::InvalidHarmonic(j));
            }
            if !f.is_finite() {
                return Err(BesselError::NonFinite { harmonic: j });
            }
            if map.insert(j, f).is_some() {
                return Err(BesselError::DuplicateHarmonic(j));
            }
        }
        if !fundamental.is_finite() {
            return Err(BesselError::NonFinite { harmonic: 1 });
        }
        Ok(Self { tilt: map, fundamental })
    }

    /// Ordinary Bessel `J_0(z)` phase: no tilt harmonics.
    pub fn fundamental_only(z: f64) -> Self {
        Self { tilt: BTreeMap::new(), fundamental: z }
    }

    pub fn zero() -> Self {
        Self::fundamental_only(0.0)
    }

    /// Build from canonical amplitudes `(F_N, …, F_2, z)`: the first entry
    /// sits at harmonic `len`, the last is the fundamental.
    pub fn from_canonical(amplitudes: &[f64]) -> Result<Self, BesselError> {
        let (z, tilt) = match amplitudes.split_last() {
            Some((z, tilt)) => (*z, tilt),
            None => return Ok(Self::zero()),
        };
        let top = amplitudes.len() as u32;
        Self::new(tilt.iter().enumerate().map(|(i, &f)| (top - i as u32, f)), z)
    }

    pub fn tilt(&self) -> &BTreeMap<u32, f64> {
        &self.tilt
    }

    pub fn fundamental(&self) -> f64 {
        self.fundamental
    }

    pub fn with_fundamental(&self, z: f64) -> Self {
        Self { tilt: self.tilt.clone(), fundamental: z }
    }

    /// Harmonic indices in canonical order (descending, fundamental `1` last).
    pub fn harmonics(&self) -> Vec<u32> {
        self.tilt.keys().rev().copied().chain(std::iter::once(1)).collect()
    }

    /// Amplitudes in canonical order `(F_N, …, F_2, z)`.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.tilt.values().rev().copied().chain(std::iter::once(self.fundamental)).collect()
    }

    /// Every amplitude negated; leaves the (real) Bessel value unchanged.
    pub fn negated(&self) -> Self {
        Self {
            tilt: self.tilt.iter().map(|(&j, &f)| (j, -f)).collect(),
            fundamental: -self.fundamental,
        }
    }

    /// `Φ(τ)`.
    pub fn phase_at(&self, tau: f64) -> f64 {
        self.tilt.iter().map(|(&j, &f)| f * (j as f64 * tau).sin()).sum::<f64>()
            + self.fundamental * tau.sin()
    }

    fn terms(&self) -> Vec<(u64, f64)> {
        self.harmonics()
            .into_iter()
            .zip(self.amplitudes())
            .filter(|&(_, f)| f != 0.0)
            .map(|(j, f)| (j as u64, f))
            .collect()
    }
}

/// `sin(2πk/MAX_NODES)`, built from the first quadrant so that the table is
/// exactly odd about `k = MAX_NODES/2`.
fn sine_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = MAX_NODES;
        let quarter = n / 4;
        let mut s = vec![0.0; n];
        for k in 0..=quarter {
            s[k] = (2.0 * PI * k as f64 / n as f64).sin();
        }
        s[quarter] = 1.0;
        for k in 0..quarter {
            s[n / 2 - k] = s[k];
        }
        for k in 1..n / 2 {
            s[n - k] = -s[k];
        }
        s
    })
}

struct Sums {
    re: f64,
    im: f64,
    grad: Vec<f64>,
}

/// Sum `exp(iΦ)` over nodes `k = first, first+step, …` of an `n`-node grid.
fn accumulate(terms: &[(u64, f64)], n: usize, first: usize, step: usize) -> Sums {
    let table = sine_table();
    let mask = (MAX_NODES - 1) as u64;
    let stride = (MAX_NODES / n) as u64;
    let mut sums = Sums { re: 0.0, im: 0.0, grad: Vec::new() };
    let mut k = first;
    while k < n {
        let base = k as u64 * stride;
        let mut phi = 0.0;
        for &(j, f) in terms {
            phi += f * table[((j * base) & mask) as usize];
        }
        let (s, c) = phi.sin_cos();
        sums.re += c;
        sums.im += s;
        k += step;
    }
    sums
}

/// Gradient sums need every canonical slot, including zero amplitudes.
fn accumulate_grad(terms: &[(u64, f64)], harmonics: &[u64], n: usize, first: usize, step: usize) -> Sums {
    let table = sine_table();
    let mask = (MAX_NODES - 1) as u64;
    let stride = (MAX_NODES / n) as u64;
    let mut sums = Sums { re: 0.0, im: 0.0, grad: vec![0.0; harmonics.len()] };
    let mut k = first;
    while k < n {
        let base = k as u64 * stride;
        let mut phi = 0.0;
        for &(j, f) in terms {
            phi += f * table[((j * base) & mask) as usize];
        }
        let (s, c) = phi.sin_cos();
        sums.re += c;
        sums.im += s;
        for (g, &j) in sums.grad.iter_mut().zip(harmonics) {
            *g -= table[((j * base) & mask) as usize] * s;
        }
        k += step;
    }
    sums
}

/// Converged period average and (optionally) gradient.
struct Quadrature {
    value: f64,
    imag: f64,
    grad: Vec<f64>,
}

fn integrate(phase: &HarmonicPhase, with_grad: bool) -> Result<Quadrature, BesselError> {
    let terms = phase.terms();
    let harmonics: Vec<u64> = phase.harmonics().into_iter().map(u64::from).collect();
    let run = |n: usize, first: usize, step: usize| {
        if with_grad {
            accumulate_grad(&terms, &harmonics, n, first, step)
        } else {
            accumulate(&terms, n, first, step)
        }
    };

    let mut n = MIN_NODES;
    let mut total = run(n, 0, 1);
    let mut prev_value = total.re / n as f64;
    let mut prev_grad: Vec<f64> = total.grad.iter().map(|g| g / n as f64).collect();
    loop {
        let fine = 2 * n;
        let mid = run(fine, 1, 2);
        total.re += mid.re;
        total.im += mid.im;
        for (g, m) in total.grad.iter_mut().zip(&mid.grad) {
            *g += m;
        }
        n = fine;
        let value = total.re / n as f64;
        let grad: Vec<f64> = total.grad.iter().map(|g| g / n as f64).collect();
        let residue = grad
            .iter()
            .zip(&prev_grad)
            .map(|(a, b)| (a - b).abs())
            .fold((value - prev_value).abs(), f64::max);
        if residue < REFINE_TOL {
            let imag = total.im / n as f64;
            if imag.abs() >= REALITY_TOL {
                return Err(BesselError::Accuracy { residue: imag.abs(), nodes: n });
            }
            return Ok(Quadrature { value, imag, grad });
        }
        if n >= MAX_NODES {
            return Err(BesselError::Accuracy { residue, nodes: n });
        }
        prev_value = value;
        prev_grad = grad;
    }
}

/// `𝒥(F_N, …, F_2, z)`.
pub fn eval_bessel(phase: &HarmonicPhase) -> Result<f64, BesselError> {
    integrate(phase, false).map(|q| q.value)
}

/// Value together with the imaginary residue of the raw average.
pub fn eval_bessel_complex(phase: &HarmonicPhase) -> Result<(f64, f64), BesselError> {
    integrate(phase, false).map(|q| (q.value, q.imag))
}

/// `∂𝒥/∂F_j = −(1/2π) ∫ sin(jτ) sin Φ(τ) dτ` for every slot, in canonical order.
pub fn eval_gradient(phase: &HarmonicPhase) -> Result<Vec<f64>, BesselError> {
    integrate(phase, true).map(|q| q.grad)
}

/// Value and gradient from a single quadrature pass.
pub fn eval_with_gradient(phase: &HarmonicPhase) -> Result<(f64, Vec<f64>), BesselError> {
    integrate(phase, true).map(|q| (q.value, q.grad))
}

/// Element-wise [`eval_bessel`]; parallel under the `parallel` feature.
pub fn eval_batch(phases: &[HarmonicPhase]) -> Result<Vec<f64>, BesselError> {
    par::try_map(phases, |index, p| {
        eval_bessel(p).map_err(|e| BesselError::AtIndex { index, source: Box::new(e) })
    })
}

/// Sequential [`eval_batch`].
pub fn eval_batch_seq(phases: &[HarmonicPhase]) -> Result<Vec<f64>, BesselError> {
    par::map_seq(phases, |index, p| {
        eval_bessel(p).map_err(|e| BesselError::AtIndex { index, source: Box::new(e) })
    })
    .into_iter()
    .collect()
}
