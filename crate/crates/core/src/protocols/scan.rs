use serde::Serialize;

use super::{check_omega, default_toffoli_profile, profile, ProtocolError};
use crate::evolve::{deviation_trace, DeviationTrace, IntegratorSettings, StateVector};
use crate::lattice::{BasisTag, BlockLattice};
use crate::par;

/// `n` points from `lo` to `hi`, evenly spaced in `log ω`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, ProtocolError> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) || n < 2 {
        return Err(ProtocolError::Validation(format!("bad geometric grid [{lo}, {hi}] with {n} points")));
    }
    let ratio = (hi / lo).ln();
    Ok((0..n).map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Squared correlation coefficient; 1 when the data have no spread.
    pub r2: f64,
}

/// Least squares of `log₁₀ y` against `log₁₀ x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LogLogFit, ProtocolError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(ProtocolError::Validation("fit needs two or more paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(ProtocolError::Validation("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(ProtocolError::Validation("fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LogLogFit { slope, intercept: my - slope * mx, r2 })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub omega: f64,
    pub deviation: f64,
    #[serde(skip)]
    pub trace: DeviationTrace,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub n_total: usize,
    pub profile: Vec<f64>,
    pub t_max: f64,
    pub basis: BasisTag,
    pub points: Vec<ScanPoint>,
    pub fit: LogLogFit,
    pub integrator: IntegratorSettings,
}

impl ScanReport {
    pub fn omegas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.omega).collect()
    }

    pub fn deviations(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.deviation).collect()
    }
}

/// Deviation `D(ω)` of the target magnetization of an `n_total`-qubit
/// Toffoli drive from `|↑…↑⟩`, one job per ω, with the log-log fit.
pub fn run_error_scan(
    n_total: usize,
    omegas: &[f64],
    t_max: f64,
    amplitudes: Option<Vec<f64>>,
    settings: &IntegratorSettings,
) -> Result<ScanReport, ProtocolError> {
    if omegas.len() < 2 {
        return Err(ProtocolError::Validation("scan needs at least two frequencies".into()));
    }
    for &w in omegas {
        check_omega(w)?;
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(ProtocolError::Validation(format!("t_max must be positive, got {t_max}")));
    }
    let amplitudes = match amplitudes {
        Some(a) => a,
        None => default_toffoli_profile(n_total)?,
    };
    let lattice = BlockLattice::controlled_qubits(n_total, 1.0)?;
    let initial = StateVector::basis_state(lattice.basis_tag(), 0)?;
    let traces = par::try_map(omegas, |_, &w| {
        let drive = profile(w, &amplitudes)?;
        Ok::<_, ProtocolError>(deviation_trace(&lattice, &drive, &initial, t_max, 1, settings)?)
    })?;
    let points: Vec<ScanPoint> = omegas
        .iter()
        .zip(traces)
        .map(|(&omega, trace)| ScanPoint { omega, deviation: trace.deviation, trace })
        .collect();
    let d: Vec<f64> = points.iter().map(|p| p.deviation).collect();
    let fit = fit_loglog(omegas, &d)?;
    Ok(ScanReport { n_total, profile: amplitudes, t_max, basis: lattice.basis_tag(), points, fit, integrator: *settings })
}
