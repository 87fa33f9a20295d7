use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{check_initial, check_times, EvolutionResult, EvolveError, Observables, StateVector};
use crate::hamiltonian::{hermiticity_deviation, HermitianOperator, HERMITICITY_TOL};
use crate::lattice::BasisTag;

/// `exp(−iHt)` through the eigendecomposition of a static Hermitian `H`.
#[derive(Debug, Clone)]
pub struct EffectivePropagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
    basis: BasisTag,
}

impl EffectivePropagator {
    pub fn new(h: &HermitianOperator) -> Result<Self, EvolveError> {
        let m = h.matrix();
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if hermiticity_deviation(m) > HERMITICITY_TOL * scale {
            return Err(EvolveError::Eigen("matrix is not Hermitian".into()));
        }
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
            .ok_or_else(|| EvolveError::Eigen("eigensolver did not converge".into()))?;
        Ok(Self { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors, basis: h.basis().clone() })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    fn phases(&self, t: f64) -> DVector<Complex64> {
        self.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t))
    }

    /// `exp(−iHt) ψ`.
    pub fn apply(&self, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let coeffs = self.eigenvectors.ad_mul(psi).component_mul(&self.phases(t));
        &self.eigenvectors * coeffs
    }

    /// The full matrix `exp(−iHt)`.
    pub fn unitary(&self, t: f64) -> DMatrix<Complex64> {
        let phases = self.phases(t);
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// Exact static evolution; `sample_times` as for the Floquet integrator.
pub fn evolve_effective(
    h: &HermitianOperator,
    initial: &StateVector,
    t_final: f64,
    sample_times: &[f64],
    observables: &Observables,
) -> Result<EvolutionResult, EvolveError> {
    let prop = EffectivePropagator::new(h)?;
    evolve_with(&prop, initial, t_final, sample_times, observables)
}

pub(crate) fn evolve_with(
    prop: &EffectivePropagator,
    initial: &StateVector,
    t_final: f64,
    sample_times: &[f64],
    observables: &Observables,
) -> Result<EvolutionResult, EvolveError> {
    check_times(t_final, sample_times)?;
    check_initial(initial, &prop.basis)?;
    observables.check(initial.dimension())?;
    let samples: Vec<f64> = if sample_times.is_empty() { vec![t_final] } else { sample_times.to_vec() };
    let coeffs = prop.eigenvectors.ad_mul(initial.amplitudes());
    let at = |t: f64| &prop.eigenvectors * coeffs.component_mul(&prop.phases(t));
    let records = samples.iter().map(|&t| observables.record(&at(t))).collect();
    Ok(EvolutionResult {
        times: samples,
        names: observables.names(),
        records,
        final_state: StateVector::from_raw(at(t_final), prop.basis.clone()),
        step: 0.0,
    })
}

/// Piecewise-static evolution: each `(H, duration)` stage in turn.
pub fn evolve_effective_schedule(
    stages: &[(HermitianOperator, f64)],
    initial: &StateVector,
    sample_times: &[f64],
    observables: &Observables,
) -> Result<EvolutionResult, EvolveError> {
    if stages.is_empty() {
        return Err(EvolveError::InvalidTime("empty schedule".into()));
    }
    if stages.iter().any(|(_, d)| !(d.is_finite() && *d > 0.0)) {
        return Err(EvolveError::InvalidTime("stage durations must be positive".into()));
    }
    let total: f64 = stages.iter().map(|(_, d)| d).sum();
    check_times(total, sample_times)?;
    let samples: Vec<f64> = if sample_times.is_empty() { vec![total] } else { sample_times.to_vec() };
    let props = stages
        .iter()
        .map(|(h, _)| EffectivePropagator::new(h))
        .collect::<Result<Vec<_>, _>>()?;
    for p in &props {
        check_initial(initial, &p.basis)?;
    }
    observables.check(initial.dimension())?;
    let mut psi = initial.amplitudes().clone();
    let mut records = Vec::with_capacity(samples.len());
    let mut next = 0;
    let mut offset = 0.0;
    for (idx, (prop, (_, duration))) in props.iter().zip(stages).enumerate() {
        let last = idx + 1 == stages.len();
        let end = offset + duration;
        while next < samples.len() && (samples[next] <= end || last) {
            let local = (samples[next] - offset).clamp(0.0, *duration);
            records.push(observables.record(&prop.apply(&psi, local)));
            next += 1;
        }
        psi = prop.apply(&psi, *duration);
        offset = end;
    }
    Ok(EvolutionResult {
        times: samples,
        names: observables.names(),
        records,
        final_state: StateVector::from_raw(psi, initial.basis().clone()),
        step: 0.0,
    })
}
