use kinetic_core::bessel::{eval_batch, eval_batch_seq, eval_bessel, eval_bessel_complex, eval_gradient, HarmonicPhase};
use kinetic_core::evolve::{
    evolve_effective, evolve_floquet, EffectivePropagator, Frame, IntegratorSettings, Observables, StateVector,
};
use kinetic_core::hamiltonian::{
    build_bare, build_effective_boson, build_effective_spin, build_lab_generator, build_rotating, hops, DriveProfile,
};
use kinetic_core::lattice::{imbalance, BlockLattice};
use kinetic_core::optimize::{cost, optimize_profile, ChannelSpec, MultistartSettings};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use std::collections::HashSet;
use std::f64::consts::PI;

fn amplitudes(max_len: usize, w: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-w..w, 1..=max_len)
}

/// Independent trapezoid average of `cos Φ` on `n` nodes.
fn direct(a: &[f64], n: usize) -> f64 {
    let top = a.len();
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            let phi: f64 = a.iter().enumerate().map(|(i, f)| f * (((top - i) as f64) * t).sin()).sum();
            phi.cos()
        })
        .sum::<f64>()
        / n as f64
}

fn phase(a: &[f64]) -> HarmonicPhase {
    HarmonicPhase::from_canonical(a).unwrap()
}

fn lattice_strategy() -> impl Strategy<Value = BlockLattice> {
    (prop::collection::vec(1u32..=2, 1..=3), prop::collection::vec(0.2f64..1.5, 3)).prop_map(|(occ, rates)| {
        let n = occ.len();
        BlockLattice::new(occ, rates[..n].to_vec()).unwrap()
    })
}

fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bessel_real_bounded_and_sign_symmetric(a in amplitudes(5, 12.0)) {
        let (v, imag) = eval_bessel_complex(&phase(&a)).unwrap();
        prop_assert!(imag.abs() < 1e-10);
        prop_assert!(v.abs() <= 1.0 + 1e-12);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        prop_assert!((eval_bessel(&phase(&neg)).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn bessel_shift_by_half_period_flips_odd_harmonics(a in amplitudes(5, 10.0)) {
        // τ → τ + π sends sin(jτ) to (−1)^j sin(jτ)
        let top = a.len();
        let flipped: Vec<f64> = a.iter().enumerate().map(|(i, &f)| if (top - i) % 2 == 1 { -f } else { f }).collect();
        let v = eval_bessel(&phase(&a)).unwrap();
        prop_assert!((eval_bessel(&phase(&flipped)).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn bessel_agrees_with_doubled_independent_quadrature(a in amplitudes(4, 12.0)) {
        let v = eval_bessel(&phase(&a)).unwrap();
        prop_assert!((v - direct(&a, 1 << 13)).abs() < 1e-10);
        prop_assert!((direct(&a, 1 << 13) - direct(&a, 1 << 14)).abs() < 1e-10);
    }

    #[test]
    fn bessel_gradient_matches_central_differences(a in amplitudes(4, 12.0)) {
        let g = eval_gradient(&phase(&a)).unwrap();
        let h = 1e-5;
        for i in 0..a.len() {
            let mut up = a.clone();
            up[i] += h;
            let mut dn = a.clone();
            dn[i] -= h;
            let fd = (eval_bessel(&phase(&up)).unwrap() - eval_bessel(&phase(&dn)).unwrap()) / (2.0 * h);
            prop_assert!((g[i] - fd).abs() < 1e-6, "slot {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn batch_equals_sequential(rows in prop::collection::vec(amplitudes(3, 8.0), 1..12)) {
        let phases: Vec<HarmonicPhase> = rows.iter().map(|a| phase(a)).collect();
        prop_assert_eq!(eval_batch(&phases).unwrap(), eval_batch_seq(&phases).unwrap());
    }

    #[test]
    fn basis_enumeration_is_a_bijection(lattice in lattice_strategy()) {
        let basis = lattice.enumerate_basis();
        let expected: usize = lattice.occupancy().iter().map(|&n| n as usize + 1).product();
        prop_assert_eq!(basis.len(), expected);
        prop_assert_eq!(lattice.dimension(), expected);
        let distinct: HashSet<Vec<u32>> = basis.iter().map(|s| s.occupations.clone()).collect();
        prop_assert_eq!(distinct.len(), expected);
        let mut logical = HashSet::new();
        for (i, s) in basis.iter().enumerate() {
            prop_assert_eq!(lattice.index_of(s).unwrap(), i);
            let l = lattice.to_logical(s).unwrap();
            prop_assert_eq!(&lattice.from_logical(&l).unwrap(), s);
            prop_assert!(logical.insert(l.digits.clone()));
        }
    }

    #[test]
    fn qubit_hops_change_imbalance_by_two(rates in prop::collection::vec(0.1f64..2.0, 1..=4)) {
        let lattice = BlockLattice::qubits(rates).unwrap();
        for hop in hops(&lattice) {
            let d = imbalance(&lattice.fock_at(hop.to)) - imbalance(&lattice.fock_at(hop.from));
            prop_assert_eq!(d.abs(), 2);
        }
    }

    #[test]
    fn operators_are_hermitian(lattice in lattice_strategy(), a in amplitudes(4, 8.0), t in 0.0f64..3.0) {
        let p = DriveProfile::from_vector(37.0, &a).unwrap();
        for op in [
            build_bare(&lattice, &p, t).unwrap(),
            build_lab_generator(&lattice, &p, t).unwrap(),
            build_rotating(&lattice, &p, t).unwrap(),
            build_effective_boson(&lattice, &p).unwrap(),
        ] {
            prop_assert!(op.hermiticity_deviation() <= 1e-12);
        }
    }

    #[test]
    fn effective_conserves_block_particle_numbers(lattice in lattice_strategy(), a in amplitudes(4, 8.0)) {
        let p = DriveProfile::from_vector(50.0, &a).unwrap();
        let h = build_effective_boson(&lattice, &p).unwrap();
        let basis = lattice.enumerate_basis();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                if h.matrix()[(i, j)].norm() == 0.0 {
                    continue;
                }
                for q in 0..lattice.num_blocks() {
                    let count = |s: &kinetic_core::lattice::FockState| s.occupations[2 * q] + s.occupations[2 * q + 1];
                    prop_assert_eq!(count(&basis[i]), count(&basis[j]));
                }
            }
        }
    }

    #[test]
    fn spin_form_equals_boson_form(rates in prop::collection::vec(0.0f64..1.5, 1..=3), a in amplitudes(4, 8.0)) {
        let p = DriveProfile::from_vector(100.0, &a).unwrap();
        let lattice = BlockLattice::qubits(rates.clone()).unwrap();
        let spin = build_effective_spin(&rates, &p).unwrap();
        let boson = build_effective_boson(&lattice, &p).unwrap();
        prop_assert!(max_diff(spin.matrix(), boson.matrix()) <= 1e-12);
        let ups = |i: usize| lattice.digits_at(i).iter().filter(|&&d| d == 1).count() as i64;
        for i in 0..lattice.dimension() {
            for j in 0..lattice.dimension() {
                if spin.matrix()[(i, j)].norm() != 0.0 {
                    prop_assert_eq!((ups(i) - ups(j)).abs(), 1);
                }
            }
        }
    }

    #[test]
    fn period_average_of_rotating_frame_is_effective(lattice in lattice_strategy(), a in amplitudes(4, 6.0)) {
        let p = DriveProfile::from_vector(10.0, &a).unwrap();
        let n = 2048;
        let period = p.period();
        let dim = lattice.dimension();
        let mut avg = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..n {
            avg += build_rotating(&lattice, &p, period * k as f64 / n as f64).unwrap().matrix();
        }
        avg /= Complex64::new(n as f64, 0.0);
        let eff = build_effective_boson(&lattice, &p).unwrap();
        prop_assert!(max_diff(&avg, eff.matrix()) <= 1e-8);
    }

    #[test]
    fn effective_evolution_composes(a in amplitudes(3, 6.0), t in 0.1f64..20.0) {
        let lattice = BlockLattice::qubits(vec![1.0, 0.7, 0.4]).unwrap();
        let p = DriveProfile::from_vector(100.0, &a).unwrap();
        let prop = EffectivePropagator::new(&build_effective_boson(&lattice, &p).unwrap()).unwrap();
        let init = StateVector::basis_state(lattice.basis_tag(), 3).unwrap();
        let half = prop.apply(&prop.apply(init.amplitudes(), t / 2.0), t / 2.0);
        let full = prop.apply(init.amplitudes(), t);
        prop_assert!((half - full).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
    }

    #[test]
    fn cost_gradient_matches_central_differences(x in prop::collection::vec(-8.0f64..8.0, 3)) {
        let spec = ChannelSpec::toffoli(4).unwrap();
        let c = cost(&spec, &x).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut up = x.clone();
            up[i] += h;
            let mut dn = x.clone();
            dn[i] -= h;
            let fd = (cost(&spec, &up).unwrap().g - cost(&spec, &dn).unwrap().g) / (2.0 * h);
            // skip the measure-zero neighbourhoods of a closed-channel root
            let near_root = spec.closed_values(&x).unwrap().iter().any(|v| v.abs() < 1e-4);
            if !near_root {
                prop_assert!((c.gradient[i] - fd).abs() < 1e-6, "slot {i}: {} vs {fd}", c.gradient[i]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn driven_evolution_preserves_norm(a in amplitudes(3, 4.0), t in 0.2f64..2.0) {
        let lattice = BlockLattice::qubits(vec![1.0, 1.0]).unwrap();
        let p = DriveProfile::from_vector(40.0, &a).unwrap();
        let init = StateVector::basis_state(lattice.basis_tag(), 1).unwrap();
        let s = IntegratorSettings::default();
        let r = evolve_floquet(&lattice, &p, &init, t, &[0.0, t], &Observables::new(), &s).unwrap();
        prop_assert!((r.final_state.norm() - 1.0).abs() <= s.drift_tol);
    }

    #[test]
    fn optimizer_is_deterministic(seed in 0u64..1000) {
        let spec = ChannelSpec::cnot();
        let settings = MultistartSettings { starts: 6, seed, ..Default::default() };
        let a = optimize_profile(&spec, &settings).unwrap();
        let b = optimize_profile(&spec, &settings).unwrap();
        prop_assert_eq!(&a, &b);
        if a.success {
            prop_assert!(a.closed.iter().all(|c| c.value.abs() <= a.g));
            prop_assert!(a.open.iter().all(|c| c.value.abs() >= a.floor));
        }
    }
}

#[test]
fn sz_is_frame_independent() {
    let lattice = BlockLattice::qubits(vec![1.0, 1.0]).unwrap();
    let p = DriveProfile::from_vector(5.0, &[1.0, 2.0, 1.5]).unwrap();
    let init = StateVector::basis_state(lattice.basis_tag(), 1).unwrap();
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
    let obs = Observables::magnetizations(&lattice);
    let run = |frame| {
        let s = IntegratorSettings { frame, ..Default::default() };
        evolve_floquet(&lattice, &p, &init, 2.0, &times, &obs, &s).unwrap()
    };
    let rot = run(Frame::Rotating);
    let lab = run(Frame::Lab);
    for (a, b) in rot.records.iter().zip(&lab.records) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }
}

#[test]
fn sup_deviation_shrinks_tenfold_per_decade() {
    let lattice = BlockLattice::controlled_qubits(4, 1.0).unwrap();
    let init = StateVector::basis_state(lattice.basis_tag(), 0).unwrap();
    let amps = [-6.38, -5.09, 1.15];
    let obs = Observables::magnetizations(&lattice);
    let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.025).collect();
    let sup = |w: f64| {
        let p = DriveProfile::from_vector(w, &amps).unwrap();
        let fl = evolve_floquet(&lattice, &p, &init, 5.0, &times, &obs, &IntegratorSettings::default()).unwrap();
        let ef = evolve_effective(&build_effective_boson(&lattice, &p).unwrap(), &init, 5.0, &times, &obs).unwrap();
        fl.series("sz_1").unwrap().iter().zip(ef.series("sz_1").unwrap()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let ratio = sup(100.0) / sup(1000.0);
    assert!((5.0..=20.0).contains(&ratio), "ratio {ratio}");
}
