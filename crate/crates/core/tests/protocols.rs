use kinetic_core::evolve::{IntegratorSettings, Leg};
use kinetic_core::protocols::{
    run_cnot, run_ghz, run_qutrit_cnot, run_toffoli, run_w_state, GhzOptions, ProtocolError, ToffoliOptions,
};

fn settings() -> IntegratorSettings {
    IntegratorSettings::default()
}

#[test]
fn ghz_split_stage_stays_in_the_two_lowest_layers() {
    let r = run_ghz(4, 100.0, &GhzOptions::default(), &settings()).unwrap();
    let first = &r.stage_outcomes[0];
    for k in 2..=4 {
        let p = first.values[&format!("floquet_layer_{k}")];
        assert!(p < 1e-3, "layer {k} holds {p:.2e} after the split");
    }
    // the split is a π/2 pulse: half the population moved
    let (l0, l1) = (first.values["effective_layer_0"], first.values["effective_layer_1"]);
    assert!((l0 - 0.5).abs() < 1e-2 && (l1 - 0.5).abs() < 1e-2, "{l0} / {l1}");
    assert!(r.metric("fidelity_effective").unwrap() >= 0.995);
    assert_eq!(r.stage_outcomes.len(), 3);
}

#[test]
fn w_state_stays_on_the_open_rung() {
    let r = run_w_state(100.0, &settings()).unwrap();
    assert!(r.metric("layers_34_leakage_effective").unwrap() < 1e-3);
    assert!(r.metric("layers_34_leakage_floquet").unwrap() < 1e-2);
    assert!(r.metric("symmetric_sector_deviation").unwrap() <= 1e-10);
    assert!(r.metric("initial_overlap_effective").unwrap() < 1e-3);
}

#[test]
fn cnot_effective_leg_is_exact_up_to_closed_channels() {
    let r = run_cnot(100.0, None, &settings()).unwrap();
    let eff = r.gate(Leg::Effective).unwrap();
    assert_eq!(eff.rows.len(), 4);
    assert!(eff.min_population > 0.9999, "{}", eff.min_population);
}

#[test]
fn qutrit_cnot_is_limited_by_the_chain_transfer() {
    let r = run_qutrit_cnot(100.0, &settings()).unwrap();
    let bound = r.metric("chain_transfer_bound").unwrap();
    let eff = r.gate(Leg::Effective).unwrap().min_population;
    assert!(r.metric("max_closed").unwrap() <= 1e-3);
    assert!(eff <= bound + 1e-3, "population {eff} above the transfer bound {bound}");
    assert!((eff - bound).abs() < 1e-2, "population {eff} vs bound {bound}");
}

#[test]
fn toffoli5_effective_truth_table() {
    let options = ToffoliOptions { floquet: Some(false), ..Default::default() };
    let r = run_toffoli(5, 100.0, &options, &settings()).unwrap();
    assert!(r.gate(Leg::Floquet).is_none());
    let eff = r.gate(Leg::Effective).unwrap();
    assert_eq!(eff.rows.len(), 32);
    assert!(eff.min_population >= 0.99, "{}", eff.min_population);
}

#[test]
fn sanity_failure_carries_the_stage_label() {
    let options = ToffoliOptions { profile: Some(vec![0.0, 0.0, 0.0]), ..Default::default() };
    match run_toffoli(4, 100.0, &options, &settings()) {
        Err(ProtocolError::Sanity { stage, .. }) => assert_eq!(stage, "toffoli"),
        other => panic!("expected a sanity failure, got {other:?}"),
    }
}

#[test]
fn rejects_bad_frequencies() {
    for w in [0.0, -5.0, f64::NAN] {
        assert!(matches!(run_cnot(w, None, &settings()), Err(ProtocolError::Validation(_))));
    }
}
