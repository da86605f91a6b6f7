use buckshare::{
    compute_metrics, equilibrium, run, run_with, ConverterParams, Error, LoadSchedule, LoadStep,
    MetricsConfig, Scenario, SimOptions, StateComponent, TraceRecord,
};

fn unchecked(sc: &Scenario, every: usize) -> Vec<TraceRecord> {
    let opts = SimOptions {
        ccm_tol: None,
        ..SimOptions::new(every)
    };
    run_with(sc, &opts).into_result().unwrap()
}

fn short_cold_start() -> Scenario {
    Scenario {
        t_end: 0.01,
        ..Scenario::reference_constant_load()
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let sc = short_cold_start();
    let a = unchecked(&sc, 7);
    let b = unchecked(&sc, 7);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(format!("{x:?}"), format!("{y:?}"));
    }
}

#[test]
fn coarser_recording_is_a_subset_of_finer() {
    let sc = short_cold_start();
    let fine = unchecked(&sc, 1);
    let coarse = unchecked(&sc, 2);
    assert_eq!(fine.len(), 10_001);
    assert_eq!(coarse.len(), 5_001);
    for (i, r) in coarse.iter().enumerate() {
        assert_eq!(r, &fine[2 * i]);
    }

    let cfg = MetricsConfig::default();
    let mf = compute_metrics(&fine, sc.vref, &cfg).unwrap();
    let mc = compute_metrics(&coarse, sc.vref, &cfg).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    assert!(rel(mf.ss_voltage_error, mc.ss_voltage_error) < 1e-2);
    assert!(rel(mf.ss_sharing_error, mc.ss_sharing_error) < 1e-2);
    assert!((mf.max_duty_saturation_time - mc.max_duty_saturation_time).abs() <= 2e-6);
}

#[test]
fn voltage_loop_regulates_from_cold_start() {
    // the voltage loop settles within a few ms even though sharing does not
    let trace = unchecked(&short_cold_start(), 10);
    let tail: Vec<_> = trace.iter().filter(|r| r.t >= 0.005).collect();
    assert!(!tail.is_empty());
    for r in tail {
        assert!((r.vo - 8.0).abs() < 1e-6, "Vo = {} at {}", r.vo, r.t);
        assert!((r.i_l1 + r.i_l2 - 0.8).abs() < 1e-5);
    }
}

#[test]
fn cold_start_trips_conduction_check_immediately() {
    let sc = short_cold_start();
    match run(&sc, 1) {
        Err(Error::CcmViolation {
            t,
            component,
            current,
        }) => {
            assert_eq!(component, StateComponent::IL2);
            assert!(current < -1e-9);
            assert!(t > 0.0 && t <= 2e-6, "{t}");
        }
        other => panic!("expected a conduction violation, got {other:?}"),
    }
    let outcome = run_with(&sc, &SimOptions::new(1));
    assert!(outcome.error.is_some());
    assert!(!outcome.trace.is_empty());
    assert!(outcome.trace.iter().all(|r| r.i_l2 >= -1e-9));
}

#[test]
fn looser_conduction_tolerance_changes_the_verdict() {
    let mut sc = short_cold_start();
    sc.t_end = 1e-5;
    let opts = SimOptions {
        ccm_tol: Some(1e-3),
        ..SimOptions::new(1)
    };
    assert!(run_with(&sc, &opts).error.is_none());
}

#[test]
fn load_event_keeps_state_and_switches_resistance() {
    let mut sc = Scenario::reference_load_step();
    sc.initial_state = sc.initial_equilibrium().unwrap();
    sc.t_end = 0.06;
    let trace = unchecked(&sc, 1000);
    let idx = trace.iter().position(|r| r.t == 0.05).unwrap();
    let (before, after) = (&trace[idx], &trace[idx + 1]);
    assert_eq!(after.t, 0.05);
    assert_eq!(before.state(), after.state());
    assert_eq!((before.r_active, after.r_active), (10.0, 15.0));
    // the instant of the step belongs to the new load
    assert_eq!(sc.load.active_load(0.05).unwrap(), 15.0);
    assert!(trace[..idx].iter().all(|r| r.r_active == 10.0));
    assert!(trace[idx + 1..].iter().all(|r| r.r_active == 15.0));

    // the voltage loop absorbs the step
    let eq15 = equilibrium(&sc.converter1, &sc.converter2, 15.0, 8.0).unwrap();
    let last = trace.last().unwrap();
    assert!((last.vo - 8.0).abs() < 1e-6);
    assert!((last.i_l1 + last.i_l2 - (eq15.i_l1 + eq15.i_l2)).abs() < 1e-5);
}

#[test]
fn off_grid_event_is_hit_exactly() {
    let mut sc = Scenario::reference_constant_load();
    sc.initial_state = sc.initial_equilibrium().unwrap();
    sc.load = LoadSchedule::new(vec![
        LoadStep {
            t: 0.0,
            resistance: 10.0,
        },
        LoadStep {
            t: 1.0000005e-3,
            resistance: 12.0,
        },
    ])
    .unwrap();
    sc.t_end = 2e-3;
    let trace = unchecked(&sc, 1);
    let at: Vec<_> = trace.iter().filter(|r| r.t == 1.0000005e-3).collect();
    assert_eq!(at.len(), 2);
    assert_eq!(at[1].r_active, 12.0);
    assert!((trace.last().unwrap().t - 2e-3).abs() < 1e-15);
    assert!(trace.windows(2).all(|w| w[1].t >= w[0].t));
}

#[test]
fn equal_ratings_and_inductances_are_rejected() {
    let mut sc = Scenario::reference_constant_load();
    sc.converter2 = ConverterParams {
        i_max: sc.converter1.i_max,
        ..sc.converter2
    };
    assert!(matches!(
        run(&sc, 1),
        Err(Error::DegenerateCoupling { .. })
    ));
}

#[test]
fn equilibrium_start_is_steady() {
    let mut sc = Scenario::reference_constant_load();
    sc.initial_state = sc.initial_equilibrium().unwrap();
    let trace = run(&sc, 1000).unwrap();
    let eq = sc.initial_state;
    for r in &trace {
        assert!((r.i_l1 - eq.i_l1).abs() < 1e-10);
        assert!((r.i_l2 - eq.i_l2).abs() < 1e-10);
        assert!((r.vo - eq.vo).abs() < 1e-10);
        assert!((r.d2 - eq.d2).abs() < 1e-10);
    }
    let m = compute_metrics(&trace, sc.vref, &MetricsConfig::default()).unwrap();
    assert_eq!(m.settle_time_v, Some(0.0));
    assert_eq!(m.settle_time_share, Some(0.0));
    assert_eq!(m.max_duty_saturation_time, 0.0);
}
