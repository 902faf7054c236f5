use modeswitch::{
    armijo_step, eta_level_set, evaluate_cost, gradient_profile, integrate_costate,
    make_double_tank, make_switched_linear, optimize, simulate_state, Error, OptimizerParams,
    RunStatus, Schedule, SelectionRule, TimeGrid,
};

#[test]
fn two_state_linear_system_descends_under_both_rules() {
    let sys = make_switched_linear(
        vec![
            vec![vec![-1.0, 0.0], vec![1.0, -1.0]],
            vec![vec![-2.0, 0.5], vec![0.0, -0.5]],
        ],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![1.0, 0.0], vec![0.0, 2.0]],
        Some(vec![0.5, 0.5]),
    )
    .unwrap();
    let g = TimeGrid::new(4.0, 0.02).unwrap();
    let s0 = Schedule::constant(0, 2, g).unwrap();
    for rule in [SelectionRule::Leftmost, SelectionRule::MostNegativeFirst] {
        let params = OptimizerParams {
            selection_rule: rule,
            max_iters: 40,
            ..Default::default()
        };
        let out = optimize(&sys, &s0, &params, &[0.0, 0.0]).unwrap();
        assert!(out.trace.is_monotone(), "{rule:?}");
        assert!(
            out.trace.sufficient_descent_violations().is_empty(),
            "{rule:?}"
        );
        let first = out.trace.records[0].cost;
        let last = out.trace.last().unwrap().cost;
        assert!(last < first, "{rule:?}: {first} -> {last}");
    }
}

#[test]
fn single_step_matches_optimizer_first_row() {
    let spec = make_double_tank();
    let sys = spec.system.as_ref();
    let s = &spec.initial_schedule;
    let params = OptimizerParams::default();
    let traj = simulate_state(sys, s, &spec.x0).unwrap();
    let cost = evaluate_cost(sys, &traj);
    let p = integrate_costate(sys, s, &traj).unwrap();
    let profile = gradient_profile(sys, s, &traj, &p);
    let set = eta_level_set(&profile, params.eta).unwrap();
    let step = armijo_step(sys, s, &spec.x0, cost, &profile, &set, &params).unwrap();

    let run = optimize(
        sys,
        s,
        &OptimizerParams {
            max_iters: 2,
            ..params
        },
        &spec.x0,
    )
    .unwrap();
    let (r1, r2) = (run.trace.records[0], run.trace.records[1]);
    assert_eq!(r1.lambda, step.lambda);
    assert_eq!(r1.j_backtracks, step.backtracks);
    assert_eq!(r2.cost.to_bits(), step.cost.to_bits());
    assert_eq!(run.schedule, step.schedule);
}

#[test]
fn level_set_needs_descent_and_eta_in_unit_interval() {
    let spec = make_double_tank();
    let sys = spec.system.as_ref();
    let held = Schedule::constant(1, 2, spec.grid).unwrap();
    let traj = simulate_state(sys, &held, &spec.x0).unwrap();
    let p = integrate_costate(sys, &held, &traj).unwrap();
    let profile = gradient_profile(sys, &held, &traj, &p);
    assert!(matches!(
        eta_level_set(&profile, 0.0),
        Err(Error::BadParameter { .. })
    ));
    assert!(matches!(
        eta_level_set(&profile, 1.0),
        Err(Error::BadParameter { .. })
    ));
    let set = eta_level_set(&profile, 0.6).unwrap();
    assert!(!set.is_empty());
}

#[test]
fn invalid_parameters_are_rejected_before_running() {
    let spec = make_double_tank();
    for params in [
        OptimizerParams {
            alpha: 1.5,
            ..Default::default()
        },
        OptimizerParams {
            beta: 0.0,
            ..Default::default()
        },
        OptimizerParams {
            eta: 1.0,
            ..Default::default()
        },
        OptimizerParams {
            max_backtracks: 0,
            ..Default::default()
        },
    ] {
        let r = optimize(
            spec.system.as_ref(),
            &spec.initial_schedule,
            &params,
            &spec.x0,
        );
        assert!(matches!(r, Err(Error::BadParameter { .. })), "{params:?}");
    }
    let wrong_x0 = optimize(
        spec.system.as_ref(),
        &spec.initial_schedule,
        &OptimizerParams::default(),
        &[1.0],
    );
    assert!(matches!(wrong_x0, Err(Error::DimensionMismatch(_))));
}

#[test]
fn zero_iteration_budget_records_only_the_start() {
    let spec = make_double_tank();
    let params = OptimizerParams {
        max_iters: 1,
        ..Default::default()
    };
    let run = optimize(
        spec.system.as_ref(),
        &spec.initial_schedule,
        &params,
        &spec.x0,
    )
    .unwrap();
    assert_eq!(run.trace.status, RunStatus::MaxIters);
    assert_eq!(run.trace.records.len(), 1);
    assert_eq!(run.trace.records[0].lambda, 0.0);
    assert_eq!(run.schedule, spec.initial_schedule);
}
