//! Independent oracles for the optimizer and its building blocks.

pub mod brute_force;
pub mod classic_armijo;
pub mod fd;
pub mod smoothness;

use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::models::{make_double_tank, make_scalar_tracking, make_trimodal_example, ModelSpec};
use crate::optimizer::{optimize, OptimizerParams, RunStatus};
use crate::schedule::Schedule;
use crate::system::{check_jacobians, SwitchedSystem};

pub use brute_force::{brute_force_best_schedule, BruteForceResult};
pub use classic_armijo::{
    classic_armijo_descent, quadratic_suite, ClassicRun, Objective, Quadratic,
};
pub use fd::{fd_insertion_gradient, random_fd_probes, summarize_probes, FdProbe, FdSummary};
pub use smoothness::{
    reference_probes, smoothness_probe, within_factor_of_median, SmoothnessProbe, SmoothnessReport,
};

pub const FD_REL_TOL: f64 = 1e-2;
pub const FD_MIN_PROBES: usize = 50;
pub const FD_PROBE_COUNT: usize = 60;
pub const MEDIAN_FACTOR: f64 = 3.0;
pub const QUADRATIC_PROBLEMS: usize = 100;
pub const QUADRATIC_MAX_COND: f64 = 5.0;
pub const QUADRATIC_GRAD_TOL: f64 = 1e-6;
pub const QUADRATIC_MAX_ITERS: usize = 200;
pub const ORACLE_REL_GAP: f64 = 0.10;

/// Scales every Jacobian entry by a constant; a negative control for the
/// gradient checks.
pub struct PerturbedJacobian {
    pub inner: Arc<dyn SwitchedSystem>,
    pub scale: f64,
}

impl SwitchedSystem for PerturbedJacobian {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }
    fn mode_count(&self) -> usize {
        self.inner.mode_count()
    }
    fn vector_field(&self, x: &[f64], mode: usize, out: &mut [f64]) {
        self.inner.vector_field(x, mode, out)
    }
    fn jacobian(&self, x: &[f64], mode: usize, out: &mut [f64]) {
        self.inner.jacobian(x, mode, out);
        out.iter_mut().for_each(|v| *v *= self.scale);
    }
    fn running_cost(&self, x: &[f64]) -> f64 {
        self.inner.running_cost(x)
    }
    fn cost_gradient(&self, x: &[f64], out: &mut [f64]) {
        self.inner.cost_gradient(x, out)
    }
}

/// Scalar `xdot = v - x`, `v in {0, 2}`, cost `(x - 1)^2` on eight cells
/// with `T = 8` (`dt = 1`) from `x0 = 0`.
pub fn eight_cell_unit_step_instance() -> ModelSpec {
    make_scalar_tracking(0.0, 8.0, 1.0).expect("static instance")
}

/// The same dynamics and cost on eight cells with `T = 1` from `x0 = 5`,
/// where the level stays above 1 and holding `v = 0` is optimal.
pub fn eight_cell_bang_bang_instance() -> ModelSpec {
    make_scalar_tracking(5.0, 1.0, 0.125).expect("static instance")
}

/// Start schedules for the eight-cell comparisons: all low, all high, and
/// low-then-high.
pub fn eight_cell_starts(spec: &ModelSpec) -> Vec<Schedule> {
    let g = spec.grid;
    vec![
        Schedule::constant(0, 2, g).expect("static"),
        Schedule::constant(1, 2, g).expect("static"),
        Schedule::new(vec![0, 0, 0, 0, 1, 1, 1, 1], 2, g).expect("static"),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub optimum: f64,
    pub candidates: u64,
    pub terminal_costs: Vec<f64>,
    pub terminal_d_sigma: Vec<f64>,
    pub statuses: Vec<RunStatus>,
    pub best_relative_gap: f64,
}

impl OracleComparison {
    pub fn all_converged(&self) -> bool {
        self.statuses.iter().all(|s| *s == RunStatus::Converged)
    }
}

/// Runs the optimizer from each start and compares against exhaustive search.
pub fn compare_with_brute_force(
    spec: &ModelSpec,
    starts: &[Schedule],
    params: &OptimizerParams,
) -> Result<OracleComparison> {
    let sys = spec.system.as_ref();
    let bf = brute_force_best_schedule(sys, &spec.x0, spec.grid)?;
    let mut out = OracleComparison {
        optimum: bf.cost,
        candidates: bf.candidates,
        terminal_costs: Vec::new(),
        terminal_d_sigma: Vec::new(),
        statuses: Vec::new(),
        best_relative_gap: f64::INFINITY,
    };
    for start in starts {
        let run = optimize(sys, start, params, &spec.x0)?;
        let last = run.trace.last().copied();
        out.terminal_costs.push(last.map_or(f64::NAN, |r| r.cost));
        out.terminal_d_sigma
            .push(last.map_or(f64::NAN, |r| r.d_sigma));
        out.statuses.push(run.trace.status);
    }
    let best = out
        .terminal_costs
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    out.best_relative_gap = (best - bf.cost) / bf.cost.abs().max(f64::MIN_POSITIVE);
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Multiplies every double-tank Jacobian entry by 1.5.
    pub perturb_jacobian: bool,
}

fn check(name: &str, measured: f64, threshold: f64, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        measured,
        threshold,
        passed,
        detail,
    }
}

fn median_spread(values: &[f64]) -> f64 {
    let mut m: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    if m.is_empty() {
        return 1.0;
    }
    m.sort_by(f64::total_cmp);
    let median = if m.len() % 2 == 1 {
        m[m.len() / 2]
    } else {
        0.5 * (m[m.len() / 2 - 1] + m[m.len() / 2])
    };
    if median == 0.0 {
        return if m.iter().all(|&v| v == 0.0) {
            1.0
        } else {
            f64::INFINITY
        };
    }
    m.iter()
        .map(|&v| (v / median).max(median / v))
        .fold(1.0, f64::max)
}

/// Runs every oracle and collects one pass/fail line per check.
pub fn run_validation(opts: &ValidationOptions) -> Result<ValidationReport> {
    let tank = make_double_tank();
    let tank_system: Arc<dyn SwitchedSystem> = if opts.perturb_jacobian {
        Arc::new(PerturbedJacobian {
            inner: tank.system.clone(),
            scale: 1.5,
        })
    } else {
        tank.system.clone()
    };
    let mut checks = Vec::new();

    let probes = vec![
        vec![2.0, 2.0],
        vec![1.2, 3.7],
        vec![3.9, 1.1],
        vec![1.0, 1.0],
    ];
    let tri = make_trimodal_example();
    let jac = check_jacobians(tank_system.as_ref(), &probes)
        .max_error()
        .max(check_jacobians(tri.system.as_ref(), &[vec![0.3], vec![2.5]]).max_error());
    checks.push(check(
        "jacobians_builtin",
        jac,
        1e-5,
        jac <= 1e-5,
        "central differences, h = 1e-6".into(),
    ));

    let fd = random_fd_probes(
        tank_system.as_ref(),
        &tank.initial_schedule,
        &tank.x0,
        FD_PROBE_COUNT,
        opts.seed,
    )?;
    let s = summarize_probes(&fd, FD_REL_TOL);
    let fd_pass = s.evaluated >= FD_MIN_PROBES && s.within_tolerance == s.evaluated;
    checks.push(check(
        "fd_insertion_gradient_double_tank",
        s.max_rel_error,
        FD_REL_TOL,
        fd_pass,
        format!(
            "{}/{} evaluated probes within tolerance at lambda = dt; worst at cell {:?}",
            s.within_tolerance,
            s.evaluated,
            s.worst.as_ref().map(|p| p.cell)
        ),
    ));

    let q = quadratic_suite(
        opts.seed,
        QUADRATIC_PROBLEMS,
        QUADRATIC_MAX_COND,
        0.5,
        0.5,
        QUADRATIC_MAX_ITERS,
        QUADRATIC_GRAD_TOL,
    );
    let failures = (q.descent_violations + q.step_bound_violations + q.not_converged) as f64;
    checks.push(check(
        "classic_armijo_quadratics",
        failures,
        0.0,
        failures == 0.0 && q.monotone,
        format!(
            "{} problems, min step/bound ratio {:.3}, max iterations to 1e-6: {}",
            q.problems, q.min_step_bound_ratio, q.max_iterations_needed
        ),
    ));

    let two = make_scalar_tracking(0.0, 1.0, 0.5)?;
    let bf = brute_force_best_schedule(two.system.as_ref(), &two.x0, two.grid)?;
    let hand = [0.0, 2.0]
        .iter()
        .map(|&v0: &f64| 0.5 * (1.0 + (v0 / 2.0 - 1.0).powi(2)))
        .fold(f64::INFINITY, f64::min);
    let gap = (bf.cost - hand).abs();
    checks.push(check(
        "brute_force_two_cells",
        gap,
        1e-12,
        gap <= 1e-12 && bf.candidates == 4,
        format!("{} candidates enumerated", bf.candidates),
    ));

    let inst = eight_cell_bang_bang_instance();
    let cmp = compare_with_brute_force(
        &inst,
        &eight_cell_starts(&inst),
        &OptimizerParams::default(),
    )?;
    checks.push(check(
        "optimizer_vs_brute_force_eight_cells",
        cmp.best_relative_gap,
        ORACLE_REL_GAP,
        cmp.best_relative_gap <= ORACLE_REL_GAP && cmp.all_converged(),
        format!(
            "J* = {:.6}, terminal J = {:?}, statuses = {:?}",
            cmp.optimum, cmp.terminal_costs, cmp.statuses
        ),
    ));

    let (single, multi) = reference_probes(&tank.grid);
    let r1 = smoothness_probe(
        tank.system.as_ref(),
        &tank.initial_schedule,
        &tank.x0,
        &single,
    )?;
    let r2 = smoothness_probe(
        tank.system.as_ref(),
        &tank.initial_schedule,
        &tank.x0,
        &multi,
    )?;
    let defined = |v: &[Option<f64>]| v.iter().flatten().copied().collect::<Vec<_>>();
    let sd = defined(&r1.second_difference_quotients);
    checks.push(check(
        "smoothness_cost_second_difference",
        median_spread(&sd),
        MEDIAN_FACTOR,
        r1.second_differences_bounded(MEDIAN_FACTOR),
        format!("quotients {sd:?}"),
    ));
    let lr = defined(&r1.lipschitz_ratios);
    checks.push(check(
        "smoothness_gradient_lipschitz",
        median_spread(&lr),
        MEDIAN_FACTOR,
        r1.lipschitz_uniform(MEDIAN_FACTOR),
        format!("ratios {lr:?}"),
    ));
    let mr = defined(&r2.multi_ratios);
    checks.push(check(
        "smoothness_multi_interval",
        median_spread(&mr),
        MEDIAN_FACTOR,
        r2.multi_uniform(MEDIAN_FACTOR),
        format!("ratios {mr:?}"),
    ));

    Ok(ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        seed: opts.seed,
        checks,
    })
}
