//! Mode-schedule optimization for switched dynamical systems.
//!
//! A schedule assigns one of finitely many modes to each cell of a uniform
//! time grid. The optimizer lowers a running cost by flipping sets of cells
//! selected from the insertion-gradient profile, with the flipped measure
//! chosen by an Armijo backtracking rule.
//!
//! ```
//! use modeswitch::{make_double_tank, optimize, OptimizerParams};
//!
//! let spec = make_double_tank();
//! let params = OptimizerParams { max_iters: 3, ..Default::default() };
//! let out = optimize(spec.system.as_ref(), &spec.initial_schedule, &params, &spec.x0).unwrap();
//! assert!(out.trace.is_monotone());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod gradient;
pub mod grid;
pub mod models;
pub mod optimizer;
pub mod schedule;
pub mod system;
pub mod validation;

pub use dynamics::{
    evaluate_cost, evaluate_cost_over, integrate_costate, schedule_cost, simulate_state,
    CostatePath, Trajectory,
};
pub use error::{Error, Result};
pub use gradient::{
    cell_insertion_gradient, eta_level_set, gradient_profile, insertion_gradient_at, negative_set,
    GradientProfile,
};
pub use grid::TimeGrid;
pub use models::{
    make_double_tank, make_scalar_tracking, make_switched_linear, make_trimodal_example,
    DoubleTank, ModelSpec, SwitchedLinear,
};
pub use optimizer::{
    armijo_step, optimize, select_subset, ArmijoStep, IterationRecord, OptimizeOutcome,
    OptimizerParams, RunStatus, RunTrace, SelectionRule,
};
pub use schedule::{CellSet, Schedule};
pub use system::{check_jacobians, validate_system, JacobianReport, SwitchedSystem};
