//! Steepest descent in schedule space with an Armijo step measured in
//! seconds of flipped time.
//!
//! Each iteration computes the insertion-gradient profile of the current
//! schedule, takes the cells whose gradient is within a factor `eta` of the
//! most negative value, and flips a subset of them of measure
//! `beta^j * mu(S)` for the smallest `j` giving sufficient descent
//! `J(next) - J <= alpha * lambda * D_sigma`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{evaluate_cost, integrate_costate, schedule_cost, simulate_state};
use crate::error::{Error, Result};
use crate::gradient::{eta_level_set, gradient_profile, GradientProfile};
use crate::schedule::{CellSet, Schedule};
use crate::system::{validate_system, SwitchedSystem};

/// How a subset of prescribed measure is carved out of the level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Cells in ascending time order.
    #[default]
    Leftmost,
    /// Cells in ascending order of their insertion gradient, ties by time.
    MostNegativeFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub max_iters: usize,
    /// Stop once `D_sigma >= -d_tol`.
    pub d_tol: f64,
    pub max_backtracks: usize,
    pub selection_rule: SelectionRule,
    /// When the leftmost rule cannot produce an acceptable single-cell step,
    /// retry the backtracking with [`SelectionRule::MostNegativeFirst`].
    pub single_cell_fallback: bool,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            eta: 0.6,
            max_iters: 100,
            d_tol: 1e-3,
            max_backtracks: 40,
            selection_rule: SelectionRule::Leftmost,
            single_cell_fallback: true,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &'static str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::BadParameter {
                    name,
                    reason: format!("must lie in (0, 1), got {v}"),
                })
            }
        };
        open_unit("alpha", self.alpha)?;
        open_unit("beta", self.beta)?;
        open_unit("eta", self.eta)?;
        if !(self.d_tol >= 0.0) || !self.d_tol.is_finite() {
            return Err(Error::BadParameter {
                name: "d_tol",
                reason: format!("must be finite and >= 0, got {}", self.d_tol),
            });
        }
        if self.max_backtracks == 0 {
            return Err(Error::BadParameter {
                name: "max_backtracks",
                reason: "must be at least 1".into(),
            });
        }
        if self.alpha >= self.eta {
            log::warn!(
                "alpha = {} is not below eta = {}; sufficient descent is only guaranteed for alpha < eta",
                self.alpha,
                self.eta
            );
        }
        Ok(())
    }
}

/// Picks a subset of `eta_set` with `max(1, floor(lambda / dt))` cells.
pub fn select_subset(
    eta_set: &CellSet,
    lambda: f64,
    dt: f64,
    rule: SelectionRule,
    profile: &GradientProfile,
) -> CellSet {
    let available = eta_set.cell_count();
    let wanted = ((lambda / dt) * (1.0 + 1e-12)).floor().max(1.0) as usize;
    let count = wanted.min(available);
    match rule {
        SelectionRule::Leftmost => CellSet::from_cells(eta_set.cells().take(count)),
        SelectionRule::MostNegativeFirst => {
            let mut cells: Vec<usize> = eta_set.cells().collect();
            cells.sort_by(|&a, &b| {
                profile
                    .value(a)
                    .total_cmp(&profile.value(b))
                    .then(a.cmp(&b))
            });
            CellSet::from_cells(cells.into_iter().take(count))
        }
    }
}

/// An accepted Armijo step.
#[derive(Debug, Clone)]
pub struct ArmijoStep {
    pub schedule: Schedule,
    pub cost: f64,
    /// Measure actually flipped, in seconds.
    pub lambda: f64,
    /// Index of the accepted trial, `lambda_j = beta^j * mu(S)`.
    pub backtracks: usize,
    pub rule: SelectionRule,
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    x0: &[f64],
    cost: f64,
    profile: &GradientProfile,
    eta_set: &CellSet,
    params: &OptimizerParams,
    rule: SelectionRule,
) -> Result<ArmijoStep> {
    let dt = schedule.grid().dt();
    let mu = eta_set.measure(dt);
    let d_sigma = profile.d_sigma();
    let targets = profile.w_star();
    let mut prev_count = 0usize;
    let mut single_rejections = 0usize;

    for j in 0..=params.max_backtracks {
        let lambda_j = params.beta.powi(j as i32) * mu;
        let subset = select_subset(eta_set, lambda_j, dt, rule, profile);
        let count = subset.cell_count();
        if count == prev_count {
            // same candidate as the previous trial, already rejected
            if count == 1 {
                single_rejections += 1;
                if single_rejections >= 2 {
                    break;
                }
            }
            continue;
        }
        prev_count = count;

        let candidate = schedule.flip_set(&subset, Some(targets))?;
        let lambda = subset.measure(dt);
        let accepted = match schedule_cost(system, &candidate, x0) {
            Ok(c) if c - cost <= params.alpha * lambda * d_sigma => Some(c),
            Ok(_) | Err(Error::NonFiniteState { .. }) => None,
            Err(e) => return Err(e),
        };
        if let Some(c) = accepted {
            return Ok(ArmijoStep {
                schedule: candidate,
                cost: c,
                lambda,
                backtracks: j,
                rule,
            });
        }
        if count == 1 {
            single_rejections += 1;
            if single_rejections >= 2 {
                break;
            }
        }
    }
    Err(Error::StepSizeUnderflow {
        backtracks: params.max_backtracks,
    })
}

/// Backtracks `lambda_j = beta^j * mu(S)` until sufficient descent holds.
///
/// The inequality is checked against the measure actually flipped after
/// quantization to whole cells. Multi-mode flips send each cell to its
/// minimizing mode from `profile`.
pub fn armijo_step(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    x0: &[f64],
    cost: f64,
    profile: &GradientProfile,
    eta_set: &CellSet,
    params: &OptimizerParams,
) -> Result<ArmijoStep> {
    if !(profile.d_sigma() < -params.d_tol) {
        return Err(Error::NotDescendable {
            d_sigma: profile.d_sigma(),
        });
    }
    match backtrack(
        system,
        schedule,
        x0,
        cost,
        profile,
        eta_set,
        params,
        params.selection_rule,
    ) {
        Err(Error::StepSizeUnderflow { .. })
            if params.single_cell_fallback && params.selection_rule == SelectionRule::Leftmost =>
        {
            log::debug!("leftmost selection underflowed; retrying most-negative-first");
            backtrack(
                system,
                schedule,
                x0,
                cost,
                profile,
                eta_set,
                params,
                SelectionRule::MostNegativeFirst,
            )
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    /// Iteration index; the initial schedule is `k = 1`.
    pub k: usize,
    pub cost: f64,
    pub d_sigma: f64,
    /// `mu(S_{sigma,eta})` in seconds (0 when no level set was formed).
    pub mu_eta: f64,
    /// Accepted step measure; 0 on the terminal row.
    pub lambda: f64,
    pub j_backtracks: usize,
    pub switch_count: usize,
    /// `D_sigma * mu(S_{sigma,eta})`.
    pub alt_optimality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIters,
    StepSizeUnderflow,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIters => "max_iters",
            RunStatus::StepSizeUnderflow => "step_size_underflow",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
    pub alpha: f64,
    /// Number of steps that needed the most-negative-first retry.
    pub fallback_steps: usize,
}

impl RunTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Record for iteration `k` (1-based).
    pub fn at(&self, k: usize) -> Option<&IterationRecord> {
        self.records.get(k.checked_sub(1)?)
    }

    /// Iterations whose successor violates `J_{k+1} - J_k <= alpha * lambda_k * D_k`.
    pub fn sufficient_descent_violations(&self) -> Vec<usize> {
        self.records
            .windows(2)
            .filter(|w| {
                let (a, b) = (&w[0], &w[1]);
                !(b.cost - a.cost <= self.alpha * a.lambda * a.d_sigma && a.lambda > 0.0)
            })
            .map(|w| w[0].k)
            .collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].cost <= w[0].cost)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub schedule: Schedule,
    pub trace: RunTrace,
}

/// Runs the descent loop from `initial` until `D_sigma >= -d_tol`,
/// `max_iters` schedules have been evaluated, or no step is acceptable.
///
/// The last trace row always describes the returned schedule.
pub fn optimize(
    system: &dyn SwitchedSystem,
    initial: &Schedule,
    params: &OptimizerParams,
    x0: &[f64],
) -> Result<OptimizeOutcome> {
    validate_system(system)?;
    params.validate()?;
    let dt = initial.grid().dt();
    let mut schedule = initial.clone();
    let mut records = Vec::new();
    let mut fallback_steps = 0;
    let mut status = RunStatus::MaxIters;

    for k in 1..=params.max_iters {
        let traj = simulate_state(system, &schedule, x0)?;
        let cost = evaluate_cost(system, &traj);
        let costate = integrate_costate(system, &schedule, &traj)?;
        let profile = gradient_profile(system, &schedule, &traj, &costate);
        let d_sigma = profile.d_sigma();
        let eta_set = if d_sigma < 0.0 {
            Some(eta_level_set(&profile, params.eta)?)
        } else {
            None
        };
        let mu_eta = eta_set.as_ref().map_or(0.0, |s| s.measure(dt));
        let mut record = IterationRecord {
            k,
            cost,
            d_sigma,
            mu_eta,
            lambda: 0.0,
            j_backtracks: 0,
            switch_count: schedule.switch_count(),
            alt_optimality: d_sigma * mu_eta,
        };
        log::debug!(
            "k={k} J={cost:.6} D={d_sigma:.6} mu={mu_eta:.4} l={}",
            record.switch_count
        );

        if d_sigma >= -params.d_tol {
            records.push(record);
            status = RunStatus::Converged;
            break;
        }
        if k == params.max_iters {
            records.push(record);
            break;
        }
        let eta_set = eta_set.expect("level set exists when D_sigma < 0");
        match armijo_step(system, &schedule, x0, cost, &profile, &eta_set, params) {
            Ok(step) => {
                if step.rule != params.selection_rule {
                    fallback_steps += 1;
                }
                record.lambda = step.lambda;
                record.j_backtracks = step.backtracks;
                records.push(record);
                schedule = step.schedule;
            }
            Err(Error::StepSizeUnderflow { .. }) => {
                records.push(record);
                status = RunStatus::StepSizeUnderflow;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    if let Some(last) = records.last() {
        log::info!(
            "{} after {} iterations: J={:.6} D_sigma={:.6} D*mu={:.6}",
            status.as_str(),
            last.k,
            last.cost,
            last.d_sigma,
            last.alt_optimality
        );
    }
    Ok(OptimizeOutcome {
        schedule,
        trace: RunTrace {
            records,
            status,
            alpha: params.alpha,
            fallback_steps,
        },
    })
}
