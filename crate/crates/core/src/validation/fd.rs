//! Finite-difference oracle for the insertion gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{integrate_costate, schedule_cost, simulate_state};
use crate::error::{Error, Result};
use crate::gradient::cell_insertion_gradient;
use crate::schedule::{CellSet, Schedule};
use crate::system::SwitchedSystem;

/// Magnitude below which both sides of a probe count as zero.
pub const FD_ZERO_FLOOR: f64 = 1e-4;

/// One comparison between the adjoint formula and a finite difference.
#[derive(Debug, Clone, Serialize)]
pub struct FdProbe {
    pub cell: usize,
    pub mode: usize,
    pub analytic: f64,
    pub fd_quotient: f64,
    pub lambda: f64,
    /// `|fd - analytic| / max(|fd|, |analytic|)`, defined only when that
    /// maximum exceeds [`FD_ZERO_FLOOR`].
    pub rel_error: Option<f64>,
}

impl FdProbe {
    pub fn new(cell: usize, mode: usize, analytic: f64, fd_quotient: f64, lambda: f64) -> Self {
        let scale = analytic.abs().max(fd_quotient.abs());
        let rel_error = (scale > FD_ZERO_FLOOR).then(|| (fd_quotient - analytic).abs() / scale);
        Self {
            cell,
            mode,
            analytic,
            fd_quotient,
            lambda,
            rel_error,
        }
    }
}

/// `(J(sigma with mode w on [s, s + lambda)) - J(sigma)) / lambda` by full
/// re-simulation, with `s` the left edge of `cell`.
///
/// `lambda` must be a positive whole number of cells.
pub fn fd_insertion_gradient(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    x0: &[f64],
    cell: usize,
    w: usize,
    lambda: f64,
) -> Result<f64> {
    let grid = schedule.grid();
    let cells = (lambda / grid.dt()).round();
    if !(lambda > 0.0) || cells < 1.0 || (cells * grid.dt() - lambda).abs() > 1e-9 * lambda.max(1.0)
    {
        return Err(Error::BadParameter {
            name: "lambda",
            reason: format!(
                "must be a positive multiple of dt = {}, got {lambda}",
                grid.dt()
            ),
        });
    }
    if w >= schedule.mode_count() {
        return Err(Error::BadMode {
            mode: w,
            mode_count: schedule.mode_count(),
        });
    }
    let cells = cells as usize;
    let end = cell + cells;
    if end > schedule.n_cells() {
        return Err(Error::OutOfRange {
            start: cell,
            end,
            n_cells: schedule.n_cells(),
        });
    }
    if schedule.modes()[cell..end].iter().all(|&m| m == w) {
        return Ok(0.0);
    }
    let window = CellSet::from_intervals([(cell, end)]);
    let targets = vec![w; schedule.n_cells()];
    let inserted = schedule.flip_set(&window, Some(&targets))?;
    let base = schedule_cost(system, schedule, x0)?;
    let perturbed = schedule_cost(system, &inserted, x0)?;
    Ok((perturbed - base) / grid.measure(cells))
}

/// Random `(cell, w)` probes with `w` different from the cell's mode,
/// each compared at `lambda = dt`.
pub fn random_fd_probes(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    x0: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<FdProbe>> {
    let traj = simulate_state(system, schedule, x0)?;
    let costate = integrate_costate(system, schedule, &traj)?;
    let dt = schedule.grid().dt();
    let n = schedule.n_cells();
    let m = schedule.mode_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    (0..count)
        .map(|_| {
            let cell = rng.random_range(0..n);
            let current = schedule.mode(cell);
            let w = (current + rng.random_range(1..m)) % m;
            let analytic = cell_insertion_gradient(system, schedule, &traj, &costate, cell, w);
            let fd = fd_insertion_gradient(system, schedule, x0, cell, w, dt)?;
            Ok(FdProbe::new(cell, w, analytic, fd, dt))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FdSummary {
    pub probes: usize,
    /// Probes whose relative error is defined.
    pub evaluated: usize,
    pub within_tolerance: usize,
    pub max_rel_error: f64,
    pub worst: Option<FdProbe>,
}

pub fn summarize_probes(probes: &[FdProbe], tol: f64) -> FdSummary {
    let evaluated: Vec<&FdProbe> = probes.iter().filter(|p| p.rel_error.is_some()).collect();
    let worst = evaluated
        .iter()
        .max_by(|a, b| a.rel_error.unwrap().total_cmp(&b.rel_error.unwrap()))
        .map(|p| (*p).clone());
    FdSummary {
        probes: probes.len(),
        evaluated: evaluated.len(),
        within_tolerance: evaluated
            .iter()
            .filter(|p| p.rel_error.unwrap() <= tol)
            .count(),
        max_rel_error: worst.as_ref().and_then(|p| p.rel_error).unwrap_or(0.0),
        worst,
    }
}
