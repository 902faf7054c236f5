//! Forward state simulation, cost evaluation, and backward costate
//! integration on a uniform grid.
//!
//! The three schemes are chosen to be mutually consistent: forward Euler
//! for the state, a left Riemann sum for the cost, and the backward
//! recursion for the costate that is the exact adjoint of those two. With
//! this choice `p(t_{i+1})` is the derivative of the discrete cost with
//! respect to the sample `x(t_{i+1})`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::schedule::Schedule;
use crate::system::SwitchedSystem;

/// Flat storage of `N + 1` vectors of dimension `n`.
#[derive(Debug, Clone, PartialEq)]
struct Samples {
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    fn zeros(dim: usize, count: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * count],
        }
    }

    fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Samples,
    grid: TimeGrid,
}

impl Trajectory {
    /// State `x(t_i)`.
    pub fn state(&self, i: usize) -> &[f64] {
        self.samples.get(i)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.dim
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostatePath {
    samples: Samples,
    grid: TimeGrid,
}

impl CostatePath {
    /// Costate `p(t_i)`.
    pub fn costate(&self, i: usize) -> &[f64] {
        self.samples.get(i)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.dim
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
}

fn check_finite(x: &[f64], sample: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState { sample })
    }
}

/// Forward Euler: `x[i+1] = x[i] + dt * f(x[i], mode(cell i))`.
pub fn simulate_state(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    x0: &[f64],
) -> Result<Trajectory> {
    let n = system.state_dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "x0 has {} components, system state has {n}",
            x0.len()
        )));
    }
    if schedule.mode_count() != system.mode_count() {
        return Err(Error::DimensionMismatch(format!(
            "schedule has {} modes, system has {}",
            schedule.mode_count(),
            system.mode_count()
        )));
    }
    check_finite(x0, 0)?;

    let grid = *schedule.grid();
    let dt = grid.dt();
    let mut samples = Samples::zeros(n, grid.n_samples());
    samples.data[..n].copy_from_slice(x0);
    let mut f = vec![0.0; n];

    for (i, &mode) in schedule.modes().iter().enumerate() {
        let (head, tail) = samples.data.split_at_mut((i + 1) * n);
        let x = &head[i * n..];
        system.vector_field(x, mode, &mut f);
        let next = &mut tail[..n];
        for k in 0..n {
            next[k] = x[k] + dt * f[k];
        }
        check_finite(next, i + 1)?;
    }
    Ok(Trajectory { samples, grid })
}

/// Left Riemann sum `J = sum_{i<N} L(x(t_i)) * dt`.
pub fn evaluate_cost(system: &dyn SwitchedSystem, trajectory: &Trajectory) -> f64 {
    evaluate_cost_over(system, trajectory, 0..trajectory.grid.n_cells())
}

/// Left Riemann sum restricted to a range of cells.
pub fn evaluate_cost_over(
    system: &dyn SwitchedSystem,
    trajectory: &Trajectory,
    cells: Range<usize>,
) -> f64 {
    let sum: f64 = cells
        .map(|i| system.running_cost(trajectory.state(i)))
        .sum();
    sum * trajectory.grid.dt()
}

/// Simulates `schedule` from `x0` and returns its cost.
///
/// Every cost comparison in the optimizer and the oracles goes through
/// this function.
pub fn schedule_cost(system: &dyn SwitchedSystem, schedule: &Schedule, x0: &[f64]) -> Result<f64> {
    let traj = simulate_state(system, schedule, x0)?;
    Ok(evaluate_cost(system, &traj))
}

/// Backward recursion for the costate with `p(T) = 0`:
///
/// `p[i] = p[i+1] + dt * (A_i^T p[i+1] + grad L(x[i]))`, where `A_i` is the
/// Jacobian of `f(., mode(cell i))` at the left sample `x[i]`.
pub fn integrate_costate(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    trajectory: &Trajectory,
) -> Result<CostatePath> {
    let n = system.state_dim();
    let grid = *trajectory.grid();
    if trajectory.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "trajectory dimension {} vs system {n}",
            trajectory.dim()
        )));
    }
    if schedule.n_cells() != grid.n_cells() {
        return Err(Error::LengthMismatch {
            expected: grid.n_cells(),
            found: schedule.n_cells(),
        });
    }
    let dt = grid.dt();
    let mut samples = Samples::zeros(n, grid.n_samples());
    let mut jac = vec![0.0; n * n];
    let mut grad = vec![0.0; n];

    for i in (0..grid.n_cells()).rev() {
        let x = trajectory.state(i);
        system.jacobian(x, schedule.mode(i), &mut jac);
        system.cost_gradient(x, &mut grad);
        let (head, tail) = samples.data.split_at_mut((i + 1) * n);
        let next = &tail[..n];
        let cur = &mut head[i * n..];
        for k in 0..n {
            // (A^T p)_k = sum_r A[r][k] p[r]
            let mut atp = 0.0;
            for r in 0..n {
                atp += jac[r * n + k] * next[r];
            }
            cur[k] = next[k] + dt * (atp + grad[k]);
        }
        check_finite(cur, i)?;
    }
    Ok(CostatePath { samples, grid })
}
