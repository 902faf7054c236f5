//! Exhaustive search over all cell assignments of a small grid.

use rayon::prelude::*;

use crate::dynamics::schedule_cost;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::schedule::Schedule;
use crate::system::SwitchedSystem;

/// Upper bound on the number of simulated schedules.
pub const BRUTE_FORCE_BUDGET: u128 = 1 << 20;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub schedule: Schedule,
    pub cost: f64,
    pub candidates: u64,
}

fn decode(mut index: u64, n_cells: usize, m: u64) -> Vec<usize> {
    // cell 0 is the most significant digit, so index order is lexicographic
    let mut modes = vec![0usize; n_cells];
    for slot in modes.iter_mut().rev() {
        *slot = (index % m) as usize;
        index /= m;
    }
    modes
}

/// Enumerates all `m^N` schedules and returns the cheapest one; ties go to
/// the lexicographically smallest mode sequence.
pub fn brute_force_best_schedule(
    system: &dyn SwitchedSystem,
    x0: &[f64],
    grid: TimeGrid,
) -> Result<BruteForceResult> {
    let m = system.mode_count() as u128;
    let n = grid.n_cells();
    let candidates = m.checked_pow(n as u32).unwrap_or(u128::MAX);
    if candidates > BRUTE_FORCE_BUDGET {
        return Err(Error::BudgetExceeded {
            candidates,
            budget: BRUTE_FORCE_BUDGET,
        });
    }
    let mode_count = system.mode_count();
    let total = candidates as u64;

    let best = (0..total)
        .into_par_iter()
        .map(|idx| {
            let s = Schedule::new(decode(idx, n, m as u64), mode_count, grid)?;
            let cost = match schedule_cost(system, &s, x0) {
                Ok(c) if c.is_finite() => c,
                Ok(_) | Err(Error::NonFiniteState { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            Ok((cost, idx))
        })
        .try_reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| {
                Ok(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                })
            },
        )?;

    let schedule = Schedule::new(decode(best.1, n, m as u64), mode_count, grid)?;
    Ok(BruteForceResult {
        schedule,
        cost: best.0,
        candidates: total,
    })
}
