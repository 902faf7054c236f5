//! Empirical probes of the regularity of the cost and of the insertion
//! gradient under flips of shrinking length.
//!
//! Inside a constant-mode block `[s1, s2)`, flipping `[s1, s1 + gamma)`
//! should make the cost a smooth function of `gamma` (bounded second
//! differences), and should move the insertion gradient at any later time
//! `s >= s2` by at most `K * gamma`. For flip sets made of several such
//! intervals, the bound is `K * mu(S)`.

use serde::Serialize;

use crate::dynamics::{integrate_costate, schedule_cost, simulate_state};
use crate::error::{Error, Result};
use crate::gradient::gradient_profile;
use crate::schedule::{CellSet, Schedule};
use crate::system::SwitchedSystem;

#[derive(Debug, Clone)]
pub struct SmoothnessProbe {
    /// Constant-mode cell interval `[s1, s2)` whose left part is flipped.
    pub interval: (usize, usize),
    /// Flip lengths in seconds; each must be a whole number of cells.
    pub gammas: Vec<f64>,
    /// Cell `s >= s2` at which the insertion gradient is compared.
    pub probe_cell: usize,
    /// Start cell of a second flipped interval for the multi-interval
    /// check; it must also sit inside a constant-mode block and end before
    /// `probe_cell`.
    pub second_start: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    pub gammas: Vec<f64>,
    /// `J(2 gamma) - 2 J(gamma) + J(0)`.
    pub cost_second_deltas: Vec<f64>,
    /// `cost_second_deltas / gamma^2`; `None` at `gamma = 0`.
    pub second_difference_quotients: Vec<Option<f64>>,
    /// `|D_{sigma(gamma), s} - D_{sigma, s}|`.
    pub gradient_deltas: Vec<f64>,
    /// `gradient_deltas / gamma`.
    pub lipschitz_ratios: Vec<Option<f64>>,
    /// Same as `gradient_deltas` for the two-interval flip set.
    pub multi_deltas: Vec<f64>,
    /// `multi_deltas / mu(S)`.
    pub multi_ratios: Vec<Option<f64>>,
}

/// True when every value lies within `[median / factor, median * factor]`
/// in magnitude. An all-zero sequence passes.
pub fn within_factor_of_median(values: &[f64], factor: f64) -> bool {
    if values.is_empty() {
        return true;
    }
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let mid = mags.len() / 2;
    let median = if mags.len() % 2 == 1 {
        mags[mid]
    } else {
        0.5 * (mags[mid - 1] + mags[mid])
    };
    if median == 0.0 {
        return mags.iter().all(|&v| v == 0.0);
    }
    mags.iter()
        .all(|&v| v <= factor * median && v >= median / factor)
}

impl SmoothnessReport {
    fn defined(v: &[Option<f64>]) -> Vec<f64> {
        v.iter().flatten().copied().collect()
    }

    pub fn second_differences_bounded(&self, factor: f64) -> bool {
        let q = Self::defined(&self.second_difference_quotients);
        q.iter().all(|v| v.is_finite()) && within_factor_of_median(&q, factor)
    }

    pub fn lipschitz_uniform(&self, factor: f64) -> bool {
        within_factor_of_median(&Self::defined(&self.lipschitz_ratios), factor)
    }

    pub fn multi_uniform(&self, factor: f64) -> bool {
        within_factor_of_median(&Self::defined(&self.multi_ratios), factor)
    }
}

fn is_constant(schedule: &Schedule, a: usize, b: usize) -> bool {
    b <= schedule.n_cells()
        && schedule.modes()[a..b]
            .iter()
            .all(|&m| m == schedule.mode(a))
}

fn flip_targets(schedule: &Schedule) -> Vec<usize> {
    // the flip sends each cell to the next mode (complement when bimodal)
    schedule
        .modes()
        .iter()
        .map(|&m| (m + 1) % schedule.mode_count())
        .collect()
}

fn d_at(system: &dyn SwitchedSystem, schedule: &Schedule, x0: &[f64], cell: usize) -> Result<f64> {
    let traj = simulate_state(system, schedule, x0)?;
    let p = integrate_costate(system, schedule, &traj)?;
    Ok(gradient_profile(system, schedule, &traj, &p).value(cell))
}

pub fn smoothness_probe(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    x0: &[f64],
    probe: &SmoothnessProbe,
) -> Result<SmoothnessReport> {
    let (s1, s2) = probe.interval;
    let grid = *schedule.grid();
    let bad = || Error::BadInterval { start: s1, end: s2 };
    if s1 >= s2
        || !is_constant(schedule, s1, s2)
        || probe.probe_cell < s2
        || probe.probe_cell >= schedule.n_cells()
    {
        return Err(bad());
    }
    let cells_of = |gamma: f64| -> Result<usize> {
        let c = grid.cells_in(gamma);
        if gamma < 0.0 || (grid.measure(c) - gamma).abs() > 1e-9 {
            return Err(Error::BadParameter {
                name: "gamma",
                reason: format!("{gamma} is not a whole number of cells"),
            });
        }
        Ok(c)
    };
    let targets = flip_targets(schedule);
    let flipped = |sets: &[(usize, usize)]| {
        schedule.flip_set(
            &CellSet::from_intervals(sets.iter().copied()),
            Some(&targets),
        )
    };

    let j0 = schedule_cost(system, schedule, x0)?;
    let d0 = d_at(system, schedule, x0, probe.probe_cell)?;

    let mut report = SmoothnessReport {
        gammas: probe.gammas.clone(),
        cost_second_deltas: Vec::new(),
        second_difference_quotients: Vec::new(),
        gradient_deltas: Vec::new(),
        lipschitz_ratios: Vec::new(),
        multi_deltas: Vec::new(),
        multi_ratios: Vec::new(),
    };

    for &gamma in &probe.gammas {
        let c = cells_of(gamma)?;
        if s1 + 2 * c > s2 {
            return Err(bad());
        }
        let ratio = |delta: f64, measure: f64| (c > 0).then(|| delta / measure);

        let j1 = schedule_cost(system, &flipped(&[(s1, s1 + c)])?, x0)?;
        let j2 = schedule_cost(system, &flipped(&[(s1, s1 + 2 * c)])?, x0)?;
        let second = j2 - 2.0 * j1 + j0;
        report.cost_second_deltas.push(second);
        report
            .second_difference_quotients
            .push(ratio(second, gamma * gamma));

        let d1 = d_at(system, &flipped(&[(s1, s1 + c)])?, x0, probe.probe_cell)?;
        let delta = (d1 - d0).abs();
        report.gradient_deltas.push(delta);
        report.lipschitz_ratios.push(ratio(delta, gamma));

        if let Some(t1) = probe.second_start {
            if !is_constant(schedule, t1, t1 + c.max(1))
                || t1 + c > probe.probe_cell
                || (t1 < s1 + c && s1 < t1 + c)
            {
                return Err(Error::BadInterval {
                    start: t1,
                    end: t1 + c,
                });
            }
            let set = [(s1, s1 + c), (t1, t1 + c)];
            let dm = d_at(system, &flipped(&set)?, x0, probe.probe_cell)?;
            let delta = (dm - d0).abs();
            report.multi_deltas.push(delta);
            report.multi_ratios.push(ratio(delta, 2.0 * gamma));
        }
    }
    Ok(report)
}

/// The probe used for the double-tank reference schedule: block `[2, 4]`
/// of the `v = 1` phase, comparison at `t = 5` for single flips and at
/// `t = 8` for the two-interval flip `[2, 2 + gamma) u [6, 6 + gamma)`.
pub fn reference_probes(grid: &crate::grid::TimeGrid) -> (SmoothnessProbe, SmoothnessProbe) {
    let gammas = vec![0.32, 0.16, 0.08, 0.04, 0.02];
    let single = SmoothnessProbe {
        interval: (grid.cell_at(2.0), grid.cell_at(4.0)),
        gammas: gammas.clone(),
        probe_cell: grid.cell_at(5.0),
        second_start: None,
    };
    let multi = SmoothnessProbe {
        interval: (grid.cell_at(2.0), grid.cell_at(4.0)),
        gammas,
        probe_cell: grid.cell_at(8.0),
        second_start: Some(grid.cell_at(6.0)),
    };
    (single, multi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::models::{make_double_tank, SwitchedLinear};

    #[test]
    fn median_factor_rule() {
        assert!(within_factor_of_median(&[1.0, 1.1, 0.9, 2.0], 3.0));
        assert!(!within_factor_of_median(&[1.0, 1.0, 1.0, 4.0], 3.0));
        assert!(!within_factor_of_median(&[1.0, 1.0, 0.2], 3.0));
        assert!(within_factor_of_median(&[0.0, 0.0], 3.0));
        assert!(!within_factor_of_median(&[0.0, 0.0, 1.0], 3.0));
    }

    #[test]
    fn zero_gamma_gives_zero_deltas() {
        let spec = make_double_tank();
        let (mut single, _) = reference_probes(&spec.grid);
        single.gammas = vec![0.0];
        let r = smoothness_probe(
            spec.system.as_ref(),
            &spec.initial_schedule,
            &spec.x0,
            &single,
        )
        .unwrap();
        assert_eq!(r.cost_second_deltas, vec![0.0]);
        assert_eq!(r.gradient_deltas, vec![0.0]);
        assert_eq!(r.second_difference_quotients, vec![None]);
    }

    #[test]
    fn identical_modes_give_zero_deltas() {
        let sys = SwitchedLinear::scalar(&[-1.0, -1.0], &[1.0, 1.0], 0.5).unwrap();
        let g = TimeGrid::new(10.0, 0.01).unwrap();
        let s = Schedule::constant(0, 2, g).unwrap();
        let (single, multi) = reference_probes(&g);
        for p in [single, multi] {
            let r = smoothness_probe(&sys, &s, &[0.0], &p).unwrap();
            assert!(r.cost_second_deltas.iter().all(|&d| d == 0.0));
            assert!(r.gradient_deltas.iter().all(|&d| d == 0.0));
            assert!(r.multi_deltas.iter().all(|&d| d == 0.0));
            assert!(r.lipschitz_uniform(3.0));
        }
    }

    #[test]
    fn interval_across_a_switch_is_rejected() {
        let spec = make_double_tank();
        let g = spec.grid;
        let p = SmoothnessProbe {
            interval: (g.cell_at(9.0), g.cell_at(11.0)),
            gammas: vec![0.02],
            probe_cell: g.cell_at(12.0),
            second_start: None,
        };
        assert!(matches!(
            smoothness_probe(spec.system.as_ref(), &spec.initial_schedule, &spec.x0, &p),
            Err(Error::BadInterval { .. })
        ));
    }

    #[test]
    fn reference_probes_pass() {
        let spec = make_double_tank();
        let (single, multi) = reference_probes(&spec.grid);
        let sys = spec.system.as_ref();
        let r = smoothness_probe(sys, &spec.initial_schedule, &spec.x0, &single).unwrap();
        assert!(r.second_differences_bounded(3.0), "{r:?}");
        assert!(r.lipschitz_uniform(3.0), "{r:?}");
        let r = smoothness_probe(sys, &spec.initial_schedule, &spec.x0, &multi).unwrap();
        assert!(r.multi_uniform(3.0), "{r:?}");
    }
}
