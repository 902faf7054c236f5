//! Insertion gradients, the optimality function, and its level sets.
//!
//! The insertion gradient `D(s, w) = p^T (f(x(s), w) - f(x(s), v(s)))` is
//! the one-sided derivative of the cost with respect to inserting mode `w`
//! on `[s, s + lambda)` as `lambda -> 0`. On the grid, cell `i` pairs the
//! left state sample `x(t_i)` with the costate `p(t_{i+1})`: a flip of cell
//! `i` perturbs `x(t_{i+1})` by `dt * (f(x_i, w) - f(x_i, v_i))`, and
//! `p(t_{i+1})` is exactly the derivative of the discrete cost with respect
//! to that sample. The last cell therefore always has `D = 0`, matching the
//! fact that its mode never enters the left Riemann sum.

use crate::dynamics::{CostatePath, Trajectory};
use crate::error::{Error, Result};
use crate::schedule::{CellSet, Schedule};
use crate::system::SwitchedSystem;

/// `p^T (f(x, w) - f(x, current))`; exactly zero when `w == current`.
pub fn insertion_gradient_at(
    system: &dyn SwitchedSystem,
    x: &[f64],
    p: &[f64],
    current_mode: usize,
    w: usize,
) -> f64 {
    if w == current_mode {
        return 0.0;
    }
    let n = system.state_dim();
    let mut fw = vec![0.0; n];
    let mut fv = vec![0.0; n];
    system.vector_field(x, w, &mut fw);
    system.vector_field(x, current_mode, &mut fv);
    p.iter()
        .zip(fw.iter().zip(&fv))
        .map(|(pk, (a, b))| pk * (a - b))
        .sum()
}

/// Insertion gradient of mode `w` on grid cell `cell`, using the same
/// state/costate pairing as [`gradient_profile`].
pub fn cell_insertion_gradient(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    trajectory: &Trajectory,
    costate: &CostatePath,
    cell: usize,
    w: usize,
) -> f64 {
    insertion_gradient_at(
        system,
        trajectory.state(cell),
        costate.costate(cell + 1),
        schedule.mode(cell),
        w,
    )
}

/// Per-cell minima of the insertion gradient over all modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientProfile {
    values: Vec<f64>,
    w_star: Vec<usize>,
    d_sigma: f64,
    argmin_cell: Option<usize>,
}

impl GradientProfile {
    /// Assembles a profile from per-cell minima and minimizing modes.
    ///
    /// Panics if the lengths differ.
    pub fn from_parts(values: Vec<f64>, w_star: Vec<usize>) -> Self {
        assert_eq!(values.len(), w_star.len(), "profile length mismatch");
        let mut d_sigma = 0.0;
        let mut argmin_cell = None;
        for (i, &v) in values.iter().enumerate() {
            if argmin_cell.is_none() || v < d_sigma {
                d_sigma = v;
                argmin_cell = Some(i);
            }
        }
        Self {
            values,
            w_star,
            d_sigma,
            argmin_cell,
        }
    }

    /// `D_{sigma,s}` for every cell.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    /// Minimizing mode per cell (lowest index on ties).
    pub fn w_star(&self) -> &[usize] {
        &self.w_star
    }

    /// The optimality function `D_sigma = min_s D_{sigma,s}`.
    pub fn d_sigma(&self) -> f64 {
        self.d_sigma
    }

    /// First cell attaining `D_sigma`; `None` on an empty grid.
    pub fn argmin_cell(&self) -> Option<usize> {
        self.argmin_cell
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn gradient_profile(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    trajectory: &Trajectory,
    costate: &CostatePath,
) -> GradientProfile {
    let n = system.state_dim();
    let m = system.mode_count();
    let cells = schedule.n_cells();
    let mut fv = vec![0.0; n];
    let mut fw = vec![0.0; n];
    let mut values = Vec::with_capacity(cells);
    let mut w_star = Vec::with_capacity(cells);

    for i in 0..cells {
        let x = trajectory.state(i);
        let p = costate.costate(i + 1);
        let v = schedule.mode(i);
        system.vector_field(x, v, &mut fv);
        let mut best = 0.0;
        let mut best_w = v;
        for w in 0..m {
            if w == v {
                // D(s, v(s)) = 0 is the initial candidate
                continue;
            }
            system.vector_field(x, w, &mut fw);
            let d: f64 = p
                .iter()
                .zip(fw.iter().zip(&fv))
                .map(|(pk, (a, b))| pk * (a - b))
                .sum();
            if d < best || (d == best && w < best_w) {
                best = d;
                best_w = w;
            }
        }
        values.push(best);
        w_star.push(best_w);
    }
    GradientProfile::from_parts(values, w_star)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::BadParameter {
            name: "eta",
            reason: format!("must lie in (0, 1), got {eta}"),
        })
    }
}

/// Cells with `D_{sigma,s} <= eta * D_sigma`, merged into maximal intervals.
///
/// Always contains the argmin cell. Fails with `NotDescendable` when
/// `D_sigma >= 0`.
pub fn eta_level_set(profile: &GradientProfile, eta: f64) -> Result<CellSet> {
    check_eta(eta)?;
    let d = profile.d_sigma();
    if !(d < 0.0) {
        return Err(Error::NotDescendable { d_sigma: d });
    }
    let threshold = eta * d;
    Ok(CellSet::from_cells(
        profile
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= threshold)
            .map(|(i, _)| i),
    ))
}

/// Cells with strictly negative `D_{sigma,s}`: the `eta -> 0+` limit of
/// [`eta_level_set`].
pub fn negative_set(profile: &GradientProfile) -> CellSet {
    CellSet::from_cells(
        profile
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < 0.0)
            .map(|(i, _)| i),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_costate, simulate_state};
    use crate::grid::TimeGrid;
    use crate::models::{make_double_tank, make_trimodal_example, SwitchedLinear};
    use proptest::prelude::*;

    #[test]
    fn same_mode_is_exactly_zero() {
        let spec = make_double_tank();
        let sys = spec.system.as_ref();
        assert_eq!(
            insertion_gradient_at(sys, &[2.3, 1.7], &[-5.0, 3.0], 1, 1),
            0.0
        );
        for w in 0..2 {
            assert_eq!(
                insertion_gradient_at(sys, &[2.3, 1.7], &[0.0, 0.0], 0, w),
                0.0
            );
        }
    }

    #[test]
    fn hand_computed_single_cell() {
        // f(x, v) = (v - sqrt(x1), sqrt(x1) - sqrt(x2)); only the first
        // component depends on v, so D = p1 * (v_w - v_current).
        let spec = make_double_tank();
        let sys = spec.system.as_ref();
        let d = insertion_gradient_at(sys, &[2.0, 2.0], &[-1.5, 0.25], 0, 1);
        assert!((d - (-1.5 * (2.0 - 1.0))).abs() < 1e-15);

        // profile on a one-cell grid pairs x(t_0) with p(t_1) = 0
        let g = TimeGrid::new(0.01, 0.01).unwrap();
        let s = crate::schedule::Schedule::constant(0, 2, g).unwrap();
        let t = simulate_state(sys, &s, &[2.0, 2.0]).unwrap();
        let p = integrate_costate(sys, &s, &t).unwrap();
        let prof = gradient_profile(sys, &s, &t, &p);
        assert_eq!(prof.values(), &[0.0]);
        assert_eq!(prof.w_star(), &[0]);
    }

    #[test]
    fn identical_modes_give_zero_profile() {
        let sys = SwitchedLinear::scalar(&[-1.0, -1.0], &[0.5, 0.5], 0.0).unwrap();
        let g = TimeGrid::new(2.0, 0.01).unwrap();
        let s = crate::schedule::Schedule::from_blocks(&[(0, 1.0), (1, 1.0)], 2, g).unwrap();
        let t = simulate_state(&sys, &s, &[3.0]).unwrap();
        let p = integrate_costate(&sys, &s, &t).unwrap();
        let prof = gradient_profile(&sys, &s, &t, &p);
        assert!(prof.values().iter().all(|&v| v == 0.0));
        assert_eq!(prof.d_sigma(), 0.0);
        assert_eq!(prof.argmin_cell(), Some(0));
        assert!(matches!(
            eta_level_set(&prof, 0.5),
            Err(Error::NotDescendable { .. })
        ));
    }

    #[test]
    fn threshold_arithmetic() {
        let prof = GradientProfile::from_parts(vec![-4.0, -1.0, -3.0, 0.0], vec![1, 1, 1, 0]);
        assert_eq!(prof.d_sigma(), -4.0);
        assert_eq!(prof.argmin_cell(), Some(0));
        let s = eta_level_set(&prof, 0.6).unwrap();
        assert_eq!(s.cells().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(s.measure(1.0), 2.0);
        assert_eq!(
            negative_set(&prof).cells().collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        assert!(eta_level_set(&prof, 1.0).is_err());
        assert!(eta_level_set(&prof, 0.0).is_err());
    }

    #[test]
    fn argmin_ties_resolve_to_first_cell() {
        let prof = GradientProfile::from_parts(vec![0.0, -2.0, -2.0], vec![0, 1, 1]);
        assert_eq!(prof.argmin_cell(), Some(1));
    }

    #[test]
    fn trimodal_argmin_picks_smallest_input_for_positive_costate() {
        let spec = make_trimodal_example();
        let sys = spec.system.as_ref();
        // f = v - x is increasing in v, so with p > 0 the smallest v wins
        for current in 0..3 {
            let d: Vec<f64> = (0..3)
                .map(|w| insertion_gradient_at(sys, &[0.4], &[0.7], current, w))
                .collect();
            let best = (0..3)
                .min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap())
                .unwrap();
            assert_eq!(best, 0);
            assert!((0..3).all(|w| insertion_gradient_at(sys, &[0.4], &[0.0], current, w) == 0.0));
        }
    }

    #[test]
    fn reference_profile_values() {
        let spec = make_double_tank();
        let sys = spec.system.as_ref();
        let t = simulate_state(sys, &spec.initial_schedule, &spec.x0).unwrap();
        let p = integrate_costate(sys, &spec.initial_schedule, &t).unwrap();
        let prof = gradient_profile(sys, &spec.initial_schedule, &t, &p);
        assert!(prof.values().iter().all(|&v| v <= 0.0));
        assert!(
            (prof.d_sigma() - (-14.92)).abs() <= 0.05 * 14.92,
            "{}",
            prof.d_sigma()
        );
        let set = eta_level_set(&prof, 0.6).unwrap();
        assert!(set.contains(prof.argmin_cell().unwrap()));
        assert_eq!(prof.value(spec.grid.n_cells() - 1), 0.0);
    }

    proptest! {
        #[test]
        fn level_sets_nest_and_contain_argmin(
            values in proptest::collection::vec(-10.0f64..0.0, 1..200),
            e1 in 0.01f64..0.99,
            e2 in 0.01f64..0.99,
        ) {
            let n = values.len();
            let prof = GradientProfile::from_parts(values, vec![0; n]);
            prop_assume!(prof.d_sigma() < 0.0);
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let s_lo = eta_level_set(&prof, lo).unwrap();
            let s_hi = eta_level_set(&prof, hi).unwrap();
            prop_assert!(s_hi.is_subset_of(&s_lo));
            prop_assert!(s_hi.contains(prof.argmin_cell().unwrap()));
            prop_assert!(s_lo.is_subset_of(&negative_set(&prof)));
        }
    }
}
