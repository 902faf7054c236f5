//! Mode schedules on a time grid and the flip-set algebra over them.
//!
//! A schedule assigns one mode per grid cell, so it is piecewise constant
//! with at most `N` switches. Subsets of `[0, T]` are represented as unions
//! of whole cells ([`CellSet`]), which makes every measure an integer
//! multiple of `dt`.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    cell_modes: Vec<usize>,
    mode_count: usize,
    grid: TimeGrid,
}

impl Schedule {
    pub fn new(cell_modes: Vec<usize>, mode_count: usize, grid: TimeGrid) -> Result<Self> {
        if cell_modes.len() != grid.n_cells() {
            return Err(Error::LengthMismatch {
                expected: grid.n_cells(),
                found: cell_modes.len(),
            });
        }
        if let Some(&mode) = cell_modes.iter().find(|&&m| m >= mode_count) {
            return Err(Error::BadMode { mode, mode_count });
        }
        Ok(Self {
            cell_modes,
            mode_count,
            grid,
        })
    }

    pub fn constant(mode: usize, mode_count: usize, grid: TimeGrid) -> Result<Self> {
        Self::new(vec![mode; grid.n_cells()], mode_count, grid)
    }

    pub fn modes(&self) -> &[usize] {
        &self.cell_modes
    }

    pub fn mode(&self, cell: usize) -> usize {
        self.cell_modes[cell]
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_cells(&self) -> usize {
        self.cell_modes.len()
    }

    /// Number of maximal constant-mode blocks, `l(sigma)`.
    pub fn switch_count(&self) -> usize {
        1 + self.cell_modes.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Switching times `tau_i`: left edges of cells whose mode differs from
    /// the previous cell.
    pub fn switch_times(&self) -> Vec<f64> {
        (1..self.cell_modes.len())
            .filter(|&i| self.cell_modes[i] != self.cell_modes[i - 1])
            .map(|i| self.grid.time(i))
            .collect()
    }

    /// Maximal runs as `(mode, first_cell, end_cell)` with `end_cell` exclusive.
    pub fn blocks(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.cell_modes.len() {
            if i == self.cell_modes.len() || self.cell_modes[i] != self.cell_modes[start] {
                out.push((self.cell_modes[start], start, i));
                start = i;
            }
        }
        out
    }

    /// Replaces the mode on every cell of `set`.
    ///
    /// Without `targets` the system must be bimodal and each cell takes the
    /// complementary mode. With `targets` (one entry per grid cell), cell
    /// `i` in the set takes `targets[i]`.
    pub fn flip_set(&self, set: &CellSet, targets: Option<&[usize]>) -> Result<Schedule> {
        if let Some(&(start, end)) = set.intervals().last() {
            if end > self.n_cells() {
                return Err(Error::OutOfRange {
                    start,
                    end,
                    n_cells: self.n_cells(),
                });
            }
        }
        if let Some(t) = targets {
            if t.len() != self.n_cells() {
                return Err(Error::LengthMismatch {
                    expected: self.n_cells(),
                    found: t.len(),
                });
            }
        } else if self.mode_count != 2 {
            return Err(Error::BadParameter {
                name: "targets",
                reason: format!(
                    "complement flip needs 2 modes, system has {}",
                    self.mode_count
                ),
            });
        }

        let mut modes = self.cell_modes.clone();
        for cell in set.cells() {
            modes[cell] = match targets {
                Some(t) => {
                    if t[cell] >= self.mode_count {
                        return Err(Error::BadMode {
                            mode: t[cell],
                            mode_count: self.mode_count,
                        });
                    }
                    t[cell]
                }
                None => 1 - modes[cell],
            };
        }
        Ok(Schedule {
            cell_modes: modes,
            mode_count: self.mode_count,
            grid: self.grid,
        })
    }

    /// Builds a schedule from `(mode, duration)` blocks filled left to right.
    ///
    /// Durations must be non-negative and sum to the horizon within `1e-9`.
    /// Each block takes its rounded cell count; the last block absorbs the
    /// rounding remainder.
    pub fn from_blocks(blocks: &[(usize, f64)], mode_count: usize, grid: TimeGrid) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::BadBlocks("no blocks given".into()));
        }
        if let Some((m, d)) = blocks.iter().find(|(_, d)| !d.is_finite() || *d < 0.0) {
            return Err(Error::BadBlocks(format!(
                "block for mode {m} has duration {d}"
            )));
        }
        let total: f64 = blocks.iter().map(|(_, d)| d).sum();
        if (total - grid.horizon()).abs() > 1e-9 {
            return Err(Error::BadBlocks(format!(
                "durations sum to {total}, horizon is {}",
                grid.horizon()
            )));
        }

        let n = grid.n_cells();
        let mut modes = Vec::with_capacity(n);
        let mut elapsed = 0.0;
        for (k, &(mode, duration)) in blocks.iter().enumerate() {
            if mode >= mode_count {
                return Err(Error::BadMode { mode, mode_count });
            }
            elapsed += duration;
            let end = if k + 1 == blocks.len() {
                n
            } else {
                grid.cells_in(elapsed).min(n)
            };
            while modes.len() < end {
                modes.push(mode);
            }
        }
        Schedule::new(modes, mode_count, grid)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks = self.blocks();
        write!(f, "[")?;
        for (k, (mode, a, b)) in blocks.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(
                f,
                "{mode}@{:.4}..{:.4}",
                self.grid.time(*a),
                self.grid.time(*b)
            )?;
        }
        write!(f, "]")
    }
}

/// A finite union of whole grid cells, stored as sorted, disjoint,
/// non-adjacent half-open index intervals `[a, b)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CellSet {
    intervals: Vec<(usize, usize)>,
}

impl CellSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a set from cell indices in any order; duplicates are ignored.
    pub fn from_cells<I: IntoIterator<Item = usize>>(cells: I) -> Self {
        let mut v: Vec<usize> = cells.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        let mut intervals: Vec<(usize, usize)> = Vec::new();
        for c in v {
            match intervals.last_mut() {
                Some(last) if last.1 == c => last.1 = c + 1,
                _ => intervals.push((c, c + 1)),
            }
        }
        Self { intervals }
    }

    /// Builds a set from possibly overlapping intervals; empty ones are dropped.
    pub fn from_intervals<I: IntoIterator<Item = (usize, usize)>>(intervals: I) -> Self {
        let mut v: Vec<(usize, usize)> = intervals.into_iter().filter(|(a, b)| a < b).collect();
        v.sort_unstable();
        let mut merged: Vec<(usize, usize)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Self { intervals: merged }
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn cell_count(&self) -> usize {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Lebesgue measure in seconds.
    pub fn measure(&self, dt: f64) -> f64 {
        self.cell_count() as f64 * dt
    }

    pub fn contains(&self, cell: usize) -> bool {
        let idx = self.intervals.partition_point(|&(_, b)| b <= cell);
        self.intervals.get(idx).is_some_and(|&(a, _)| a <= cell)
    }

    /// Cells in ascending order.
    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.intervals.iter().flat_map(|&(a, b)| a..b)
    }

    pub fn first_cell(&self) -> Option<usize> {
        self.intervals.first().map(|i| i.0)
    }

    pub fn last_cell(&self) -> Option<usize> {
        self.intervals.last().map(|i| i.1 - 1)
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        CellSet::from_intervals(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    pub fn is_subset_of(&self, other: &CellSet) -> bool {
        self.cells().all(|c| other.contains(c))
    }

    pub fn is_disjoint(&self, other: &CellSet) -> bool {
        self.cells().all(|c| !other.contains(c))
    }
}
