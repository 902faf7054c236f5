use crate::error::{Error, Result};

/// Uniform time grid on `[0, T]`.
///
/// Cell `i` covers the half-open interval `[i*dt, (i+1)*dt)`; samples are
/// indexed `0..=N`. The step is recomputed as `T / N` so that `N * dt`
/// reproduces the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    dt: f64,
    n_cells: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon < 0.0 {
            return Err(Error::BadGrid(format!(
                "horizon must be >= 0, got {horizon}"
            )));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::BadGrid(format!("dt must be > 0, got {dt}")));
        }
        let n = (horizon / dt).round();
        if n > u32::MAX as f64 {
            return Err(Error::BadGrid(format!("{n} cells is too many")));
        }
        let n_cells = n as usize;
        let dt = if n_cells == 0 {
            dt
        } else {
            horizon / n_cells as f64
        };
        Ok(Self {
            horizon,
            dt,
            n_cells,
        })
    }

    /// Grid with exactly `n_cells` cells of width `dt`.
    pub fn with_cells(n_cells: usize, dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::BadGrid(format!("dt must be > 0, got {dt}")));
        }
        Ok(Self {
            horizon: n_cells as f64 * dt,
            dt,
            n_cells,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_samples(&self) -> usize {
        self.n_cells + 1
    }

    /// Time of sample `i` (left edge of cell `i`).
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Index of the cell containing time `t`, clamped to the last cell.
    pub fn cell_at(&self, t: f64) -> usize {
        let i = (t / self.dt + 1e-9).floor().max(0.0) as usize;
        i.min(self.n_cells.saturating_sub(1))
    }

    /// Number of whole cells in a duration, rounded to nearest.
    pub fn cells_in(&self, duration: f64) -> usize {
        (duration / self.dt).round().max(0.0) as usize
    }

    /// Measure of `cells` grid cells, in seconds.
    pub fn measure(&self, cells: usize) -> f64 {
        cells as f64 * self.dt
    }
}
