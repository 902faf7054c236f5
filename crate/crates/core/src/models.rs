//! Built-in benchmark systems.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::schedule::Schedule;
use crate::system::SwitchedSystem;

const SQRT_DERIV_FLOOR: f64 = 1e-9;

/// Two cascaded tanks fed by a valve with discrete inflow levels.
///
/// `x1` is the upper tank level and `x2` the lower one; outflow follows
/// Torricelli's law, so `f = (v - sqrt(x1), sqrt(x1) - sqrt(x2))`. The
/// running cost `weight * (x2 - target)^2` asks the lower tank to track
/// `target`. Square roots are taken of `max(x, 0)` and their derivatives
/// use `max(x, 1e-9)` under the radical.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleTank {
    pub inflows: Vec<f64>,
    pub target: f64,
    pub weight: f64,
}

impl Default for DoubleTank {
    fn default() -> Self {
        Self {
            inflows: vec![1.0, 2.0],
            target: 3.0,
            weight: 2.0,
        }
    }
}

impl SwitchedSystem for DoubleTank {
    fn state_dim(&self) -> usize {
        2
    }

    fn mode_count(&self) -> usize {
        self.inflows.len()
    }

    fn vector_field(&self, x: &[f64], mode: usize, out: &mut [f64]) {
        let r1 = x[0].max(0.0).sqrt();
        let r2 = x[1].max(0.0).sqrt();
        out[0] = self.inflows[mode] - r1;
        out[1] = r1 - r2;
    }

    fn jacobian(&self, x: &[f64], _mode: usize, out: &mut [f64]) {
        let d1 = 0.5 / x[0].max(SQRT_DERIV_FLOOR).sqrt();
        let d2 = 0.5 / x[1].max(SQRT_DERIV_FLOOR).sqrt();
        out[0] = -d1;
        out[1] = 0.0;
        out[2] = d1;
        out[3] = -d2;
    }

    fn running_cost(&self, x: &[f64]) -> f64 {
        let e = x[1] - self.target;
        self.weight * e * e
    }

    fn cost_gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = 2.0 * self.weight * (x[1] - self.target);
    }

    fn mode_label(&self, mode: usize) -> String {
        format!("{}", self.inflows[mode])
    }
}

/// `f(x, v) = A_v x + b_v` with running cost `(x - r)^T Q (x - r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedLinear {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    q: Vec<f64>,
    reference: Vec<f64>,
    n: usize,
}

impl SwitchedLinear {
    /// `matrices[v]` and `q` are row-major nested vectors; `reference`
    /// defaults to the origin.
    pub fn new(
        matrices: Vec<Vec<Vec<f64>>>,
        offsets: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        reference: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = q.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("Q is empty".into()));
        }
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&q) {
            return Err(Error::DimensionMismatch(format!("Q must be {n}x{n}")));
        }
        if matrices.len() != offsets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} mode matrices but {} offsets",
                matrices.len(),
                offsets.len()
            )));
        }
        if matrices.len() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "need at least 2 modes, got {}",
                matrices.len()
            )));
        }
        for (v, (m, b)) in matrices.iter().zip(&offsets).enumerate() {
            if !square(m) {
                return Err(Error::DimensionMismatch(format!(
                    "A for mode {v} must be {n}x{n}"
                )));
            }
            if b.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "b for mode {v} must have {n} entries"
                )));
            }
        }
        let reference = reference.unwrap_or_else(|| vec![0.0; n]);
        if reference.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "reference must have {n} entries"
            )));
        }
        let flat = |m: Vec<Vec<f64>>| m.into_iter().flatten().collect::<Vec<_>>();
        Ok(Self {
            a: matrices.into_iter().map(flat).collect(),
            b: offsets,
            q: flat(q),
            reference,
            n,
        })
    }

    /// Scalar modes `xdot = a_v x + b_v` with cost `(x - r)^2`.
    pub fn scalar(a: &[f64], b: &[f64], reference: f64) -> Result<Self> {
        Self::new(
            a.iter().map(|&ai| vec![vec![ai]]).collect(),
            b.iter().map(|&bi| vec![bi]).collect(),
            vec![vec![1.0]],
            Some(vec![reference]),
        )
    }
}

impl SwitchedSystem for SwitchedLinear {
    fn state_dim(&self) -> usize {
        self.n
    }

    fn mode_count(&self) -> usize {
        self.a.len()
    }

    fn vector_field(&self, x: &[f64], mode: usize, out: &mut [f64]) {
        let a = &self.a[mode];
        for r in 0..self.n {
            let row = &a[r * self.n..(r + 1) * self.n];
            out[r] = row.iter().zip(x).map(|(m, xi)| m * xi).sum::<f64>() + self.b[mode][r];
        }
    }

    fn jacobian(&self, _x: &[f64], mode: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.a[mode]);
    }

    fn running_cost(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for r in 0..n {
            let er = x[r] - self.reference[r];
            for c in 0..n {
                acc += er * self.q[r * n + c] * (x[c] - self.reference[c]);
            }
        }
        acc
    }

    fn cost_gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let mut g = 0.0;
            for c in 0..n {
                g += (self.q[k * n + c] + self.q[c * n + k]) * (x[c] - self.reference[c]);
            }
            out[k] = g;
        }
    }
}

/// A system bundled with the defaults of its benchmark problem.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub system: Arc<dyn SwitchedSystem>,
    pub x0: Vec<f64>,
    pub grid: TimeGrid,
    pub initial_schedule: Schedule,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("x0", &self.x0)
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

/// Double tank with inflows {1, 2}, `x0 = (2, 2)`, `T = 20`, `dt = 0.01`
/// and the initial schedule `v = 1` on `[0, 10)`, `v = 2` on `[10, 20)`.
pub fn make_double_tank() -> ModelSpec {
    let grid = TimeGrid::new(20.0, 0.01).expect("static grid");
    let initial_schedule =
        Schedule::from_blocks(&[(0, 10.0), (1, 10.0)], 2, grid).expect("static blocks");
    ModelSpec {
        name: "double_tank".into(),
        system: Arc::new(DoubleTank::default()),
        x0: vec![2.0, 2.0],
        grid,
        initial_schedule,
    }
}

pub fn make_switched_linear(
    matrices: Vec<Vec<Vec<f64>>>,
    offsets: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    reference: Option<Vec<f64>>,
) -> Result<SwitchedLinear> {
    SwitchedLinear::new(matrices, offsets, q, reference)
}

/// Three scalar modes `xdot = v - x`, `v in {0, 1, 2}`, cost `(x - 1.5)^2`,
/// started at rest from `x0 = 0` with `v = 0` held on ten cells of `[0, 1)`.
pub fn make_trimodal_example() -> ModelSpec {
    let system =
        SwitchedLinear::scalar(&[-1.0, -1.0, -1.0], &[0.0, 1.0, 2.0], 1.5).expect("static model");
    let grid = TimeGrid::new(1.0, 0.1).expect("static grid");
    ModelSpec {
        name: "trimodal".into(),
        system: Arc::new(system),
        x0: vec![0.0],
        grid,
        initial_schedule: Schedule::constant(0, 3, grid).expect("static schedule"),
    }
}

/// Scalar bimodal tracking problem `xdot = v - x`, `v in {0, 2}`,
/// cost `(x - 1)^2`.
pub fn make_scalar_tracking(x0: f64, horizon: f64, dt: f64) -> Result<ModelSpec> {
    let system = SwitchedLinear::scalar(&[-1.0, -1.0], &[0.0, 2.0], 1.0)?;
    let grid = TimeGrid::new(horizon, dt)?;
    Ok(ModelSpec {
        name: "scalar_tracking".into(),
        system: Arc::new(system),
        x0: vec![x0],
        grid,
        initial_schedule: Schedule::constant(0, 2, grid)?,
    })
}
