use serde::Serialize;

use crate::error::{Error, Result};

/// A switched system `xdot = f(x, v)` over a finite mode set, together with
/// the running cost `L(x)` of the criterion `J = integral of L(x(t)) dt`.
///
/// Implementors must supply twice continuously differentiable fields and
/// cost (at least on the region visited by trajectories) along with their
/// exact first derivatives. [`check_jacobians`] compares the supplied
/// derivatives against central differences.
pub trait SwitchedSystem: Send + Sync {
    fn state_dim(&self) -> usize;

    fn mode_count(&self) -> usize;

    /// Writes `f(x, mode)` into `out`.
    fn vector_field(&self, x: &[f64], mode: usize, out: &mut [f64]);

    /// Writes the row-major `n x n` Jacobian `df/dx (x, mode)` into `out`.
    fn jacobian(&self, x: &[f64], mode: usize, out: &mut [f64]);

    fn running_cost(&self, x: &[f64]) -> f64;

    /// Writes `dL/dx (x)` into `out`.
    fn cost_gradient(&self, x: &[f64], out: &mut [f64]);

    /// Human-readable label of a mode, e.g. the physical input value.
    fn mode_label(&self, mode: usize) -> String {
        mode.to_string()
    }
}

/// Structural checks every system must pass before it is simulated.
pub fn validate_system(system: &dyn SwitchedSystem) -> Result<()> {
    if system.mode_count() < 2 {
        return Err(Error::BadParameter {
            name: "modes",
            reason: format!("need at least 2 modes, got {}", system.mode_count()),
        });
    }
    if system.state_dim() == 0 {
        return Err(Error::DimensionMismatch("state dimension is 0".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobianReport {
    /// Largest error over all probes, modes, and Jacobian entries.
    pub max_jacobian_error: f64,
    /// Largest error of the cost gradient over all probes.
    pub max_gradient_error: f64,
    /// Probe index and mode at which the Jacobian error peaked.
    pub worst_jacobian: Option<(usize, usize)>,
    pub probes: usize,
}

impl JacobianReport {
    pub fn max_error(&self) -> f64 {
        self.max_jacobian_error.max(self.max_gradient_error)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_error() <= tol
    }
}

const FD_STEP: f64 = 1e-6;

/// Compares analytic Jacobians and cost gradients with central differences.
///
/// Errors are `|analytic - fd| / max(|fd|, 1)` per entry, so they read as
/// relative for large entries and absolute for small ones. Never fails;
/// a wrong derivative shows up as a large reported error.
pub fn check_jacobians(system: &dyn SwitchedSystem, probe_points: &[Vec<f64>]) -> JacobianReport {
    let n = system.state_dim();
    let mut jac = vec![0.0; n * n];
    let mut grad = vec![0.0; n];
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    let mut xp = vec![0.0; n];

    let mut report = JacobianReport {
        max_jacobian_error: 0.0,
        max_gradient_error: 0.0,
        worst_jacobian: None,
        probes: probe_points.len(),
    };

    for (pi, x) in probe_points.iter().enumerate() {
        assert_eq!(x.len(), n, "probe point has wrong dimension");
        for mode in 0..system.mode_count() {
            system.jacobian(x, mode, &mut jac);
            for col in 0..n {
                let h = FD_STEP * x[col].abs().max(1.0);
                xp.copy_from_slice(x);
                xp[col] = x[col] + h;
                system.vector_field(&xp, mode, &mut fp);
                xp[col] = x[col] - h;
                system.vector_field(&xp, mode, &mut fm);
                for row in 0..n {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    let err = (jac[row * n + col] - fd).abs() / fd.abs().max(1.0);
                    if !(err <= report.max_jacobian_error) {
                        report.max_jacobian_error = err;
                        report.worst_jacobian = Some((pi, mode));
                    }
                }
            }
        }

        system.cost_gradient(x, &mut grad);
        for j in 0..n {
            let h = FD_STEP * x[j].abs().max(1.0);
            xp.copy_from_slice(x);
            xp[j] = x[j] + h;
            let lp = system.running_cost(&xp);
            xp[j] = x[j] - h;
            let lm = system.running_cost(&xp);
            let fd = (lp - lm) / (2.0 * h);
            let err = (grad[j] - fd).abs() / fd.abs().max(1.0);
            if !(err <= report.max_gradient_error) {
                report.max_gradient_error = err;
            }
        }
    }
    report
}
