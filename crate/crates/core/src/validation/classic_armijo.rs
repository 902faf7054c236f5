//! Steepest descent with the classic Armijo step on smooth functions in
//! `R^n`. Serves as the reference behaviour for sufficient descent.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// A `C^2` objective with gradient.
pub trait Objective {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// `f(x) = x^T Q x / 2` with known Hessian norm bound `L = lambda_max(Q)`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub q: DMatrix<f64>,
    pub hessian_bound: f64,
}

impl Quadratic {
    /// Random `Q = U diag(eig) U^T` with `U` orthogonal; eigenvalues are
    /// log-uniform in `[lambda_max / cond, lambda_max]` and include both ends.
    pub fn random<R: Rng>(rng: &mut R, n: usize, cond: f64, lambda_max: f64) -> Self {
        let gauss = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u = gauss.qr().q();
        let lo = lambda_max / cond;
        let eig = DVector::from_fn(n, |i, _| match i {
            0 => lambda_max,
            1 => lo,
            _ => lo * (cond.ln() * rng.random::<f64>()).exp(),
        });
        let q = &u * DMatrix::from_diagonal(&eig) * u.transpose();
        let q = (&q + q.transpose()) * 0.5;
        Self {
            q,
            hessian_bound: lambda_max,
        }
    }
}

impl Objective for Quadratic {
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicStep {
    /// `lambda(x) = beta^j * |grad f(x)|`.
    pub lambda: f64,
    pub j: usize,
    pub grad_norm: f64,
    pub decrease: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicStatus {
    /// `|grad f| < 1e-12` at the final iterate.
    GradientVanished,
    MaxIters,
    /// No `j <= 200` satisfied the Armijo inequality.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct ClassicRun {
    pub iterates: Vec<DVector<f64>>,
    pub steps: Vec<ClassicStep>,
    pub status: ClassicStatus,
}

const MAX_LINE_SEARCH: usize = 200;

/// Iterates `x_{k+1} = x_k - beta^j grad f(x_k)` with `j` the smallest
/// integer such that `f(x - beta^j grad) - f(x) <= -alpha beta^j |grad|^2`.
pub fn classic_armijo_descent(
    objective: &dyn Objective,
    x0: DVector<f64>,
    alpha: f64,
    beta: f64,
    max_iters: usize,
) -> ClassicRun {
    let mut iterates = vec![x0];
    let mut steps = Vec::new();
    let mut status = ClassicStatus::MaxIters;

    for _ in 0..max_iters {
        let x = iterates.last().expect("nonempty");
        let g = objective.gradient(x);
        let gn = g.norm();
        if gn < 1e-12 {
            status = ClassicStatus::GradientVanished;
            break;
        }
        let fx = objective.value(x);
        let mut accepted = None;
        for j in 0..=MAX_LINE_SEARCH {
            let step = beta.powi(j as i32);
            let candidate = x - &g * step;
            let decrease = objective.value(&candidate) - fx;
            if decrease <= -alpha * step * gn * gn {
                accepted = Some((
                    candidate,
                    ClassicStep {
                        lambda: step * gn,
                        j,
                        grad_norm: gn,
                        decrease,
                    },
                ));
                break;
            }
        }
        match accepted {
            Some((next, step)) => {
                iterates.push(next);
                steps.push(step);
            }
            None => {
                status = ClassicStatus::LineSearchFailed;
                break;
            }
        }
    }
    if status == ClassicStatus::MaxIters {
        let x = iterates.last().expect("nonempty");
        if objective.gradient(x).norm() < 1e-12 {
            status = ClassicStatus::GradientVanished;
        }
    }
    ClassicRun {
        iterates,
        steps,
        status,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadraticSuiteReport {
    pub problems: usize,
    /// Steps violating `f(x - lambda h) - f(x) <= -alpha lambda |grad|`.
    pub descent_violations: usize,
    /// Iterates violating `lambda(x) >= (2/L) beta (1 - alpha) |grad|`.
    pub step_bound_violations: usize,
    /// Smallest observed `lambda / ((2/L) beta (1 - alpha) |grad|)`.
    pub min_step_bound_ratio: f64,
    /// Problems whose gradient norm never fell below `grad_tol`.
    pub not_converged: usize,
    /// Largest iteration count needed to reach `grad_tol`.
    pub max_iterations_needed: usize,
    pub monotone: bool,
}

/// Runs the classic Armijo descent on `problems` random quadratics and
/// checks the sufficient-descent inequality and the step-size lower bound
/// at every step.
pub fn quadratic_suite(
    seed: u64,
    problems: usize,
    max_cond: f64,
    alpha: f64,
    beta: f64,
    max_iters: usize,
    grad_tol: f64,
) -> QuadraticSuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = QuadraticSuiteReport {
        problems,
        descent_violations: 0,
        step_bound_violations: 0,
        min_step_bound_ratio: f64::INFINITY,
        not_converged: 0,
        max_iterations_needed: 0,
        monotone: true,
    };
    for _ in 0..problems {
        let n = rng.random_range(2..=6);
        let cond = rng.random_range(1.0..=max_cond);
        let lambda_max = rng.random_range(0.5..=4.0);
        let quad = Quadratic::random(&mut rng, n, cond, lambda_max);
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let run = classic_armijo_descent(&quad, x0, alpha, beta, max_iters);

        for (k, step) in run.steps.iter().enumerate() {
            if !(step.decrease <= -alpha * step.lambda * step.grad_norm) {
                report.descent_violations += 1;
            }
            let bound = 2.0 / quad.hessian_bound * beta * (1.0 - alpha) * step.grad_norm;
            let ratio = step.lambda / bound;
            report.min_step_bound_ratio = report.min_step_bound_ratio.min(ratio);
            if step.lambda < bound {
                report.step_bound_violations += 1;
            }
            if quad.value(&run.iterates[k + 1]) > quad.value(&run.iterates[k]) {
                report.monotone = false;
            }
        }
        match run
            .iterates
            .iter()
            .position(|x| quad.gradient(x).norm() < grad_tol)
        {
            Some(k) => report.max_iterations_needed = report.max_iterations_needed.max(k),
            None => report.not_converged += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant;
    impl Objective for Constant {
        fn value(&self, _x: &DVector<f64>) -> f64 {
            3.0
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::zeros(x.len())
        }
    }

    #[test]
    fn half_square_equality_case() {
        let q = Quadratic {
            q: DMatrix::from_element(1, 1, 1.0),
            hessian_bound: 1.0,
        };
        let run = classic_armijo_descent(&q, DVector::from_element(1, 1.0), 0.5, 0.5, 5);
        assert_eq!(run.steps[0].j, 0);
        assert_eq!(run.steps[0].lambda, 1.0);
        assert_eq!(run.iterates[1][0], 0.0);
        assert_eq!(run.status, ClassicStatus::GradientVanished);
    }

    #[test]
    fn constant_function_stops_at_start() {
        let run = classic_armijo_descent(&Constant, DVector::from_element(3, 1.0), 0.5, 0.5, 10);
        assert_eq!(run.status, ClassicStatus::GradientVanished);
        assert!(run.steps.is_empty());
        assert_eq!(run.iterates.len(), 1);
    }

    #[test]
    fn random_quadratic_has_requested_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let quad = Quadratic::random(&mut rng, 4, 10.0, 2.0);
        let eig = quad.q.clone().symmetric_eigen().eigenvalues;
        let max = eig.max();
        let min = eig.min();
        assert!((max - 2.0).abs() < 1e-10);
        assert!((min - 0.2).abs() < 1e-10);
    }

    #[test]
    fn step_lower_bound_on_random_quadratics() {
        let r = quadratic_suite(11, 20, 5.0, 0.5, 0.5, 200, 1e-6);
        assert_eq!(r.descent_violations, 0);
        assert_eq!(r.step_bound_violations, 0);
        assert_eq!(r.not_converged, 0);
        assert!(r.monotone);
    }

    #[test]
    fn ill_conditioned_quadratics_are_slow() {
        // the steepest-descent rate (cond - 1) / (cond + 1) rules out
        // reaching 1e-6 in 200 steps at cond = 100
        let r = quadratic_suite(5, 10, 100.0, 0.5, 0.5, 200, 1e-6);
        assert_eq!(r.descent_violations, 0);
        assert_eq!(r.step_bound_violations, 0);
        assert!(r.not_converged > 0);
    }
}
