//! Box-constrained Levenberg-Marquardt.
//!
//! Parameters sitting on a bound whose gradient points outward are frozen for
//! the step; the remaining free block solves the damped normal equations and
//! the trial point is projected back into the box.

use nalgebra::{DMatrix, DVector};

/// Least-squares problem `min ‖r(p)‖²`.
pub trait LeastSquaresProblem {
    fn residuals(&self, params: &[f64]) -> DVector<f64>;
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once `‖r‖` falls below this.
    pub residual_tol: f64,
    /// Stop once the projected gradient `‖Jᵀr‖∞` falls below this.
    pub gradient_tol: f64,
    /// Stop once a step changes the parameters by less than this (relative).
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 500, residual_tol: 1e-12, gradient_tol: 1e-15, step_tol: 1e-15 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// `‖r‖` at `params`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Inclusive per-parameter bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Self { lower: vec![lower; n], upper: vec![upper; n] }
    }

    fn clamp(&self, p: &mut [f64]) {
        for (i, x) in p.iter_mut().enumerate() {
            *x = x.clamp(self.lower[i], self.upper[i]);
        }
    }
}

pub fn minimize<P: LeastSquaresProblem>(
    problem: &P,
    start: &[f64],
    bounds: Option<&Bounds>,
    opts: &LmOptions,
) -> LmOutcome {
    let n = start.len();
    let mut p = start.to_vec();
    if let Some(b) = bounds {
        b.clamp(&mut p);
    }
    let mut r = problem.residuals(&p);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if cost.sqrt() < opts.residual_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let jac = problem.jacobian(&p);
        let grad = jac.transpose() * &r;

        let free: Vec<usize> = (0..n)
            .filter(|&i| match bounds {
                Some(b) => !((p[i] <= b.lower[i] && grad[i] > 0.0) || (p[i] >= b.upper[i] && grad[i] < 0.0)),
                None => true,
            })
            .collect();
        let proj_grad = free.iter().map(|&i| grad[i].abs()).fold(0.0, f64::max);
        if free.is_empty() || proj_grad < opts.gradient_tol {
            converged = true;
            break;
        }

        let jtj = jac.transpose() * &jac;
        let nf = free.len();
        let a = DMatrix::from_fn(nf, nf, |r_, c| jtj[(free[r_], free[c])]);
        let g = DVector::from_iterator(nf, free.iter().map(|&i| grad[i]));

        let mut accepted = false;
        let mut step_norm = 0.0;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for i in 0..nf {
                damped[(i, i)] += lambda * (a[(i, i)] + 1e-12);
            }
            let delta = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let mut trial = p.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += delta[k];
            }
            if let Some(b) = bounds {
                b.clamp(&mut trial);
            }
            let r_trial = problem.residuals(&trial);
            let cost_trial = r_trial.norm_squared();
            if cost_trial.is_finite() && cost_trial < cost {
                step_norm = trial.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                p = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent direction at machine precision: stationary point
            converged = true;
            break;
        }
        let scale = 1.0 + p.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if step_norm <= opts.step_tol * scale {
            converged = true;
            break;
        }
    }
    if !converged && cost.sqrt() < opts.residual_tol {
        converged = true;
    }
    LmOutcome { params: p, residual: cost.sqrt(), iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rosenbrock as a least-squares problem.
    struct Rosenbrock;

    impl LeastSquaresProblem for Rosenbrock {
        fn residuals(&self, p: &[f64]) -> DVector<f64> {
            DVector::from_vec(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])
        }
        fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[-20.0 * p[0], 10.0, -1.0, 0.0])
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], None, &LmOptions::default());
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-10 && (out.params[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn respects_bounds() {
        let b = Bounds { lower: vec![-2.0, -2.0], upper: vec![0.5, 2.0] };
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], Some(&b), &LmOptions::default());
        assert!(out.converged);
        assert!((out.params[0] - 0.5).abs() < 1e-12, "{:?}", out.params);
        assert!((out.params[1] - 0.25).abs() < 1e-9, "{:?}", out.params);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let opts = LmOptions { max_iterations: 1, ..LmOptions::default() };
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], None, &opts);
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
    }
}
