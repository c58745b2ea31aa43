//! Levenberg-Marquardt for small dense nonlinear least-squares problems.
//!
//! Minimizes `0.5 * |r(x)|^2` where the state lives on whatever manifold the
//! problem defines; steps are taken in a local parameterization through
//! [`LeastSquares::retract`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub trait LeastSquares {
    type State: Clone;

    fn residuals(&self, state: &Self::State) -> Result<DVector<f64>>;

    /// Jacobian of the residuals with respect to the local step passed to
    /// [`retract`](Self::retract).
    fn jacobian(&self, state: &Self::State) -> Result<DMatrix<f64>>;

    fn retract(&self, state: &Self::State, step: &DVector<f64>) -> Self::State;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Initial damping relative to the largest diagonal entry of `J^T J`.
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub relative_cost_tol: f64,
    pub gradient_tol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            initial_damping: 1e-3,
            damping_up: 10.0,
            damping_down: 0.1,
            relative_cost_tol: 1e-10,
            gradient_tol: 1e-10,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.initial_damping > 0.0
            && self.damping_up > 1.0
            && self.damping_down > 0.0
            && self.damping_down < 1.0
            && self.relative_cost_tol > 0.0
            && self.gradient_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidValue(format!("invalid LM configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ZeroCost,
    SmallGradient,
    SmallCostChange,
    /// Damping grew without bound: no step reduces the cost.
    Stalled,
    MaxIterations,
}

impl Termination {
    pub fn converged(self) -> bool {
        !matches!(self, Termination::MaxIterations)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    /// Trial steps evaluated, accepted or not.
    pub iterations: usize,
    pub termination: Termination,
    /// Cost `0.5 |r|^2` at the start and after each accepted step.
    pub cost_history: Vec<f64>,
}

impl LmReport {
    pub fn final_cost(&self) -> f64 {
        *self.cost_history.last().expect("history holds the initial cost")
    }
}

const MAX_DAMPING: f64 = 1e32;

fn half_sq(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

pub fn levenberg_marquardt<P: LeastSquares>(
    problem: &P,
    initial: P::State,
    config: &LmConfig,
) -> Result<(P::State, LmReport)> {
    config.validate()?;
    let mut state = initial;
    let mut residual = problem.residuals(&state)?;
    let mut cost = half_sq(&residual);
    if !cost.is_finite() {
        return Err(Error::InvalidValue("initial cost is not finite".into()));
    }
    let mut history = vec![cost];
    let mut iterations = 0;
    let mut damping: Option<f64> = None;

    let termination = 'outer: loop {
        if cost == 0.0 {
            break Termination::ZeroCost;
        }
        let jac = problem.jacobian(&state)?;
        let grad = jac.tr_mul(&residual);
        if grad.amax() < config.gradient_tol {
            break Termination::SmallGradient;
        }
        let normal = jac.tr_mul(&jac);
        let mu = damping.get_or_insert_with(|| {
            let scale = normal.diagonal().amax();
            config.initial_damping * if scale > 0.0 { scale } else { 1.0 }
        });

        loop {
            if iterations >= config.max_iterations {
                break 'outer Termination::MaxIterations;
            }
            if *mu > MAX_DAMPING {
                break 'outer Termination::Stalled;
            }
            iterations += 1;

            let mut lhs = normal.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += *mu;
            }
            let step = match lhs.cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => {
                    *mu *= config.damping_up;
                    continue;
                }
            };
            let candidate = problem.retract(&state, &step);
            let trial = match problem.residuals(&candidate) {
                Ok(r) => r,
                // Leaving the valid domain counts as a rejected step.
                Err(_) => {
                    *mu *= config.damping_up;
                    continue;
                }
            };
            let trial_cost = half_sq(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let relative = (cost - trial_cost) / cost;
                state = candidate;
                residual = trial;
                cost = trial_cost;
                history.push(cost);
                *mu *= config.damping_down;
                if relative < config.relative_cost_tol {
                    break 'outer Termination::SmallCostChange;
                }
                break;
            }
            *mu *= config.damping_up;
        }
    };

    Ok((
        state,
        LmReport {
            iterations,
            termination,
            cost_history: history,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rosenbrock as residuals `(10 (y - x^2), 1 - x)`.
    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        type State = DVector<f64>;

        fn residuals(&self, s: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![10.0 * (s[1] - s[0] * s[0]), 1.0 - s[0]]))
        }

        fn jacobian(&self, s: &DVector<f64>) -> Result<DMatrix<f64>> {
            Ok(DMatrix::from_row_slice(2, 2, &[-20.0 * s[0], 10.0, -1.0, 0.0]))
        }

        fn retract(&self, s: &DVector<f64>, step: &DVector<f64>) -> DVector<f64> {
            s + step
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let (x, report) =
            levenberg_marquardt(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &LmConfig::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8, "{x:?}");
        assert!(report.termination.converged());
        for w in report.cost_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn exact_start_terminates_immediately() {
        let (_, report) =
            levenberg_marquardt(&Rosenbrock, DVector::from_vec(vec![1.0, 1.0]), &LmConfig::default()).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(report.termination, Termination::ZeroCost);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let cfg = LmConfig {
            max_iterations: 2,
            ..LmConfig::default()
        };
        let (_, report) = levenberg_marquardt(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &cfg).unwrap();
        assert_eq!(report.termination, Termination::MaxIterations);
        assert_eq!(report.iterations, 2);
    }
}
