//! Equality-constrained optimizer based on sequential nullspace projection.
//!
//! Each outer iteration first restores feasibility one scalar constraint at a
//! time: the constraint's gradient is projected onto the nullspace of the
//! gradients already handled, and a line search walks to its zero crossing.
//! It then takes a cost descent step along the cost gradient projected onto
//! the nullspace of all constraint gradients. Gradients are central
//! differences; nothing is required of the functions beyond determinism.

mod linalg;
mod line_search;

pub use linalg::{nullspace_basis, numerical_gradient, project};
pub use line_search::{line_search_min, line_search_zero, MinStep};

use std::cell::Cell;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A scalar function of the optimizer variables.
pub type ScalarFn<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("{what} is not finite at the probe along coordinate {coordinate:?}")]
    NonFinite { what: String, coordinate: Option<usize> },
    #[error("line search found no acceptable step within {evaluations} evaluations")]
    LineSearchStall { evaluations: usize },
    #[error("constraints could not be satisfied; residuals {residuals:?}")]
    Infeasible { residuals: Vec<f64> },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("initial point has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Cost plus ordered scalar equality constraints (each driven to zero).
pub struct ProblemFunctions<'a> {
    pub cost: ScalarFn<'a>,
    pub constraints: Vec<ScalarFn<'a>>,
}

impl<'a> ProblemFunctions<'a> {
    pub fn new(cost: impl Fn(&[f64]) -> f64 + 'a) -> Self {
        Self {
            cost: Box::new(cost),
            constraints: Vec::new(),
        }
    }

    pub fn constraint(mut self, c: impl Fn(&[f64]) -> f64 + 'a) -> Self {
        self.constraints.push(Box::new(c));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Central-difference step.
    pub gradient_step: f64,
    pub constraint_tol: f64,
    /// Bound on the norm of the projected cost gradient.
    pub gradient_tol: f64,
    /// Bound on the cost decrease of one outer iteration.
    pub cost_change_tol: f64,
    pub max_iters: usize,
    pub max_line_search_evals: usize,
    pub expansion: f64,
    /// Bound on constraint sweeps within one restoration.
    pub max_restoration_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gradient_step: 1e-6,
            constraint_tol: 1e-8,
            gradient_tol: 1e-6,
            cost_change_tol: 1e-10,
            max_iters: 100,
            max_line_search_evals: 60,
            expansion: 2.0,
            max_restoration_sweeps: 30,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("gradient_step", self.gradient_step),
            ("constraint_tol", self.constraint_tol),
            ("gradient_tol", self.gradient_tol),
            ("cost_change_tol", self.cost_change_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::InvalidOptions(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.expansion > 1.0 && self.expansion.is_finite()) {
            return Err(SolverError::InvalidOptions(format!(
                "expansion must exceed 1, got {}",
                self.expansion
            )));
        }
        if self.max_iters == 0 || self.max_line_search_evals < 2 || self.max_restoration_sweeps == 0 {
            return Err(SolverError::InvalidOptions("iteration budgets must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    GradientTol,
    CostChangeTol,
    MaxIters,
    LineSearchStall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub x_star: Vec<f64>,
    pub cost_star: f64,
    pub constraint_residuals: Vec<f64>,
    pub outer_iterations: usize,
    pub function_evaluations: usize,
    /// Seconds.
    pub wall_time: f64,
    pub termination_reason: TerminationReason,
    /// Norm of the projected cost gradient at the last linearization.
    pub projected_gradient_norm: f64,
    /// Cost after each restoration, starting with the initial one.
    pub cost_history: Vec<f64>,
}

struct Counted<'p, 'a> {
    funcs: &'p ProblemFunctions<'a>,
    evals: Cell<usize>,
}

impl Counted<'_, '_> {
    fn cost(&self, x: &[f64]) -> f64 {
        self.evals.set(self.evals.get() + 1);
        (self.funcs.cost)(x)
    }

    fn constraint(&self, i: usize, x: &[f64]) -> f64 {
        self.evals.set(self.evals.get() + 1);
        (self.funcs.constraints[i])(x)
    }

    fn residuals(&self, x: &[f64]) -> Vec<f64> {
        (0..self.funcs.constraints.len())
            .map(|i| self.constraint(i, x))
            .collect()
    }
}

fn finite(value: f64, what: impl FnOnce() -> String) -> Result<f64, SolverError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SolverError::NonFinite {
            what: what(),
            coordinate: None,
        })
    }
}

/// Drives every constraint to within tolerance. Returns the feasible point
/// and the constraint gradients of the last sweep as columns.
fn restore(
    f: &Counted,
    mut x: DVector<f64>,
    opts: &SolverOptions,
) -> Result<(DVector<f64>, DMatrix<f64>), SolverError> {
    let p = x.len();
    let k = f.funcs.constraints.len();
    let mut jac = DMatrix::zeros(p, k);
    if k == 0 {
        return Ok((x, jac));
    }
    for _ in 0..opts.max_restoration_sweeps {
        let mut moved = false;
        for i in 0..k {
            let ci = |y: &[f64]| f.constraint(i, y);
            let g = numerical_gradient(&ci, x.as_slice(), opts.gradient_step).map_err(|e| label(e, i))?;
            jac.set_column(i, &g);
            let value = finite(ci(x.as_slice()), || format!("constraint {i}"))?;
            if value.abs() <= opts.constraint_tol {
                continue;
            }
            let mut d = if i == 0 {
                g.clone()
            } else {
                project(&jac.columns(0, i).into_owned(), &g)
            };
            if d.norm() <= 1e-12 * g.norm().max(f64::MIN_POSITIVE) {
                // Dependent on earlier gradients at this point; fall back to
                // the raw gradient and let the next sweep repair the others.
                d = g.clone();
            }
            if d.norm() == 0.0 {
                continue;
            }
            let slope = g.dot(&d);
            match line_search_zero(&ci, &x, &d, value, slope, opts) {
                Ok(next) => x = next,
                Err(SolverError::LineSearchStall { .. }) => {}
                Err(e) => return Err(label(e, i)),
            }
            moved = true;
        }
        let residuals = f.residuals(x.as_slice());
        if residuals.iter().all(|r| r.abs() <= opts.constraint_tol) {
            return Ok((x, jac));
        }
        if !moved {
            break;
        }
    }
    Err(SolverError::Infeasible {
        residuals: f.residuals(x.as_slice()),
    })
}

fn label(e: SolverError, i: usize) -> SolverError {
    match e {
        SolverError::NonFinite { coordinate, .. } => SolverError::NonFinite {
            what: format!("constraint {i}"),
            coordinate,
        },
        other => other,
    }
}

/// Minimizes the cost subject to all constraints being zero, starting at `x0`.
///
/// Returns an error if the constraints cannot be satisfied from the start
/// point, or if a function returns a non-finite value.
pub fn solve(funcs: &ProblemFunctions, x0: &[f64], opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    opts.validate()?;
    let started = Instant::now();
    let f = Counted {
        funcs,
        evals: Cell::new(0),
    };
    let cost_of = |y: &[f64]| f.cost(y);

    let (mut x, mut jac) = restore(&f, DVector::from_column_slice(x0), opts)?;
    let mut cost = finite(f.cost(x.as_slice()), || "cost".into())?;
    let mut history = vec![cost];
    let mut step_length = None::<f64>;
    let mut iterations = 0;
    let mut grad_norm;

    let reason = loop {
        let g = numerical_gradient(&cost_of, x.as_slice(), opts.gradient_step).map_err(|e| match e {
            SolverError::NonFinite { coordinate, .. } => SolverError::NonFinite {
                what: "cost".into(),
                coordinate,
            },
            other => other,
        })?;
        let d = -project(&jac, &g);
        grad_norm = d.norm();
        if grad_norm < opts.gradient_tol {
            break TerminationReason::GradientTol;
        }
        if iterations >= opts.max_iters {
            break TerminationReason::MaxIters;
        }
        iterations += 1;

        let alpha0 = step_length.map_or(1.0, |s| s / grad_norm);
        let step = match line_search_min(&cost_of, &x, &d, cost, g.dot(&d), alpha0, opts) {
            Ok(step) => step,
            Err(SolverError::LineSearchStall { .. }) => break TerminationReason::LineSearchStall,
            Err(e) => return Err(e),
        };

        // Restoration may undo part of the descent; shorten the step until
        // the restored point is no worse than the current one.
        let mut alpha = step.alpha;
        let mut accepted = None;
        for _ in 0..opts.max_line_search_evals {
            let trial = &x + &d * alpha;
            if let Ok((xr, jr)) = restore(&f, trial, opts) {
                let c = finite(f.cost(xr.as_slice()), || "cost".into())?;
                if c <= cost {
                    accepted = Some((xr, jr, c));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xr, jr, c)) = accepted else {
            break TerminationReason::LineSearchStall;
        };
        step_length = Some(alpha * grad_norm);
        let decrease = cost - c;
        x = xr;
        jac = jr;
        cost = c;
        history.push(cost);
        if decrease < opts.cost_change_tol {
            break TerminationReason::CostChangeTol;
        }
    };

    Ok(SolveResult {
        constraint_residuals: f.residuals(x.as_slice()),
        x_star: x.as_slice().to_vec(),
        cost_star: cost,
        outer_iterations: iterations,
        function_evaluations: f.evals.get(),
        wall_time: started.elapsed().as_secs_f64(),
        termination_reason: reason,
        projected_gradient_norm: grad_norm,
        cost_history: history,
    })
}
