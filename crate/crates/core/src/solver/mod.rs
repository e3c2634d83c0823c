//! Exact optimization: LP relaxations, branch-and-bound and a brute-force
//! oracle for tiny instances.

mod bnb;
mod oracle;
mod simplex;

pub use bnb::{solve_exact, solve_exact_traced, BnbLimits, BnbRun, LpEngine};
pub use oracle::{enumerate_oracle, OracleCaps, OracleOutcome, OracleRefusal};
pub use simplex::{solve_lp, BLAND_AFTER_DEGENERATE, LP_FEAS_TOL};

use crate::milp::{Constraint, MilpModel};

/// Continuous relaxation of a model: maximize `objective . x` subject to the
/// rows and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub n: usize,
    /// Dense objective.
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Constraint>,
}

impl LpProblem {
    /// Relaxation with binaries in [0, 1].
    pub fn relax(model: &MilpModel) -> Self {
        let n = model.variables.len();
        let mut objective = vec![0.0; n];
        for &(j, c) in &model.objective {
            objective[j] = c;
        }
        LpProblem {
            n,
            objective,
            lower: model.variables.iter().map(|v| v.lower).collect(),
            upper: model.variables.iter().map(|v| v.upper).collect(),
            rows: model.constraints.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot at (row, column) was numerically unusable, or the final
    /// point failed the feasibility re-check (column `usize::MAX`).
    NumericalFailure {
        row: usize,
        col: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
}

impl LpResult {
    fn infeasible(n: usize) -> Self {
        LpResult {
            status: LpStatus::Infeasible,
            objective: f64::NEG_INFINITY,
            values: vec![0.0; n],
        }
    }

    fn failure(n: usize, row: usize, col: usize) -> Self {
        LpResult {
            status: LpStatus::NumericalFailure { row, col },
            objective: f64::NAN,
            values: vec![0.0; n],
        }
    }
}
