//! Dense bounded-variable primal simplex.
//!
//! Each row `a x (sense) b` becomes `a x - r = 0` with the row activity `r`
//! bounded by the sense. An artificial per row supplies the starting basis;
//! phase one drives the artificials to zero, phase two optimizes. Dantzig
//! pricing switches to Bland's rule for good once degenerate pivots pile up.

use super::{LpProblem, LpResult, LpStatus};
use crate::milp::Sense;

/// Degenerate pivots tolerated before switching to Bland's rule.
pub const BLAND_AFTER_DEGENERATE: usize = 5000;
/// Row feasibility tolerance of reported solutions.
pub const LP_FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const TINY_PIVOT: f64 = 1e-11;

struct Tableau {
    m: usize,
    ncol: usize,
    /// B^-1 A, row-major.
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    basis: Vec<usize>,
    /// Row of each basic column, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    degenerate: usize,
    bland: bool,
}

enum Step {
    Optimal,
    Unbounded,
    Failure { row: usize, col: usize },
    Continue,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncol + j]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncol..(i + 1) * self.ncol];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    /// One primal iteration maximizing `cost`; `d` holds current reduced costs.
    fn iterate(&mut self, d: &mut [f64]) -> Step {
        // entering column
        let mut enter: Option<(usize, f64)> = None;
        for j in 0..self.ncol {
            if self.row_of[j] != usize::MAX || self.upper[j] - self.lower[j] <= 0.0 {
                continue;
            }
            let at_lower = self.value[j] <= self.lower[j];
            let at_upper = self.value[j] >= self.upper[j];
            let dir = if d[j] > OPT_TOL && !at_upper {
                1.0
            } else if d[j] < -OPT_TOL && !at_lower {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                enter = Some((j, dir));
                break;
            }
            if enter.map_or(true, |(q, _)| d[j].abs() > d[q].abs()) {
                enter = Some((j, dir));
            }
        }
        let Some((q, dir)) = enter else {
            return Step::Optimal;
        };

        // ratio test
        let mut theta = self.upper[q] - self.lower[q];
        let mut leave: Option<(usize, bool)> = None;
        for i in 0..self.m {
            let a = self.at(i, q);
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[i];
            let change = -dir * a;
            let limit = if change < 0.0 {
                if self.lower[b] == f64::NEG_INFINITY {
                    continue;
                }
                (self.value[b] - self.lower[b]) / -change
            } else {
                if self.upper[b] == f64::INFINITY {
                    continue;
                }
                (self.upper[b] - self.value[b]) / change
            };
            let limit = limit.max(0.0);
            let better = match leave {
                None => limit < theta,
                Some((r, _)) => {
                    limit < theta - 1e-12
                        || (limit <= theta + 1e-12
                            && if self.bland {
                                b < self.basis[r]
                            } else {
                                a.abs() > self.at(r, q).abs()
                            })
                }
            };
            if better {
                theta = limit;
                leave = Some((i, change < 0.0));
            }
        }
        if theta == f64::INFINITY {
            return Step::Unbounded;
        }
        if theta <= 1e-12 {
            self.degenerate += 1;
            if self.degenerate >= BLAND_AFTER_DEGENERATE {
                self.bland = true;
            }
        }

        // move along the edge
        for i in 0..self.m {
            let a = self.at(i, q);
            if a != 0.0 {
                let b = self.basis[i];
                self.value[b] -= dir * theta * a;
            }
        }
        self.value[q] += dir * theta;

        let Some((r, to_lower)) = leave else {
            // bound flip
            self.value[q] = if dir > 0.0 {
                self.upper[q]
            } else {
                self.lower[q]
            };
            return Step::Continue;
        };
        let piv = self.at(r, q);
        if piv.abs() < TINY_PIVOT {
            return Step::Failure { row: r, col: q };
        }
        let out = self.basis[r];
        self.value[out] = if to_lower {
            self.lower[out]
        } else {
            self.upper[out]
        };

        let n = self.ncol;
        for k in 0..n {
            self.t[r * n + k] /= piv;
        }
        let pivot_row: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + q];
            if f != 0.0 {
                let row = &mut self.t[i * n..(i + 1) * n];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let dq = d[q];
        for (dj, p) in d.iter_mut().zip(&pivot_row) {
            *dj -= dq * p;
        }
        d[q] = 0.0;
        self.row_of[out] = usize::MAX;
        self.row_of[q] = r;
        self.basis[r] = q;
        Step::Continue
    }

    fn run(&mut self, cost: &[f64], max_iter: usize) -> Step {
        let mut d = self.reduced_costs(cost);
        for it in 0..max_iter {
            match self.iterate(&mut d) {
                Step::Continue => {
                    // periodic refresh against drift
                    if it % 200 == 199 {
                        d = self.reduced_costs(cost);
                    }
                }
                other => return other,
            }
        }
        Step::Failure {
            row: usize::MAX,
            col: usize::MAX,
        }
    }
}

/// Solves the LP relaxation `p` (maximization).
pub fn solve_lp(p: &LpProblem) -> LpResult {
    let n = p.n;
    let m = p.rows.len();
    let ncol = n + 2 * m;
    let mut lower = vec![0.0; ncol];
    let mut upper = vec![0.0; ncol];
    let mut value = vec![0.0; ncol];
    for j in 0..n {
        lower[j] = p.lower[j];
        upper[j] = p.upper[j];
        if lower[j] > upper[j] {
            return LpResult::infeasible(n);
        }
        value[j] = if lower[j].is_finite() {
            lower[j]
        } else {
            upper[j]
        };
    }
    let mut t = vec![0.0; m * ncol];
    let mut basis = Vec::with_capacity(m);
    let mut row_of = vec![usize::MAX; ncol];
    for (i, row) in p.rows.iter().enumerate() {
        let r = n + i;
        let (lo, hi) = match row.sense {
            Sense::Le => (f64::NEG_INFINITY, row.rhs),
            Sense::Ge => (row.rhs, f64::INFINITY),
            Sense::Eq => (row.rhs, row.rhs),
        };
        lower[r] = lo;
        upper[r] = hi;
        value[r] = row.rhs;
        let activity: f64 = row.coeffs.iter().map(|&(j, a)| a * value[j]).sum();
        // a x - r + e * art = 0  =>  art = (r - a x) / e >= 0
        let gap = value[r] - activity;
        let e = if gap < 0.0 { -1.0 } else { 1.0 };
        let art = n + m + i;
        lower[art] = 0.0;
        upper[art] = f64::INFINITY;
        value[art] = gap.abs();
        for &(j, a) in &row.coeffs {
            t[i * ncol + j] += e * a;
        }
        t[i * ncol + r] = -e;
        t[i * ncol + art] = 1.0;
        basis.push(art);
        row_of[art] = i;
    }
    let mut tab = Tableau {
        m,
        ncol,
        t,
        lower,
        upper,
        value,
        basis,
        row_of,
        degenerate: 0,
        bland: false,
    };
    let max_iter = 50_000 + 200 * (n + m);

    let mut phase1 = vec![0.0; ncol];
    for c in phase1.iter_mut().skip(n + m) {
        *c = -1.0;
    }
    match tab.run(&phase1, max_iter) {
        Step::Failure { row, col } => return LpResult::failure(n, row, col),
        Step::Unbounded => return LpResult::failure(n, usize::MAX, usize::MAX),
        _ => {}
    }
    let infeas: f64 = (n + m..ncol).map(|j| tab.value[j]).sum();
    if infeas > LP_FEAS_TOL {
        return LpResult::infeasible(n);
    }
    for j in n + m..ncol {
        tab.upper[j] = 0.0;
        if tab.row_of[j] == usize::MAX {
            tab.value[j] = 0.0;
        }
    }

    let mut cost = vec![0.0; ncol];
    cost[..n].copy_from_slice(&p.objective);
    match tab.run(&cost, max_iter) {
        Step::Failure { row, col } => return LpResult::failure(n, row, col),
        Step::Unbounded => {
            return LpResult {
                status: LpStatus::Unbounded,
                objective: f64::INFINITY,
                values: tab.value[..n].to_vec(),
            }
        }
        _ => {}
    }

    let values: Vec<f64> = (0..n)
        .map(|j| tab.value[j].clamp(p.lower[j], p.upper[j]))
        .collect();
    if let Some(row) = p
        .rows
        .iter()
        .position(|r| r.violation(&values) > LP_FEAS_TOL)
    {
        return LpResult::failure(n, row, usize::MAX);
    }
    LpResult {
        status: LpStatus::Optimal,
        objective: p.objective.iter().zip(&values).map(|(c, x)| c * x).sum(),
        values,
    }
}
