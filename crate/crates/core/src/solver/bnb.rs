//! Best-bound branch-and-bound over the binaries of a [`MilpModel`].
//!
//! Nodes are evaluated in batches, possibly on several threads, and the
//! results are applied in pop order, so a run is reproducible for a fixed
//! worker count as long as no time limit interrupts it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use minilp::{ComparisonOp, OptimizationDirection, Problem, Solution, Variable as LpVar};

use super::{solve_lp, LpProblem, LpStatus};
use crate::domain::{Instance, Schedule, SolveReport, SolveStatus};
use crate::milp::{extract_schedule, MilpModel, Sense, INT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpEngine {
    /// Sparse revised simplex with warm-started bound fixing.
    Minilp,
    /// The dense bounded-variable simplex, re-solved from scratch per node.
    Builtin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbLimits {
    pub time_limit_s: f64,
    pub gap_tolerance: f64,
    pub node_limit: Option<u64>,
    /// Single worker, reproducible search order.
    pub deterministic: bool,
    pub workers: usize,
    pub engine: LpEngine,
}

impl Default for BnbLimits {
    fn default() -> Self {
        BnbLimits {
            time_limit_s: 10_800.0,
            gap_tolerance: 1e-6,
            node_limit: None,
            deterministic: false,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get().min(8)),
            engine: LpEngine::Minilp,
        }
    }
}

impl BnbLimits {
    pub fn with_time_limit(time_limit_s: f64) -> Self {
        BnbLimits {
            time_limit_s,
            ..Self::default()
        }
    }

    pub fn deterministic(mut self) -> Self {
        self.deterministic = true;
        self
    }
}

/// A finished search with its diagnostics.
#[derive(Debug, Clone)]
pub struct BnbRun {
    pub report: SolveReport,
    pub root_bound: f64,
    /// (nodes explored, objective) at every incumbent improvement.
    pub incumbent_trace: Vec<(u64, f64)>,
    /// Integer-feasible relaxations whose assignment failed the strict
    /// re-check and were dropped.
    pub rejected_candidates: u64,
}

/// Branching fixes as a list shared with the parent, newest first.
struct Fix {
    var: usize,
    value: f64,
    parent: Option<Arc<Fix>>,
}

fn fix_list(head: &Option<Arc<Fix>>) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut cur = head.as_deref();
    while let Some(f) = cur {
        out.push((f.var, f.value));
        cur = f.parent.as_deref();
    }
    out.reverse();
    out
}

struct Node {
    fixes: Option<Arc<Fix>>,
    warm: Option<Arc<Solution>>,
    bound: f64,
    depth: u32,
    preferred: bool,
    seq: u64,
}

impl Node {
    fn key(&self) -> (f64, u32, bool, std::cmp::Reverse<u64>) {
        (
            self.bound,
            self.depth,
            self.preferred,
            std::cmp::Reverse(self.seq),
        )
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    }
}

enum Eval {
    Infeasible,
    Solved {
        objective: f64,
        values: Vec<f64>,
        warm: Option<Arc<Solution>>,
    },
}

struct Engine<'a> {
    model: &'a MilpModel,
    relaxed: LpProblem,
    kind: LpEngine,
    root: Option<Solution>,
    vars: Vec<LpVar>,
}

fn minilp_problem(p: &LpProblem) -> (Problem, Vec<LpVar>) {
    let mut prob = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<LpVar> = (0..p.n)
        .map(|j| prob.add_var(p.objective[j], (p.lower[j], p.upper[j])))
        .collect();
    for r in &p.rows {
        let op = match r.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Eq => ComparisonOp::Eq,
            Sense::Ge => ComparisonOp::Ge,
        };
        let expr: Vec<(LpVar, f64)> = r.coeffs.iter().map(|&(j, a)| (vars[j], a)).collect();
        prob.add_constraint(expr, op, r.rhs);
    }
    (prob, vars)
}

impl<'a> Engine<'a> {
    fn new(model: &'a MilpModel, kind: LpEngine) -> Self {
        let relaxed = LpProblem::relax(model);
        let (root, vars) = match kind {
            LpEngine::Minilp => {
                let (prob, vars) = minilp_problem(&relaxed);
                let root = catch_unwind(AssertUnwindSafe(|| prob.solve()))
                    .ok()
                    .and_then(|r| r.ok());
                (root, vars)
            }
            LpEngine::Builtin => (None, Vec::new()),
        };
        Engine {
            model,
            relaxed,
            kind,
            root,
            vars,
        }
    }

    fn values_of(&self, s: &Solution) -> Vec<f64> {
        self.vars.iter().map(|&v| *s.var_value(v)).collect()
    }

    fn builtin(&self, fixes: &[(usize, f64)]) -> Option<Eval> {
        let mut p = self.relaxed.clone();
        for &(j, v) in fixes {
            p.lower[j] = v;
            p.upper[j] = v;
        }
        let r = solve_lp(&p);
        match r.status {
            LpStatus::Optimal => Some(Eval::Solved {
                objective: r.objective,
                values: r.values,
                warm: None,
            }),
            LpStatus::Infeasible => Some(Eval::Infeasible),
            _ => None,
        }
    }

    fn warm_minilp(&self, node: &Node) -> Option<Eval> {
        let root = self.root.as_ref()?;
        let result = catch_unwind(AssertUnwindSafe(|| {
            let (mut sol, todo): (Solution, Vec<(usize, f64)>) = match &node.warm {
                Some(w) => (
                    (**w).clone(),
                    node.fixes.iter().map(|f| (f.var, f.value)).collect(),
                ),
                None => (root.clone(), fix_list(&node.fixes)),
            };
            for (j, v) in todo {
                sol = match sol.fix_var(self.vars[j], v) {
                    Ok(s) => s,
                    Err(_) => return Eval::Infeasible,
                };
            }
            Eval::Solved {
                objective: sol.objective(),
                values: self.values_of(&sol),
                warm: Some(Arc::new(sol)),
            }
        }));
        result.ok()
    }

    fn evaluate(&self, node: &Node) -> Eval {
        let first = match self.kind {
            LpEngine::Minilp => self.warm_minilp(node),
            LpEngine::Builtin => self.builtin(&fix_list(&node.fixes)),
        };
        if let Some(e) = first {
            return e;
        }
        let second = match self.kind {
            LpEngine::Minilp => self.builtin(&fix_list(&node.fixes)),
            LpEngine::Builtin => {
                let fresh = Node {
                    warm: None,
                    fixes: node.fixes.clone(),
                    bound: node.bound,
                    depth: node.depth,
                    preferred: node.preferred,
                    seq: node.seq,
                };
                self.warm_minilp(&fresh)
            }
        };
        // both engines failed: treat as infeasible rather than loop forever
        second.unwrap_or(Eval::Infeasible)
    }

    /// Integral assignment with binaries fixed exactly at their rounded
    /// values and the continuous part re-optimized.
    fn polish(&self, values: &[f64], warm: Option<&Arc<Solution>>) -> Option<Vec<f64>> {
        let fixes: Vec<(usize, f64)> = self
            .model
            .binaries()
            .map(|j| (j, values[j].round()))
            .collect();
        if self.kind == LpEngine::Minilp {
            if let Some(base) = warm.map(|w| (**w).clone()).or_else(|| self.root.clone()) {
                let out = catch_unwind(AssertUnwindSafe(|| {
                    let mut sol = base;
                    for &(j, v) in &fixes {
                        sol = sol.fix_var(self.vars[j], v).ok()?;
                    }
                    Some(self.values_of(&sol))
                }));
                if let Ok(Some(v)) = out {
                    return Some(v);
                }
            }
        }
        match self.builtin(&fixes)? {
            Eval::Solved { values, .. } => Some(values),
            Eval::Infeasible => None,
        }
    }
}

fn most_fractional(model: &MilpModel, values: &[f64], rank: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for j in model.binaries() {
        let x = values[j];
        let dist = (x - x.round()).abs();
        if dist <= INT_TOL {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, d)) => dist > d + 1e-12 || ((dist - d).abs() <= 1e-12 && rank[j] < rank[b]),
        };
        if better {
            best = Some((j, dist));
        }
    }
    best.map(|b| b.0)
}

/// Solves `model` to optimality or until a limit is hit.
pub fn solve_exact(model: &MilpModel, inst: &Instance, limits: &BnbLimits) -> SolveReport {
    solve_exact_traced(model, inst, limits).report
}

pub fn solve_exact_traced(model: &MilpModel, inst: &Instance, limits: &BnbLimits) -> BnbRun {
    let start = Instant::now();
    let engine = Engine::new(model, limits.engine);
    let integral = model.integral_objective();
    let floor_bound = |b: f64| if integral { (b + 1e-6).floor() } else { b };

    // canonical name order for tie-breaking
    let mut by_name: Vec<usize> = (0..model.variables.len()).collect();
    by_name.sort_by(|&a, &b| model.variables[a].name.cmp(&model.variables[b].name));
    let mut rank = vec![0; model.variables.len()];
    for (r, &j) in by_name.iter().enumerate() {
        rank[j] = r;
    }

    let workers = if limits.deterministic {
        1
    } else {
        limits.workers.max(1)
    };
    let nnz: usize = model.constraints.iter().map(|c| c.coeffs.len()).sum();
    let per_solution = 96 * (nnz + model.constraints.len() + model.variables.len()) + 4096;
    let warm_budget = (512_000_000 / per_solution).max(16);

    let mut incumbent = Schedule::default();
    let mut inc_value = 0.0f64;
    let mut trace = vec![(0u64, 0.0)];
    let mut rejected = 0u64;
    let mut nodes = 0u64;
    let mut seq = 0u64;

    let root_node = Node {
        fixes: None,
        warm: None,
        bound: f64::INFINITY,
        depth: 0,
        preferred: true,
        seq: 0,
    };
    let mut root_bound = f64::INFINITY;
    let mut queue = BinaryHeap::new();
    queue.push(root_node);
    let mut infeasible_root = false;

    let prunable = |bound: f64, inc: f64| {
        if integral {
            bound < inc + 0.5
        } else {
            bound <= inc + limits.gap_tolerance * inc.abs().max(1.0)
        }
    };

    // preferred child of the last branched node, evaluated next
    let mut plunge: Option<Node> = None;

    while !queue.is_empty() || plunge.is_some() {
        let open_bound = queue
            .peek()
            .map_or(inc_value, |n| n.bound)
            .max(plunge.as_ref().map_or(inc_value, |n| n.bound))
            .max(inc_value);
        if nodes > 0 && SolveReport::relative_gap(inc_value, open_bound) <= limits.gap_tolerance {
            break;
        }
        if start.elapsed().as_secs_f64() >= limits.time_limit_s
            || limits.node_limit.is_some_and(|l| nodes >= l)
        {
            break;
        }
        let mut batch = Vec::with_capacity(workers);
        if let Some(n) = plunge.take() {
            if !prunable(n.bound, inc_value) {
                batch.push(n);
            }
        }
        while batch.len() < workers {
            match queue.pop() {
                Some(n) if !prunable(n.bound, inc_value) => batch.push(n),
                Some(_) => continue,
                None => break,
            }
        }
        if batch.is_empty() {
            break;
        }
        let results: Vec<Eval> = if batch.len() == 1 {
            vec![engine.evaluate(&batch[0])]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = batch
                    .iter()
                    .map(|n| {
                        let e = &engine;
                        s.spawn(move || e.evaluate(n))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().unwrap_or(Eval::Infeasible))
                    .collect()
            })
        };

        for (node, eval) in batch.into_iter().zip(results) {
            nodes += 1;
            let (objective, values, warm) = match eval {
                Eval::Infeasible => {
                    if node.depth == 0 {
                        infeasible_root = true;
                    }
                    continue;
                }
                Eval::Solved {
                    objective,
                    values,
                    warm,
                } => (objective, values, warm),
            };
            let bound = floor_bound(objective).min(node.bound);
            if node.depth == 0 {
                root_bound = bound;
            }
            if prunable(bound, inc_value) {
                continue;
            }
            match most_fractional(model, &values, &rank) {
                None => {
                    let accepted = engine
                        .polish(&values, warm.as_ref())
                        .and_then(|v| extract_schedule(model, inst, &v).ok());
                    match accepted {
                        Some(s) => {
                            let j = s.objective(inst) as f64;
                            if j > inc_value {
                                inc_value = j;
                                incumbent = s;
                                trace.push((nodes, j));
                            }
                        }
                        None => rejected += 1,
                    }
                }
                Some(j) => {
                    let up_first = values[j] >= 0.5;
                    let keep_warm = queue.len() < warm_budget;
                    // dive until the first incumbent, then while the child ties the best open bound
                    let dive = plunge.is_none()
                        && (trace.len() == 1 || queue.peek().map_or(true, |n| bound >= n.bound));
                    for v in [0.0, 1.0] {
                        let fixes = Fix {
                            var: j,
                            value: v,
                            parent: node.fixes.clone(),
                        };
                        seq += 1;
                        let child = Node {
                            fixes: Some(Arc::new(fixes)),
                            warm: None,
                            bound,
                            depth: node.depth + 1,
                            preferred: (v == 1.0) == up_first,
                            seq,
                        };
                        if dive && child.preferred {
                            plunge = Some(Node {
                                warm: warm.clone(),
                                ..child
                            });
                        } else {
                            queue.push(Node {
                                warm: if keep_warm { warm.clone() } else { None },
                                ..child
                            });
                        }
                    }
                }
            }
        }
    }

    let wall = start.elapsed().as_secs_f64();
    if infeasible_root {
        return BnbRun {
            report: SolveReport {
                schedule: Schedule::default(),
                objective_j: 0.0,
                dual_bound: 0.0,
                gap: 0.0,
                nodes_explored: nodes,
                wall_time_s: wall,
                status: SolveStatus::Infeasible,
                pruning: None,
            },
            root_bound: f64::NEG_INFINITY,
            incumbent_trace: trace,
            rejected_candidates: rejected,
        };
    }
    let open_bound = queue
        .iter()
        .chain(plunge.as_ref())
        .filter(|n| !prunable(n.bound, inc_value))
        .map(|n| n.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    // an unsolved root leaves an infinite open bound; total priority caps it
    let dual = inc_value
        .max(open_bound)
        .min(inst.total_priority() as f64)
        .max(inc_value);
    let gap = SolveReport::relative_gap(inc_value, dual);
    BnbRun {
        report: SolveReport {
            schedule: incumbent,
            objective_j: inc_value,
            dual_bound: dual,
            gap,
            nodes_explored: nodes,
            wall_time_s: wall,
            status: if gap <= limits.gap_tolerance {
                SolveStatus::Optimal
            } else {
                SolveStatus::TimeLimit
            },
            pruning: None,
        },
        root_bound,
        incumbent_trace: trace,
        rejected_candidates: rejected,
    }
}
