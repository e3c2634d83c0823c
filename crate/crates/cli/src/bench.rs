//! Benchmark harness: every algorithm on every scenario, one row each.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};

use aeos_core::domain::{Instance, SolveReport, SolveStatus};
use aeos_core::heuristic::{lambda_lower_bound, solve_fifo, solve_heuristic, LambdaError};
use aeos_core::milp::build_model;
use aeos_core::solver::{solve_exact, BnbLimits};

/// Algorithm as requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoSpec {
    Exact,
    /// Pruning heuristic at a fixed lambda.
    Heuristic(u32),
    /// Pruning heuristic at `lambda_lower_bound + k`.
    HeuristicAboveBound(u32),
    Fifo,
}

/// Algorithm as it ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    DirectMilp,
    Heuristic(u32),
    Fifo,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::DirectMilp => write!(f, "Direct MILP"),
            Algorithm::Heuristic(l) => write!(f, "MILP-heuristic({l})"),
            Algorithm::Fifo => write!(f, "FIFO"),
        }
    }
}

/// Lambda used when none is given. Without observation windows nothing can
/// be pruned and any lambda gives the same run; 1 is reported.
pub fn default_lambda(inst: &Instance) -> Result<u32, LambdaError> {
    match lambda_lower_bound(inst) {
        Err(LambdaError::Empty("observation windows")) => Ok(1),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub scenario: String,
    pub algorithm: String,
    pub objective_j: Option<f64>,
    pub assigned_tasks: Option<usize>,
    /// Relative, 0.01 = 1%.
    pub gap: Option<f64>,
    /// J over the Direct MILP J of the same scenario, in percent.
    pub relative_performance_pct: Option<f64>,
    pub time_s: Option<f64>,
    /// Wall time over the Direct MILP wall time of the same scenario, in percent.
    pub relative_time_pct: Option<f64>,
    /// Set when the row failed; other fields are then empty.
    pub failure: Option<String>,
    pub report: Option<SolveReport>,
}

impl BenchmarkRow {
    /// Successful row; relative columns are filled later.
    pub fn new(
        scenario: &str,
        algorithm: Algorithm,
        j: f64,
        assigned: usize,
        gap: f64,
        time_s: f64,
    ) -> Self {
        BenchmarkRow {
            scenario: scenario.to_string(),
            algorithm: algorithm.to_string(),
            objective_j: Some(j),
            assigned_tasks: Some(assigned),
            gap: Some(gap),
            relative_performance_pct: None,
            time_s: Some(time_s),
            relative_time_pct: None,
            failure: None,
            report: None,
        }
    }

    fn failed(scenario: &str, algorithm: String, why: String) -> Self {
        BenchmarkRow {
            scenario: scenario.to_string(),
            algorithm,
            objective_j: None,
            assigned_tasks: None,
            gap: None,
            relative_performance_pct: None,
            time_s: None,
            relative_time_pct: None,
            failure: Some(why),
            report: None,
        }
    }
}

/// Whether wall-clock columns appear in rendered output. Timing is the only
/// nondeterministic column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Show,
    Omit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
}

/// Runs one algorithm; `Err` marks the row failed.
pub fn run_one(
    inst: &Instance,
    spec: AlgoSpec,
    limits: &BnbLimits,
) -> Result<(Algorithm, SolveReport), String> {
    let algorithm = match spec {
        AlgoSpec::Exact => Algorithm::DirectMilp,
        AlgoSpec::Heuristic(l) => Algorithm::Heuristic(l),
        AlgoSpec::HeuristicAboveBound(k) => {
            Algorithm::Heuristic(default_lambda(inst).map_err(|e| e.to_string())? + k)
        }
        AlgoSpec::Fifo => Algorithm::Fifo,
    };
    if algorithm == Algorithm::Heuristic(0) {
        return Err("lambda must be at least 1".to_string());
    }
    let report = catch_unwind(AssertUnwindSafe(|| match algorithm {
        Algorithm::DirectMilp => solve_exact(&build_model(inst), inst, limits),
        Algorithm::Heuristic(l) => solve_heuristic(inst, l, limits),
        Algorithm::Fifo => solve_fifo(inst),
    }))
    .map_err(|p| {
        p.downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "solver panicked".to_string())
    })?;
    if report.status == SolveStatus::Infeasible {
        return Err("solver reported infeasible".to_string());
    }
    Ok((algorithm, report))
}

/// Rows per (scenario, algorithm) in input order. Relative columns need a
/// successful Direct MILP row in the same scenario.
pub fn run_benchmark(
    instances: &[(String, Instance)],
    algorithms: &[AlgoSpec],
    limits: &BnbLimits,
) -> BenchmarkTable {
    assert!(
        !instances.is_empty(),
        "benchmark needs at least one instance"
    );
    let mut rows = Vec::new();
    for (name, inst) in instances {
        let first = rows.len();
        for &spec in algorithms {
            rows.push(match run_one(inst, spec, limits) {
                Ok((algorithm, report)) => BenchmarkRow {
                    report: Some(report.clone()),
                    ..BenchmarkRow::new(
                        name,
                        algorithm,
                        report.objective_j,
                        report.schedule.assigned_tasks(inst),
                        report.gap,
                        report.wall_time_s,
                    )
                },
                Err(why) => BenchmarkRow::failed(name, format!("{spec:?}"), why),
            });
        }
        let reference = rows[first..]
            .iter()
            .find(|r| r.algorithm == Algorithm::DirectMilp.to_string() && r.failure.is_none())
            .map(|r| (r.objective_j.unwrap(), r.time_s.unwrap()));
        if let Some((j0, t0)) = reference {
            for r in &mut rows[first..] {
                r.set_relative(j0, t0);
            }
        }
    }
    BenchmarkTable { rows }
}

impl BenchmarkRow {
    /// Fills the relative columns against Direct MILP J `j0` and time `t0`.
    /// The Direct MILP row itself is 100 in both.
    pub fn set_relative(&mut self, j0: f64, t0: f64) {
        if self.failure.is_some() {
            return;
        }
        let j = self.objective_j.unwrap();
        let is_ref = self.algorithm == Algorithm::DirectMilp.to_string();
        self.relative_performance_pct = if is_ref {
            Some(100.0)
        } else if j0 > 0.0 {
            Some(100.0 * j / j0)
        } else if j == 0.0 {
            Some(100.0)
        } else {
            None
        };
        self.relative_time_pct = if is_ref {
            Some(100.0)
        } else if t0 > 0.0 {
            Some(100.0 * self.time_s.unwrap() / t0)
        } else {
            None
        };
    }
}

/// Up to two decimals, trailing zeros dropped.
pub fn trim_pct(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// J with the gap in parentheses when positive: `332 (1%)`.
pub fn render_objective(j: f64, gap: f64) -> String {
    let j = format!("{j:.0}");
    if gap > 0.0 {
        format!("{j} ({}%)", trim_pct(100.0 * gap))
    } else {
        j
    }
}

pub fn render_relative_performance(pct: f64) -> String {
    format!("{pct:.0}%")
}

pub fn render_relative_time(pct: f64) -> String {
    format!("{pct:.2}%")
}

impl BenchmarkTable {
    fn cells(&self, timing: Timing) -> Vec<Vec<String>> {
        let mut head = vec!["Scenario", "Algorithm", "J", "Tasks", "Rel. perf."];
        if timing == Timing::Show {
            head.extend(["Time (s)", "Rel. time"]);
        }
        let mut out = vec![head.into_iter().map(String::from).collect::<Vec<_>>()];
        for r in &self.rows {
            let opt = |v: Option<String>| v.unwrap_or_else(|| "-".to_string());
            let mut line = vec![r.scenario.clone(), r.algorithm.clone()];
            match &r.failure {
                Some(why) => {
                    line.push(format!("FAILED: {why}"));
                    line.extend(
                        std::iter::repeat("-".to_string()).take(if timing == Timing::Show {
                            4
                        } else {
                            2
                        }),
                    );
                }
                None => {
                    line.push(render_objective(r.objective_j.unwrap(), r.gap.unwrap()));
                    line.push(r.assigned_tasks.unwrap().to_string());
                    line.push(opt(r
                        .relative_performance_pct
                        .map(render_relative_performance)));
                    if timing == Timing::Show {
                        line.push(format!("{:.2}", r.time_s.unwrap()));
                        line.push(opt(r.relative_time_pct.map(render_relative_time)));
                    }
                }
            }
            out.push(line);
        }
        out
    }

    /// Aligned text table, one line per row.
    pub fn to_text(&self, timing: Timing) -> String {
        let cells = self.cells(timing);
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| {
                cells
                    .iter()
                    .map(|l| l[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut s = String::new();
        for line in &cells {
            let padded: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(v, w)| format!("{v:<w$}"))
                .collect();
            s.push_str(padded.join("  ").trim_end());
            s.push('\n');
        }
        s
    }

    /// Raw columns at full precision, so every percentage can be recomputed.
    pub fn to_csv(&self, timing: Timing) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut head = vec![
            "scenario",
            "algorithm",
            "objective_j",
            "assigned_tasks",
            "gap",
            "relative_performance_pct",
        ];
        if timing == Timing::Show {
            head.extend(["time_s", "relative_time_pct"]);
        }
        head.push("failure");
        w.write_record(&head).expect("in-memory write");
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![
                r.scenario.clone(),
                r.algorithm.clone(),
                num(r.objective_j),
                r.assigned_tasks.map(|n| n.to_string()).unwrap_or_default(),
                num(r.gap),
                num(r.relative_performance_pct),
            ];
            if timing == Timing::Show {
                rec.push(num(r.time_s));
                rec.push(num(r.relative_time_pct));
            }
            rec.push(r.failure.clone().unwrap_or_default());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}
