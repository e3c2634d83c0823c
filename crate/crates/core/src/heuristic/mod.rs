//! Time-window pruning heuristic and the FIFO baseline.
//!
//! Windows of one satellite that follow each other closer than the maximum
//! slew time form a cluster. Each cluster keeps at most `lambda` windows,
//! chosen by priority, scarcity of alternatives and roll similarity, and the
//! exact model is solved over the retained windows only.

mod fifo;
mod prune;

use std::time::Instant;

pub use fifo::solve_fifo;
pub use prune::{
    cluster_windows, lambda_lower_bound, max_slew_time, prune_clusters, rank_members, Cluster,
    LambdaError, PrunedInstance,
};

use crate::domain::{Instance, SolveReport};
use crate::milp::build_model_masked;
use crate::solver::{solve_exact, BnbLimits};

/// Prunes with `lambda`, then solves the reduced model exactly. Bound and
/// gap refer to the reduced model.
pub fn solve_heuristic(inst: &Instance, lambda: u32, limits: &BnbLimits) -> SolveReport {
    let clock = Instant::now();
    let pruned = prune_clusters(inst, lambda);
    let model = build_model_masked(inst, Some(&pruned.retained));
    let mut report = solve_exact(&model, inst, limits);
    report.wall_time_s = clock.elapsed().as_secs_f64();
    report.pruning = Some(pruned.stats());
    report
}
