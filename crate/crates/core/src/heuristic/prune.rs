//! Window clustering, the lambda lower bound and cluster pruning.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use crate::domain::{Instance, OtwKey, PruneStats, SatId, Satellite, TaskId};

/// Time to slew across the full roll and pitch ranges and back, rounded to
/// the nanosecond so degree-valued limits give whole seconds.
pub fn max_slew_time(sat: &Satellite) -> f64 {
    let t = (2.0 * sat.roll_limit_rad + 2.0 * sat.pitch_limit_rad) / sat.slew_rate_rad_per_s;
    (t * 1e9).round() / 1e9
}

/// Chain of windows of one satellite whose consecutive gaps stay below the
/// maximum slew time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub sat: SatId,
    /// Members sorted by opening time.
    pub members: Vec<OtwKey>,
}

/// Clusters of two or more windows, by satellite then opening time.
pub fn cluster_windows(inst: &Instance) -> Vec<Cluster> {
    let mut out = Vec::new();
    for sat in &inst.satellites {
        let limit = max_slew_time(sat);
        let mut mine: Vec<usize> = (0..inst.otws.len())
            .filter(|&i| inst.otws[i].sat == sat.id)
            .collect();
        mine.sort_by(|&a, &b| {
            let (wa, wb) = (&inst.otws[a], &inst.otws[b]);
            wa.t_open_s
                .total_cmp(&wb.t_open_s)
                .then(wa.key().cmp(&wb.key()))
        });
        let mut current: Vec<OtwKey> = Vec::new();
        let mut latest_close = f64::NEG_INFINITY;
        for i in mine {
            let w = &inst.otws[i];
            if !current.is_empty() && w.t_open_s - latest_close >= limit {
                if current.len() >= 2 {
                    out.push(Cluster {
                        sat: sat.id,
                        members: std::mem::take(&mut current),
                    });
                }
                current.clear();
                latest_close = f64::NEG_INFINITY;
            }
            current.push(w.key());
            latest_close = latest_close.max(w.t_close_s);
        }
        if current.len() >= 2 {
            out.push(Cluster {
                sat: sat.id,
                members: current,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LambdaError {
    #[error("instance has no {0}")]
    Empty(&'static str),
    #[error("average process plus stabilization time is zero")]
    ZeroDenominator,
}

/// `ceil(avg window length / (avg process time + avg stabilization time))`.
pub fn lambda_lower_bound(inst: &Instance) -> Result<u32, LambdaError> {
    let n_tw = inst.otws.len();
    let n_task: usize = inst.tasks.iter().map(|t| t.process_time_s.len()).sum();
    let n_sat = inst.satellites.len();
    if n_tw == 0 {
        return Err(LambdaError::Empty("observation windows"));
    }
    if n_task == 0 {
        return Err(LambdaError::Empty("process times"));
    }
    if n_sat == 0 {
        return Err(LambdaError::Empty("satellites"));
    }
    let avg_len = inst.otws.iter().map(|w| w.len_s()).sum::<f64>() / n_tw as f64;
    let avg_tp = inst
        .tasks
        .iter()
        .flat_map(|t| t.process_time_s.iter().map(|p| p.seconds))
        .sum::<f64>()
        / n_task as f64;
    let avg_stab = inst.satellites.iter().map(|s| s.stab_time_s).sum::<f64>() / n_sat as f64;
    let denom = avg_tp + avg_stab;
    if denom <= 0.0 {
        return Err(LambdaError::ZeroDenominator);
    }
    let q = avg_len / denom;
    // an exact quotient must not round up through float noise
    let near = q.round();
    let lambda = if (q - near).abs() <= 1e-9 * near.max(1.0) {
        near
    } else {
        q.ceil()
    };
    Ok(lambda.max(1.0) as u32)
}

/// Instance with a retained-window mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedInstance {
    pub lambda: u32,
    /// Aligned with `inst.otws`.
    pub retained: Vec<bool>,
    pub clusters: Vec<Cluster>,
    /// Remaining windows per task after pruning.
    pub opportunities: BTreeMap<TaskId, usize>,
    pub removals: usize,
}

impl PrunedInstance {
    pub fn retained_keys(&self, inst: &Instance) -> Vec<OtwKey> {
        inst.otws
            .iter()
            .zip(&self.retained)
            .filter(|(_, &k)| k)
            .map(|(w, _)| w.key())
            .collect()
    }

    pub fn stats(&self) -> PruneStats {
        PruneStats {
            lambda: self.lambda,
            clusters: self.clusters.len(),
            windows_before: self.retained.len(),
            windows_retained: self.retained.iter().filter(|&&k| k).count(),
        }
    }
}

fn opportunity_counts(inst: &Instance) -> BTreeMap<TaskId, usize> {
    let mut op: BTreeMap<TaskId, usize> = inst.tasks.iter().map(|t| (t.id, 0)).collect();
    for w in &inst.otws {
        *op.entry(w.task).or_default() += 1;
    }
    op
}

/// Cluster members in retention order: priority descending, opportunity
/// count ascending, then smallest roll deviation from the mean of the
/// members already ranked, then window key.
pub fn rank_members(
    inst: &Instance,
    cluster: &Cluster,
    op: &BTreeMap<TaskId, usize>,
) -> Vec<OtwKey> {
    let mut left: Vec<OtwKey> = cluster.members.clone();
    let mut ranked = Vec::with_capacity(left.len());
    let mut roll_sum = 0.0;
    while !left.is_empty() {
        let mean = (!ranked.is_empty()).then(|| roll_sum / ranked.len() as f64);
        let key = |k: &OtwKey| {
            let w = inst.otw(*k).expect("cluster member exists");
            let prio = inst.task(k.task).map_or(0, |t| t.priority_w);
            let delta = mean.map_or(0.0, |m| (w.roll_rad - m).abs());
            (Reverse(prio), op[&k.task], delta, *k)
        };
        let best = (0..left.len())
            .min_by(|&a, &b| {
                let (ka, kb) = (key(&left[a]), key(&left[b]));
                (ka.0, ka.1)
                    .cmp(&(kb.0, kb.1))
                    .then(ka.2.total_cmp(&kb.2))
                    .then(ka.3.cmp(&kb.3))
            })
            .expect("nonempty");
        let k = left.remove(best);
        roll_sum += inst.otw(k).expect("cluster member exists").roll_rad;
        ranked.push(k);
    }
    ranked
}

/// Keeps at most `lambda` windows per cluster where the no-orphan rule
/// allows it.
///
/// Ranks are fixed before any removal. Candidates (rank above `lambda`) are
/// removed worst rank first across all clusters, so the run for a smaller
/// `lambda` replays the run for a larger one and then continues: retained
/// sets are nested in `lambda`.
pub fn prune_clusters(inst: &Instance, lambda: u32) -> PrunedInstance {
    assert!(lambda >= 1, "lambda must be at least 1");
    let clusters = cluster_windows(inst);
    let mut op = opportunity_counts(inst);

    let mut queue: Vec<(usize, usize, OtwKey)> = Vec::new();
    for (ci, c) in clusters.iter().enumerate() {
        for (r, k) in rank_members(inst, c, &op).into_iter().enumerate() {
            queue.push((r + 1, ci, k));
        }
    }
    queue.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut retained = vec![true; inst.otws.len()];
    let budget = inst.otws.len();
    let mut removals = 0;
    for &(rank, _, key) in queue.iter().take_while(|q| q.0 > lambda as usize) {
        debug_assert!(rank > lambda as usize);
        if removals == budget {
            break;
        }
        let count = op.get_mut(&key.task).expect("task of window");
        if *count >= 2 {
            *count -= 1;
            retained[inst.otw_position(key).expect("window exists")] = false;
            removals += 1;
        }
    }
    PrunedInstance {
        lambda,
        retained,
        clusters,
        opportunities: op,
        removals,
    }
}
