//! Independent schedule checker.
//!
//! Every rule is re-evaluated from the instance data alone: window
//! membership, pairwise separations, stereo pitch differences and the exact
//! piecewise-linear onboard buffer. Nothing is shared with the model builder.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{Instance, SatId, Schedule, ScheduledDownload, ScheduledObservation};

/// Tolerance on reported pitch against the window model.
pub const PITCH_TOL_RAD: f64 = 1e-9;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    Assignment,
    ObsWindow,
    DlWindow,
    ObsOverlap,
    GsOverlap,
    SatDlOverlap,
    Capacity,
    BufferNonneg,
    Stereo,
    PitchLink,
}

/// Direction of the violated rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Limit {
    /// measured >= bound; margin = measured - bound
    AtLeast,
    /// measured <= bound; margin = bound - measured
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub family: Family,
    pub entities: Vec<String>,
    pub measured: f64,
    pub bound: f64,
    pub limit: Limit,
    /// Negative for a violation.
    pub margin: f64,
}

impl Finding {
    fn new(family: Family, entities: Vec<String>, measured: f64, bound: f64, limit: Limit) -> Self {
        let margin = match limit {
            Limit::AtLeast => measured - bound,
            Limit::AtMost => bound - measured,
        };
        Finding {
            family,
            entities,
            measured,
            bound,
            limit,
            margin,
        }
    }

    /// The measured quantity moved by the margin; equals the bound.
    pub fn restored(&self) -> f64 {
        match self.limit {
            Limit::AtLeast => self.measured - self.margin,
            Limit::AtMost => self.measured + self.margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub findings: Vec<Finding>,
}

impl Verdict {
    pub fn families(&self) -> Vec<Family> {
        let mut f: Vec<Family> = self.findings.iter().map(|f| f.family).collect();
        f.sort();
        f.dedup();
        f
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", if self.pass { "PASS" } else { "FAIL" })?;
        for x in &self.findings {
            writeln!(
                f,
                "{:?} [{}] measured {:.9} bound {:.9} margin {:.9}",
                x.family,
                x.entities.join(", "),
                x.measured,
                x.bound,
                x.margin
            )?;
        }
        Ok(())
    }
}

/// A reference in the schedule that does not resolve.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StructuralError {
    #[error("observation of task {task} references missing window (sat {sat}, index {window})")]
    MissingWindow { task: u32, sat: u32, window: u32 },
    #[error("download {download} references missing window (sat {sat}, index {window})")]
    MissingDownloadWindow {
        download: u32,
        sat: u32,
        window: u32,
    },
    #[error("observation references unknown task {0}")]
    UnknownTask(u32),
    #[error("non-finite time in {0}")]
    NonFinite(String),
}

fn obs_name(o: &ScheduledObservation) -> String {
    format!(
        "obs {}/{} (sat {}, window {})",
        o.task, o.component, o.sat, o.window
    )
}

fn dl_name(d: &ScheduledDownload) -> String {
    format!(
        "download {} (sat {}, window {})",
        d.download, d.sat, d.window
    )
}

/// Onboard data level of one satellite over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferTrajectory {
    pub sat: SatId,
    /// (time, level) breakpoints sorted by time; an image completion
    /// appears twice at its end time, before and after the jump.
    pub points: Vec<(f64, f64)>,
}

impl BufferTrajectory {
    /// Level left at the end, the next horizon's initial data.
    pub fn final_level(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }

    pub fn peak(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn trough(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Exact piecewise-linear buffer level of `sat`: a jump of
/// `acq_rate * process_time` at every image end, slope `-down_rate` during
/// every session. Negative levels are kept, not clamped.
pub fn buffer_trajectory(inst: &Instance, sch: &Schedule, sat: SatId) -> BufferTrajectory {
    let Some(s) = inst.satellite(sat) else {
        return BufferTrajectory {
            sat,
            points: Vec::new(),
        };
    };
    let mut jumps: Vec<(f64, f64)> = sch
        .observations
        .iter()
        .filter(|o| o.sat == sat)
        .filter_map(|o| {
            let tp = inst.task(o.task)?.process_time(sat)?;
            Some((o.t_start_s + tp, s.acq_rate_units_per_s * tp))
        })
        .collect();
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sessions: Vec<(f64, f64)> = sch
        .downloads
        .iter()
        .filter(|d| d.sat == sat)
        .map(|d| (d.t_start_s, d.t_end_s.max(d.t_start_s)))
        .collect();

    let mut times: Vec<f64> = vec![0.0, inst.params.horizon_s];
    times.extend(jumps.iter().map(|j| j.0));
    times.extend(sessions.iter().flat_map(|&(a, b)| [a, b]));
    times.sort_by(f64::total_cmp);
    times.dedup();

    let gamma = s.down_rate_units_per_s;
    let mut level = s.initial_data_units;
    let mut points = Vec::with_capacity(times.len() + jumps.len());
    let mut prev = times[0].min(0.0);
    let mut next_jump = 0;
    for &t in &times {
        let active_drain: f64 = sessions
            .iter()
            .map(|&(a, b)| (t.min(b) - prev.max(a)).max(0.0))
            .sum();
        level -= gamma * active_drain;
        prev = t;
        let mut jump = 0.0;
        while next_jump < jumps.len() && jumps[next_jump].0 <= t {
            jump += jumps[next_jump].1;
            next_jump += 1;
        }
        points.push((t, level));
        if jump != 0.0 {
            level += jump;
            points.push((t, level));
        }
    }
    BufferTrajectory { sat, points }
}

/// Checks `sch` against every rule of the problem.
pub fn validate_schedule(
    inst: &Instance,
    sch: &Schedule,
    tol: f64,
) -> Result<Verdict, StructuralError> {
    for o in &sch.observations {
        if inst.task(o.task).is_none() {
            return Err(StructuralError::UnknownTask(o.task));
        }
        if inst.otw(o.otw_key()).is_none() {
            return Err(StructuralError::MissingWindow {
                task: o.task,
                sat: o.sat,
                window: o.window,
            });
        }
        if !o.t_start_s.is_finite() || !o.pitch_rad.is_finite() {
            return Err(StructuralError::NonFinite(obs_name(o)));
        }
    }
    for d in &sch.downloads {
        if inst.dtw(d.dtw_key()).is_none() {
            return Err(StructuralError::MissingDownloadWindow {
                download: d.download,
                sat: d.sat,
                window: d.window,
            });
        }
        if !d.t_start_s.is_finite() || !d.t_end_s.is_finite() {
            return Err(StructuralError::NonFinite(dl_name(d)));
        }
    }

    let mut out: Vec<Finding> = Vec::new();
    let mut push = |f: Finding| {
        // pitch carries its own absolute tolerance
        let slack = if f.family == Family::PitchLink {
            0.0
        } else {
            tol
        };
        if f.margin < -slack {
            out.push(f);
        }
    };

    // selection counts
    let mut per_task: BTreeMap<u32, Vec<&ScheduledObservation>> = BTreeMap::new();
    for o in &sch.observations {
        per_task.entry(o.task).or_default().push(o);
    }
    for (&task, list) in &per_task {
        let t = inst.task(task).expect("resolved above");
        let names: Vec<String> = list.iter().map(|o| obs_name(o)).collect();
        let comps = t.imaging.components();
        for c in 1..=comps {
            let n = list.iter().filter(|o| o.component == c).count();
            push(Finding::new(
                Family::Assignment,
                names.clone(),
                n as f64,
                1.0,
                Limit::AtMost,
            ));
        }
        let stray = list
            .iter()
            .filter(|o| o.component < 1 || o.component > comps)
            .count();
        push(Finding::new(
            Family::Assignment,
            names.clone(),
            stray as f64,
            0.0,
            Limit::AtMost,
        ));
        if comps == 2 {
            let present = (1..=2)
                .filter(|&c| list.iter().any(|o| o.component == c))
                .count();
            // both or neither
            if present == 1 {
                push(Finding::new(
                    Family::Assignment,
                    names,
                    1.0,
                    2.0,
                    Limit::AtLeast,
                ));
            }
        }
    }

    // window membership and pitch link
    for o in &sch.observations {
        let w = inst.otw(o.otw_key()).expect("resolved above");
        push(Finding::new(
            Family::ObsWindow,
            vec![obs_name(o)],
            o.t_start_s,
            w.t_open_s,
            Limit::AtLeast,
        ));
        push(Finding::new(
            Family::ObsWindow,
            vec![obs_name(o)],
            o.t_start_s,
            w.t_close_s,
            Limit::AtMost,
        ));
        let diff = (o.pitch_rad - w.pitch_at(o.t_start_s)).abs();
        push(Finding::new(
            Family::PitchLink,
            vec![obs_name(o)],
            diff,
            PITCH_TOL_RAD,
            Limit::AtMost,
        ));
    }
    for d in &sch.downloads {
        let w = inst.dtw(d.dtw_key()).expect("resolved above");
        push(Finding::new(
            Family::DlWindow,
            vec![dl_name(d)],
            d.t_start_s,
            w.t_open_s,
            Limit::AtLeast,
        ));
        push(Finding::new(
            Family::DlWindow,
            vec![dl_name(d)],
            d.t_end_s,
            w.t_close_s,
            Limit::AtMost,
        ));
        push(Finding::new(
            Family::DlWindow,
            vec![dl_name(d)],
            d.t_end_s - d.t_start_s,
            0.0,
            Limit::AtLeast,
        ));
    }

    // same-satellite observation separation, better of the two orders
    let model_pitch = |o: &ScheduledObservation| {
        inst.otw(o.otw_key())
            .expect("resolved")
            .pitch_at(o.t_start_s)
    };
    for (n, a) in sch.observations.iter().enumerate() {
        for b in &sch.observations[n + 1..] {
            if a.sat != b.sat {
                continue;
            }
            let s = inst.satellite(a.sat).expect("window satellite exists");
            let (wa, wb) = (
                inst.otw(a.otw_key()).unwrap(),
                inst.otw(b.otw_key()).unwrap(),
            );
            let slew = ((wa.roll_rad - wb.roll_rad).abs()
                + (model_pitch(a) - model_pitch(b)).abs())
                / s.slew_rate_rad_per_s;
            let tp = |o: &ScheduledObservation| {
                inst.task(o.task)
                    .and_then(|t| t.process_time(o.sat))
                    .unwrap_or(0.0)
            };
            let need_ab = tp(a) + s.stab_time_s + slew;
            let need_ba = tp(b) + s.stab_time_s + slew;
            let ab = Finding::new(
                Family::ObsOverlap,
                vec![obs_name(a), obs_name(b)],
                b.t_start_s - a.t_start_s,
                need_ab,
                Limit::AtLeast,
            );
            let ba = Finding::new(
                Family::ObsOverlap,
                vec![obs_name(b), obs_name(a)],
                a.t_start_s - b.t_start_s,
                need_ba,
                Limit::AtLeast,
            );
            push(if ab.margin >= ba.margin { ab } else { ba });
        }
    }

    // download separations
    for (n, a) in sch.downloads.iter().enumerate() {
        for b in &sch.downloads[n + 1..] {
            let (wa, wb) = (
                inst.dtw(a.dtw_key()).unwrap(),
                inst.dtw(b.dtw_key()).unwrap(),
            );
            let mut check = |family: Family, prep: f64| {
                let ab = Finding::new(
                    family,
                    vec![dl_name(a), dl_name(b)],
                    b.t_start_s - a.t_end_s,
                    prep,
                    Limit::AtLeast,
                );
                let ba = Finding::new(
                    family,
                    vec![dl_name(b), dl_name(a)],
                    a.t_start_s - b.t_end_s,
                    prep,
                    Limit::AtLeast,
                );
                push(if ab.margin >= ba.margin { ab } else { ba });
            };
            if wa.station == wb.station {
                let prep = inst.station(wa.station).map_or(0.0, |g| g.gs_prep_time_s);
                check(Family::GsOverlap, prep);
            }
            if a.sat == b.sat {
                let prep = inst.satellite(a.sat).map_or(0.0, |s| s.sat_prep_time_s);
                check(Family::SatDlOverlap, prep);
            }
        }
    }

    // buffer, worst breakpoint per satellite
    for s in &inst.satellites {
        let traj = buffer_trajectory(inst, sch, s.id);
        let who = vec![format!("sat {}", s.id)];
        push(Finding::new(
            Family::Capacity,
            who.clone(),
            traj.peak(),
            s.capacity_units,
            Limit::AtMost,
        ));
        push(Finding::new(
            Family::BufferNonneg,
            who,
            traj.trough(),
            0.0,
            Limit::AtLeast,
        ));
    }

    // stereo pitch difference
    for (&task, list) in &per_task {
        let Some(beta) = inst.task(task).and_then(|t| t.stereo_beta()) else {
            continue;
        };
        let c1 = list.iter().find(|o| o.component == 1);
        let c2 = list.iter().find(|o| o.component == 2);
        if let (Some(a), Some(b)) = (c1, c2) {
            let diff = (model_pitch(a) - model_pitch(b)).abs();
            push(Finding::new(
                Family::Stereo,
                vec![obs_name(a), obs_name(b)],
                diff,
                beta,
                Limit::AtLeast,
            ));
        }
    }

    Ok(Verdict {
        pass: out.is_empty(),
        findings: out,
    })
}
