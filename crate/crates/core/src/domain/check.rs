use std::collections::BTreeMap;
use std::fmt;

use super::{Imaging, Instance, EARTH_RADIUS_KM};

/// Slack on angle-limit comparisons, covering the 9-digit file rounding.
const ANGLE_TOL: f64 = 1e-8;

/// A violated structural rule. Defects are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Defect {
    pub entity: String,
    pub rule: String,
}

impl Defect {
    fn new(entity: impl Into<String>, rule: impl Into<String>) -> Self {
        Defect {
            entity: entity.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

fn positive(defects: &mut Vec<Defect>, entity: &str, field: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        defects.push(Defect::new(entity, format!("{field} must be positive")));
    }
}

fn nonnegative(defects: &mut Vec<Defect>, entity: &str, field: &str, v: f64) {
    if !(v.is_finite() && v >= 0.0) {
        defects.push(Defect::new(entity, format!("{field} must be non-negative")));
    }
}

/// Re-evaluates every structural invariant of an instance. The result is empty
/// iff the instance is well formed.
pub fn check_instance(inst: &Instance) -> Vec<Defect> {
    let mut d = Vec::new();
    let horizon = inst.params.horizon_s;
    positive(&mut d, "params", "horizon_s", horizon);

    let mut seen = BTreeMap::new();
    for s in &inst.satellites {
        let e = format!("satellite {}", s.id);
        if seen.insert(s.id, ()).is_some() {
            d.push(Defect::new(&e, "duplicate id"));
        }
        positive(&mut d, &e, "roll_limit_rad", s.roll_limit_rad);
        positive(&mut d, &e, "pitch_limit_rad", s.pitch_limit_rad);
        positive(&mut d, &e, "slew_rate_rad_per_s", s.slew_rate_rad_per_s);
        positive(&mut d, &e, "capacity_units", s.capacity_units);
        positive(&mut d, &e, "acq_rate_units_per_s", s.acq_rate_units_per_s);
        positive(&mut d, &e, "down_rate_units_per_s", s.down_rate_units_per_s);
        nonnegative(&mut d, &e, "stab_time_s", s.stab_time_s);
        nonnegative(&mut d, &e, "sat_prep_time_s", s.sat_prep_time_s);
        nonnegative(&mut d, &e, "initial_data_units", s.initial_data_units);
        if s.initial_data_units > s.capacity_units {
            d.push(Defect::new(&e, "initial data exceeds capacity"));
        }
        if let Some(o) = &s.orbit {
            if !(o.semi_major_axis_km > EARTH_RADIUS_KM) {
                d.push(Defect::new(&e, "orbit semi-major axis inside Earth"));
            }
            if !(o.eccentricity >= 0.0 && o.eccentricity < 1.0) {
                d.push(Defect::new(&e, "orbit eccentricity outside [0, 1)"));
            }
        }
    }

    let mut seen = BTreeMap::new();
    for g in &inst.stations {
        let e = format!("station {}", g.id);
        if seen.insert(g.id, ()).is_some() {
            d.push(Defect::new(&e, "duplicate id"));
        }
        nonnegative(&mut d, &e, "gs_prep_time_s", g.gs_prep_time_s);
    }

    let mut seen = BTreeMap::new();
    for t in &inst.tasks {
        let e = format!("task {}", t.id);
        if seen.insert(t.id, ()).is_some() {
            d.push(Defect::new(&e, "duplicate id"));
        }
        if t.priority_w < 1 {
            d.push(Defect::new(&e, "priority must be at least 1"));
        }
        if let Imaging::Stereo { beta_rad } = t.imaging {
            positive(&mut d, &e, "beta_rad", beta_rad);
        }
        if let Some(a) = t.user_angle_limit_rad {
            positive(&mut d, &e, "user_angle_limit_rad", a);
        }
        for p in &t.process_time_s {
            positive(&mut d, &e, "process_time_s", p.seconds);
            if inst.satellite(p.sat).is_none() {
                d.push(Defect::new(&e, format!("unknown satellite {}", p.sat)));
            }
        }
    }

    let mut groups: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for w in &inst.otws {
        let e = format!("otw ({}, {}, {})", w.task, w.sat, w.index);
        groups.entry((w.task, w.sat)).or_default().push(w.index);
        let task = inst.task(w.task);
        let sat = inst.satellite(w.sat);
        if task.is_none() {
            d.push(Defect::new(&e, format!("unknown task {}", w.task)));
        }
        if sat.is_none() {
            d.push(Defect::new(&e, format!("unknown satellite {}", w.sat)));
        }
        let finite = [
            w.t_open_s,
            w.t_close_s,
            w.roll_rad,
            w.pitch_at_open_rad,
            w.pitch_slope_rad_per_s,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            d.push(Defect::new(&e, "non-finite value"));
            continue;
        }
        if w.t_open_s >= w.t_close_s {
            d.push(Defect::new(&e, "window inverted"));
        }
        if w.t_open_s < 0.0 || w.t_close_s > horizon {
            d.push(Defect::new(&e, "window outside horizon"));
        }
        if let (Some(task), Some(sat)) = (task, sat) {
            if task.process_time(sat.id).is_none() {
                d.push(Defect::new(&e, "missing process time for satellite"));
            }
            let (roll_lim, pitch_lim) = inst.angle_limits(task, sat);
            if w.roll_rad.abs() > roll_lim + ANGLE_TOL {
                d.push(Defect::new(&e, "roll exceeds limit"));
            }
            let (lo, hi) = w.pitch_range();
            if lo < -pitch_lim - ANGLE_TOL || hi > pitch_lim + ANGLE_TOL {
                d.push(Defect::new(&e, "pitch exceeds limit"));
            }
        }
    }
    for ((task, sat), idx) in &groups {
        if !is_contiguous(idx) {
            d.push(Defect::new(
                format!("otws of task {task} on satellite {sat}"),
                "window indices not contiguous from 0",
            ));
        }
    }

    let mut groups: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for w in &inst.dtws {
        let e = format!("dtw ({}, {}, {})", w.download, w.sat, w.index);
        groups.entry((w.download, w.sat)).or_default().push(w.index);
        if inst.satellite(w.sat).is_none() {
            d.push(Defect::new(&e, format!("unknown satellite {}", w.sat)));
        }
        if inst.station(w.station).is_none() {
            d.push(Defect::new(&e, format!("unknown station {}", w.station)));
        }
        if !(w.t_open_s.is_finite() && w.t_close_s.is_finite()) {
            d.push(Defect::new(&e, "non-finite value"));
            continue;
        }
        if w.t_open_s >= w.t_close_s {
            d.push(Defect::new(&e, "window inverted"));
        }
        if w.t_open_s < 0.0 || w.t_close_s > horizon {
            d.push(Defect::new(&e, "window outside horizon"));
        }
    }
    for ((dl, sat), idx) in &groups {
        if !is_contiguous(idx) {
            d.push(Defect::new(
                format!("dtws of download {dl} on satellite {sat}"),
                "window indices not contiguous from 0",
            ));
        }
    }
    d
}

fn is_contiguous(indices: &[u32]) -> bool {
    let mut v = indices.to_vec();
    v.sort_unstable();
    v.iter().enumerate().all(|(i, &k)| k as usize == i)
}
