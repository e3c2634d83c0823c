use super::{Entity, MilpModel, VarKind};
use crate::domain::{Instance, Schedule, ScheduledDownload, ScheduledObservation};

/// Largest accepted distance of a binary from 0 or 1.
pub const INT_TOL: f64 = 1e-6;
/// Largest accepted row or bound violation.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractError {
    #[error("assignment has {got} values for {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("binary {name} is fractional ({value})")]
    NonIntegral { name: String, value: f64 },
    #[error("variable {name} = {value} violates its bounds")]
    BoundViolated { name: String, value: f64 },
    #[error("row {name} violated by {violation}")]
    RowViolated { name: String, violation: f64 },
    #[error("variable {0} refers to an entity missing from the instance")]
    UnknownEntity(String),
}

/// Maps a solver assignment to a schedule after checking integrality,
/// bounds and every row (with binaries snapped to 0/1).
pub fn extract_schedule(
    model: &MilpModel,
    inst: &Instance,
    values: &[f64],
) -> Result<Schedule, ExtractError> {
    if values.len() != model.variables.len() {
        return Err(ExtractError::LengthMismatch {
            expected: model.variables.len(),
            got: values.len(),
        });
    }
    let mut snapped = values.to_vec();
    for (j, v) in model.variables.iter().enumerate() {
        let x = values[j];
        if !x.is_finite() || x < v.lower - FEAS_TOL || x > v.upper + FEAS_TOL {
            return Err(ExtractError::BoundViolated {
                name: v.name.clone(),
                value: x,
            });
        }
        if v.kind == VarKind::Binary {
            let r = x.round();
            if (x - r).abs() > INT_TOL {
                return Err(ExtractError::NonIntegral {
                    name: v.name.clone(),
                    value: x,
                });
            }
            snapped[j] = r;
        } else {
            snapped[j] = x.clamp(v.lower, v.upper);
        }
    }
    for c in &model.constraints {
        let violation = c.violation(&snapped);
        if violation > FEAS_TOL {
            return Err(ExtractError::RowViolated {
                name: c.name.clone(),
                violation,
            });
        }
    }

    let mut schedule = Schedule::default();
    for (j, e) in model.entities.iter().enumerate() {
        match *e {
            Entity::Window(r) if snapped[j] == 1.0 => {
                let w = inst
                    .otw(r.key)
                    .ok_or_else(|| ExtractError::UnknownEntity(model.variables[j].name.clone()))?;
                let t = model
                    .var_of(&Entity::Start(r))
                    .map(|k| snapped[k])
                    .unwrap_or(w.t_open_s)
                    .clamp(w.t_open_s, w.t_close_s);
                schedule.observations.push(ScheduledObservation {
                    task: r.key.task,
                    component: r.component,
                    sat: r.key.sat,
                    window: r.key.index,
                    t_start_s: t,
                    pitch_rad: w.pitch_at(t),
                });
            }
            Entity::DownloadActive(k) if snapped[j] == 1.0 => {
                let d = inst
                    .dtw(k)
                    .ok_or_else(|| ExtractError::UnknownEntity(model.variables[j].name.clone()))?;
                let ta = model
                    .var_of(&Entity::DownloadStart(k))
                    .map_or(d.t_open_s, |i| snapped[i]);
                let tb = model
                    .var_of(&Entity::DownloadEnd(k))
                    .map_or(d.t_open_s, |i| snapped[i]);
                if tb > ta {
                    schedule.downloads.push(ScheduledDownload {
                        download: k.download,
                        sat: k.sat,
                        window: k.index,
                        t_start_s: ta,
                        t_end_s: tb,
                    });
                }
            }
            _ => {}
        }
    }
    schedule.canonicalize();
    Ok(schedule)
}
