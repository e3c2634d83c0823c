//! Gantt chart of a schedule as SVG.
//!
//! One row per satellite, then one per ground station. Window outlines are
//! white on a dark row, observations red, downloads blue, required
//! transitions (stabilization plus slew) gray. Station rows mark each
//! download with a blue line.

use std::fmt::Write;

use aeos_core::domain::{Instance, Schedule, ScheduledObservation};
use aeos_core::validator::{validate_schedule, StructuralError, Verdict, DEFAULT_TOL};

pub const LABEL_W: f64 = 120.0;
/// Width of the time axis in px; the horizon maps onto it.
pub const CANVAS_W: f64 = 1000.0;
pub const ROW_H: f64 = 30.0;
const TOP: f64 = 30.0;
const PAD: f64 = 4.0;

pub const OBS_FILL: &str = "#d62728";
pub const DL_FILL: &str = "#1f77b4";
pub const TRANSITION_FILL: &str = "#9e9e9e";
const ROW_FILL: &str = "#2b2b2b";

#[derive(Debug, thiserror::Error)]
pub enum GanttError {
    #[error("schedule does not resolve against the instance: {0}")]
    Structural(#[from] StructuralError),
    #[error("schedule fails validation:\n{0}")]
    Invalid(Verdict),
}

fn x(inst: &Instance, t: f64) -> f64 {
    LABEL_W + t / inst.params.horizon_s * CANVAS_W
}

fn rect(out: &mut String, class: &str, x0: f64, y: f64, w: f64, h: f64, style: &str) {
    writeln!(
        out,
        r#"<rect class="{class}" x="{x0:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" {style}/>"#
    )
    .unwrap();
}

/// Stabilization plus slew between two consecutive images of one satellite.
fn transition_s(inst: &Instance, a: &ScheduledObservation, b: &ScheduledObservation) -> f64 {
    let s = inst.satellite(a.sat).expect("validated");
    let (wa, wb) = (
        inst.otw(a.otw_key()).expect("validated"),
        inst.otw(b.otw_key()).expect("validated"),
    );
    let slew = (wa.roll_rad - wb.roll_rad).abs()
        + (wa.pitch_at(a.t_start_s) - wb.pitch_at(b.t_start_s)).abs();
    s.stab_time_s + slew / s.slew_rate_rad_per_s
}

/// Refuses schedules that fail the validator.
pub fn render_gantt(inst: &Instance, sch: &Schedule) -> Result<String, GanttError> {
    let verdict = validate_schedule(inst, sch, DEFAULT_TOL)?;
    if !verdict.pass {
        return Err(GanttError::Invalid(verdict));
    }
    let n_rows = inst.satellites.len() + inst.stations.len();
    let width = LABEL_W + CANVAS_W + 20.0;
    let height = TOP + n_rows as f64 * ROW_H + 10.0;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    for k in 0..=10 {
        let t = inst.params.horizon_s * k as f64 / 10.0;
        writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{t:.0}</text>"#,
            x(inst, t),
            TOP - 8.0
        )
        .unwrap();
    }

    let mut row = 0usize;
    for sat in &inst.satellites {
        let y = TOP + row as f64 * ROW_H;
        row += 1;
        writeln!(
            out,
            r#"<text x="4" y="{:.3}">satellite {}</text>"#,
            y + ROW_H / 2.0 + 4.0,
            sat.id
        )
        .unwrap();
        rect(
            &mut out,
            "row",
            LABEL_W,
            y,
            CANVAS_W,
            ROW_H - 2.0,
            &format!(r#"fill="{ROW_FILL}""#),
        );
        let outline = r#"fill="none" stroke="white" stroke-width="1""#;
        for w in inst.otws.iter().filter(|w| w.sat == sat.id) {
            rect(
                &mut out,
                "otw",
                x(inst, w.t_open_s),
                y + PAD,
                x(inst, w.t_close_s) - x(inst, w.t_open_s),
                ROW_H - 2.0 - 2.0 * PAD,
                outline,
            );
        }
        for d in inst.dtws.iter().filter(|d| d.sat == sat.id) {
            rect(
                &mut out,
                "dtw",
                x(inst, d.t_open_s),
                y + PAD,
                x(inst, d.t_close_s) - x(inst, d.t_open_s),
                ROW_H - 2.0 - 2.0 * PAD,
                outline,
            );
        }
        let mut obs: Vec<&ScheduledObservation> = sch
            .observations
            .iter()
            .filter(|o| o.sat == sat.id)
            .collect();
        obs.sort_by(|a, b| a.t_start_s.total_cmp(&b.t_start_s));
        let tp = |o: &ScheduledObservation| {
            inst.task(o.task)
                .and_then(|t| t.process_time(o.sat))
                .expect("validated")
        };
        for pair in obs.windows(2) {
            let end = pair[0].t_start_s + tp(pair[0]);
            let len = transition_s(inst, pair[0], pair[1]);
            rect(
                &mut out,
                "transition",
                x(inst, end),
                y + 2.0 * PAD,
                x(inst, end + len) - x(inst, end),
                ROW_H - 2.0 - 4.0 * PAD,
                &format!(r#"fill="{TRANSITION_FILL}""#),
            );
        }
        for o in &obs {
            let (a, b) = (o.t_start_s, o.t_start_s + tp(o));
            rect(
                &mut out,
                "obs",
                x(inst, a),
                y + PAD,
                x(inst, b) - x(inst, a),
                ROW_H - 2.0 - 2.0 * PAD,
                &format!(r#"fill="{OBS_FILL}""#),
            );
        }
        for d in sch.downloads.iter().filter(|d| d.sat == sat.id) {
            rect(
                &mut out,
                "dl",
                x(inst, d.t_start_s),
                y + PAD,
                x(inst, d.t_end_s) - x(inst, d.t_start_s),
                ROW_H - 2.0 - 2.0 * PAD,
                &format!(r#"fill="{DL_FILL}""#),
            );
        }
    }
    for g in &inst.stations {
        let y = TOP + row as f64 * ROW_H;
        row += 1;
        writeln!(
            out,
            r#"<text x="4" y="{:.3}">station {}</text>"#,
            y + ROW_H / 2.0 + 4.0,
            g.id
        )
        .unwrap();
        rect(
            &mut out,
            "row",
            LABEL_W,
            y,
            CANVAS_W,
            ROW_H - 2.0,
            &format!(r#"fill="{ROW_FILL}""#),
        );
        for d in inst.dtws.iter().filter(|d| d.station == g.id) {
            rect(
                &mut out,
                "dtw",
                x(inst, d.t_open_s),
                y + PAD,
                x(inst, d.t_close_s) - x(inst, d.t_open_s),
                ROW_H - 2.0 - 2.0 * PAD,
                r#"fill="none" stroke="white" stroke-width="1""#,
            );
        }
        for d in &sch.downloads {
            if inst.dtw(d.dtw_key()).expect("validated").station != g.id {
                continue;
            }
            let xm = x(inst, d.t_start_s);
            writeln!(
                out,
                r#"<line class="dl-mark" x1="{xm:.3}" y1="{:.3}" x2="{xm:.3}" y2="{:.3}" stroke="{DL_FILL}" stroke-width="2"/>"#,
                y + PAD,
                y + ROW_H - 2.0 - PAD
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
