//! Instance and schedule files.
//!
//! Both are pretty-printed JSON with the field names of the domain types and
//! arrays in canonical (id, index) order. Instance files carry every real
//! number rounded to [`FILE_SIG_DIGITS`] significant digits; schedule files keep
//! full round-trip precision because start times are checked at 1e-6 s.

use serde_json::Value;
use thiserror::Error;

use super::{check_instance, Defect, Instance, Schedule};

pub const FILE_SIG_DIGITS: usize = 9;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("reference to unknown id: {0}")]
    UnknownReference(Defect),
    #[error("invariant violation: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invariant(Vec<Defect>),
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        ParseError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

fn round_floats(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n
                    .as_f64()
                    .and_then(|x| serde_json::Number::from_f64(round_sig(x, digits)))
                {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|i| round_floats(i, digits)),
        Value::Object(map) => map.values_mut().for_each(|i| round_floats(i, digits)),
        _ => {}
    }
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut inst: Instance = serde_json::from_str(text)?;
    inst.canonicalize();
    let defects = check_instance(&inst);
    if let Some(unknown) = defects.iter().find(|d| d.rule.starts_with("unknown ")) {
        return Err(ParseError::UnknownReference(unknown.clone()));
    }
    if !defects.is_empty() {
        return Err(ParseError::Invariant(defects));
    }
    Ok(inst)
}

/// Canonical instance text. Instances built from parsed files or from the
/// generator are already rounded, so `parse_instance(write_instance(i)) == i`.
pub fn write_instance(inst: &Instance) -> String {
    let mut inst = inst.clone();
    inst.canonicalize();
    let mut v = serde_json::to_value(&inst).expect("instance serializes");
    round_floats(&mut v, FILE_SIG_DIGITS);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

/// Rounds every real number of an instance the way the file format does.
pub fn normalize_instance(inst: &Instance) -> Instance {
    let mut v = serde_json::to_value(inst).expect("instance serializes");
    round_floats(&mut v, FILE_SIG_DIGITS);
    let mut out: Instance = serde_json::from_value(v).expect("rounded instance deserializes");
    out.canonicalize();
    out
}

pub fn parse_schedule(text: &str) -> Result<Schedule, ParseError> {
    let mut sch: Schedule = serde_json::from_str(text)?;
    sch.canonicalize();
    Ok(sch)
}

pub fn write_schedule(sch: &Schedule) -> String {
    let mut sch = sch.clone();
    sch.canonicalize();
    let mut s = serde_json::to_string_pretty(&sch).expect("schedule serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tests::minimal_instance;
    use crate::domain::{Imaging, ScheduledObservation};

    #[test]
    fn minimal_file_parses() {
        let text = write_instance(&minimal_instance());
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.tasks.len(), 1);
        assert_eq!(inst.satellites.len(), 1);
        assert!(inst.dtws.is_empty());
        assert_eq!(inst, minimal_instance());
    }

    #[test]
    fn inverted_window_is_rejected() {
        let mut inst = minimal_instance();
        inst.otws[0].t_open_s = 500.0;
        inst.otws[0].t_close_s = 400.0;
        let err = parse_instance(&write_instance(&inst)).unwrap_err();
        match err {
            ParseError::Invariant(d) => assert!(d.iter().any(|d| d.rule == "window inverted")),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_instance("{\n  \"params\": ,\n}").unwrap_err();
        match err {
            ParseError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_reference_is_reported() {
        let mut inst = minimal_instance();
        inst.otws[0].task = 77;
        let err = parse_instance(&write_instance(&inst)).unwrap_err();
        assert!(matches!(err, ParseError::UnknownReference(_)), "{err}");
    }

    #[test]
    fn stereo_block_survives_round_trip() {
        let mut inst = minimal_instance();
        inst.tasks[0].imaging = Imaging::Stereo { beta_rad: 0.2618 };
        let text = write_instance(&inst);
        assert!(text.contains("\"imaging\": \"stereo\""));
        assert!(text.contains("\"beta_rad\": 0.2618"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn omitted_data_fields_take_defaults() {
        let text = write_instance(&minimal_instance());
        let mut v: Value = serde_json::from_str(&text).unwrap();
        let sat = v["satellites"][0].as_object_mut().unwrap();
        sat.remove("capacity_units");
        sat.remove("initial_data_units");
        sat.remove("acq_rate_units_per_s");
        let inst = parse_instance(&v.to_string()).unwrap();
        assert_eq!(inst.satellites[0].capacity_units, 1000.0);
        assert_eq!(inst.satellites[0].initial_data_units, 0.0);
        assert_eq!(inst.satellites[0].acq_rate_units_per_s, 1.0);
    }

    #[test]
    fn rounding_is_idempotent() {
        for x in [1.0 / 3.0, 86399.123456789, -0.261799387799, 6871.0, 1e-12] {
            let r = round_sig(x, 9);
            assert_eq!(round_sig(r, 9), r);
        }
        assert_eq!(round_sig(0.2617993877991494, 9), 0.261799388);
    }

    #[test]
    fn schedule_round_trip_keeps_full_precision() {
        let sch = Schedule {
            observations: vec![ScheduledObservation {
                task: 0,
                component: 1,
                sat: 0,
                window: 0,
                t_start_s: 43210.123456789012,
                pitch_rad: 0.1234567890123,
            }],
            downloads: vec![],
        };
        assert_eq!(parse_schedule(&write_schedule(&sch)).unwrap(), sch);
    }
}
