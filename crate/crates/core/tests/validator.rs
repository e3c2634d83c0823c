use aeos_core::domain::{normalize_instance, GlobalParams, Instance, Schedule};
use aeos_core::fixtures::{
    dtw, mono_task, mutation_base, mutation_suite, otw, reference_satellite, scheduled_dl as dl,
    scheduled_obs as obs, station, stereo_task,
};
use aeos_core::heuristic::solve_fifo;
use aeos_core::scengen::{synth_window_instance, WindowSpec};
use aeos_core::validator::{
    buffer_trajectory, validate_schedule, Family, StructuralError, DEFAULT_TOL,
};
use proptest::prelude::*;

fn move_obs(inst: &Instance, sch: &mut Schedule, task: u32, component: u8, t: f64) {
    let o = sch
        .observations
        .iter_mut()
        .find(|o| o.task == task && o.component == component)
        .unwrap();
    o.t_start_s = t;
    o.pitch_rad = inst.otw(o.otw_key()).unwrap().pitch_at(t);
}

#[test]
fn base_schedule_passes() {
    let (inst, sch) = mutation_base();
    let v = validate_schedule(&inst, &sch, DEFAULT_TOL).unwrap();
    assert!(v.pass, "{v}");
    assert_eq!(sch.objective(&inst), 10);
}

#[test]
fn each_mutation_flags_exactly_its_family() {
    let (inst, _) = mutation_base();
    let muts = mutation_suite();
    assert_eq!(muts.len(), 10);
    for (family, sch) in muts {
        let v = validate_schedule(&inst, &sch, DEFAULT_TOL).unwrap();
        assert!(!v.pass);
        assert_eq!(v.families(), vec![family], "{v}");
    }
}

#[test]
fn empty_schedule_passes() {
    let (inst, _) = mutation_base();
    let v = validate_schedule(&inst, &Schedule::default(), DEFAULT_TOL).unwrap();
    assert!(v.pass);
    assert!(v.findings.is_empty());
}

#[test]
fn unresolved_reference_is_structural() {
    let (inst, mut sch) = mutation_base();
    sch.observations[0].window = 7;
    assert!(matches!(
        validate_schedule(&inst, &sch, DEFAULT_TOL),
        Err(StructuralError::MissingWindow { .. })
    ));
}

/// Two images on one satellite with constant pitch 0.1 and -0.1 and rolls
/// 0 and 0.2: required gap 3 + 5 + 0.4 / r.
fn flat_pair(gap_s: f64) -> (Instance, Schedule) {
    let inst = normalize_instance(&Instance::new(
        GlobalParams { horizon_s: 1000.0 },
        vec![reference_satellite(0)],
        vec![],
        vec![mono_task(0, 1, &[0], 3.0), mono_task(1, 1, &[0], 3.0)],
        vec![
            otw(0, 0, 0, 100.0, 200.0, 0.0, 0.1, 0.1),
            otw(1, 0, 0, 100.0, 300.0, 0.2, -0.1, -0.1),
        ],
        vec![],
    ));
    let sch = Schedule {
        observations: vec![
            obs(&inst, 0, 1, 0, 120.0),
            obs(&inst, 1, 1, 0, 120.0 + gap_s),
        ],
        downloads: vec![],
    };
    (inst, sch)
}

#[test]
fn separation_boundary_and_shrunk_gap() {
    // slew rate as stored after normalization
    let r = flat_pair(0.0).0.satellites[0].slew_rate_rad_per_s;
    let need = 8.0 + 0.4 / r;
    let (inst, sch) = flat_pair(need);
    assert!(validate_schedule(&inst, &sch, DEFAULT_TOL).unwrap().pass);
    let (inst, sch) = flat_pair(need - 0.01);
    let v = validate_schedule(&inst, &sch, DEFAULT_TOL).unwrap();
    assert_eq!(v.families(), vec![Family::ObsOverlap]);
    assert!(
        (v.findings[0].margin + 0.01).abs() < 1e-9,
        "{:?}",
        v.findings
    );
}

#[test]
fn stereo_fourteen_degrees_misses_by_one() {
    let inst = normalize_instance(&Instance::new(
        GlobalParams { horizon_s: 1000.0 },
        vec![reference_satellite(0), reference_satellite(1)],
        vec![],
        vec![stereo_task(0, 5, &[0, 1], 3.0, 15f64.to_radians())],
        vec![
            otw(0, 0, 0, 100.0, 200.0, 0.0, 0.1, 0.1),
            otw(
                0,
                1,
                0,
                100.0,
                200.0,
                0.0,
                0.1 - 14f64.to_radians(),
                0.1 - 14f64.to_radians(),
            ),
        ],
        vec![],
    ));
    let sch = Schedule {
        observations: vec![obs(&inst, 0, 1, 0, 150.0), obs(&inst, 0, 2, 1, 150.0)],
        downloads: vec![],
    };
    let v = validate_schedule(&inst, &sch, DEFAULT_TOL).unwrap();
    assert_eq!(v.families(), vec![Family::Stereo]);
    assert!((v.findings[0].margin + 1f64.to_radians()).abs() < 1e-9);
}

#[test]
fn idle_buffer_is_flat() {
    let (inst, _) = mutation_base();
    let t = buffer_trajectory(&inst, &Schedule::default(), 0);
    assert!(t.points.iter().all(|p| p.1 == 0.0));
    assert_eq!(t.final_level(), 0.0);
}

#[test]
fn image_then_long_download_goes_negative() {
    let mut sat = reference_satellite(0);
    sat.initial_data_units = 4.0;
    let inst = normalize_instance(&Instance::new(
        GlobalParams { horizon_s: 1000.0 },
        vec![sat],
        vec![station(0)],
        vec![mono_task(0, 1, &[0], 3.0)],
        vec![otw(0, 0, 0, 100.0, 200.0, 0.0, 0.1, -0.1)],
        vec![dtw(0, 0, 0, 0, 300.0, 400.0)],
    ));
    let sch = Schedule {
        observations: vec![obs(&inst, 0, 1, 0, 100.0)],
        downloads: vec![dl(0, 0, 300.0, 310.0)],
    };
    let t = buffer_trajectory(&inst, &sch, 0);
    assert_eq!(t.peak(), 7.0);
    assert_eq!(t.final_level(), 7.0 - 50.0);
    let v = validate_schedule(&inst, &sch, DEFAULT_TOL).unwrap();
    assert_eq!(v.families(), vec![Family::BufferNonneg]);
    assert!((v.findings[0].margin + 43.0).abs() < 1e-9);
}

/// Level at `t` by stepping 0.01 s from the horizon start, the last step
/// cut short at `t`. Jumps land in the step that reaches an image end,
/// draining is integrated over each step.
fn stepped_level(inst: &Instance, sch: &Schedule, sat: u32, t: f64) -> f64 {
    let s = inst.satellite(sat).unwrap();
    let mut level = s.initial_data_units;
    let dt = 0.01;
    let steps = (t / dt).ceil() as i64;
    for k in 0..steps {
        let (a, b) = (k as f64 * dt, ((k + 1) as f64 * dt).min(t));
        for d in sch.downloads.iter().filter(|d| d.sat == sat) {
            level -= s.down_rate_units_per_s * (b.min(d.t_end_s) - a.max(d.t_start_s)).max(0.0);
        }
        for o in sch.observations.iter().filter(|o| o.sat == sat) {
            let end = o.t_start_s + inst.task(o.task).unwrap().process_time(sat).unwrap();
            if end > a && end <= b {
                level +=
                    s.acq_rate_units_per_s * inst.task(o.task).unwrap().process_time(sat).unwrap();
            }
        }
    }
    level
}

fn on_grid(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trajectory_matches_time_stepping(seed in 0u64..1000, cap in 20.0f64..200.0) {
        let mut spec = WindowSpec::crowded(10, seed);
        spec.capacity_units = cap;
        let inst = synth_window_instance(&spec);
        let mut sch = solve_fifo(&inst).schedule;
        for d in &mut sch.downloads {
            d.t_start_s = on_grid(d.t_start_s);
            d.t_end_s = on_grid(d.t_end_s);
        }
        for s in &inst.satellites {
            let traj = buffer_trajectory(&inst, &sch, s.id);
            for w in traj.points.windows(2) {
                prop_assert!(w[0].0 <= w[1].0);
            }
            // after-jump value at each breakpoint
            let mut k = 0;
            while k < traj.points.len() {
                let t = traj.points[k].0;
                while k + 1 < traj.points.len() && traj.points[k + 1].0 == t {
                    k += 1;
                }
                let expect = stepped_level(&inst, &sch, s.id, t);
                prop_assert!((traj.points[k].1 - expect).abs() < 1e-6, "t {} {} vs {}", t, traj.points[k].1, expect);
                k += 1;
            }
        }
    }

    #[test]
    fn margins_restore_to_bounds(shift in -30.0f64..30.0, stretch in 0.0f64..5.0) {
        let (inst, mut sch) = mutation_base();
        move_obs(&inst, &mut sch, 1, 1, 190.0 + shift);
        sch.downloads[2].t_end_s += stretch;
        let v = validate_schedule(&inst, &sch, DEFAULT_TOL).unwrap();
        prop_assert_eq!(v.pass, v.findings.is_empty());
        for f in &v.findings {
            prop_assert!(f.margin < 0.0);
            prop_assert!((f.restored() - f.bound).abs() <= DEFAULT_TOL);
        }
    }
}

#[test]
fn verdict_serializes_as_text_and_json() {
    let (inst, _) = mutation_base();
    let (_, sch) = mutation_suite().remove(3);
    let v = validate_schedule(&inst, &sch, DEFAULT_TOL).unwrap();
    assert!(v.to_string().starts_with("FAIL\nObsOverlap"));
    let back: aeos_core::validator::Verdict = serde_json::from_str(&v.to_json()).unwrap();
    assert_eq!(back, v);
}
