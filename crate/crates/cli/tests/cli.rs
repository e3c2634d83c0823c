use std::path::Path;
use std::process::{Command, Output};

use aeos_cli::bench::{render_objective, render_relative_performance, render_relative_time};
use aeos_cli::gantt::{CANVAS_W, DL_FILL, LABEL_W, OBS_FILL, TRANSITION_FILL};
use aeos_cli::{
    render_gantt, run_benchmark, AlgoSpec, Algorithm, BenchmarkRow, GanttError, Timing,
};
use aeos_core::domain::{
    normalize_instance, write_instance, write_schedule, GlobalParams, Instance, Schedule,
};
use aeos_core::fixtures::{
    dtw, mono_task, mutation_base, mutation_suite, otw, reference_satellite, scheduled_dl,
    scheduled_obs, station,
};
use aeos_core::scengen::{synth_window_instance, WindowSpec};
use aeos_core::solver::BnbLimits;

fn aeos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aeos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn deterministic() -> BnbLimits {
    BnbLimits {
        deterministic: true,
        workers: 1,
        time_limit_s: 600.0,
        ..BnbLimits::default()
    }
}

#[test]
fn equal_objectives_are_full_performance() {
    let mut r = BenchmarkRow::new("50-Cp-1", Algorithm::Heuristic(12), 214.0, 50, 0.0, 3.0);
    r.set_relative(214.0, 30.0);
    assert_eq!(
        render_relative_performance(r.relative_performance_pct.unwrap()),
        "100%"
    );
}

#[test]
fn lower_heuristic_objective_and_time_ratio() {
    let mut r = BenchmarkRow::new("100-Cp-1", Algorithm::Heuristic(12), 362.0, 90, 0.0, 12.0);
    r.set_relative(394.0, 13566.0);
    assert_eq!(
        render_relative_performance(r.relative_performance_pct.unwrap()),
        "92%"
    );
    assert_eq!(render_relative_time(r.relative_time_pct.unwrap()), "0.09%");
}

#[test]
fn positive_gap_renders_in_parentheses() {
    assert_eq!(render_objective(332.0, 0.01), "332 (1%)");
    assert_eq!(render_objective(332.0, 0.0), "332");
    assert_eq!(render_objective(10.0, 0.125), "10 (12.5%)");
}

#[test]
fn direct_milp_row_is_the_reference() {
    let mut r = BenchmarkRow::new("s", Algorithm::DirectMilp, 0.0, 0, 0.0, 0.0);
    r.set_relative(0.0, 0.0);
    assert_eq!(r.relative_performance_pct, Some(100.0));
    assert_eq!(r.relative_time_pct, Some(100.0));
}

fn crowded(n: usize, seed: u64) -> (String, Instance) {
    (
        format!("crowded-{n}-{seed}"),
        synth_window_instance(&WindowSpec::crowded(n, seed)),
    )
}

#[test]
fn percentages_recompute_from_raw_columns() {
    let table = run_benchmark(
        &[crowded(12, 1), crowded(15, 2)],
        &[
            AlgoSpec::Exact,
            AlgoSpec::HeuristicAboveBound(0),
            AlgoSpec::Fifo,
        ],
        &deterministic(),
    );
    assert_eq!(table.rows.len(), 6);
    let csv = table.to_csv(Timing::Show);
    let mut rd = csv::Reader::from_reader(csv.as_bytes());
    let head = rd.headers().unwrap().clone();
    let col = |name: &str| head.iter().position(|h| h == name).unwrap();
    let recs: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    let f = |r: &csv::StringRecord, name: &str| r[col(name)].parse::<f64>().unwrap();
    for chunk in recs.chunks(3) {
        let (j0, t0) = (f(&chunk[0], "objective_j"), f(&chunk[0], "time_s"));
        assert_eq!(&chunk[0][col("algorithm")], "Direct MILP");
        for r in chunk {
            let perf = if &r[col("algorithm")] == "Direct MILP" {
                100.0
            } else {
                100.0 * f(r, "objective_j") / j0
            };
            assert!((f(r, "relative_performance_pct") - perf).abs() < 1e-9);
            if &r[col("algorithm")] != "Direct MILP" && t0 > 0.0 {
                let rel = 100.0 * f(r, "time_s") / t0;
                assert!((f(r, "relative_time_pct") - rel).abs() <= 1e-9 * rel.max(1.0));
            }
        }
    }
}

#[test]
fn failed_row_is_marked_and_run_continues() {
    let table = run_benchmark(
        &[crowded(8, 3)],
        &[AlgoSpec::Exact, AlgoSpec::Heuristic(0), AlgoSpec::Fifo],
        &deterministic(),
    );
    assert_eq!(table.rows.len(), 3);
    assert!(table.rows[1].failure.is_some());
    assert!(table.rows[2].failure.is_none());
    assert!(table.to_text(Timing::Omit).contains("FAILED"));
}

#[test]
fn omitted_timing_is_reproducible() {
    let run = || {
        let t = run_benchmark(
            &[crowded(15, 4)],
            &[
                AlgoSpec::Exact,
                AlgoSpec::HeuristicAboveBound(1),
                AlgoSpec::Fifo,
            ],
            &deterministic(),
        );
        (t.to_text(Timing::Omit), t.to_csv(Timing::Omit))
    };
    let a = run();
    assert_eq!(a, run());
    assert!(!a.1.contains("time_s"));
}

fn boxes<'a>(svg: &'a str, class: &str) -> Vec<&'a str> {
    svg.lines()
        .filter(|l| l.contains(&format!(r#"class="{class}""#)))
        .collect()
}

fn attr(line: &str, name: &str) -> f64 {
    let key = format!(r#" {name}=""#);
    let at = line.find(&key).unwrap() + key.len();
    line[at..].split('"').next().unwrap().parse().unwrap()
}

fn single_pass() -> Instance {
    normalize_instance(&Instance::new(
        GlobalParams { horizon_s: 1000.0 },
        vec![reference_satellite(0)],
        vec![station(0)],
        vec![mono_task(0, 2, &[0], 3.0)],
        vec![otw(0, 0, 0, 100.0, 200.0, 0.0, 0.2, -0.2)],
        vec![dtw(0, 0, 0, 0, 300.0, 400.0)],
    ))
}

#[test]
fn empty_schedule_draws_outlines_only() {
    let inst = single_pass();
    let svg = render_gantt(&inst, &Schedule::default()).unwrap();
    assert!(boxes(&svg, "obs").is_empty());
    assert!(boxes(&svg, "dl").is_empty());
    assert!(boxes(&svg, "transition").is_empty());
    assert_eq!(boxes(&svg, "otw").len(), 1);
    // the contact appears on the satellite row and the station row
    assert_eq!(boxes(&svg, "dtw").len(), 2);
    assert_eq!(boxes(&svg, "row").len(), 2);
}

#[test]
fn one_image_one_download_map_to_time() {
    let inst = single_pass();
    let sch = Schedule {
        observations: vec![scheduled_obs(&inst, 0, 1, 0, 150.0)],
        downloads: vec![scheduled_dl(0, 0, 300.0, 300.6)],
    };
    let svg = render_gantt(&inst, &sch).unwrap();
    let (obs, dl) = (boxes(&svg, "obs"), boxes(&svg, "dl"));
    assert_eq!((obs.len(), dl.len()), (1, 1));
    assert!(obs[0].contains(OBS_FILL) && dl[0].contains(DL_FILL));
    let scale = CANVAS_W / 1000.0;
    assert!((attr(obs[0], "x") - (LABEL_W + 150.0 * scale)).abs() < 1e-3);
    assert!((attr(obs[0], "width") - 3.0 * scale).abs() < 1e-3);
    assert!((attr(dl[0], "x") - (LABEL_W + 300.0 * scale)).abs() < 1e-3);
    assert!((attr(dl[0], "width") - 0.6 * scale).abs() < 1e-3);
    assert_eq!(svg, render_gantt(&inst, &sch).unwrap());
}

#[test]
fn transition_width_is_proportional() {
    // 57.5 deg roll plus 57.5 deg pitch at 1 deg/s, plus 5 s settling
    let (r, p) = (28.75f64.to_radians(), 28.75f64.to_radians());
    let inst = normalize_instance(&Instance::new(
        GlobalParams { horizon_s: 2000.0 },
        vec![reference_satellite(0)],
        vec![],
        vec![mono_task(0, 1, &[0], 3.0), mono_task(1, 1, &[0], 3.0)],
        vec![
            otw(0, 0, 0, 100.0, 200.0, -r, p, p),
            otw(1, 0, 0, 100.0, 400.0, r, -p, -p),
        ],
        vec![],
    ));
    let sch = Schedule {
        observations: vec![
            scheduled_obs(&inst, 0, 1, 0, 100.0),
            scheduled_obs(&inst, 1, 1, 0, 223.0),
        ],
        downloads: vec![],
    };
    let svg = render_gantt(&inst, &sch).unwrap();
    let gray = boxes(&svg, "transition");
    assert_eq!(gray.len(), 1);
    assert!(gray[0].contains(TRANSITION_FILL));
    let scale = CANVAS_W / 2000.0;
    assert!(
        (attr(gray[0], "width") - 120.0 * scale).abs() < 1e-3,
        "{}",
        gray[0]
    );
    assert!((attr(gray[0], "x") - (LABEL_W + 103.0 * scale)).abs() < 1e-3);
}

#[test]
fn invalid_schedule_is_refused() {
    let inst = mutation_base().0;
    for (_, bad) in mutation_suite() {
        assert!(matches!(
            render_gantt(&inst, &bad),
            Err(GanttError::Invalid(_))
        ));
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn generate_solve_validate_gantt_export() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("i.json").to_str().unwrap().to_string();
    let o = aeos(&[
        "generate",
        "--generator",
        "crowded",
        "--tasks",
        "12",
        "--seed",
        "3",
        "-o",
        &inst_path,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for algo in ["exact", "heuristic", "fifo"] {
        let sch = dir
            .path()
            .join(format!("{algo}.json"))
            .to_str()
            .unwrap()
            .to_string();
        let o = aeos(&[
            "solve",
            &inst_path,
            "--algo",
            algo,
            "--deterministic",
            "-o",
            &sch,
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let o = aeos(&["validate", &inst_path, &sch]);
        assert_eq!(code(&o), 0);
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS"));
        let svg = dir
            .path()
            .join(format!("{algo}.svg"))
            .to_str()
            .unwrap()
            .to_string();
        assert_eq!(code(&aeos(&["gantt", &inst_path, &sch, "-o", &svg])), 0);
        assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    }
    let o = aeos(&["export-lp", &inst_path]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("MAXIMIZE"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = mutation_base();
    let inst_path = write(dir.path(), "i.json", &write_instance(&inst));
    let (family, bad) = mutation_suite().remove(4);
    let bad_path = write(dir.path(), "bad.json", &write_schedule(&bad));
    let json = dir.path().join("findings.json");
    let o = aeos(&[
        "validate",
        &inst_path,
        &bad_path,
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains(&format!("{family:?}")));
    assert!(std::fs::read_to_string(&json)
        .unwrap()
        .contains("\"findings\""));
    assert_eq!(code(&aeos(&["gantt", &inst_path, &bad_path])), 4);

    let garbage = write(dir.path(), "g.json", "{ not json");
    assert_eq!(code(&aeos(&["solve", &garbage])), 2);
    assert_eq!(code(&aeos(&["validate", &inst_path, &garbage])), 2);
    assert_eq!(
        code(&aeos(&[
            "solve",
            &inst_path,
            "--algo",
            "heuristic",
            "--lambda",
            "0"
        ])),
        2
    );
    assert_eq!(code(&aeos(&["solve", "/nonexistent/instance.json"])), 2);
}

#[test]
fn deterministic_solve_and_benchmark_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = write(dir.path(), "c.json", &write_instance(&crowded(20, 9).1));
    let solve = |out: &str| {
        let p = dir.path().join(out).to_str().unwrap().to_string();
        assert_eq!(
            code(&aeos(&["solve", &inst_path, "--deterministic", "-o", &p])),
            0
        );
        std::fs::read(p).unwrap()
    };
    assert_eq!(solve("a.json"), solve("b.json"));
    let bench = |out: &str| {
        let p = dir.path().join(out).to_str().unwrap().to_string();
        let o = aeos(&["benchmark", &inst_path, "--deterministic", "--csv", &p]);
        assert_eq!(code(&o), 0);
        (o.stdout, std::fs::read(p).unwrap())
    };
    assert_eq!(bench("a.csv"), bench("b.csv"));
}
