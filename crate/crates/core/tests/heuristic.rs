use std::collections::BTreeSet;
use std::time::Instant;

use aeos_core::domain::{
    normalize_instance, GlobalParams, Instance, OtwKey, ProcessTime, SolveStatus,
};
use aeos_core::fixtures::{mono_task, otw, reference_satellite};
use aeos_core::heuristic::{
    cluster_windows, lambda_lower_bound, max_slew_time, prune_clusters, solve_fifo,
    solve_heuristic, LambdaError,
};
use aeos_core::milp::build_model;
use aeos_core::scengen::{synth_instance, synth_window_instance, SynthSpec, TaskKind, WindowSpec};
use aeos_core::solver::{solve_exact, BnbLimits};
use aeos_core::validator::{validate_schedule, DEFAULT_TOL};
use proptest::prelude::*;

fn deg(x: f64) -> f64 {
    x.to_radians()
}

fn one_sat(windows: Vec<(f64, f64)>) -> Instance {
    let tasks = (0..windows.len() as u32)
        .map(|v| mono_task(v, 1, &[0], 3.0))
        .collect();
    let otws = windows
        .iter()
        .enumerate()
        .map(|(v, &(a, b))| otw(v as u32, 0, 0, a, b, 0.0, 0.2, -0.2))
        .collect();
    normalize_instance(&Instance::new(
        GlobalParams {
            horizon_s: 10_000.0,
        },
        vec![reference_satellite(0)],
        vec![],
        tasks,
        otws,
        vec![],
    ))
}

/// Cluster of one window per task on satellite 0 (10-s windows, 20 s apart)
/// plus a far-away spare window per task on satellite 1.
fn cluster_with_spares(prio_roll: &[(u32, f64)]) -> Instance {
    let mut tasks = Vec::new();
    let mut otws = Vec::new();
    for (v, &(w, roll)) in prio_roll.iter().enumerate() {
        let v = v as u32;
        tasks.push(mono_task(v, w, &[0, 1], 3.0));
        let a = 100.0 + 20.0 * v as f64;
        otws.push(otw(v, 0, 0, a, a + 10.0, roll, 0.1, -0.1));
        let b = 2000.0 + 1000.0 * v as f64;
        otws.push(otw(v, 1, 0, b, b + 10.0, 0.0, 0.1, -0.1));
    }
    normalize_instance(&Instance::new(
        GlobalParams {
            horizon_s: 20_000.0,
        },
        vec![reference_satellite(0), reference_satellite(1)],
        vec![],
        tasks,
        otws,
        vec![],
    ))
}

fn retained_on_sat0(inst: &Instance, lambda: u32) -> BTreeSet<u32> {
    prune_clusters(inst, lambda)
        .retained_keys(inst)
        .into_iter()
        .filter(|k| k.sat == 0)
        .map(|k| k.task)
        .collect()
}

#[test]
fn max_slew_time_examples() {
    let mut s = reference_satellite(0);
    assert_eq!(max_slew_time(&s), 120.0);
    s.roll_limit_rad = deg(45.0);
    s.slew_rate_rad_per_s = deg(0.5);
    assert!((max_slew_time(&s) - 300.0).abs() < 1e-9);
    s.roll_limit_rad = 0.0;
    s.pitch_limit_rad = 0.0;
    assert_eq!(max_slew_time(&s), 0.0);
}

#[test]
fn windows_beyond_slew_time_do_not_cluster() {
    assert!(cluster_windows(&one_sat(vec![(0.0, 100.0), (300.0, 400.0)])).is_empty());
}

#[test]
fn chained_windows_form_one_cluster() {
    let inst = one_sat(vec![(0.0, 100.0), (150.0, 250.0), (300.0, 400.0)]);
    let c = cluster_windows(&inst);
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].members.len(), 3);
}

/// Connected components of the relation "interval distance below the
/// maximum slew time", by union-find over all pairs.
fn closure_oracle(inst: &Instance) -> BTreeSet<BTreeSet<OtwKey>> {
    let n = inst.otws.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&inst.otws[i], &inst.otws[j]);
            if a.sat != b.sat {
                continue;
            }
            let gap = (b.t_open_s - a.t_close_s).max(a.t_open_s - b.t_close_s);
            if gap < max_slew_time(inst.satellite(a.sat).unwrap()) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, BTreeSet<OtwKey>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().insert(inst.otws[i].key());
    }
    groups.into_values().filter(|g| g.len() >= 2).collect()
}

#[test]
fn sweep_clusters_match_pairwise_closure() {
    let geo = synth_instance(&SynthSpec::new(50, TaskKind::Spot, 1)).unwrap();
    let mut cases = vec![geo];
    cases.extend((0..5).map(|s| synth_window_instance(&WindowSpec::crowded(30, s))));
    for inst in cases {
        let sweep: BTreeSet<BTreeSet<OtwKey>> = cluster_windows(&inst)
            .into_iter()
            .map(|c| c.members.into_iter().collect())
            .collect();
        assert_eq!(sweep, closure_oracle(&inst));
    }
}

fn lambda_case(window_s: f64, process_s: f64, stab_s: f64) -> Instance {
    let mut sat = reference_satellite(0);
    sat.stab_time_s = stab_s;
    let tasks = vec![
        mono_task(0, 1, &[0], process_s),
        mono_task(1, 1, &[0], process_s),
    ];
    let otws = vec![
        otw(0, 0, 0, 0.0, window_s, 0.0, 0.1, -0.1),
        otw(1, 0, 0, 5000.0, 5000.0 + window_s, 0.0, 0.1, -0.1),
    ];
    normalize_instance(&Instance::new(
        GlobalParams {
            horizon_s: 10_000.0,
        },
        vec![sat],
        vec![],
        tasks,
        otws,
        vec![],
    ))
}

#[test]
fn lambda_lower_bound_examples() {
    assert_eq!(lambda_lower_bound(&lambda_case(600.0, 3.0, 5.0)), Ok(75));
    assert_eq!(lambda_lower_bound(&lambda_case(90.0, 10.0, 5.0)), Ok(6));
    let empty = Instance::new(
        GlobalParams { horizon_s: 1.0 },
        vec![reference_satellite(0)],
        vec![],
        vec![],
        vec![],
        vec![],
    );
    assert!(matches!(
        lambda_lower_bound(&empty),
        Err(LambdaError::Empty(_))
    ));
}

#[test]
fn pruning_keeps_highest_priorities() {
    let inst = cluster_with_spares(&[(5, 0.0), (5, 0.0), (4, 0.0), (3, 0.0), (2, 0.0), (1, 0.0)]);
    let kept = retained_on_sat0(&inst, 4);
    assert_eq!(kept, BTreeSet::from([0, 1, 2, 3]));
}

#[test]
fn pruning_prefers_roll_closest_to_retained_mean() {
    let inst = cluster_with_spares(&[
        (5, deg(10.0)),
        (5, deg(20.0)),
        (3, deg(30.0)),
        (3, deg(14.0)),
    ]);
    let kept = retained_on_sat0(&inst, 3);
    assert_eq!(kept, BTreeSet::from([0, 1, 3]));
}

#[test]
fn pruning_never_orphans_a_task() {
    // six tasks whose only window is in the cluster
    let inst = one_sat(
        (0..6)
            .map(|i| (20.0 * i as f64, 20.0 * i as f64 + 10.0))
            .collect(),
    );
    let p = prune_clusters(&inst, 2);
    assert!(p.retained.iter().all(|&k| k));
    assert_eq!(p.removals, 0);
}

#[test]
fn no_clusters_means_heuristic_equals_exact() {
    let inst = one_sat(vec![(0.0, 50.0), (1000.0, 1050.0), (2000.0, 2050.0)]);
    assert!(cluster_windows(&inst).is_empty());
    let limits = BnbLimits::default().deterministic();
    let h = solve_heuristic(&inst, 1, &limits);
    let e = solve_exact(&build_model(&inst), &inst, &limits);
    assert_eq!(h.schedule, e.schedule);
}

#[test]
fn lambda_sweep_is_nested_on_seeds() {
    for seed in 0..5 {
        let inst = synth_window_instance(&WindowSpec::crowded(40, seed));
        let small = prune_clusters(&inst, 12).retained;
        let large = prune_clusters(&inst, 15).retained;
        assert!(
            small.iter().zip(&large).all(|(s, l)| !s || *l),
            "seed {seed}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn retained_sets_nest_and_keep_every_task(seed in 0u64..10_000, lo in 1u32..6, step in 0u32..6) {
        let inst = synth_window_instance(&WindowSpec::crowded(25, seed));
        let a = prune_clusters(&inst, lo);
        let b = prune_clusters(&inst, lo + step);
        prop_assert!(a.retained.iter().zip(&b.retained).all(|(s, l)| !s || *l));
        for t in &inst.tasks {
            let had = inst.otws_of_task(t.id).len();
            prop_assert!(had == 0 || a.opportunities[&t.id] >= 1);
        }
        prop_assert!(a.removals <= inst.otws.len());
        for c in &a.clusters {
            let kept: Vec<_> = c.members.iter().filter(|k| a.retained[inst.otw_position(**k).unwrap()]).collect();
            // members beyond lambda survive only as their task's last window
            let last = kept.iter().filter(|k| a.opportunities[&k.task] == 1).count();
            prop_assert!(kept.len() <= lo as usize + last);
        }
    }
}

#[test]
fn heuristic_never_beats_exact() {
    for seed in 0..4 {
        let inst = synth_window_instance(&WindowSpec::crowded(16, seed));
        let limits = BnbLimits::with_time_limit(60.0).deterministic();
        let e = solve_exact(&build_model(&inst), &inst, &limits);
        assert_eq!(e.status, SolveStatus::Optimal);
        let lambda = lambda_lower_bound(&inst).unwrap();
        let h = solve_heuristic(&inst, lambda, &limits);
        assert!(h.objective_j <= e.objective_j, "seed {seed}");
        assert!(
            validate_schedule(&inst, &h.schedule, DEFAULT_TOL)
                .unwrap()
                .pass
        );
        let stats = h.pruning.unwrap();
        assert_eq!(stats.lambda, lambda);
    }
}

#[test]
fn fifo_single_window_starts_at_open() {
    let inst = one_sat(vec![(100.0, 200.0)]);
    let r = solve_fifo(&inst);
    assert_eq!(r.objective_j, 1.0);
    assert_eq!(r.schedule.observations[0].t_start_s, 100.0);
}

#[test]
fn fifo_keeps_the_earlier_opening_task() {
    // both windows are too short to hold two images with the settling time
    let mut inst = one_sat(vec![(100.0, 104.0), (101.0, 105.0)]);
    for t in &mut inst.tasks {
        t.process_time_s = vec![ProcessTime {
            sat: 0,
            seconds: 3.0,
        }];
    }
    let r = solve_fifo(&inst);
    assert_eq!(r.schedule.observations.len(), 1);
    assert_eq!(r.schedule.observations[0].task, 0);
}

#[test]
fn fifo_is_valid_and_dominated() {
    for seed in 0..4 {
        let mut spec = WindowSpec::crowded(16, seed);
        spec.capacity_units = 40.0;
        let inst = synth_window_instance(&spec);
        let f = solve_fifo(&inst);
        let verdict = validate_schedule(&inst, &f.schedule, DEFAULT_TOL).unwrap();
        assert!(verdict.pass, "seed {seed}: {verdict}");
        let e = solve_exact(
            &build_model(&inst),
            &inst,
            &BnbLimits::with_time_limit(60.0).deterministic(),
        );
        assert!(f.objective_j <= e.objective_j, "seed {seed}");
    }
}

#[test]
fn fifo_handles_stereo_pairs() {
    let mut spec = WindowSpec::crowded(20, 11);
    spec.stereo_fraction = 0.5;
    let inst = synth_window_instance(&spec);
    let f = solve_fifo(&inst);
    assert!(
        validate_schedule(&inst, &f.schedule, DEFAULT_TOL)
            .unwrap()
            .pass
    );
    assert!(f.schedule.observations.iter().any(|o| o.component == 2));
}

#[test]
fn fifo_is_fast_on_fifty_tasks() {
    let inst = synth_instance(&SynthSpec::new(50, TaskKind::Spot, 2)).unwrap();
    let clock = Instant::now();
    let f = solve_fifo(&inst);
    assert!(clock.elapsed().as_secs_f64() < 1.0);
    assert!(
        validate_schedule(&inst, &f.schedule, DEFAULT_TOL)
            .unwrap()
            .pass
    );
    assert!(f.objective_j > 0.0);
}
