//! First-in-first-out baseline.
//!
//! One chronological sweep over observation and download windows. A task is
//! committed at the earliest feasible start of the first window where it
//! fits; a stereo task only when a second component fits with the required
//! pitch difference. Each download window drains the buffer level present
//! at its earliest feasible start.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::domain::{
    Instance, Satellite, Schedule, ScheduledDownload, ScheduledObservation, SolveReport,
    SolveStatus, TaskId,
};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Placed {
    task: TaskId,
    component: u8,
    win: usize,
    t: f64,
    tp: f64,
}

#[derive(Debug, Clone, Copy)]
struct Session {
    dtw: usize,
    ta: f64,
    tb: f64,
}

struct State<'a> {
    inst: &'a Instance,
    obs: Vec<Placed>,
    sessions: Vec<Session>,
}

impl<'a> State<'a> {
    fn sat(&self, id: u32) -> &'a Satellite {
        self.inst.satellite(id).expect("checked instance")
    }

    /// Buffer level at `at`, counting images completed by then.
    fn level(&self, sat: &Satellite, at: f64, extra: Option<(f64, f64)>) -> f64 {
        let acquired: f64 = self
            .obs
            .iter()
            .filter(|p| self.inst.otws[p.win].sat == sat.id)
            .map(|p| (p.t + p.tp, p.tp))
            .chain(extra)
            .filter(|&(end, _)| end <= at)
            .map(|(_, tp)| sat.acq_rate_units_per_s * tp)
            .sum();
        let downloaded: f64 = self
            .sessions
            .iter()
            .filter(|s| self.inst.dtws[s.dtw].sat == sat.id)
            .map(|s| sat.down_rate_units_per_s * (at.clamp(s.ta, s.tb) - s.ta))
            .sum();
        sat.initial_data_units + acquired - downloaded
    }

    /// Whether an image of window `win` starting at `t` fits next to every
    /// committed image and keeps the buffer within capacity.
    fn fits(&self, win: usize, t: f64, tp: f64, partner: Option<(f64, f64)>) -> bool {
        let inst = self.inst;
        let w = &inst.otws[win];
        let sat = self.sat(w.sat);
        let r = sat.slew_rate_rad_per_s;
        let th = w.pitch_at(t);
        if let Some((th1, beta)) = partner {
            if (th - th1).abs() < beta - TOL {
                return false;
            }
        }
        for p in self.obs.iter().filter(|p| inst.otws[p.win].sat == w.sat) {
            let pw = &inst.otws[p.win];
            let slew = ((w.roll_rad - pw.roll_rad).abs() + (th - pw.pitch_at(p.t)).abs()) / r;
            let after = t - p.t >= p.tp + sat.stab_time_s + slew - TOL;
            let before = p.t - t >= tp + sat.stab_time_s + slew - TOL;
            if !after && !before {
                return false;
            }
        }
        let end = t + tp;
        let ends = self
            .obs
            .iter()
            .filter(|p| inst.otws[p.win].sat == w.sat)
            .map(|p| p.t + p.tp)
            .chain([end]);
        ends.filter(|&e| e >= end)
            .all(|e| self.level(sat, e, Some((end, tp))) <= sat.capacity_units + TOL)
    }

    /// Start times worth testing in window `win`: the opening and closing
    /// instants and every point where a committed constraint turns tight.
    fn candidates(&self, win: usize, tp: f64, partner: Option<(f64, f64)>) -> Vec<f64> {
        let inst = self.inst;
        let w = &inst.otws[win];
        let sat = self.sat(w.sat);
        let r = sat.slew_rate_rad_per_s;
        let m = w.pitch_slope_rad_per_s;
        let mut c = vec![w.t_open_s, w.t_close_s];
        let mut linear_root = |a: f64, b: f64| {
            // a t = b
            if a.abs() > 1e-12 {
                c.push(b / a);
            }
        };
        for p in self.obs.iter().filter(|p| inst.otws[p.win].sat == w.sat) {
            let pw = &inst.otws[p.win];
            let droll = (w.roll_rad - pw.roll_rad).abs() / r;
            // pitch(t) - pitch_p = m t + k
            let k = w.pitch_at_open_rad - m * w.t_open_s - pw.pitch_at(p.t);
            let after = p.tp + sat.stab_time_s + droll;
            let before = tp + sat.stab_time_s + droll;
            linear_root(1.0 - m / r, p.t + after + k / r);
            linear_root(1.0 + m / r, p.t + after - k / r);
            linear_root(1.0 + m / r, p.t - before - k / r);
            linear_root(1.0 - m / r, p.t - before + k / r);
        }
        if let Some((th1, beta)) = partner {
            if m.abs() > 1e-12 {
                for target in [th1 + beta, th1 - beta] {
                    c.push(w.t_open_s + (target - w.pitch_at_open_rad) / m);
                }
            }
        }
        for s in self
            .sessions
            .iter()
            .filter(|s| inst.dtws[s.dtw].sat == w.sat)
        {
            c.push(s.ta - tp);
            c.push(s.tb - tp);
        }
        c.retain(|t| t.is_finite() && *t >= w.t_open_s && *t <= w.t_close_s);
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }

    fn feasible_starts(&self, win: usize, tp: f64, partner: Option<(f64, f64)>) -> Vec<f64> {
        self.candidates(win, tp, partner)
            .into_iter()
            .filter(|&t| self.fits(win, t, tp, partner))
            .collect()
    }

    fn process_time(&self, task: TaskId, win: usize) -> f64 {
        let sat = self.inst.otws[win].sat;
        self.inst
            .task(task)
            .and_then(|t| t.process_time(sat))
            .expect("checked instance")
    }

    fn try_mono(&mut self, task: TaskId, win: usize) -> bool {
        let tp = self.process_time(task, win);
        match self.feasible_starts(win, tp, None).first() {
            Some(&t) => {
                self.obs.push(Placed {
                    task,
                    component: 1,
                    win,
                    t,
                    tp,
                });
                true
            }
            None => false,
        }
    }

    fn try_stereo(&mut self, task: TaskId, win: usize, beta: f64) -> bool {
        let inst = self.inst;
        let first = inst.otws.partition_point(|w| w.task < task);
        let last = inst.otws.partition_point(|w| w.task <= task);
        let mut seconds: Vec<usize> = (first..last).collect();
        seconds.sort_by(|&a, &b| {
            inst.otws[a]
                .t_open_s
                .total_cmp(&inst.otws[b].t_open_s)
                .then(a.cmp(&b))
        });
        let tp1 = self.process_time(task, win);
        for t1 in self.feasible_starts(win, tp1, None) {
            self.obs.push(Placed {
                task,
                component: 1,
                win,
                t: t1,
                tp: tp1,
            });
            let th1 = inst.otws[win].pitch_at(t1);
            for &w2 in &seconds {
                let tp2 = self.process_time(task, w2);
                if let Some(&t2) = self.feasible_starts(w2, tp2, Some((th1, beta))).first() {
                    self.obs.push(Placed {
                        task,
                        component: 2,
                        win: w2,
                        t: t2,
                        tp: tp2,
                    });
                    return true;
                }
            }
            self.obs.pop();
        }
        false
    }

    fn try_download(&mut self, pos: usize) {
        let inst = self.inst;
        let d = &inst.dtws[pos];
        let sat = self.sat(d.sat);
        let gs_prep = inst.station(d.station).map_or(0.0, |g| g.gs_prep_time_s);
        let mut start = d.t_open_s;
        for s in &self.sessions {
            let e = &inst.dtws[s.dtw];
            let prep = match (e.sat == d.sat, e.station == d.station) {
                (true, true) => sat.sat_prep_time_s.max(gs_prep),
                (true, false) => sat.sat_prep_time_s,
                (false, true) => gs_prep,
                (false, false) => continue,
            };
            start = start.max(s.tb + prep);
        }
        if start >= d.t_close_s {
            return;
        }
        let available = self.level(sat, start, None);
        let dur = (d.t_close_s - start).min(available / sat.down_rate_units_per_s);
        if dur > TOL {
            self.sessions.push(Session {
                dtw: pos,
                ta: start,
                tb: start + dur,
            });
        }
    }
}

/// Greedy chronological schedule.
pub fn solve_fifo(inst: &Instance) -> SolveReport {
    let clock = Instant::now();
    // (open, kind, position); observations before downloads at equal times
    let mut events: Vec<(f64, u8, usize)> = Vec::with_capacity(inst.otws.len() + inst.dtws.len());
    events.extend(
        inst.otws
            .iter()
            .enumerate()
            .map(|(i, w)| (w.t_open_s, 0, i)),
    );
    events.extend(
        inst.dtws
            .iter()
            .enumerate()
            .map(|(i, d)| (d.t_open_s, 1, i)),
    );
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut st = State {
        inst,
        obs: Vec::new(),
        sessions: Vec::new(),
    };
    let mut done: BTreeSet<TaskId> = BTreeSet::new();
    for (_, kind, pos) in events {
        if kind == 1 {
            st.try_download(pos);
            continue;
        }
        let task = inst.otws[pos].task;
        if done.contains(&task) {
            continue;
        }
        let placed = match inst.task(task).and_then(|t| t.stereo_beta()) {
            Some(beta) => st.try_stereo(task, pos, beta),
            None => st.try_mono(task, pos),
        };
        if placed {
            done.insert(task);
        }
    }

    let mut schedule = Schedule {
        observations: st
            .obs
            .iter()
            .map(|p| {
                let w = &inst.otws[p.win];
                ScheduledObservation {
                    task: p.task,
                    component: p.component,
                    sat: w.sat,
                    window: w.index,
                    t_start_s: p.t,
                    pitch_rad: w.pitch_at(p.t),
                }
            })
            .collect(),
        downloads: st
            .sessions
            .iter()
            .map(|s| {
                let d = &inst.dtws[s.dtw];
                ScheduledDownload {
                    download: d.download,
                    sat: d.sat,
                    window: d.index,
                    t_start_s: s.ta,
                    t_end_s: s.tb,
                }
            })
            .collect(),
    };
    schedule.canonicalize();
    let j = schedule.objective(inst) as f64;
    let bound = inst.total_priority() as f64;
    let gap = SolveReport::relative_gap(j, bound);
    SolveReport {
        schedule,
        objective_j: j,
        dual_bound: bound,
        gap,
        nodes_explored: 0,
        wall_time_s: clock.elapsed().as_secs_f64(),
        status: if gap == 0.0 {
            SolveStatus::Optimal
        } else {
            SolveStatus::Feasible
        },
        pruning: None,
    }
}
