//! Brute-force optimum for tiny instances.
//!
//! Tasks are selected depth-first (highest priority first) with a profit
//! bound. Every partial selection is checked for feasibility by enumerating
//! the observation sequence on each satellite, the pitch side of every stereo
//! pair, the set of active downloads and their pairwise orders; each
//! combination is a fixed-order continuous problem decided by [`solve_lp`].
//! Nothing here is shared with the model builder.

use super::{solve_lp, LpProblem, LpStatus};
use crate::domain::{Dtw, Instance, Otw, Satellite};
use crate::milp::{Constraint, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    /// Largest number of leaf problems solved before refusing.
    pub max_lp_solves: u64,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_lp_solves: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub objective: u64,
    pub lp_solves: u64,
    /// Chosen (task, window position in `inst.otws`) pairs of one optimum.
    pub selection: Vec<(u32, usize)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleRefusal {
    #[error("instance exceeds the enumeration cap of {0} leaf problems")]
    TooLarge(u64),
    #[error("leaf problem failed numerically")]
    Numerical,
}

#[derive(Debug, Clone, Copy)]
struct Obs {
    task: u32,
    /// Position of the window in `inst.otws`.
    win: usize,
    tp: f64,
}

struct Search<'a> {
    inst: &'a Instance,
    caps: OracleCaps,
    solves: u64,
}

fn line(w: &Otw) -> (f64, f64) {
    // pitch(t) = m t + c
    (
        w.pitch_slope_rad_per_s,
        w.pitch_at_open_rad - w.pitch_slope_rad_per_s * w.t_open_s,
    )
}

impl<'a> Search<'a> {
    fn sat(&self, id: u32) -> &Satellite {
        self.inst.satellite(id).expect("checked instance")
    }

    fn can_precede(&self, p: &Obs, q: &Obs) -> bool {
        let (wp, wq) = (&self.inst.otws[p.win], &self.inst.otws[q.win]);
        wp.t_open_s + p.tp + self.sat(wp.sat).stab_time_s <= wq.t_close_s + 1e-9
    }

    fn sequences(&self, obs: &[Obs], members: &[usize]) -> Vec<Vec<usize>> {
        fn rec(
            s: &Search,
            obs: &[Obs],
            left: &mut Vec<usize>,
            cur: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if left.is_empty() {
                out.push(cur.clone());
                return;
            }
            for k in 0..left.len() {
                let next = left[k];
                if let Some(&prev) = cur.last() {
                    if !s.can_precede(&obs[prev], &obs[next]) {
                        continue;
                    }
                }
                left.remove(k);
                cur.push(next);
                rec(s, obs, left, cur, out);
                cur.pop();
                left.insert(k, next);
            }
        }
        let mut out = Vec::new();
        rec(self, obs, &mut members.to_vec(), &mut Vec::new(), &mut out);
        out
    }

    /// Whether some combination of sequences, stereo sides and downloads
    /// admits start times.
    fn feasible(&mut self, obs: &[Obs]) -> Result<bool, OracleRefusal> {
        let inst = self.inst;
        let mut sats: Vec<u32> = obs.iter().map(|o| inst.otws[o.win].sat).collect();
        sats.sort_unstable();
        sats.dedup();
        let mut seqs: Vec<Vec<Vec<usize>>> = Vec::new();
        for &s in &sats {
            let members: Vec<usize> = (0..obs.len())
                .filter(|&i| inst.otws[obs[i].win].sat == s)
                .collect();
            let opts = self.sequences(obs, &members);
            if opts.is_empty() {
                return Ok(false);
            }
            seqs.push(opts);
        }
        // stereo pairs: indices of the two observations of each stereo task
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        for (i, o) in obs.iter().enumerate() {
            if let Some(j) = (i + 1..obs.len()).find(|&j| obs[j].task == o.task) {
                let beta = inst
                    .task(o.task)
                    .and_then(|t| t.stereo_beta())
                    .unwrap_or(0.0);
                pairs.push((i, j, beta));
            }
        }
        let needs_downloads = inst.satellites.iter().any(|s| {
            let acq: f64 = obs
                .iter()
                .filter(|o| inst.otws[o.win].sat == s.id)
                .map(|o| o.tp * s.acq_rate_units_per_s)
                .sum();
            s.initial_data_units + acq > s.capacity_units
        });
        let n_dl = if needs_downloads { inst.dtws.len() } else { 0 };
        if n_dl > 20 {
            return Err(OracleRefusal::TooLarge(self.caps.max_lp_solves));
        }

        for subset in 0u32..(1u32 << n_dl) {
            let active: Vec<usize> = (0..n_dl).filter(|&d| subset >> d & 1 == 1).collect();
            let mut conflicts: Vec<(usize, usize, f64)> = Vec::new();
            for (x, &p) in active.iter().enumerate() {
                for &q in &active[x + 1..] {
                    if let Some(prep) = self.download_prep(&inst.dtws[p], &inst.dtws[q]) {
                        conflicts.push((p, q, prep));
                    }
                }
            }
            // mixed-radix walk over sequences x sides x download orders
            let mut radix: Vec<usize> = seqs.iter().map(|s| s.len()).collect();
            radix.extend(std::iter::repeat(2).take(pairs.len() + conflicts.len()));
            let mut digit = vec![0usize; radix.len()];
            loop {
                self.solves += 1;
                if self.solves > self.caps.max_lp_solves {
                    return Err(OracleRefusal::TooLarge(self.caps.max_lp_solves));
                }
                let chosen: Vec<&Vec<usize>> =
                    seqs.iter().zip(&digit).map(|(s, &d)| &s[d]).collect();
                let sides = &digit[seqs.len()..seqs.len() + pairs.len()];
                let orders = &digit[seqs.len() + pairs.len()..];
                match self.leaf(obs, &chosen, &pairs, sides, &active, &conflicts, orders) {
                    LpStatus::Optimal => return Ok(true),
                    LpStatus::Infeasible => {}
                    LpStatus::Unbounded | LpStatus::NumericalFailure { .. } => {
                        return Err(OracleRefusal::Numerical)
                    }
                }
                // increment
                let mut k = 0;
                loop {
                    if k == radix.len() {
                        break;
                    }
                    digit[k] += 1;
                    if digit[k] < radix[k] {
                        break;
                    }
                    digit[k] = 0;
                    k += 1;
                }
                if k == radix.len() {
                    break;
                }
            }
        }
        Ok(false)
    }

    fn download_prep(&self, p: &Dtw, q: &Dtw) -> Option<f64> {
        let same_station = p.station == q.station;
        let same_sat = p.sat == q.sat;
        if !same_station && !same_sat {
            return None;
        }
        let g = if same_station {
            self.inst
                .station(p.station)
                .map_or(0.0, |g| g.gs_prep_time_s)
        } else {
            0.0
        };
        let s = if same_sat {
            self.sat(p.sat).sat_prep_time_s
        } else {
            0.0
        };
        Some(g.max(s))
    }

    #[allow(clippy::too_many_arguments)]
    fn leaf(
        &self,
        obs: &[Obs],
        seqs: &[&Vec<usize>],
        pairs: &[(usize, usize, f64)],
        sides: &[usize],
        active: &[usize],
        conflicts: &[(usize, usize, f64)],
        orders: &[usize],
    ) -> LpStatus {
        let inst = self.inst;
        let n_obs = obs.len();
        let n = n_obs + 2 * active.len();
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for o in obs {
            let w = &inst.otws[o.win];
            lower.push(w.t_open_s);
            upper.push(w.t_close_s);
        }
        let ta = |k: usize| n_obs + 2 * k;
        let tb = |k: usize| n_obs + 2 * k + 1;
        for &d in active {
            let w = &inst.dtws[d];
            lower.extend([w.t_open_s, w.t_open_s]);
            upper.extend([w.t_close_s, w.t_close_s]);
        }
        let mut rows = Vec::new();
        let mut push = |coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64| {
            let mut coeffs = coeffs;
            coeffs.sort_by_key(|c| c.0);
            rows.push(Constraint {
                name: String::new(),
                coeffs,
                sense,
                rhs,
            });
        };

        for seq in seqs {
            for (x, &p) in seq.iter().enumerate() {
                for &q in &seq[x + 1..] {
                    let (wp, wq) = (&inst.otws[obs[p].win], &inst.otws[obs[q].win]);
                    let sat = self.sat(wp.sat);
                    let r = sat.slew_rate_rad_per_s;
                    let c = obs[p].tp + sat.stab_time_s + (wp.roll_rad - wq.roll_rad).abs() / r;
                    let (mp, cp) = line(wp);
                    let (mq, cq) = line(wq);
                    // t_q - t_p >= c + |th_p - th_q| / r, both signs
                    push(
                        vec![(p, -1.0 - mp / r), (q, 1.0 + mq / r)],
                        Sense::Ge,
                        c + (cp - cq) / r,
                    );
                    push(
                        vec![(p, -1.0 + mp / r), (q, 1.0 - mq / r)],
                        Sense::Ge,
                        c - (cp - cq) / r,
                    );
                }
            }
        }
        for (&(i, j, beta), &side) in pairs.iter().zip(sides) {
            let (hi, lo) = if side == 0 { (i, j) } else { (j, i) };
            let (mh, ch) = line(&inst.otws[obs[hi].win]);
            let (ml, cl) = line(&inst.otws[obs[lo].win]);
            push(vec![(hi, mh), (lo, -ml)], Sense::Ge, beta - ch + cl);
        }
        for k in 0..active.len() {
            push(vec![(tb(k), 1.0), (ta(k), -1.0)], Sense::Ge, 0.0);
        }
        let slot = |d: usize| {
            active
                .iter()
                .position(|&a| a == d)
                .expect("active download")
        };
        for (&(p, q, prep), &ord) in conflicts.iter().zip(orders) {
            let (first, second) = if ord == 0 {
                (slot(p), slot(q))
            } else {
                (slot(q), slot(p))
            };
            push(vec![(ta(second), 1.0), (tb(first), -1.0)], Sense::Ge, prep);
        }

        // onboard buffer, per satellite
        for sat in &inst.satellites {
            let mine: Vec<usize> = (0..n_obs)
                .filter(|&i| inst.otws[obs[i].win].sat == sat.id)
                .collect();
            let downs: Vec<usize> = (0..active.len())
                .filter(|&k| inst.dtws[active[k]].sat == sat.id)
                .collect();
            let (zeta, gamma, init) = (
                sat.acq_rate_units_per_s,
                sat.down_rate_units_per_s,
                sat.initial_data_units,
            );
            for &j in &mine {
                let wj = &inst.otws[obs[j].win];
                let acquired: f64 = mine
                    .iter()
                    .filter(|&&i| {
                        inst.otws[obs[i].win].t_open_s + obs[i].tp <= wj.t_close_s + obs[j].tp
                    })
                    .map(|&i| zeta * obs[i].tp)
                    .sum();
                let mut coeffs = Vec::new();
                for &k in &downs {
                    if inst.dtws[active[k]].t_close_s <= wj.t_open_s {
                        coeffs.push((tb(k), -gamma));
                        coeffs.push((ta(k), gamma));
                    }
                }
                if coeffs.is_empty() {
                    if init + acquired > sat.capacity_units + 1e-9 {
                        return LpStatus::Infeasible;
                    }
                } else {
                    push(coeffs, Sense::Le, sat.capacity_units - init - acquired);
                }
            }
            for &k in &downs {
                let d = &inst.dtws[active[k]];
                let acquired: f64 = mine
                    .iter()
                    .filter(|&&j| inst.otws[obs[j].win].t_close_s + obs[j].tp <= d.t_open_s)
                    .map(|&j| zeta * obs[j].tp)
                    .sum();
                let mut coeffs = Vec::new();
                for &e in &downs {
                    if e == k || inst.dtws[active[e]].t_open_s < d.t_close_s {
                        coeffs.push((tb(e), gamma));
                        coeffs.push((ta(e), -gamma));
                    }
                }
                push(coeffs, Sense::Le, init + acquired);
            }
        }

        let p = LpProblem {
            n,
            objective: vec![0.0; n],
            lower,
            upper,
            rows,
        };
        solve_lp(&p).status
    }
}

/// Options for one task: no choice, or the window positions used.
fn task_options(inst: &Instance, task: u32) -> Vec<Vec<usize>> {
    let first = inst.otws.partition_point(|w| w.task < task);
    let last = inst.otws.partition_point(|w| w.task <= task);
    let stereo = inst.task(task).is_some_and(|t| t.is_stereo());
    let mut opts = Vec::new();
    for a in first..last {
        if stereo {
            for b in a..last {
                opts.push(vec![a, b]);
            }
        } else {
            opts.push(vec![a]);
        }
    }
    opts
}

/// Maximum total priority over all feasible schedules, by exhaustion.
pub fn enumerate_oracle(inst: &Instance, caps: OracleCaps) -> Result<OracleOutcome, OracleRefusal> {
    let mut order: Vec<u32> = inst.tasks.iter().map(|t| t.id).collect();
    order.sort_by_key(|&v| {
        (
            std::cmp::Reverse(inst.task(v).map_or(0, |t| t.priority_w)),
            v,
        )
    });
    let options: Vec<Vec<Vec<usize>>> = order.iter().map(|&v| task_options(inst, v)).collect();
    let weights: Vec<u64> = order
        .iter()
        .map(|&v| inst.task(v).map_or(0, |t| t.priority_w as u64))
        .collect();
    let mut suffix = vec![0u64; order.len() + 1];
    for i in (0..order.len()).rev() {
        suffix[i] = suffix[i + 1] + if options[i].is_empty() { 0 } else { weights[i] };
    }

    struct State {
        best: u64,
        best_sel: Vec<(u32, usize)>,
    }
    fn dfs(
        s: &mut Search,
        k: usize,
        order: &[u32],
        options: &[Vec<Vec<usize>>],
        weights: &[u64],
        suffix: &[u64],
        chosen: &mut Vec<Obs>,
        value: u64,
        st: &mut State,
    ) -> Result<(), OracleRefusal> {
        if value > st.best {
            st.best = value;
            st.best_sel = chosen.iter().map(|o| (o.task, o.win)).collect();
        }
        if k == order.len() || value + suffix[k] <= st.best {
            return Ok(());
        }
        let task = order[k];
        for opt in &options[k] {
            let before = chosen.len();
            for &w in opt {
                let sat = s.inst.otws[w].sat;
                let tp = s
                    .inst
                    .task(task)
                    .and_then(|t| t.process_time(sat))
                    .unwrap_or(0.0);
                chosen.push(Obs { task, win: w, tp });
            }
            if s.feasible(chosen)? {
                dfs(
                    s,
                    k + 1,
                    order,
                    options,
                    weights,
                    suffix,
                    chosen,
                    value + weights[k],
                    st,
                )?;
            }
            chosen.truncate(before);
            if value + suffix[k] <= st.best {
                return Ok(());
            }
        }
        dfs(s, k + 1, order, options, weights, suffix, chosen, value, st)
    }

    let mut search = Search {
        inst,
        caps,
        solves: 0,
    };
    let mut st = State {
        best: 0,
        best_sel: Vec::new(),
    };
    dfs(
        &mut search,
        0,
        &order,
        &options,
        &weights,
        &suffix,
        &mut Vec::new(),
        0,
        &mut st,
    )?;
    Ok(OracleOutcome {
        objective: st.best,
        lp_solves: search.solves,
        selection: st.best_sel,
    })
}
