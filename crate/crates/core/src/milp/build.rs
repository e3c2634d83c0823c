//! Model construction.
//!
//! Big-M constants are computed per row as the largest violation the row can
//! take over the variable boxes, so every gated row is exactly switched off
//! and never looser than needed. Window containment is expressed through the
//! bounds of the start-time variables.

use super::{Entity, MilpModel, Sense, SlotRef, VarKind};
use crate::domain::{Dtw, Instance, Otw, Satellite};

/// Minimum gap between the start of an image and the start of the next one
/// on the same satellite.
pub fn transition_time_s(
    sat: &Satellite,
    process_first_s: f64,
    roll_a: f64,
    pitch_a: f64,
    roll_b: f64,
    pitch_b: f64,
) -> f64 {
    process_first_s
        + sat.stab_time_s
        + ((roll_a - roll_b).abs() + (pitch_a - pitch_b).abs()) / sat.slew_rate_rad_per_s
}

#[derive(Debug, Clone)]
struct Slot {
    r: SlotRef,
    x: usize,
    t: usize,
    th: usize,
    tp: f64,
    open: f64,
    close: f64,
    roll: f64,
    p0: f64,
    slope: f64,
}

impl Slot {
    fn pitch(&self, t: f64) -> f64 {
        self.p0 + self.slope * (t - self.open)
    }

    fn pitch_range(&self) -> (f64, f64) {
        let (a, b) = (self.pitch(self.open), self.pitch(self.close));
        (a.min(b), a.max(b))
    }

    fn tag(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.r.component, self.r.key.task, self.r.key.sat, self.r.key.index
        )
    }
}

/// Builds the full model.
pub fn build_model(inst: &Instance) -> MilpModel {
    build_model_masked(inst, None)
}

/// Builds the model over the observation windows with `keep[i]` set
/// (`keep` aligned with `inst.otws`). Download windows are always kept.
pub fn build_model_masked(inst: &Instance, keep: Option<&[bool]>) -> MilpModel {
    let mut m = MilpModel::new();
    let mut slots: Vec<Slot> = Vec::new();
    let mut objective = Vec::new();

    for task in &inst.tasks {
        let comps = task.imaging.components();
        let task_vars: Vec<usize> = (1..=comps)
            .map(|c| {
                m.add_var(
                    Entity::TaskSelected {
                        task: task.id,
                        component: c,
                    },
                    VarKind::Binary,
                    0.0,
                    1.0,
                )
            })
            .collect();
        objective.push((task_vars[0], task.priority_w as f64));

        let first = inst.otws.partition_point(|w| w.task < task.id);
        let last = inst.otws.partition_point(|w| w.task <= task.id);
        let windows: Vec<&Otw> = (first..last)
            .filter(|&i| keep.map_or(true, |k| k[i]))
            .map(|i| &inst.otws[i])
            .collect();

        let mut sat_vars: Vec<Vec<usize>> = vec![Vec::new(); comps as usize];
        let mut sats: Vec<u32> = windows.iter().map(|w| w.sat).collect();
        sats.dedup();
        for &s in &sats {
            let tp = task.process_time(s).expect("process time checked on load");
            let mut per_comp: Vec<Vec<usize>> = vec![Vec::new(); comps as usize];
            for c in 1..=comps {
                let xa = m.add_var(
                    Entity::SatSelected {
                        task: task.id,
                        sat: s,
                        component: c,
                    },
                    VarKind::Binary,
                    0.0,
                    1.0,
                );
                sat_vars[c as usize - 1].push(xa);
                for w in windows.iter().filter(|w| w.sat == s) {
                    let r = SlotRef {
                        key: w.key(),
                        component: c,
                    };
                    let (pmin, pmax) = w.pitch_range();
                    let x = m.add_var(Entity::Window(r), VarKind::Binary, 0.0, 1.0);
                    let t = m.add_var(
                        Entity::Start(r),
                        VarKind::Continuous,
                        w.t_open_s,
                        w.t_close_s,
                    );
                    let th = m.add_var(Entity::Pitch(r), VarKind::Continuous, pmin, pmax);
                    m.add_row(
                        format!("pitch_{}", slot_suffix(r)),
                        &[(th, 1.0), (t, -w.pitch_slope_rad_per_s)],
                        Sense::Eq,
                        w.pitch_at_open_rad - w.pitch_slope_rad_per_s * w.t_open_s,
                    );
                    per_comp[c as usize - 1].push(x);
                    slots.push(Slot {
                        r,
                        x,
                        t,
                        th,
                        tp,
                        open: w.t_open_s,
                        close: w.t_close_s,
                        roll: w.roll_rad,
                        p0: w.pitch_at_open_rad,
                        slope: w.pitch_slope_rad_per_s,
                    });
                }
                let mut row = vec![(xa, 1.0)];
                row.extend(per_comp[c as usize - 1].iter().map(|&x| (x, -1.0)));
                m.add_row(
                    format!("sel{}_{}_{}", comp_tag(c), task.id, s),
                    &row,
                    Sense::Eq,
                    0.0,
                );
            }
        }
        for c in 1..=comps {
            let mut row = vec![(task_vars[c as usize - 1], 1.0)];
            row.extend(sat_vars[c as usize - 1].iter().map(|&x| (x, -1.0)));
            m.add_row(
                format!("task{}_{}", comp_tag(c), task.id),
                &row,
                Sense::Eq,
                0.0,
            );
        }
        if comps == 2 {
            m.add_row(
                format!("pair_{}", task.id),
                &[(task_vars[0], 1.0), (task_vars[1], -1.0)],
                Sense::Eq,
                0.0,
            );
        }
    }

    add_stereo_rows(&mut m, inst, &slots);
    for sat in &inst.satellites {
        let on_sat: Vec<&Slot> = slots.iter().filter(|s| s.r.key.sat == sat.id).collect();
        add_separation_rows(&mut m, sat, &on_sat);
    }
    let dl = add_download_vars(&mut m, inst);
    add_download_separation(&mut m, inst, &dl);
    for sat in &inst.satellites {
        add_capacity_rows(&mut m, inst, sat, &slots, &dl);
    }
    m.set_objective(&objective);
    m
}

fn comp_tag(c: u8) -> &'static str {
    if c == 2 {
        "2"
    } else {
        ""
    }
}

fn slot_suffix(r: SlotRef) -> String {
    format!(
        "{}_{}_{}_{}",
        r.component, r.key.task, r.key.sat, r.key.index
    )
}

/// Component 1 carries the larger pitch, which removes the side choice of
/// the pitch-difference disjunction without losing solutions.
fn add_stereo_rows(m: &mut MilpModel, inst: &Instance, slots: &[Slot]) {
    for task in inst.tasks.iter().filter(|t| t.is_stereo()) {
        let beta = task.stereo_beta().unwrap_or(0.0);
        let first: Vec<&Slot> = slots
            .iter()
            .filter(|s| s.r.key.task == task.id && s.r.component == 1)
            .collect();
        let second: Vec<&Slot> = slots
            .iter()
            .filter(|s| s.r.key.task == task.id && s.r.component == 2)
            .collect();
        for a in &first {
            for b in &second {
                let (amin, amax) = a.pitch_range();
                let (bmin, bmax) = b.pitch_range();
                let worst = amin - bmax;
                let best = amax - bmin;
                let name = format!(
                    "st_{}_{}_{}_{}_{}",
                    task.id, a.r.key.sat, a.r.key.index, b.r.key.sat, b.r.key.index
                );
                if worst >= beta {
                    continue;
                } else if best < beta {
                    m.add_row(name, &[(a.x, 1.0), (b.x, 1.0)], Sense::Le, 1.0);
                } else {
                    let big = beta - worst;
                    m.add_row(
                        name,
                        &[(a.th, 1.0), (b.th, -1.0), (a.x, -big), (b.x, -big)],
                        Sense::Ge,
                        beta - 2.0 * big,
                    );
                }
            }
        }
    }
}

/// Linear form `k_i * t_i + k_j * t_j + k0` as coefficients.
#[derive(Debug, Clone, Copy)]
struct Lin {
    ki: f64,
    kj: f64,
    k0: f64,
}

impl Lin {
    fn at(&self, ti: f64, tj: f64) -> f64 {
        self.ki * ti + self.kj * tj + self.k0
    }

    fn min_over(&self, i: &Slot, j: &Slot) -> f64 {
        corners(i, j)
            .iter()
            .map(|&(a, b)| self.at(a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

fn corners(i: &Slot, j: &Slot) -> [(f64, f64); 4] {
    [
        (i.open, j.open),
        (i.open, j.close),
        (i.close, j.open),
        (i.close, j.close),
    ]
}

/// The two linear pieces of `t_j - t_i - |th_i - th_j| / r` for the order
/// i before j, with pitch substituted by each window's line.
fn order_pieces(i: &Slot, j: &Slot, rate: f64) -> [Lin; 2] {
    // th_i - th_j = (p_i - s_i a_i) + s_i t_i - (p_j - s_j a_j) - s_j t_j
    let d = Lin {
        ki: i.slope,
        kj: -j.slope,
        k0: (i.p0 - i.slope * i.open) - (j.p0 - j.slope * j.open),
    };
    [
        Lin {
            ki: -1.0 - d.ki / rate,
            kj: 1.0 - d.kj / rate,
            k0: -d.k0 / rate,
        },
        Lin {
            ki: -1.0 + d.ki / rate,
            kj: 1.0 + d.kj / rate,
            k0: d.k0 / rate,
        },
    ]
}

/// (always satisfied, satisfiable) for the order i before j.
fn order_status(i: &Slot, j: &Slot, sat: &Satellite, c: f64) -> (bool, bool) {
    let rate = sat.slew_rate_rad_per_s;
    let h = |ti: f64, tj: f64| tj - ti - (i.pitch(ti) - j.pitch(tj)).abs() / rate - c;
    let mut pts: Vec<(f64, f64)> = corners(i, j).to_vec();
    // kinks where the two pitches coincide, on the box edges
    for ti in [i.open, i.close] {
        if j.slope != 0.0 {
            let tj = j.open + (i.pitch(ti) - j.p0) / j.slope;
            if tj >= j.open && tj <= j.close {
                pts.push((ti, tj));
            }
        }
    }
    for tj in [j.open, j.close] {
        if i.slope != 0.0 {
            let ti = i.open + (j.pitch(tj) - i.p0) / i.slope;
            if ti >= i.open && ti <= i.close {
                pts.push((ti, tj));
            }
        }
    }
    let always = corners(i, j).iter().all(|&(a, b)| h(a, b) >= 0.0);
    let possible = pts.iter().any(|&(a, b)| h(a, b) >= 0.0);
    (always, possible)
}

fn add_separation_rows(m: &mut MilpModel, sat: &Satellite, slots: &[&Slot]) {
    if slots.is_empty() {
        return;
    }
    let rate = sat.slew_rate_rad_per_s;
    let max_tp = slots.iter().map(|s| s.tp).fold(0.0, f64::max);
    let max_roll = slots.iter().map(|s| s.roll.abs()).fold(0.0, f64::max);
    let max_pitch = slots
        .iter()
        .map(|s| {
            let (a, b) = s.pitch_range();
            a.abs().max(b.abs())
        })
        .fold(0.0, f64::max);
    let reach = max_tp + sat.stab_time_s + 2.0 * (max_roll + max_pitch) / rate + 1.0;

    let mut order: Vec<&Slot> = slots.to_vec();
    order.sort_by(|a, b| a.open.total_cmp(&b.open).then(a.r.cmp(&b.r)));
    for (n, &a) in order.iter().enumerate() {
        for &b in &order[n + 1..] {
            if b.open >= a.close + reach {
                break;
            }
            if a.r.key.task == b.r.key.task && a.r.component == b.r.component {
                continue;
            }
            let (i, j) = if a.r < b.r { (a, b) } else { (b, a) };
            add_pair(m, sat, i, j, rate);
        }
    }
}

fn add_pair(m: &mut MilpModel, sat: &Satellite, i: &Slot, j: &Slot, rate: f64) {
    let droll = (i.roll - j.roll).abs() / rate;
    let c_ij = i.tp + sat.stab_time_s + droll;
    let c_ji = j.tp + sat.stab_time_s + droll;
    let (always_ij, possible_ij) = order_status(i, j, sat, c_ij);
    let (always_ji, possible_ji) = order_status(j, i, sat, c_ji);
    if always_ij || always_ji {
        return;
    }
    let tag = format!("{}_{}_{}", i.r.key.sat, i.tag(), j.tag());
    if !possible_ij && !possible_ji {
        m.add_row(
            format!("ox_{tag}"),
            &[(i.x, 1.0), (j.x, 1.0)],
            Sense::Le,
            1.0,
        );
        return;
    }
    let pieces_ij = order_pieces(i, j, rate);
    let pieces_ji = order_pieces(j, i, rate);
    // pitch variables are used explicitly: t_j - t_i -/+ (th_i - th_j)/r >= c
    let explicit = |first: &Slot, second: &Slot, sign: f64| -> Vec<(usize, f64)> {
        vec![
            (second.t, 1.0),
            (first.t, -1.0),
            (first.th, -sign / rate),
            (second.th, sign / rate),
        ]
    };
    if possible_ij && possible_ji {
        let o = m.add_var(
            Entity::ObsOrder {
                first: i.r,
                second: j.r,
            },
            VarKind::Binary,
            0.0,
            1.0,
        );
        for (n, (p, sign)) in pieces_ij.iter().zip([1.0, -1.0]).enumerate() {
            let big = (c_ij - p.min_over(i, j)).max(0.0);
            if big > 0.0 {
                let mut row = explicit(i, j, sign);
                row.extend([(o, -big), (i.x, -big), (j.x, -big)]);
                m.add_row(
                    format!("sep{}_{tag}", n + 1),
                    &row,
                    Sense::Ge,
                    c_ij - 3.0 * big,
                );
            }
        }
        for (n, (p, sign)) in pieces_ji.iter().zip([1.0, -1.0]).enumerate() {
            let big = (c_ji - p.min_over(j, i)).max(0.0);
            if big > 0.0 {
                let mut row = explicit(j, i, sign);
                row.extend([(o, big), (i.x, -big), (j.x, -big)]);
                m.add_row(
                    format!("sep{}_{tag}", n + 3),
                    &row,
                    Sense::Ge,
                    c_ji - 2.0 * big,
                );
            }
        }
    } else {
        let (first, second, c, pieces, base) = if possible_ij {
            (i, j, c_ij, pieces_ij, 1)
        } else {
            (j, i, c_ji, pieces_ji, 3)
        };
        for (n, (p, sign)) in pieces.iter().zip([1.0, -1.0]).enumerate() {
            let big = (c - p.min_over(first, second)).max(0.0);
            if big > 0.0 {
                let mut row = explicit(first, second, sign);
                row.extend([(i.x, -big), (j.x, -big)]);
                m.add_row(
                    format!("sep{}_{tag}", base + n),
                    &row,
                    Sense::Ge,
                    c - 2.0 * big,
                );
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct DlVars {
    pos: usize,
    z: usize,
    ta: usize,
    tb: usize,
}

fn add_download_vars(m: &mut MilpModel, inst: &Instance) -> Vec<DlVars> {
    let mut out = Vec::with_capacity(inst.dtws.len());
    for (pos, d) in inst.dtws.iter().enumerate() {
        let k = d.key();
        let z = m.add_var(Entity::DownloadActive(k), VarKind::Binary, 0.0, 1.0);
        let ta = m.add_var(
            Entity::DownloadStart(k),
            VarKind::Continuous,
            d.t_open_s,
            d.t_close_s,
        );
        let tb = m.add_var(
            Entity::DownloadEnd(k),
            VarKind::Continuous,
            d.t_open_s,
            d.t_close_s,
        );
        let tag = format!("{}_{}_{}", k.download, k.sat, k.index);
        let len = d.len_s();
        m.add_row(
            format!("dl_{tag}"),
            &[(tb, 1.0), (ta, -1.0)],
            Sense::Ge,
            0.0,
        );
        m.add_row(
            format!("dz_{tag}"),
            &[(tb, 1.0), (ta, -1.0), (z, -len)],
            Sense::Le,
            0.0,
        );
        m.add_row(
            format!("dp_{tag}"),
            &[(ta, 1.0), (z, -len)],
            Sense::Le,
            d.t_open_s,
        );
        out.push(DlVars { pos, z, ta, tb });
    }
    out
}

fn download_prep(inst: &Instance, p: &Dtw, q: &Dtw) -> Option<f64> {
    let mut prep: Option<f64> = None;
    if p.station == q.station {
        let g = inst.station(p.station).map_or(0.0, |g| g.gs_prep_time_s);
        prep = Some(g);
    }
    if p.sat == q.sat {
        let s = inst.satellite(p.sat).map_or(0.0, |s| s.sat_prep_time_s);
        prep = Some(prep.map_or(s, |g| g.max(s)));
    }
    prep
}

fn add_download_separation(m: &mut MilpModel, inst: &Instance, dl: &[DlVars]) {
    for (n, a) in dl.iter().enumerate() {
        for b in &dl[n + 1..] {
            let (p, q) = (&inst.dtws[a.pos], &inst.dtws[b.pos]);
            let Some(prep) = download_prep(inst, p, q) else {
                continue;
            };
            // order p -> q needs ta_q >= tb_p + prep
            let always_pq = q.t_open_s >= p.t_close_s + prep;
            let always_qp = p.t_open_s >= q.t_close_s + prep;
            if always_pq || always_qp {
                continue;
            }
            let possible_pq = q.t_close_s >= p.t_open_s + prep;
            let possible_qp = p.t_close_s >= q.t_open_s + prep;
            let tag = format!(
                "{}_{}_{}_{}_{}_{}",
                p.download, p.sat, p.index, q.download, q.sat, q.index
            );
            let m_pq = prep + p.t_close_s - q.t_open_s;
            let m_qp = prep + q.t_close_s - p.t_open_s;
            match (possible_pq, possible_qp) {
                (false, false) => m.add_row(
                    format!("gx_{tag}"),
                    &[(a.z, 1.0), (b.z, 1.0)],
                    Sense::Le,
                    1.0,
                ),
                (true, true) => {
                    let o = m.add_var(
                        Entity::DownloadOrder {
                            first: p.key(),
                            second: q.key(),
                        },
                        VarKind::Binary,
                        0.0,
                        1.0,
                    );
                    m.add_row(
                        format!("gs1_{tag}"),
                        &[
                            (b.ta, 1.0),
                            (a.tb, -1.0),
                            (o, -m_pq),
                            (a.z, -m_pq),
                            (b.z, -m_pq),
                        ],
                        Sense::Ge,
                        prep - 3.0 * m_pq,
                    );
                    m.add_row(
                        format!("gs2_{tag}"),
                        &[
                            (a.ta, 1.0),
                            (b.tb, -1.0),
                            (o, m_qp),
                            (a.z, -m_qp),
                            (b.z, -m_qp),
                        ],
                        Sense::Ge,
                        prep - 2.0 * m_qp,
                    );
                }
                (true, false) => m.add_row(
                    format!("gs1_{tag}"),
                    &[(b.ta, 1.0), (a.tb, -1.0), (a.z, -m_pq), (b.z, -m_pq)],
                    Sense::Ge,
                    prep - 2.0 * m_pq,
                ),
                (false, true) => m.add_row(
                    format!("gs2_{tag}"),
                    &[(a.ta, 1.0), (b.tb, -1.0), (a.z, -m_qp), (b.z, -m_qp)],
                    Sense::Ge,
                    prep - 2.0 * m_qp,
                ),
            }
        }
    }
}

/// Conservative event rules for the onboard buffer of one satellite.
///
/// At the end of image j the buffer is bounded above by counting every image
/// that may have started by then and only the downloads that surely ended
/// before image j began. At the end of download d it is bounded below by
/// counting every download that may have started by then in full and only
/// the images that surely finished before d's window opened.
fn add_capacity_rows(
    m: &mut MilpModel,
    inst: &Instance,
    sat: &Satellite,
    slots: &[Slot],
    dl: &[DlVars],
) {
    let mine: Vec<&Slot> = slots.iter().filter(|s| s.r.key.sat == sat.id).collect();
    let downs: Vec<(&Dtw, DlVars)> = dl
        .iter()
        .map(|v| (&inst.dtws[v.pos], *v))
        .filter(|(d, _)| d.sat == sat.id)
        .collect();
    let zeta = sat.acq_rate_units_per_s;
    let gamma = sat.down_rate_units_per_s;
    let init = sat.initial_data_units;

    for j in &mine {
        let horizon_end = j.close + j.tp;
        let acquired: Vec<&&Slot> = mine
            .iter()
            .filter(|i| i.open + i.tp <= horizon_end)
            .collect();
        let max_acq: f64 = acquired.iter().map(|i| zeta * i.tp).sum();
        let big = init + max_acq - sat.capacity_units;
        if big <= 0.0 {
            continue;
        }
        let mut row: Vec<(usize, f64)> = acquired.iter().map(|i| (i.x, zeta * i.tp)).collect();
        for (d, v) in &downs {
            if d.t_close_s <= j.open {
                row.push((v.tb, -gamma));
                row.push((v.ta, gamma));
            }
        }
        row.push((j.x, big));
        m.add_row(
            format!("cap_{}", j.tag()),
            &row,
            Sense::Le,
            sat.capacity_units - init + big,
        );
    }

    for (d, v) in &downs {
        let earlier: Vec<&(&Dtw, DlVars)> = downs
            .iter()
            .filter(|(e, ev)| ev.pos == v.pos || e.t_open_s < d.t_close_s)
            .collect();
        let max_down: f64 = earlier.iter().map(|(e, _)| gamma * e.len_s()).sum();
        let big = max_down - init;
        if big <= 0.0 {
            continue;
        }
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (_, ev) in &earlier {
            row.push((ev.tb, gamma));
            row.push((ev.ta, -gamma));
        }
        for j in &mine {
            if j.close + j.tp <= d.t_open_s {
                row.push((j.x, -zeta * j.tp));
            }
        }
        row.push((v.z, big));
        m.add_row(
            format!("nn_{}_{}_{}", d.download, d.sat, d.index),
            &row,
            Sense::Le,
            init + big,
        );
    }
}
