//! Small hand-built instances shared by unit tests, integration tests and docs.

use crate::domain::{
    normalize_instance, Dtw, Geodetic, GlobalParams, GroundStation, Imaging, Instance, ObsTask,
    Otw, ProcessTime, Satellite, Schedule, ScheduledDownload, ScheduledObservation,
};
use crate::validator::Family;

/// A satellite carrying the scheduling parameters of the reference case study:
/// 30 deg roll/pitch limits, 1 deg/s slew, 5 s settling, 20 s download
/// preparation, download rate 5.
pub fn reference_satellite(id: u32) -> Satellite {
    Satellite {
        id,
        roll_limit_rad: 30f64.to_radians(),
        pitch_limit_rad: 30f64.to_radians(),
        slew_rate_rad_per_s: 1f64.to_radians(),
        stab_time_s: 5.0,
        sat_prep_time_s: 20.0,
        capacity_units: 1000.0,
        initial_data_units: 0.0,
        acq_rate_units_per_s: 1.0,
        down_rate_units_per_s: 5.0,
        orbit: None,
    }
}

pub fn station(id: u32) -> GroundStation {
    GroundStation {
        id,
        location: Geodetic {
            lat_rad: 0.6,
            lon_rad: 2.2,
            alt_km: 0.0,
        },
        gs_prep_time_s: 60.0,
        min_elevation_rad: 5f64.to_radians(),
    }
}

pub fn mono_task(id: u32, priority: u32, sats: &[u32], process_s: f64) -> ObsTask {
    ObsTask {
        id,
        priority_w: priority,
        imaging: Imaging::Mono,
        target: Geodetic {
            lat_rad: 0.6,
            lon_rad: 2.1,
            alt_km: 0.0,
        },
        process_time_s: sats
            .iter()
            .map(|&s| ProcessTime {
                sat: s,
                seconds: process_s,
            })
            .collect(),
        user_angle_limit_rad: None,
    }
}

pub fn stereo_task(id: u32, priority: u32, sats: &[u32], process_s: f64, beta_rad: f64) -> ObsTask {
    ObsTask {
        imaging: Imaging::Stereo { beta_rad },
        ..mono_task(id, priority, sats, process_s)
    }
}

/// Window whose pitch sweeps linearly from `pitch_open` to `pitch_close`.
#[allow(clippy::too_many_arguments)]
pub fn otw(
    task: u32,
    sat: u32,
    index: u32,
    open: f64,
    close: f64,
    roll: f64,
    pitch_open: f64,
    pitch_close: f64,
) -> Otw {
    Otw {
        task,
        sat,
        index,
        t_open_s: open,
        t_close_s: close,
        roll_rad: roll,
        pitch_at_open_rad: pitch_open,
        pitch_slope_rad_per_s: (pitch_close - pitch_open) / (close - open),
    }
}

pub fn dtw(download: u32, sat: u32, station: u32, index: u32, open: f64, close: f64) -> Dtw {
    Dtw {
        download,
        sat,
        station,
        index,
        t_open_s: open,
        t_close_s: close,
    }
}

/// One satellite, one mono task (priority 4), one 80-s window, no downloads.
pub fn minimal_instance() -> Instance {
    normalize_instance(&Instance::new(
        GlobalParams { horizon_s: 1000.0 },
        vec![reference_satellite(0)],
        vec![],
        vec![mono_task(0, 4, &[0], 3.0)],
        vec![otw(0, 0, 0, 100.0, 180.0, 0.1, 0.5, -0.5)],
        vec![],
    ))
}

/// Image in the first window of (`task`, `sat`), pitch on the window line.
pub fn scheduled_obs(
    inst: &Instance,
    task: u32,
    component: u8,
    sat: u32,
    t: f64,
) -> ScheduledObservation {
    let w = &inst.otws_of(task, sat)[0];
    ScheduledObservation {
        task,
        component,
        sat,
        window: 0,
        t_start_s: t,
        pitch_rad: w.pitch_at(t),
    }
}

pub fn scheduled_dl(download: u32, sat: u32, a: f64, b: f64) -> ScheduledDownload {
    ScheduledDownload {
        download,
        sat,
        window: 0,
        t_start_s: a,
        t_end_s: b,
    }
}

/// Valid reference schedule for validator tests. Two satellites, two stations. Satellite 0 holds 10 units and images
/// tasks 0 and 1 (6 s each); satellite 1 images stereo task 2 and task 3.
pub fn mutation_base() -> (Instance, Schedule) {
    let mut s0 = reference_satellite(0);
    s0.capacity_units = 10.0;
    let inst = normalize_instance(&Instance::new(
        GlobalParams { horizon_s: 1000.0 },
        vec![s0, reference_satellite(1)],
        vec![station(0), station(1)],
        vec![
            mono_task(0, 3, &[0], 6.0),
            mono_task(1, 2, &[0], 6.0),
            stereo_task(2, 4, &[1], 3.0, 15f64.to_radians()),
            mono_task(3, 1, &[1], 3.0),
        ],
        vec![
            otw(0, 0, 0, 100.0, 200.0, 0.0, 0.3, -0.3),
            otw(1, 0, 0, 150.0, 400.0, 0.0, 0.3, -0.3),
            otw(2, 1, 0, 100.0, 300.0, 0.0, 0.5, -0.5),
            otw(3, 1, 0, 100.0, 300.0, 0.2, 0.3, -0.3),
        ],
        vec![
            dtw(0, 0, 0, 0, 200.0, 300.0),
            dtw(0, 1, 0, 0, 200.0, 600.0),
            dtw(1, 0, 1, 0, 200.0, 700.0),
        ],
    ));
    let sch = Schedule {
        observations: vec![
            scheduled_obs(&inst, 0, 1, 0, 150.0),
            scheduled_obs(&inst, 1, 1, 0, 350.0),
            scheduled_obs(&inst, 2, 1, 1, 100.0),
            scheduled_obs(&inst, 2, 2, 1, 200.0),
            scheduled_obs(&inst, 3, 1, 1, 280.0),
        ],
        downloads: vec![
            scheduled_dl(0, 0, 210.0, 211.0),
            scheduled_dl(0, 1, 400.0, 401.8),
            scheduled_dl(1, 0, 500.0, 501.2),
        ],
    };
    (inst, sch)
}

fn find_obs(sch: &mut Schedule, task: u32, component: u8) -> &mut ScheduledObservation {
    sch.observations
        .iter_mut()
        .find(|o| o.task == task && o.component == component)
        .unwrap()
}

fn move_obs(inst: &Instance, sch: &mut Schedule, task: u32, component: u8, t: f64) {
    let o = find_obs(sch, task, component);
    o.t_start_s = t;
    o.pitch_rad = inst.otw(o.otw_key()).unwrap().pitch_at(t);
}

fn find_dl(sch: &mut Schedule, download: u32, sat: u32) -> &mut ScheduledDownload {
    sch.downloads
        .iter_mut()
        .find(|d| d.download == download && d.sat == sat)
        .unwrap()
}

/// Ten corruptions of the [`mutation_base`] schedule, each breaking exactly
/// one constraint family.
pub fn mutation_suite() -> Vec<(Family, Schedule)> {
    let (inst, sch) = mutation_base();
    let mut out = Vec::new();
    let mut m = |family: Family, f: &dyn Fn(&mut Schedule)| {
        let mut s = sch.clone();
        f(&mut s);
        out.push((family, s));
    };
    m(Family::Assignment, &|s| find_obs(s, 3, 1).component = 2);
    m(Family::ObsWindow, &|s| move_obs(&inst, s, 0, 1, 90.0));
    m(Family::DlWindow, &|s| {
        let d = find_dl(s, 1, 0);
        d.t_start_s = 699.5;
        d.t_end_s = 700.7;
    });
    m(Family::ObsOverlap, &|s| move_obs(&inst, s, 3, 1, 205.0));
    m(Family::GsOverlap, &|s| {
        let d = find_dl(s, 0, 1);
        d.t_start_s = 230.0;
        d.t_end_s = 231.2;
    });
    m(Family::SatDlOverlap, &|s| {
        let d = find_dl(s, 1, 0);
        d.t_start_s = 215.0;
        d.t_end_s = 215.2;
    });
    m(Family::Capacity, &|s| move_obs(&inst, s, 1, 1, 190.0));
    m(Family::BufferNonneg, &|s| find_dl(s, 1, 0).t_end_s = 502.0);
    m(Family::Stereo, &|s| move_obs(&inst, s, 2, 2, 150.0));
    m(Family::PitchLink, &|s| find_obs(s, 0, 1).pitch_rad += 1e-3);
    out
}
