//! Seeded random instance synthesis.
//!
//! Two generators live here. [`synth_instance`] places targets and stations
//! in a geographic box and derives every window from orbital geometry.
//! [`synth_window_instance`] skips geometry and draws windows directly; it
//! produces the tiny, dense instances used to cross-check solvers.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::windows::{extract_dtws_on_track, extract_otws_on_track, SatTrack};
use crate::domain::{
    normalize_instance, Dtw, Geodetic, GlobalParams, GroundStation, Imaging, Instance, ObsTask,
    OrbitElements, Otw, ProcessTime, Satellite,
};
use crate::fixtures::reference_satellite;

/// Reference orbit radius, km.
pub const REFERENCE_SEMI_MAJOR_AXIS_KM: f64 = 6871.0;
pub const REFERENCE_INCLINATION_DEG: f64 = 97.3;
/// Targets closer than this grid step (deg) count as the same target.
const TARGET_GRID_DEG: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Spot,
    Strip,
}

impl TaskKind {
    pub fn process_time_s(self) -> f64 {
        match self {
            TaskKind::Spot => 3.0,
            TaskKind::Strip => 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_tasks: usize,
    pub task_kind: TaskKind,
    pub lat_min_deg: f64,
    pub lat_max_deg: f64,
    pub lon_min_deg: f64,
    pub lon_max_deg: f64,
    pub n_satellites: usize,
    pub n_stations: usize,
    pub seed: u64,
    pub priority_min: u32,
    pub priority_max: u32,
    pub horizon_s: f64,
    /// Share of tasks requiring a stereo pair.
    pub stereo_fraction: f64,
    pub stereo_beta_deg: f64,
}

impl SynthSpec {
    /// East-Asia box, four reference satellites, two stations, one day.
    pub fn new(n_tasks: usize, task_kind: TaskKind, seed: u64) -> Self {
        SynthSpec {
            n_tasks,
            task_kind,
            lat_min_deg: 20.0,
            lat_max_deg: 45.0,
            lon_min_deg: 100.0,
            lon_max_deg: 145.0,
            n_satellites: 4,
            n_stations: 2,
            seed,
            priority_min: 1,
            priority_max: 5,
            horizon_s: 86_400.0,
            stereo_fraction: 0.1,
            stereo_beta_deg: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error("region too small: placed {placed} distinct targets of {requested}")]
    RegionTooSmall { requested: usize, placed: usize },
}

fn validate(spec: &SynthSpec) -> Result<(), SynthError> {
    let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
    if spec.n_tasks == 0 || spec.n_satellites == 0 {
        return bad("task and satellite counts must be positive");
    }
    if !(spec.horizon_s > 0.0) {
        return bad("horizon must be positive");
    }
    if spec.priority_min == 0 || spec.priority_min > spec.priority_max {
        return bad("priority range must satisfy 1 <= min <= max");
    }
    if !(spec.lat_min_deg <= spec.lat_max_deg && spec.lon_min_deg <= spec.lon_max_deg) {
        return bad("region bounds inverted");
    }
    if spec.lat_min_deg < -90.0 || spec.lat_max_deg > 90.0 {
        return bad("latitude outside [-90, 90]");
    }
    if !(0.0..=1.0).contains(&spec.stereo_fraction) {
        return bad("stereo fraction outside [0, 1]");
    }
    if spec.stereo_fraction > 0.0 && !(spec.stereo_beta_deg > 0.0) {
        return bad("stereo separation must be positive");
    }
    Ok(())
}

/// Orbit of satellite `i` out of `n`: the reference four-satellite pattern
/// (argument of perigee and RAAN at 0, 90, 180, 270 deg) for up to four
/// satellites, an even spread of 360/n beyond that.
pub fn reference_orbit(i: usize, n: usize) -> OrbitElements {
    let step = if n <= 4 { 90.0 } else { 360.0 / n as f64 };
    let angle = (step * i as f64).to_radians();
    OrbitElements {
        semi_major_axis_km: REFERENCE_SEMI_MAJOR_AXIS_KM,
        eccentricity: 0.0,
        inclination_rad: REFERENCE_INCLINATION_DEG.to_radians(),
        arg_perigee_rad: angle,
        raan_rad: angle,
        true_anomaly_at_epoch_rad: 0.0,
        epoch_s: 0.0,
    }
}

fn random_point(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> (i64, i64) {
    let lat = rng.gen_range(spec.lat_min_deg..=spec.lat_max_deg);
    let lon = rng.gen_range(spec.lon_min_deg..=spec.lon_max_deg);
    (
        (lat / TARGET_GRID_DEG).round() as i64,
        (lon / TARGET_GRID_DEG).round() as i64,
    )
}

fn grid_to_geodetic(p: (i64, i64)) -> Geodetic {
    Geodetic {
        lat_rad: (p.0 as f64 * TARGET_GRID_DEG).to_radians(),
        lon_rad: (p.1 as f64 * TARGET_GRID_DEG).to_radians(),
        alt_km: 0.0,
    }
}

/// Geometry-based random instance. Fully determined by `spec`.
pub fn synth_instance(spec: &SynthSpec) -> Result<Instance, SynthError> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let cells = ((spec.lat_max_deg - spec.lat_min_deg) / TARGET_GRID_DEG).floor() as u128 + 1;
    let cells =
        cells * (((spec.lon_max_deg - spec.lon_min_deg) / TARGET_GRID_DEG).floor() as u128 + 1);
    let mut seen = BTreeSet::new();
    let mut targets = Vec::with_capacity(spec.n_tasks);
    let max_draws = 100 * spec.n_tasks + 1000;
    let mut draws = 0;
    while targets.len() < spec.n_tasks && (targets.len() as u128) < cells && draws < max_draws {
        draws += 1;
        let p = random_point(&mut rng, spec);
        if seen.insert(p) {
            targets.push(p);
        }
    }
    if targets.len() < spec.n_tasks {
        return Err(SynthError::RegionTooSmall {
            requested: spec.n_tasks,
            placed: targets.len(),
        });
    }

    let n_stereo = (spec.stereo_fraction * spec.n_tasks as f64).round() as usize;
    let mut order: Vec<usize> = (0..spec.n_tasks).collect();
    order.shuffle(&mut rng);
    let stereo: BTreeSet<usize> = order.into_iter().take(n_stereo).collect();

    let sat_ids: Vec<u32> = (0..spec.n_satellites as u32).collect();
    let tasks: Vec<ObsTask> = targets
        .iter()
        .enumerate()
        .map(|(i, &p)| ObsTask {
            id: i as u32,
            priority_w: rng.gen_range(spec.priority_min..=spec.priority_max),
            imaging: if stereo.contains(&i) {
                Imaging::Stereo {
                    beta_rad: spec.stereo_beta_deg.to_radians(),
                }
            } else {
                Imaging::Mono
            },
            target: grid_to_geodetic(p),
            process_time_s: sat_ids
                .iter()
                .map(|&s| ProcessTime {
                    sat: s,
                    seconds: spec.task_kind.process_time_s(),
                })
                .collect(),
            user_angle_limit_rad: None,
        })
        .collect();

    let stations: Vec<GroundStation> = (0..spec.n_stations as u32)
        .map(|id| {
            let p = random_point(&mut rng, spec);
            GroundStation {
                id,
                location: grid_to_geodetic(p),
                gs_prep_time_s: 60.0,
                min_elevation_rad: 5f64.to_radians(),
            }
        })
        .collect();

    let satellites: Vec<Satellite> = sat_ids
        .iter()
        .map(|&id| Satellite {
            orbit: Some(reference_orbit(id as usize, spec.n_satellites)),
            ..reference_satellite(id)
        })
        .collect();

    // extraction is independent per satellite; results are joined in id order
    let per_sat: Vec<(Vec<Otw>, Vec<Dtw>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = satellites
            .iter()
            .map(|sat| {
                let (tasks, stations) = (&tasks, &stations);
                scope.spawn(move || {
                    let track =
                        SatTrack::new(sat.orbit.as_ref().expect("orbit set"), spec.horizon_s);
                    let otws = tasks
                        .iter()
                        .flat_map(|t| extract_otws_on_track(&track, sat, t))
                        .collect();
                    let dtws = stations
                        .iter()
                        .flat_map(|g| extract_dtws_on_track(&track, sat, g))
                        .collect();
                    (otws, dtws)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("extraction thread panicked"))
            .collect()
    });
    let (otws, dtws): (Vec<Vec<Otw>>, Vec<Vec<Dtw>>) = per_sat.into_iter().unzip();

    Ok(normalize_instance(&Instance::new(
        GlobalParams {
            horizon_s: spec.horizon_s,
        },
        satellites,
        stations,
        tasks,
        otws.into_iter().flatten().collect(),
        dtws.into_iter().flatten().collect(),
    )))
}

/// Parameters of the geometry-free generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub n_tasks: usize,
    pub n_satellites: usize,
    pub max_windows_per_task: usize,
    pub n_stations: usize,
    /// Contacts per (satellite, station) pair.
    pub dtws_per_pair: usize,
    pub horizon_s: f64,
    pub window_len_s: (f64, f64),
    pub process_time_s: (f64, f64),
    pub stereo_fraction: f64,
    pub capacity_units: f64,
    pub seed: u64,
}

impl WindowSpec {
    /// Tiny instance small enough for exhaustive enumeration.
    pub fn tiny(seed: u64) -> Self {
        WindowSpec {
            n_tasks: 6,
            n_satellites: 2,
            max_windows_per_task: 2,
            n_stations: 1,
            dtws_per_pair: 1,
            horizon_s: 600.0,
            window_len_s: (20.0, 90.0),
            process_time_s: (3.0, 15.0),
            stereo_fraction: 0.2,
            capacity_units: 1000.0,
            seed,
        }
    }

    /// Medium instance with `n_tasks` tasks competing on crowded satellites.
    pub fn crowded(n_tasks: usize, seed: u64) -> Self {
        WindowSpec {
            n_tasks,
            n_satellites: 2,
            max_windows_per_task: 3,
            n_stations: 2,
            dtws_per_pair: 2,
            horizon_s: 300.0 * n_tasks as f64,
            window_len_s: (40.0, 160.0),
            process_time_s: (3.0, 15.0),
            stereo_fraction: 0.1,
            capacity_units: 1000.0,
            seed,
        }
    }
}

/// Random instance with windows drawn directly. Each task gets between one
/// and `max_windows_per_task` windows spread over its satellites; windows of
/// one (task, satellite) pair are disjoint. Pitch sweeps from +p to -p.
pub fn synth_window_instance(spec: &WindowSpec) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lim = 30f64.to_radians();
    let satellites: Vec<Satellite> = (0..spec.n_satellites as u32)
        .map(|id| Satellite {
            capacity_units: spec.capacity_units,
            ..reference_satellite(id)
        })
        .collect();
    let stations: Vec<GroundStation> = (0..spec.n_stations as u32)
        .map(|id| GroundStation {
            id,
            location: Geodetic {
                lat_rad: 0.6,
                lon_rad: 2.2,
                alt_km: 0.0,
            },
            gs_prep_time_s: 60.0,
            min_elevation_rad: 5f64.to_radians(),
        })
        .collect();

    let mut tasks = Vec::new();
    let mut otws = Vec::new();
    for v in 0..spec.n_tasks as u32 {
        let stereo = rng.gen_bool(spec.stereo_fraction);
        let n_win = rng.gen_range(1..=spec.max_windows_per_task.max(1));
        let mut per_sat = vec![0u32; spec.n_satellites];
        let mut sats_used = BTreeSet::new();
        let mut taken: Vec<(u32, f64, f64)> = Vec::new();
        for _ in 0..n_win {
            let s = rng.gen_range(0..spec.n_satellites) as u32;
            let len = rng.gen_range(spec.window_len_s.0..=spec.window_len_s.1);
            let open = rng.gen_range(0.0..=(spec.horizon_s - len).max(0.0));
            let close = (open + len).min(spec.horizon_s);
            if taken
                .iter()
                .any(|&(ts, a, b)| ts == s && open <= b && a <= close)
            {
                continue;
            }
            taken.push((s, open, close));
            sats_used.insert(s);
            let p = rng.gen_range(0.1..lim);
            let roll = rng.gen_range(-lim * 0.9..lim * 0.9);
            otws.push(Otw {
                task: v,
                sat: s,
                index: 0,
                t_open_s: open,
                t_close_s: close,
                roll_rad: roll,
                pitch_at_open_rad: p,
                pitch_slope_rad_per_s: -2.0 * p / (close - open),
            });
            per_sat[s as usize] += 1;
        }
        let process = rng.gen_range(spec.process_time_s.0..=spec.process_time_s.1);
        tasks.push(ObsTask {
            id: v,
            priority_w: rng.gen_range(1..=5),
            imaging: if stereo {
                Imaging::Stereo {
                    beta_rad: 15f64.to_radians(),
                }
            } else {
                Imaging::Mono
            },
            target: Geodetic {
                lat_rad: 0.6,
                lon_rad: 2.1,
                alt_km: 0.0,
            },
            process_time_s: sats_used
                .iter()
                .map(|&s| ProcessTime {
                    sat: s,
                    seconds: process,
                })
                .collect(),
            user_angle_limit_rad: None,
        });
    }
    reindex_otws(&mut otws);

    let mut dtws = Vec::new();
    for s in 0..spec.n_satellites as u32 {
        for g in 0..spec.n_stations as u32 {
            for _ in 0..spec.dtws_per_pair {
                let len = rng.gen_range(60.0..=300.0f64).min(spec.horizon_s);
                let open = rng.gen_range(0.0..=(spec.horizon_s - len));
                dtws.push(Dtw {
                    download: g,
                    sat: s,
                    station: g,
                    index: 0,
                    t_open_s: open,
                    t_close_s: open + len,
                });
            }
        }
    }
    dtws.sort_by(|a, b| {
        (a.download, a.sat)
            .cmp(&(b.download, b.sat))
            .then(a.t_open_s.total_cmp(&b.t_open_s))
    });
    let mut prev = None;
    let mut k = 0;
    for d in &mut dtws {
        if prev != Some((d.download, d.sat)) {
            k = 0;
            prev = Some((d.download, d.sat));
        }
        d.index = k;
        k += 1;
    }

    normalize_instance(&Instance::new(
        GlobalParams {
            horizon_s: spec.horizon_s,
        },
        satellites,
        stations,
        tasks,
        otws,
        dtws,
    ))
}

/// Assigns contiguous indices per (task, satellite) in order of opening time.
fn reindex_otws(otws: &mut [Otw]) {
    otws.sort_by(|a, b| {
        (a.task, a.sat)
            .cmp(&(b.task, b.sat))
            .then(a.t_open_s.total_cmp(&b.t_open_s))
    });
    let mut prev = None;
    let mut k = 0;
    for w in otws.iter_mut() {
        if prev != Some((w.task, w.sat)) {
            k = 0;
            prev = Some((w.task, w.sat));
        }
        w.index = k;
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::check_instance;

    #[test]
    fn tiny_instances_are_valid_and_small() {
        for seed in 0..50 {
            let inst = synth_window_instance(&WindowSpec::tiny(seed));
            assert!(
                check_instance(&inst).is_empty(),
                "{:?}",
                check_instance(&inst)
            );
            assert!(inst.tasks.len() <= 6 && inst.satellites.len() <= 2 && inst.dtws.len() <= 2);
            for t in &inst.tasks {
                assert!(inst.otws_of_task(t.id).len() <= 4);
            }
        }
    }

    #[test]
    fn window_generator_is_deterministic() {
        let a = synth_window_instance(&WindowSpec::crowded(20, 9));
        let b = synth_window_instance(&WindowSpec::crowded(20, 9));
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = SynthSpec::new(0, TaskKind::Spot, 1);
        assert!(matches!(
            synth_instance(&s),
            Err(SynthError::InvalidSpec(_))
        ));
        s.n_tasks = 3;
        s.priority_min = 0;
        assert!(matches!(
            synth_instance(&s),
            Err(SynthError::InvalidSpec(_))
        ));
    }

    #[test]
    fn degenerate_region_reports_too_small() {
        let mut s = SynthSpec::new(3, TaskKind::Spot, 1);
        s.lat_max_deg = s.lat_min_deg;
        s.lon_max_deg = s.lon_min_deg;
        assert_eq!(
            synth_instance(&s),
            Err(SynthError::RegionTooSmall {
                requested: 3,
                placed: 1
            })
        );
    }

    #[test]
    fn reference_pattern_for_four_satellites() {
        for i in 0..4 {
            let o = reference_orbit(i, 4);
            assert_eq!(o.arg_perigee_rad, (90.0 * i as f64).to_radians());
            assert_eq!(o.raan_rad, o.arg_perigee_rad);
        }
    }
}
