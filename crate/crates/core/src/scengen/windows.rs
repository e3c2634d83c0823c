//! Extraction of observation and download time windows by dense sampling.
//!
//! Visibility is sampled every [`SAMPLE_STEP_S`] seconds and every boundary is
//! refined by bisection to [`REFINE_TOL_S`]. Samples that are provably far
//! from the target (the central angle cannot shrink below the visibility cone
//! before the next evaluation) are skipped.

use super::geometry::{elevation_from, geodetic_to_ecef, pointing_to, PointingSample};
use super::orbit::{
    dot, kepler_propagate, norm, EciState, Vec3, EARTH_ROTATION_RAD_S, MU_EARTH_KM3_S2,
};
use std::f64::consts::FRAC_PI_2;

use crate::domain::{Dtw, GroundStation, ObsTask, OrbitElements, Otw, Satellite};

pub const SAMPLE_STEP_S: f64 = 1.0;
pub const REFINE_TOL_S: f64 = 0.01;
/// Windows shorter than this are dropped as numerically empty.
const MIN_WINDOW_S: f64 = 1e-3;
/// Clearance kept between the linear pitch model and the pitch limit, so the
/// window survives rounding of the instance file.
const PITCH_MARGIN_RAD: f64 = 1e-5;

/// Satellite states sampled on the extraction grid, shared by all targets.
pub struct SatTrack {
    orbit: OrbitElements,
    horizon_s: f64,
    times: Vec<f64>,
    states: Vec<EciState>,
    /// Upper bound on how fast the sub-satellite point can approach any
    /// Earth-fixed point, rad/s.
    max_closing_rate: f64,
    apogee_km: f64,
}

impl SatTrack {
    pub fn new(orbit: &OrbitElements, horizon_s: f64) -> Self {
        let n = (horizon_s / SAMPLE_STEP_S).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * SAMPLE_STEP_S).collect();
        if times.last().is_some_and(|&t| t < horizon_s) {
            times.push(horizon_s);
        }
        let states = times.iter().map(|&t| kepler_propagate(orbit, t)).collect();
        let a = orbit.semi_major_axis_km;
        let e = orbit.eccentricity;
        let mean_motion = (MU_EARTH_KM3_S2 / a.powi(3)).sqrt();
        let max_orbit_rate = mean_motion * (1.0 + e).powi(2) / (1.0 - e * e).powf(1.5);
        SatTrack {
            orbit: orbit.clone(),
            horizon_s,
            times,
            states,
            max_closing_rate: (max_orbit_rate + EARTH_ROTATION_RAD_S) * 1.01,
            apogee_km: a * (1.0 + e),
        }
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_s
    }

    pub fn state_at(&self, t_s: f64) -> EciState {
        kepler_propagate(&self.orbit, t_s)
    }

    /// Runs of grid samples satisfying `inside`, as (first, last) sample
    /// indices. `ground` is the Earth-fixed point of interest and
    /// `cone_rad` the largest central angle at which `inside` can hold.
    fn inside_runs(
        &self,
        ground: Vec3,
        cone_rad: f64,
        mut inside: impl FnMut(&EciState, Vec3) -> bool,
    ) -> Vec<(usize, usize)> {
        let ground_unit = {
            let n = norm(ground);
            [ground[0] / n, ground[1] / n, ground[2] / n]
        };
        let mut runs = Vec::new();
        let mut open: Option<usize> = None;
        let mut i = 0;
        while i < self.times.len() {
            let t = self.times[i];
            let s = &self.states[i];
            let (sn, cs) = (EARTH_ROTATION_RAD_S * t).sin_cos();
            let g = [
                cs * ground_unit[0] - sn * ground_unit[1],
                sn * ground_unit[0] + cs * ground_unit[1],
                ground_unit[2],
            ];
            let cos_c = (dot(s.position_km, g) / norm(s.position_km)).clamp(-1.0, 1.0);
            let central = cos_c.acos();
            let mut step = 1;
            let is_in = if central > cone_rad {
                let slack = (central - cone_rad) / (self.max_closing_rate * SAMPLE_STEP_S);
                step = (slack.floor() as usize).max(1);
                false
            } else {
                let r = norm(ground);
                inside(s, [g[0] * r, g[1] * r, g[2] * r])
            };
            match (is_in, open) {
                (true, None) => open = Some(i),
                (false, Some(start)) => {
                    runs.push((start, i - 1));
                    open = None;
                }
                _ => {}
            }
            if is_in {
                step = 1;
            }
            i += step;
        }
        if let Some(start) = open {
            runs.push((start, self.times.len() - 1));
        }
        runs
    }

    /// Refined [open, close] of a sampled run, using `inside_at(t)`.
    fn refine_run(&self, run: (usize, usize), inside_at: impl Fn(f64) -> bool) -> (f64, f64) {
        let (i0, i1) = run;
        let open = if i0 == 0 {
            self.times[0]
        } else {
            bisect_boundary(self.times[i0 - 1], self.times[i0], &inside_at)
        };
        let close = if i1 + 1 >= self.times.len() {
            self.times[i1]
        } else {
            bisect_boundary(self.times[i1 + 1], self.times[i1], &inside_at)
        };
        (open, close)
    }
}

/// Bisects between an `outside` time and an `inside` time (in either order)
/// and returns the inside-side end once the bracket is below half the
/// refinement tolerance.
fn bisect_boundary(mut outside: f64, mut inside: f64, pred: &impl Fn(f64) -> bool) -> f64 {
    while (inside - outside).abs() > REFINE_TOL_S / 2.0 {
        let mid = 0.5 * (outside + inside);
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

fn horizon_cone(radius_km: f64, apogee_km: f64, min_elevation: f64) -> f64 {
    // central angle at which a point at `radius_km` sees the satellite at
    // `min_elevation` (zero elevation for pointing visibility)
    ((radius_km / apogee_km) * min_elevation.cos()).acos() - min_elevation
}

/// Largest central angle reachable with the boresight inside the roll/pitch
/// box. The off-nadir angle satisfies cos(eta) = cos(roll) cos(pitch).
fn pointing_cone(radius_km: f64, apogee_km: f64, roll_lim: f64, pitch_lim: f64) -> f64 {
    let horizon = horizon_cone(radius_km, apogee_km, 0.0);
    let eta = (roll_lim.min(FRAC_PI_2).cos() * pitch_lim.min(FRAC_PI_2).cos()).acos();
    let s = apogee_km / radius_km * eta.sin();
    if s >= 1.0 {
        horizon
    } else {
        (s.asin() - eta).min(horizon)
    }
}

/// Attitude at `t` for pointing at the Earth-fixed `ground` point.
pub fn pointing_at_time(track: &SatTrack, ground: Vec3, t_s: f64) -> Option<PointingSample> {
    let s = track.state_at(t_s);
    let target = super::geometry::ecef_to_eci(ground, t_s);
    pointing_to(&s, target).ok()
}

/// Least-squares line through (t, pitch) samples, as (pitch at t0, slope).
fn fit_line(samples: &[(f64, f64)], t0: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let mt = samples.iter().map(|s| s.0 - t0).sum::<f64>() / n;
    let mp = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - t0 - mt).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - t0 - mt) * (s.1 - mp)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (mp - slope * mt, slope)
}

/// Observation windows of `task` for `sat` over `[0, horizon_s]`. Empty when
/// the satellite carries no orbit.
pub fn extract_otws(sat: &Satellite, task: &ObsTask, horizon_s: f64) -> Vec<Otw> {
    match &sat.orbit {
        Some(orbit) => extract_otws_on_track(&SatTrack::new(orbit, horizon_s), sat, task),
        None => Vec::new(),
    }
}

pub fn extract_otws_on_track(track: &SatTrack, sat: &Satellite, task: &ObsTask) -> Vec<Otw> {
    let (roll_lim, pitch_lim) = match task.user_angle_limit_rad {
        Some(a) => (sat.roll_limit_rad.min(a), sat.pitch_limit_rad.min(a)),
        None => (sat.roll_limit_rad, sat.pitch_limit_rad),
    };
    let ground = geodetic_to_ecef(&task.target);
    let cone = pointing_cone(norm(ground), track.apogee_km, roll_lim, pitch_lim) + 1e-6;
    let within =
        |p: &PointingSample| p.roll_rad.abs() <= roll_lim && p.pitch_rad.abs() <= pitch_lim;
    let runs = track.inside_runs(ground, cone, |s, g| {
        pointing_to(s, g).map(|p| within(&p)).unwrap_or(false)
    });
    let inside_at = |t: f64| pointing_at_time(track, ground, t).is_some_and(|p| within(&p));

    let mut out = Vec::new();
    for run in runs {
        let (a, b) = track.refine_run(run, inside_at);
        if b - a < MIN_WINDOW_S {
            continue;
        }
        let n = (((b - a) / SAMPLE_STEP_S).ceil() as usize + 1).max(3);
        let samples: Vec<PointingSample> = (0..n)
            .filter_map(|j| {
                let t = a + (b - a) * j as f64 / (n - 1) as f64;
                pointing_at_time(track, ground, t)
            })
            .collect();
        if samples.len() < 2 {
            continue;
        }
        let pts: Vec<(f64, f64)> = samples.iter().map(|p| (p.t_s, p.pitch_rad)).collect();
        let (p0, slope) = fit_line(&pts, a);

        let first = samples[0];
        let last = samples[samples.len() - 1];
        let roll = if first.pitch_rad * last.pitch_rad < 0.0 {
            let (mut lo, mut hi) = (first.t_s, last.t_s);
            let sign_lo = first.pitch_rad.signum();
            while hi - lo > 1e-3 {
                let mid = 0.5 * (lo + hi);
                match pointing_at_time(track, ground, mid) {
                    Some(p) if p.pitch_rad.signum() == sign_lo => lo = mid,
                    _ => hi = mid,
                }
            }
            pointing_at_time(track, ground, 0.5 * (lo + hi))
                .map(|p| p.roll_rad)
                .unwrap_or(first.roll_rad)
        } else {
            samples
                .iter()
                .min_by(|x, y| x.pitch_rad.abs().total_cmp(&y.pitch_rad.abs()))
                .map(|p| p.roll_rad)
                .unwrap_or(first.roll_rad)
        };
        let roll = roll.clamp(-roll_lim, roll_lim);

        // keep only the part of the window where the linear model is in limits
        let pitch_lim = pitch_lim - PITCH_MARGIN_RAD;
        let (mut lo, mut hi) = (a, b);
        if slope != 0.0 {
            let t_plus = a + (pitch_lim - p0) / slope;
            let t_minus = a + (-pitch_lim - p0) / slope;
            lo = lo.max(t_plus.min(t_minus));
            hi = hi.min(t_plus.max(t_minus));
        } else if p0.abs() > pitch_lim {
            continue;
        }
        if hi - lo < MIN_WINDOW_S {
            continue;
        }
        let pitch_open = (p0 + slope * (lo - a)).clamp(-pitch_lim, pitch_lim);
        out.push(Otw {
            task: task.id,
            sat: sat.id,
            index: out.len() as u32,
            t_open_s: lo,
            t_close_s: hi,
            roll_rad: roll,
            pitch_at_open_rad: pitch_open,
            pitch_slope_rad_per_s: slope,
        });
    }
    out
}

/// Contacts of `sat` with `station` above the station's elevation mask. The
/// download-opportunity id is the station id.
pub fn extract_dtws(sat: &Satellite, station: &GroundStation, horizon_s: f64) -> Vec<Dtw> {
    match &sat.orbit {
        Some(orbit) => extract_dtws_on_track(&SatTrack::new(orbit, horizon_s), sat, station),
        None => Vec::new(),
    }
}

pub fn elevation_at(track: &SatTrack, station: &GroundStation, t_s: f64) -> f64 {
    let st = super::geometry::ecef_to_eci(geodetic_to_ecef(&station.location), t_s);
    elevation_from(st, track.state_at(t_s).position_km)
}

pub fn extract_dtws_on_track(
    track: &SatTrack,
    sat: &Satellite,
    station: &GroundStation,
) -> Vec<Dtw> {
    let ground = geodetic_to_ecef(&station.location);
    let mask = station.min_elevation_rad;
    if mask >= std::f64::consts::FRAC_PI_2 {
        return Vec::new();
    }
    let cone = horizon_cone(norm(ground), track.apogee_km, mask.max(0.0)) + 1e-6;
    let runs = track.inside_runs(ground, cone, |s, g| {
        elevation_from(g, s.position_km) >= mask
    });
    let mut out = Vec::new();
    for run in runs {
        let (a, b) = track.refine_run(run, |t| elevation_at(track, station, t) >= mask);
        if b - a < MIN_WINDOW_S {
            continue;
        }
        out.push(Dtw {
            download: station.id,
            sat: sat.id,
            station: station.id,
            index: out.len() as u32,
            t_open_s: a,
            t_close_s: b,
        });
    }
    out
}
