//! Target-pointing geometry on a spherical, uniformly rotating Earth.
//!
//! Attitude is decomposed in the local orbital frame of the satellite:
//! nadir, orbit normal `h = r x v`, and the along-track axis `h x r`. Roll is
//! the rotation about the along-track axis (positive toward `h`), pitch the
//! subsequent rotation toward the along-track axis (positive ahead of the
//! satellite). The boresight is nadir when both are zero.

use super::orbit::{cross, dot, norm, scale, sub, unit, EciState, Vec3, EARTH_ROTATION_RAD_S};
use crate::domain::{Geodetic, EARTH_RADIUS_KM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointingSample {
    pub t_s: f64,
    pub roll_rad: f64,
    pub pitch_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("target not visible: below the local horizon")]
pub struct NotVisible;

/// Earth-fixed position of a geodetic point, km.
pub fn geodetic_to_ecef(g: &Geodetic) -> Vec3 {
    let r = EARTH_RADIUS_KM + g.alt_km;
    let (sl, cl) = g.lat_rad.sin_cos();
    let (so, co) = g.lon_rad.sin_cos();
    [r * cl * co, r * cl * so, r * sl]
}

/// Rotates an Earth-fixed vector into the inertial frame at `t_s`. The frames
/// coincide at t = 0.
pub fn ecef_to_eci(p: Vec3, t_s: f64) -> Vec3 {
    let (s, c) = (EARTH_ROTATION_RAD_S * t_s).sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

pub fn geodetic_to_eci(g: &Geodetic, t_s: f64) -> Vec3 {
    ecef_to_eci(geodetic_to_ecef(g), t_s)
}

/// Roll and pitch that point the boresight from `sat` at the inertial
/// position `target`.
pub fn pointing_to(sat: &EciState, target: Vec3) -> Result<PointingSample, NotVisible> {
    let r = sat.position_km;
    // the satellite must be above the target's horizon plane
    if dot(sub(r, target), target) <= 0.0 {
        return Err(NotVisible);
    }
    let los = sub(target, r);
    let r_hat = unit(r);
    let h_hat = unit(cross(r, sat.velocity_km_s));
    let along = cross(h_hat, r_hat);
    let nadir = scale(r_hat, -1.0);
    let x = dot(los, along);
    let y = dot(los, h_hat);
    let z = dot(los, nadir);
    Ok(PointingSample {
        t_s: sat.t_s,
        roll_rad: y.atan2(z),
        pitch_rad: x.atan2((y * y + z * z).sqrt()),
    })
}

pub fn pointing_angles(
    sat: &EciState,
    target: &Geodetic,
    t_s: f64,
) -> Result<PointingSample, NotVisible> {
    let mut sample = pointing_to(sat, geodetic_to_eci(target, t_s))?;
    sample.t_s = t_s;
    Ok(sample)
}

/// Elevation of the satellite above the station's horizon, rad.
pub fn elevation_from(station_eci: Vec3, sat_position: Vec3) -> f64 {
    let d = sub(sat_position, station_eci);
    (dot(d, station_eci) / (norm(d) * norm(station_eci)))
        .clamp(-1.0, 1.0)
        .asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::OrbitElements;
    use crate::scengen::orbit::{add, kepler_propagate};

    fn equatorial_state() -> EciState {
        // equatorial prograde circular orbit over lon 0 at t = 0
        let el = OrbitElements {
            semi_major_axis_km: 6871.0,
            eccentricity: 0.0,
            inclination_rad: 0.0,
            arg_perigee_rad: 0.0,
            raan_rad: 0.0,
            true_anomaly_at_epoch_rad: 0.0,
            epoch_s: 0.0,
        };
        kepler_propagate(&el, 0.0)
    }

    #[test]
    fn nadir_target_has_zero_angles() {
        let s = equatorial_state();
        let g = Geodetic {
            lat_rad: 0.0,
            lon_rad: 0.0,
            alt_km: 0.0,
        };
        let p = pointing_angles(&s, &g, 0.0).unwrap();
        assert!(p.roll_rad.abs() < 1e-12 && p.pitch_rad.abs() < 1e-12);
    }

    #[test]
    fn target_ahead_on_track_has_positive_pitch_only() {
        let s = equatorial_state();
        // velocity is +y, so the ground track heads to positive longitude
        let g = Geodetic {
            lat_rad: 0.0,
            lon_rad: 1f64.to_radians(),
            alt_km: 0.0,
        };
        let p = pointing_angles(&s, &g, 0.0).unwrap();
        assert!(p.roll_rad.abs() < 1e-12);
        assert!(p.pitch_rad > 0.0);
        let behind = Geodetic {
            lon_rad: -1f64.to_radians(),
            ..g
        };
        assert!(pointing_angles(&s, &behind, 0.0).unwrap().pitch_rad < 0.0);
    }

    #[test]
    fn target_toward_orbit_normal_has_positive_roll() {
        let s = equatorial_state();
        // orbit normal is +z (north)
        let g = Geodetic {
            lat_rad: 1f64.to_radians(),
            lon_rad: 0.0,
            alt_km: 0.0,
        };
        let p = pointing_angles(&s, &g, 0.0).unwrap();
        assert!(p.roll_rad > 0.0);
        assert!(p.pitch_rad.abs() < 1e-12);
    }

    #[test]
    fn far_side_target_is_not_visible() {
        let s = equatorial_state();
        let g = Geodetic {
            lat_rad: 0.0,
            lon_rad: std::f64::consts::PI,
            alt_km: 0.0,
        };
        assert_eq!(pointing_angles(&s, &g, 0.0), Err(NotVisible));
    }

    #[test]
    fn zenith_pass_has_ninety_degree_elevation() {
        let st = geodetic_to_ecef(&Geodetic {
            lat_rad: 0.3,
            lon_rad: 0.2,
            alt_km: 0.0,
        });
        let above = add(st, scale(unit(st), 500.0));
        assert!((elevation_from(st, above) - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }
}
