//! Two-body propagation and the small amount of vector algebra it needs.

use crate::domain::OrbitElements;

/// Earth gravitational parameter, km^3/s^2.
pub const MU_EARTH_KM3_S2: f64 = 398_600.4418;
/// Sidereal rotation rate of the Earth, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;

pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub fn unit(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Inertial (Earth-centred, non-rotating) state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EciState {
    pub position_km: Vec3,
    pub velocity_km_s: Vec3,
    pub t_s: f64,
}

pub fn orbital_period_s(el: &OrbitElements) -> f64 {
    2.0 * std::f64::consts::PI * (el.semi_major_axis_km.powi(3) / MU_EARTH_KM3_S2).sqrt()
}

fn solve_kepler(mean_anomaly: f64, e: f64) -> f64 {
    let mut ecc = if e < 0.8 {
        mean_anomaly
    } else {
        std::f64::consts::PI
    };
    for _ in 0..50 {
        let f = ecc - e * ecc.sin() - mean_anomaly;
        let step = f / (1.0 - e * ecc.cos());
        ecc -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    ecc
}

/// Keplerian state at time `t_s` (seconds on the same clock as `el.epoch_s`).
pub fn kepler_propagate(el: &OrbitElements, t_s: f64) -> EciState {
    let a = el.semi_major_axis_km;
    let e = el.eccentricity;
    let n = (MU_EARTH_KM3_S2 / (a * a * a)).sqrt();

    let nu0 = el.true_anomaly_at_epoch_rad;
    let ecc0 = 2.0 * (((1.0 - e) / (1.0 + e)).sqrt() * (nu0 / 2.0).tan()).atan();
    let m0 = ecc0 - e * ecc0.sin();
    let m = (m0 + n * (t_s - el.epoch_s)).rem_euclid(2.0 * std::f64::consts::PI);
    let ecc = solve_kepler(m, e);
    let nu =
        2.0 * ((1.0 + e).sqrt() * (ecc / 2.0).sin()).atan2((1.0 - e).sqrt() * (ecc / 2.0).cos());

    let r = a * (1.0 - e * ecc.cos());
    let p = a * (1.0 - e * e);
    let vk = (MU_EARTH_KM3_S2 / p).sqrt();
    let r_pf = [r * nu.cos(), r * nu.sin()];
    let v_pf = [-vk * nu.sin(), vk * (e + nu.cos())];

    let (so, co) = el.raan_rad.sin_cos();
    let (sw, cw) = el.arg_perigee_rad.sin_cos();
    let (si, ci) = el.inclination_rad.sin_cos();
    let q = [
        [co * cw - so * sw * ci, -co * sw - so * cw * ci],
        [so * cw + co * sw * ci, -so * sw + co * cw * ci],
        [sw * si, cw * si],
    ];
    let rot = |v: [f64; 2]| -> Vec3 {
        [
            q[0][0] * v[0] + q[0][1] * v[1],
            q[1][0] * v[0] + q[1][1] * v[1],
            q[2][0] * v[0] + q[2][1] * v[1],
        ]
    };
    EciState {
        position_km: rot(r_pf),
        velocity_km_s: rot(v_pf),
        t_s,
    }
}

/// Specific orbital energy v^2/2 - mu/r.
pub fn specific_energy(s: &EciState) -> f64 {
    let v = norm(s.velocity_km_s);
    v * v / 2.0 - MU_EARTH_KM3_S2 / norm(s.position_km)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn table2_orbit(arg_deg: f64) -> OrbitElements {
        OrbitElements {
            semi_major_axis_km: 6871.0,
            eccentricity: 0.0,
            inclination_rad: 97.3f64.to_radians(),
            arg_perigee_rad: arg_deg.to_radians(),
            raan_rad: arg_deg.to_radians(),
            true_anomaly_at_epoch_rad: 0.0,
            epoch_s: 0.0,
        }
    }

    #[test]
    fn period_follows_keplers_third_law() {
        let p = orbital_period_s(&table2_orbit(0.0));
        assert!((p - 5668.0).abs() < 1.0, "{p}");
        let s0 = kepler_propagate(&table2_orbit(0.0), 0.0);
        let s1 = kepler_propagate(&table2_orbit(0.0), p);
        assert!(norm(sub(s0.position_km, s1.position_km)) < 1e-6);
    }

    #[test]
    fn epoch_state_is_reproduced_at_t0() {
        let el = table2_orbit(90.0);
        let s = kepler_propagate(&el, 0.0);
        assert!((norm(s.position_km) - 6871.0).abs() < 1e-9);
        // perigee direction for argument 90 deg and RAAN 90 deg
        let (so, co) = el.raan_rad.sin_cos();
        let (si, ci) = el.inclination_rad.sin_cos();
        let expected = [-so * ci * 6871.0, co * ci * 6871.0, si * 6871.0];
        assert!(norm(sub(s.position_km, expected)) < 1e-6);
    }

    #[test]
    fn energy_is_conserved_on_eccentric_orbit() {
        let el = OrbitElements {
            eccentricity: 0.1,
            semi_major_axis_km: 8000.0,
            true_anomaly_at_epoch_rad: 0.3,
            ..table2_orbit(30.0)
        };
        let e0 = specific_energy(&kepler_propagate(&el, 0.0));
        for k in 1..20 {
            let e = specific_energy(&kepler_propagate(&el, k as f64 * 517.0));
            assert!((e - e0).abs() < 1e-9 * e0.abs());
        }
        assert!((e0 + MU_EARTH_KM3_S2 / (2.0 * 8000.0)).abs() < 1e-9);
    }
}
