//! Instance generation from orbital geometry.
//!
//! Satellites follow two-body orbits over a spherical Earth rotating at a
//! constant rate. Observation windows use a constant roll and a linear pitch
//! model per window; download windows are elevation-mask contacts.

mod geometry;
mod orbit;
mod synth;
mod windows;

pub use geometry::{
    ecef_to_eci, elevation_from, geodetic_to_ecef, geodetic_to_eci, pointing_angles, pointing_to,
    NotVisible, PointingSample,
};
pub use orbit::{
    add, cross, dot, kepler_propagate, norm, orbital_period_s, scale, specific_energy, sub, unit,
    EciState, Vec3, EARTH_ROTATION_RAD_S, MU_EARTH_KM3_S2,
};
pub use synth::{
    reference_orbit, synth_instance, synth_window_instance, SynthError, SynthSpec, TaskKind,
    WindowSpec, REFERENCE_INCLINATION_DEG, REFERENCE_SEMI_MAJOR_AXIS_KM,
};
pub use windows::{
    elevation_at, extract_dtws, extract_dtws_on_track, extract_otws, extract_otws_on_track,
    pointing_at_time, SatTrack, REFINE_TOL_S, SAMPLE_STEP_S,
};
