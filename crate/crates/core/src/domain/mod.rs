//! Problem and solution data model.
//!
//! An [`Instance`] is the immutable description of one scheduling horizon:
//! satellites, ground stations, observation tasks and the precomputed
//! observation/download time windows. A [`Schedule`] is a candidate answer.
//! All times are seconds from the start of the horizon, all angles radians,
//! data amounts abstract units.

mod check;
mod io;

pub use check::{check_instance, Defect};
pub use io::{
    normalize_instance, parse_instance, parse_schedule, round_sig, write_instance, write_schedule,
    ParseError, FILE_SIG_DIGITS,
};

use serde::{Deserialize, Serialize};

pub type SatId = u32;
pub type TaskId = u32;
pub type StationId = u32;
pub type DownloadId = u32;

/// Mean Earth radius of the spherical model, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub horizon_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitElements {
    pub semi_major_axis_km: f64,
    pub eccentricity: f64,
    pub inclination_rad: f64,
    pub arg_perigee_rad: f64,
    pub raan_rad: f64,
    pub true_anomaly_at_epoch_rad: f64,
    pub epoch_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Satellite {
    pub id: SatId,
    pub roll_limit_rad: f64,
    pub pitch_limit_rad: f64,
    pub slew_rate_rad_per_s: f64,
    /// Settling time after every attitude maneuver.
    pub stab_time_s: f64,
    /// Satellite-side preparation between two download contacts.
    pub sat_prep_time_s: f64,
    #[serde(default = "default_capacity")]
    pub capacity_units: f64,
    #[serde(default)]
    pub initial_data_units: f64,
    #[serde(default = "default_acq_rate")]
    pub acq_rate_units_per_s: f64,
    pub down_rate_units_per_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitElements>,
}

fn default_capacity() -> f64 {
    1000.0
}

fn default_acq_rate() -> f64 {
    1.0
}

/// Spherical-Earth geodetic position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodetic {
    pub lat_rad: f64,
    pub lon_rad: f64,
    #[serde(default)]
    pub alt_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub id: StationId,
    pub location: Geodetic,
    pub gs_prep_time_s: f64,
    #[serde(default = "default_min_elevation")]
    pub min_elevation_rad: f64,
}

fn default_min_elevation() -> f64 {
    5f64.to_radians()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "imaging", rename_all = "lowercase")]
pub enum Imaging {
    Mono,
    /// Two images whose pitch angles differ by at least `beta_rad`.
    Stereo {
        beta_rad: f64,
    },
}

impl Imaging {
    pub fn components(&self) -> u8 {
        match self {
            Imaging::Mono => 1,
            Imaging::Stereo { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessTime {
    pub sat: SatId,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsTask {
    pub id: TaskId,
    pub priority_w: u32,
    #[serde(flatten)]
    pub imaging: Imaging,
    pub target: Geodetic,
    pub process_time_s: Vec<ProcessTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_angle_limit_rad: Option<f64>,
}

impl ObsTask {
    pub fn process_time(&self, sat: SatId) -> Option<f64> {
        self.process_time_s
            .iter()
            .find(|p| p.sat == sat)
            .map(|p| p.seconds)
    }

    pub fn is_stereo(&self) -> bool {
        matches!(self.imaging, Imaging::Stereo { .. })
    }

    pub fn stereo_beta(&self) -> Option<f64> {
        match self.imaging {
            Imaging::Stereo { beta_rad } => Some(beta_rad),
            Imaging::Mono => None,
        }
    }
}

/// Key of an observation time window: (task, satellite, index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OtwKey {
    pub task: TaskId,
    pub sat: SatId,
    pub index: u32,
}

/// Observation time window with the constant-roll / linear-pitch attitude model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Otw {
    pub task: TaskId,
    pub sat: SatId,
    pub index: u32,
    pub t_open_s: f64,
    pub t_close_s: f64,
    pub roll_rad: f64,
    pub pitch_at_open_rad: f64,
    pub pitch_slope_rad_per_s: f64,
}

impl Otw {
    pub fn key(&self) -> OtwKey {
        OtwKey {
            task: self.task,
            sat: self.sat,
            index: self.index,
        }
    }

    pub fn len_s(&self) -> f64 {
        self.t_close_s - self.t_open_s
    }

    /// Pitch required to point at the target when imaging starts at `t_s`.
    pub fn pitch_at(&self, t_s: f64) -> f64 {
        self.pitch_at_open_rad + self.pitch_slope_rad_per_s * (t_s - self.t_open_s)
    }

    /// (min, max) pitch over the window.
    pub fn pitch_range(&self) -> (f64, f64) {
        let a = self.pitch_at(self.t_open_s);
        let b = self.pitch_at(self.t_close_s);
        (a.min(b), a.max(b))
    }
}

/// Key of a download time window: (download opportunity, satellite, index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DtwKey {
    pub download: DownloadId,
    pub sat: SatId,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dtw {
    pub download: DownloadId,
    pub sat: SatId,
    pub station: StationId,
    pub index: u32,
    pub t_open_s: f64,
    pub t_close_s: f64,
}

impl Dtw {
    pub fn key(&self) -> DtwKey {
        DtwKey {
            download: self.download,
            sat: self.sat,
            index: self.index,
        }
    }

    pub fn len_s(&self) -> f64 {
        self.t_close_s - self.t_open_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub params: GlobalParams,
    pub satellites: Vec<Satellite>,
    pub stations: Vec<GroundStation>,
    pub tasks: Vec<ObsTask>,
    pub otws: Vec<Otw>,
    pub dtws: Vec<Dtw>,
}

impl Instance {
    /// Assembles an instance with every collection in canonical order.
    pub fn new(
        params: GlobalParams,
        satellites: Vec<Satellite>,
        stations: Vec<GroundStation>,
        tasks: Vec<ObsTask>,
        otws: Vec<Otw>,
        dtws: Vec<Dtw>,
    ) -> Self {
        let mut inst = Instance {
            params,
            satellites,
            stations,
            tasks,
            otws,
            dtws,
        };
        inst.canonicalize();
        inst
    }

    pub fn canonicalize(&mut self) {
        self.satellites.sort_by_key(|s| s.id);
        self.stations.sort_by_key(|g| g.id);
        self.tasks.sort_by_key(|t| t.id);
        for task in &mut self.tasks {
            task.process_time_s.sort_by_key(|p| p.sat);
        }
        self.otws.sort_by_key(|w| w.key());
        self.dtws.sort_by_key(|w| w.key());
    }

    pub fn satellite(&self, id: SatId) -> Option<&Satellite> {
        self.satellites
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| &self.satellites[i])
    }

    pub fn station(&self, id: StationId) -> Option<&GroundStation> {
        self.stations
            .binary_search_by_key(&id, |g| g.id)
            .ok()
            .map(|i| &self.stations[i])
    }

    pub fn task(&self, id: TaskId) -> Option<&ObsTask> {
        self.tasks
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| &self.tasks[i])
    }

    pub fn otw(&self, key: OtwKey) -> Option<&Otw> {
        self.otws
            .binary_search_by_key(&key, |w| w.key())
            .ok()
            .map(|i| &self.otws[i])
    }

    pub fn otw_position(&self, key: OtwKey) -> Option<usize> {
        self.otws.binary_search_by_key(&key, |w| w.key()).ok()
    }

    pub fn dtw(&self, key: DtwKey) -> Option<&Dtw> {
        self.dtws
            .binary_search_by_key(&key, |w| w.key())
            .ok()
            .map(|i| &self.dtws[i])
    }

    pub fn dtw_position(&self, key: DtwKey) -> Option<usize> {
        self.dtws.binary_search_by_key(&key, |w| w.key()).ok()
    }

    /// Roll and pitch limits for `task` on `sat`: the satellite limits, tightened
    /// by the user's angle limit when one is given.
    pub fn angle_limits(&self, task: &ObsTask, sat: &Satellite) -> (f64, f64) {
        match task.user_angle_limit_rad {
            Some(a) => (sat.roll_limit_rad.min(a), sat.pitch_limit_rad.min(a)),
            None => (sat.roll_limit_rad, sat.pitch_limit_rad),
        }
    }

    /// Windows of one (task, satellite) key group, i.e. the index set K_vs.
    pub fn otws_of(&self, task: TaskId, sat: SatId) -> &[Otw] {
        let lo = self.otws.partition_point(|w| (w.task, w.sat) < (task, sat));
        let hi = self
            .otws
            .partition_point(|w| (w.task, w.sat) <= (task, sat));
        &self.otws[lo..hi]
    }

    /// Windows of one task across all satellites.
    pub fn otws_of_task(&self, task: TaskId) -> &[Otw] {
        let lo = self.otws.partition_point(|w| w.task < task);
        let hi = self.otws.partition_point(|w| w.task <= task);
        &self.otws[lo..hi]
    }

    /// Download windows of one (download, satellite) key group, i.e. L_ds.
    pub fn dtws_of(&self, download: DownloadId, sat: SatId) -> &[Dtw] {
        let lo = self
            .dtws
            .partition_point(|w| (w.download, w.sat) < (download, sat));
        let hi = self
            .dtws
            .partition_point(|w| (w.download, w.sat) <= (download, sat));
        &self.dtws[lo..hi]
    }

    /// Sum of priorities over all tasks, an upper bound on any objective.
    pub fn total_priority(&self) -> u64 {
        self.tasks.iter().map(|t| t.priority_w as u64).sum()
    }
}

/// One executed image. Stereo tasks contribute two of these (components 1 and 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledObservation {
    pub task: TaskId,
    pub component: u8,
    pub sat: SatId,
    pub window: u32,
    pub t_start_s: f64,
    pub pitch_rad: f64,
}

impl ScheduledObservation {
    pub fn otw_key(&self) -> OtwKey {
        OtwKey {
            task: self.task,
            sat: self.sat,
            index: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledDownload {
    pub download: DownloadId,
    pub sat: SatId,
    pub window: u32,
    pub t_start_s: f64,
    pub t_end_s: f64,
}

impl ScheduledDownload {
    pub fn dtw_key(&self) -> DtwKey {
        DtwKey {
            download: self.download,
            sat: self.sat,
            index: self.window,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub observations: Vec<ScheduledObservation>,
    pub downloads: Vec<ScheduledDownload>,
}

impl Schedule {
    pub fn canonicalize(&mut self) {
        self.observations.sort_by(|a, b| {
            (a.task, a.component, a.sat, a.window)
                .cmp(&(b.task, b.component, b.sat, b.window))
                .then(a.t_start_s.total_cmp(&b.t_start_s))
        });
        self.downloads.sort_by(|a, b| {
            (a.download, a.sat, a.window)
                .cmp(&(b.download, b.sat, b.window))
                .then(a.t_start_s.total_cmp(&b.t_start_s))
        });
    }

    /// Objective value: each task with all of its components present earns its
    /// priority once. Stereo tasks with one component earn nothing.
    pub fn objective(&self, inst: &Instance) -> u64 {
        inst.tasks
            .iter()
            .filter(|t| {
                let n = self
                    .observations
                    .iter()
                    .filter(|o| o.task == t.id)
                    .map(|o| o.component)
                    .collect::<std::collections::BTreeSet<_>>()
                    .len();
                n == t.imaging.components() as usize
            })
            .map(|t| t.priority_w as u64)
            .sum()
    }

    /// Number of tasks fully served.
    pub fn assigned_tasks(&self, inst: &Instance) -> usize {
        inst.tasks
            .iter()
            .filter(|t| {
                let comps: std::collections::BTreeSet<u8> = self
                    .observations
                    .iter()
                    .filter(|o| o.task == t.id)
                    .map(|o| o.component)
                    .collect();
                comps.len() == t.imaging.components() as usize
            })
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
    /// Schedule from a constructive method, no optimality proof.
    Feasible,
}

/// Pruning statistics attached to heuristic runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneStats {
    pub lambda: u32,
    pub clusters: usize,
    pub windows_before: usize,
    pub windows_retained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schedule: Schedule,
    pub objective_j: f64,
    pub dual_bound: f64,
    pub gap: f64,
    pub nodes_explored: u64,
    pub wall_time_s: f64,
    pub status: SolveStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruning: Option<PruneStats>,
}

impl SolveReport {
    /// Relative optimality gap as used in reports: (bound - J) / max(J, 1).
    pub fn relative_gap(objective: f64, bound: f64) -> f64 {
        ((bound - objective) / objective.max(1.0)).max(0.0)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    pub use crate::fixtures::minimal_instance;
}
