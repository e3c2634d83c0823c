//! Scheduling of observation and download tasks for constellations of agile
//! Earth-observation satellites.
//!
//! The crate builds the exact mixed-integer formulation of the problem and
//! solves it by branch-and-bound ([`milp`], [`solver`]), offers a
//! time-window-pruning heuristic and a FIFO baseline ([`heuristic`]), checks
//! any schedule independently of the formulation ([`validator`]) and
//! synthesizes realistic instances from orbital geometry ([`scengen`]).

pub mod domain;
pub mod fixtures;
pub mod heuristic;
pub mod milp;
pub mod scengen;
pub mod solver;
pub mod validator;
