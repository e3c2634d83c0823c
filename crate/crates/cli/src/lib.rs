//! Library half of the `aeos` command: the benchmark harness and the Gantt
//! renderer. The binary only parses flags and moves files.

pub mod bench;
pub mod gantt;

pub use bench::{
    default_lambda, run_benchmark, run_one, AlgoSpec, Algorithm, BenchmarkRow, BenchmarkTable,
    Timing,
};
pub use gantt::{render_gantt, GanttError};
