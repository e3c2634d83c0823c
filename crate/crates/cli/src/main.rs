use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aeos_cli::bench::{run_benchmark, run_one, AlgoSpec, Timing};
use aeos_cli::gantt::{render_gantt, GanttError};
use aeos_core::domain::{
    parse_instance, parse_schedule, write_instance, write_schedule, Instance, ParseError,
};
use aeos_core::milp::{build_model, export_lp};
use aeos_core::scengen::{synth_instance, synth_window_instance, SynthSpec, TaskKind, WindowSpec};
use aeos_core::solver::BnbLimits;
use aeos_core::validator::{validate_schedule, DEFAULT_TOL};
use clap::{Parser, Subcommand, ValueEnum};

/// Directory searched for relative `--config` paths that do not exist as given.
const CONFIG_DIR_ENV: &str = "AEOS_CONFIG_DIR";

const EXIT_INVALID_INPUT: u8 = 2;
const EXIT_SOLVE_FAILED: u8 = 3;
const EXIT_VALIDATION_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "aeos",
    version,
    about = "Agile Earth-observation constellation scheduling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Exact,
    Heuristic,
    Fifo,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    /// Windows from orbit propagation over a target region.
    Geometry,
    /// Windows drawn directly, crowded satellites.
    Crowded,
    /// Windows drawn directly, small enough for exhaustive enumeration.
    Tiny,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Spot,
    Strip,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an instance file.
    Generate {
        #[arg(long, value_enum, default_value_t = Generator::Geometry)]
        generator: Generator,
        #[arg(long, default_value_t = 30)]
        tasks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Kind::Spot)]
        kind: Kind,
        /// JSON generator spec; overrides the other generator flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and write the schedule.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Algo::Exact)]
        algo: Algo,
        /// Windows kept per cluster; defaults to the lower bound.
        #[arg(long)]
        lambda: Option<u32>,
        #[arg(long, default_value_t = 10_800.0)]
        time_limit: f64,
        /// Single worker, reproducible output.
        #[arg(long)]
        deterministic: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check a schedule against every constraint.
    Validate {
        instance: PathBuf,
        schedule: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Also write the findings as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write the exact model in LP format.
    ExportLp {
        instance: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Exact, heuristic and FIFO on every instance.
    Benchmark {
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        /// Heuristic lambdas; defaults to the lower bound and the three above it.
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<u32>,
        #[arg(long, default_value_t = 10_800.0)]
        time_limit: f64,
        /// Single worker; timing columns are left out so rows are reproducible.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render a schedule as an SVG Gantt chart.
    Gantt {
        instance: PathBuf,
        schedule: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_INVALID_INPUT, format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    parse_instance(&read(path)?)
        .map_err(|e: ParseError| fail(EXIT_INVALID_INPUT, format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| fail(EXIT_INVALID_INPUT, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn limits(time_limit: f64, deterministic: bool) -> Result<BnbLimits, Failure> {
    if !(time_limit > 0.0) {
        return Err(fail(EXIT_INVALID_INPUT, "time limit must be positive"));
    }
    let mut l = BnbLimits {
        time_limit_s: time_limit,
        deterministic,
        ..BnbLimits::default()
    };
    if deterministic {
        l.workers = 1;
    }
    Ok(l)
}

fn config_path(p: &Path) -> PathBuf {
    if p.exists() || p.is_absolute() {
        return p.to_path_buf();
    }
    match std::env::var_os(CONFIG_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(p),
        None => p.to_path_buf(),
    }
}

fn generate(
    generator: Generator,
    tasks: usize,
    seed: u64,
    kind: Kind,
    config: Option<PathBuf>,
) -> Result<Instance, Failure> {
    let bad = |e: String| fail(EXIT_INVALID_INPUT, e);
    match generator {
        Generator::Geometry => {
            let spec = match config {
                Some(p) => serde_json::from_str::<SynthSpec>(&read(&config_path(&p))?)
                    .map_err(|e| bad(e.to_string()))?,
                None => {
                    let kind = match kind {
                        Kind::Spot => TaskKind::Spot,
                        Kind::Strip => TaskKind::Strip,
                    };
                    SynthSpec::new(tasks, kind, seed)
                }
            };
            synth_instance(&spec).map_err(|e| bad(e.to_string()))
        }
        Generator::Crowded | Generator::Tiny => {
            let spec = match (config, generator) {
                (Some(p), _) => serde_json::from_str::<WindowSpec>(&read(&config_path(&p))?)
                    .map_err(|e| bad(e.to_string()))?,
                (None, Generator::Tiny) => WindowSpec::tiny(seed),
                (None, _) => WindowSpec::crowded(tasks, seed),
            };
            if spec.n_tasks == 0 || spec.n_satellites == 0 {
                return Err(bad("task and satellite counts must be positive".to_string()));
            }
            Ok(synth_window_instance(&spec))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            generator,
            tasks,
            seed,
            kind,
            config,
            out,
        } => emit(
            &out,
            &write_instance(&generate(generator, tasks, seed, kind, config)?),
        ),
        Command::Solve {
            instance,
            algo,
            lambda,
            time_limit,
            deterministic,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let limits = limits(time_limit, deterministic)?;
            let spec = match (algo, lambda) {
                (Algo::Exact, _) => AlgoSpec::Exact,
                (Algo::Heuristic, Some(0)) => {
                    return Err(fail(EXIT_INVALID_INPUT, "lambda must be at least 1"))
                }
                (Algo::Heuristic, Some(l)) => AlgoSpec::Heuristic(l),
                (Algo::Heuristic, None) => AlgoSpec::HeuristicAboveBound(0),
                (Algo::Fifo, _) => AlgoSpec::Fifo,
            };
            let (algorithm, report) =
                run_one(&inst, spec, &limits).map_err(|e| fail(EXIT_SOLVE_FAILED, e))?;
            eprintln!(
                "{algorithm}: J = {} bound = {} gap = {:.4} status = {:?} nodes = {} time = {:.3} s",
                report.objective_j, report.dual_bound, report.gap, report.status, report.nodes_explored, report.wall_time_s
            );
            emit(&out, &write_schedule(&report.schedule))
        }
        Command::Validate {
            instance,
            schedule,
            tol,
            json,
        } => {
            let inst = load_instance(&instance)?;
            let sch = parse_schedule(&read(&schedule)?)
                .map_err(|e| fail(EXIT_INVALID_INPUT, format!("{}: {e}", schedule.display())))?;
            if !(tol >= 0.0) {
                return Err(fail(EXIT_INVALID_INPUT, "tolerance must be non-negative"));
            }
            let verdict = validate_schedule(&inst, &sch, tol)
                .map_err(|e| fail(EXIT_INVALID_INPUT, e.to_string()))?;
            print!("{verdict}");
            if let Some(p) = json {
                emit(&Some(p), &verdict.to_json())?;
            }
            if verdict.pass {
                Ok(())
            } else {
                Err(fail(
                    EXIT_VALIDATION_FAILED,
                    format!("{} finding(s)", verdict.findings.len()),
                ))
            }
        }
        Command::ExportLp { instance, out } => {
            emit(&out, &export_lp(&build_model(&load_instance(&instance)?)))
        }
        Command::Benchmark {
            instances,
            lambdas,
            time_limit,
            deterministic,
            csv,
        } => {
            let limits = limits(time_limit, deterministic)?;
            let named = instances
                .iter()
                .map(|p| {
                    let name = p.file_stem().map_or_else(
                        || p.display().to_string(),
                        |s| s.to_string_lossy().into_owned(),
                    );
                    Ok((name, load_instance(p)?))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            if lambdas.contains(&0) {
                return Err(fail(EXIT_INVALID_INPUT, "lambda must be at least 1"));
            }
            let mut algos = vec![AlgoSpec::Exact];
            if lambdas.is_empty() {
                algos.extend((0..4).map(AlgoSpec::HeuristicAboveBound));
            } else {
                algos.extend(lambdas.iter().map(|&l| AlgoSpec::Heuristic(l)));
            }
            algos.push(AlgoSpec::Fifo);
            let table = run_benchmark(&named, &algos, &limits);
            let timing = if deterministic {
                Timing::Omit
            } else {
                Timing::Show
            };
            print!("{}", table.to_text(timing));
            if let Some(p) = csv {
                emit(&Some(p), &table.to_csv(timing))?;
            }
            if table.rows.iter().any(|r| r.failure.is_some()) {
                Err(fail(EXIT_SOLVE_FAILED, "some rows failed"))
            } else {
                Ok(())
            }
        }
        Command::Gantt {
            instance,
            schedule,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let sch = parse_schedule(&read(&schedule)?)
                .map_err(|e| fail(EXIT_INVALID_INPUT, format!("{}: {e}", schedule.display())))?;
            let svg = render_gantt(&inst, &sch).map_err(|e| match e {
                GanttError::Structural(_) => fail(EXIT_INVALID_INPUT, e.to_string()),
                GanttError::Invalid(_) => fail(EXIT_VALIDATION_FAILED, e.to_string()),
            })?;
            emit(&out, &svg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
