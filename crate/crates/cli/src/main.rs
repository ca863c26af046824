use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::Value;
use topp_conic::{canonicalize, solve, ProgramDump, Settings, Status};
use topp_core::run::{resample, run, write_csv, RunOutput, RunSettings};
use topp_core::scenario::{load_scenario, set_json_path, Scenario};
use topp_oracle::{audit, fd_suite, FdOptions};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "topp", version, about = "Time-optimal path parameterization with friction-cone contacts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario, or a dumped conic program.
    Solve {
        input: PathBuf,
        /// Number of grid intervals; overrides the scenario.
        #[arg(long)]
        grid: Option<usize>,
        /// Directory for the CSV and JSON outputs.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write the assembled conic program.
        #[arg(long)]
        dump_program: bool,
        /// Feasibility and gap tolerance of the solver.
        #[arg(long)]
        tol: Option<f64>,
        /// Uniform time samples in the CSV output.
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        /// Print solver iterations.
        #[arg(long)]
        verbose: bool,
    },
    /// Solve copies of a scenario with one entry replaced by each value.
    Sweep {
        scenario: PathBuf,
        /// Dotted path into the scenario document, e.g. `objects.0.mass`.
        #[arg(long)]
        param: String,
        /// Comma-separated JSON values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Audit a solved output against its scenario and run the
    /// finite-difference checks.
    Verify {
        scenario: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = FdOptions::default().seed)]
        seed: u64,
    },
}

fn solver_settings(tol: Option<f64>, verbose: bool) -> Settings {
    let mut s = Settings {
        verbose,
        ..Settings::default()
    };
    if let Some(t) = tol {
        s.tol_feas = t;
        s.tol_gap = t;
    }
    s
}

fn exit_for(status: Status) -> ExitCode {
    match status {
        Status::Optimal => ExitCode::SUCCESS,
        Status::PrimalInfeasible | Status::DualInfeasible => ExitCode::from(EXIT_INFEASIBLE),
        Status::MaxIterations | Status::NumericalFailure => ExitCode::from(EXIT_NUMERICAL),
    }
}

fn input_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_INPUT)
}

fn read_value(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn interpretation(status: Status) -> &'static str {
    match status {
        Status::Optimal => "optimal",
        Status::PrimalInfeasible => "infeasible: the path cannot be executed within the actuator and contact limits",
        Status::DualInfeasible => "unbounded: some variable is not limited by any constraint",
        Status::MaxIterations => "iteration limit reached",
        Status::NumericalFailure => "numerical failure",
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    input: &Path,
    grid: Option<usize>,
    out: &Path,
    dump_program: bool,
    tol: Option<f64>,
    samples: usize,
    verbose: bool,
) -> ExitCode {
    let value = match read_value(input) {
        Ok(v) => v,
        Err(e) => return input_error(e),
    };
    let settings = solver_settings(tol, verbose);
    if ProgramDump::is_dump(&value) {
        let dump = match ProgramDump::from_value(value) {
            Ok(d) => d,
            Err(e) => return input_error(e),
        };
        let form = match canonicalize(&dump.program) {
            Ok((f, _)) => f,
            Err(e) => return input_error(e),
        };
        let report = solve(&form, &settings);
        println!("status: {:?}", report.status);
        println!("objective: {:.10}", report.objective);
        println!("iterations: {}", report.iterations);
        return exit_for(report.status);
    }

    let base = input.parent().unwrap_or(Path::new("."));
    let scenario = match Scenario::from_value(value, input, base) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let result = match run(&scenario, &RunSettings { grid, solver: settings }) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return input_error(format!("{}: {e}", out.display()));
    }
    let name = &scenario.spec.name;
    if dump_program {
        let p = out.join(format!("{name}.program.json"));
        if let Err(e) = ProgramDump::new(result.transcription.program.clone()).save(&p) {
            return input_error(e);
        }
    }
    let output = RunOutput::new(&scenario.system, &result);
    let json_path = out.join(format!("{name}.json"));
    if let Err(e) = output.save(&json_path) {
        return input_error(e);
    }
    println!("scenario: {name}");
    println!("status: {:?} ({})", result.status(), interpretation(result.status()));
    println!("grid: {}", result.transcription.grid.intervals());
    println!("iterations: {}", result.report.iterations);
    println!("solve time: {:.3} s", result.report.solve_time);
    if let (Some(sol), Some(time)) = (&result.solution, &result.time) {
        println!("traversal time: {:.6} s", time.total);
        let traj = match resample(&scenario.system, sol, time, samples) {
            Ok(t) => t,
            Err(e) => return input_error(e),
        };
        let csv_path = out.join(format!("{name}.csv"));
        if let Err(e) = write_csv(&scenario.system, &traj, &csv_path) {
            return input_error(e);
        }
        println!("wrote {} and {}", csv_path.display(), json_path.display());
    } else {
        println!("wrote {}", json_path.display());
    }
    exit_for(result.status())
}

fn cmd_sweep(path: &Path, param: &str, values: &[String], grid: Option<usize>, tol: Option<f64>) -> ExitCode {
    let doc = match read_value(path) {
        Ok(v) => v,
        Err(e) => return input_error(e),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let mut scenarios = Vec::with_capacity(values.len());
    for raw in values {
        let v: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        let mut d = doc.clone();
        if let Err(e) = set_json_path(&mut d, param, v) {
            return input_error(e);
        }
        match Scenario::from_value(d, path, base) {
            Ok(s) => scenarios.push(s),
            Err(e) => return input_error(e),
        }
    }
    let threads = std::env::var("TOPP_THREADS")
        .ok()
        .and_then(|t| t.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => return input_error(e),
    };
    let settings = RunSettings {
        grid,
        solver: solver_settings(tol, false),
    };
    let results: Vec<_> = pool.install(|| scenarios.par_iter().map(|s| run(s, &settings)).collect());
    println!("{param},status,time");
    for (raw, r) in values.iter().zip(results) {
        match r {
            Ok(r) => {
                let t = r.total_time().map(|t| format!("{t:.6}")).unwrap_or_default();
                println!("{raw},{:?},{t}", r.status());
            }
            Err(e) => println!("{raw},error,{e}"),
        }
    }
    ExitCode::SUCCESS
}

fn cmd_verify(scenario: &Path, output: &Path, seed: u64) -> ExitCode {
    let sc = match load_scenario(scenario) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let out = match RunOutput::load(output) {
        Ok(o) => o,
        Err(e) => return input_error(e),
    };
    let audit_report = match &out.solution {
        Some(sol) => match audit(&sc.system, out.boundary, sol) {
            Ok(r) => Some(r),
            Err(e) => return input_error(e),
        },
        None => None,
    };
    let ledger = match fd_suite(&sc.system, &FdOptions { seed, ..FdOptions::default() }) {
        Ok(l) => l,
        Err(e) => return input_error(e),
    };
    let passed = audit_report.as_ref().is_none_or(|a| a.passed()) && ledger.passed();
    let doc = serde_json::json!({
        "scenario": sc.spec.name,
        "status": out.status,
        "audit": audit_report,
        "fd_suite": ledger,
        "passed": passed,
    });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve {
            input,
            grid,
            out,
            dump_program,
            tol,
            samples,
            verbose,
        } => cmd_solve(&input, grid, &out, dump_program, tol, samples, verbose),
        Command::Sweep {
            scenario,
            param,
            values,
            grid,
            tol,
        } => cmd_sweep(&scenario, &param, &values, grid, tol),
        Command::Verify { scenario, output, seed } => cmd_verify(&scenario, &output, seed),
    }
}
