//! Command-line driver: argument parsing, runs, and artifact output.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use mmf_core::calculus::Mode;
use mmf_core::dsl::{parse_spec, ParseError};
use mmf_core::emit::{mode_name, profiler_table, solution_dot, solution_json_text};
use mmf_core::engine::{explore, EngineError, Options, Outcome, Quantity, Status};
use mmf_core::oracle::{compare, enumerate_models, OracleError};
use mmf_core::solver::{default_external_command, BackendChoice, Solver, SolverConfig, SolverError};
use mmf_core::spec::Spec;

pub const EXIT_FOUND: i32 = 0;
pub const EXIT_NONE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Per-query limit for the external solver when no run timeout is given.
const DEFAULT_QUERY_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Parser)]
#[command(name = "mmf", about = "Bounded structural model finder", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate conforming object graphs.
    Find(RunArgs),
    /// Search for counterexamples to the declared property.
    Check(RunArgs),
    /// Enumerate the bounded semantics by brute force.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Debug, Args)]
struct RunArgs {
    spec: PathBuf,
    /// Report every solution (default).
    #[arg(long, conflicts_with = "first")]
    all: bool,
    /// Stop at the first solution.
    #[arg(long)]
    first: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Disable satisfiability checks on accumulated constraints.
    #[arg(long)]
    no_smt: bool,
    #[arg(long)]
    no_fold: bool,
    #[arg(long)]
    no_index: bool,
    #[arg(long)]
    keep_redundant: bool,
    #[arg(long)]
    heuristic_pq: bool,
    #[arg(long, value_name = "N")]
    timeout_ms: Option<u64>,
    /// `internal`, `external` or `external:CMD`.
    #[arg(long, default_value = "internal")]
    solver: String,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Print the profiler table.
    #[arg(long)]
    profile: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    spec: PathBuf,
    /// Run the engine with baseline options and compare.
    #[arg(long)]
    compare: bool,
    /// Enumerate counterexamples instead of models.
    #[arg(long)]
    check: bool,
    #[arg(long, default_value = "internal")]
    solver: String,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("unknown solver `{0}` (expected internal, external or external:CMD)")]
    SolverName(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load(path: &Path) -> Result<Spec, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_spec(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn solver_config(name: &str, timeout_ms: Option<u64>) -> Result<SolverConfig, CliError> {
    let backend = match name {
        "internal" => BackendChoice::Internal,
        "external" => BackendChoice::External {
            command: default_external_command(),
            timeout_ms: timeout_ms.unwrap_or(DEFAULT_QUERY_TIMEOUT_MS),
        },
        other => match other.strip_prefix("external:") {
            Some(cmd) if !cmd.trim().is_empty() => BackendChoice::External {
                command: cmd.to_string(),
                timeout_ms: timeout_ms.unwrap_or(DEFAULT_QUERY_TIMEOUT_MS),
            },
            _ => return Err(CliError::SolverName(other.to_string())),
        },
    };
    Ok(SolverConfig { backend, cache: true })
}

fn options(args: &RunArgs) -> Options {
    let c = &args.common;
    Options {
        symbolic_filtering: !c.no_smt,
        folding: !c.no_fold,
        indexing: !c.no_index,
        remove_redundant: !c.keep_redundant,
        heuristic_pq: c.heuristic_pq,
        timeout_ms: c.timeout_ms,
        quantity: if args.first { Quantity::First } else { Quantity::All },
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Exhausted => "exhausted",
        Status::FirstFound => "first-found",
        Status::TimedOut => "timed-out",
    }
}

fn report_text(outcome: &Outcome, mode: Mode) -> String {
    format!(
        "mode: {}\nstatus: {}\nsolutions: {}\n",
        mode_name(mode),
        status_name(outcome.status),
        outcome.solutions.len()
    )
}

fn run_search(args: &RunArgs, mode: Mode, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = load(&args.spec)?;
    if mode == Mode::Check && !spec.has_property {
        return Err(CliError::Usage(format!(
            "{}: check requires a property block",
            args.spec.display()
        )));
    }
    let c = &args.common;
    let mut solver = Solver::new(&solver_config(&c.solver, c.timeout_ms)?);
    let outcome = explore(&spec, mode, &options(args), &mut solver)?;
    let ext = match c.format {
        Format::Json => "json",
        Format::Dot => "dot",
    };
    let render = |i: usize| match c.format {
        Format::Json => solution_json_text(&outcome.solutions[i], mode),
        Format::Dot => solution_dot(&outcome.solutions[i]),
    };
    let mut report = report_text(&outcome, mode);
    if c.profile {
        report.push_str(&profiler_table(&outcome.profiler));
    }
    let stdout_err = |e| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match &c.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            for i in 0..outcome.solutions.len() {
                write_file(&dir.join(format!("model_{:03}.{ext}", i + 1)), &render(i))?;
            }
            write_file(&dir.join("report.txt"), &report)?;
            out.write_all(report.as_bytes()).map_err(stdout_err)?;
        }
        None => {
            for i in 0..outcome.solutions.len() {
                out.write_all(render(i).as_bytes()).map_err(stdout_err)?;
            }
            out.write_all(report.as_bytes()).map_err(stdout_err)?;
        }
    }
    Ok(match outcome.status {
        Status::TimedOut => EXIT_ERROR,
        _ if outcome.solutions.is_empty() => EXIT_NONE,
        _ => EXIT_FOUND,
    })
}

fn run_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = load(&args.spec)?;
    let mode = if args.check { Mode::Check } else { Mode::Find };
    let mut solver = Solver::new(&solver_config(&args.solver, None)?);
    let oracle = enumerate_models(&spec, mode, &mut solver)?;
    let mut text = format!(
        "mode: {}\ncandidates: {}\nmodels: {}\n",
        mode_name(mode),
        oracle.candidates,
        oracle.models.len()
    );
    let mut json = serde_json::Map::new();
    json.insert("mode".into(), mode_name(mode).into());
    json.insert("candidates".into(), oracle.candidates.to_string().into());
    json.insert("models".into(), oracle.models.len().into());
    let mut ok = true;
    if args.compare {
        let outcome = explore(&spec, mode, &Options::default(), &mut solver)?;
        let report = compare(&oracle, &outcome.solutions, &mut solver)?;
        ok = report.is_ok();
        text.push_str(&format!("compare: {}\n{}\n", if ok { "equal" } else { "DIFFERENT" }, report.summary()));
        for (label, items) in [
            ("missing", &report.missing),
            ("spurious", &report.spurious),
            ("duplicated", &report.duplicated),
            ("constraint-mismatch", &report.constraint_mismatch),
            ("bad-witness", &report.bad_witness),
        ] {
            for g in items {
                text.push_str(&format!("{label}: {g}\n"));
            }
            json.insert(label.into(), items.clone().into());
        }
        json.insert("equal".into(), ok.into());
        json.insert("engine".into(), report.engine_count.into());
    }
    let json_text = serde_json::to_string_pretty(&serde_json::Value::Object(json)).expect("JSON values serialize");
    let stdout_err = |e| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_file(&dir.join("oracle.txt"), &text)?;
        write_file(&dir.join("oracle.json"), &format!("{json_text}\n"))?;
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    out.write_all(format!("{json_text}\n").as_bytes()).map_err(stdout_err)?;
    Ok(if !ok {
        EXIT_ERROR
    } else if oracle.models.is_empty() {
        EXIT_NONE
    } else {
        EXIT_FOUND
    })
}

/// Runs the driver and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_ERROR;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_FOUND;
        }
    };
    let result = match &cli.command {
        Command::Find(a) => run_search(a, Mode::Find, out),
        Command::Check(a) => run_search(a, Mode::Check, out),
        Command::Oracle(a) => run_oracle(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
