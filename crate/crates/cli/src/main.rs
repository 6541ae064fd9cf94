mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fdbvp::analysis::{check_conditions, empirical_order, Verdict, DEFAULT_DENSITY};
use fdbvp::{resolve, solve, Error, SolveOptions, BUILTIN_NAMES};
use rayon::prelude::*;
use render::{RunRecord, RunStats};

const EXIT_FAILURE: u8 = 2;
const EXIT_VIOLATED: u8 = 3;
const EXIT_UNKNOWN: u8 = 4;

#[derive(Parser)]
#[command(
    name = "fdbvp",
    version,
    about = "Fixed-point solver for fourth-order functional boundary value problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem on one grid.
    Solve {
        /// Built-in name or path to a TOML problem file.
        source: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Write t, U, Y, V, Z at the nodes.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve on several grids and fit the convergence order.
    Convergence {
        source: String,
        /// Comma-separated grid sizes.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "50,100,150,200,300,400,500,800,1000"
        )]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Audit the existence and contraction conditions.
    Check {
        source: String,
        /// Lattice points per active variable.
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: usize,
    },
    /// List the built-in problems.
    List,
}

/// A failure reported as one JSON line on stderr.
struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Domain { .. } => "domain",
            Error::InvalidArgument(_) | Error::LengthMismatch { .. } => "invalid_argument",
            Error::Parse { .. } => "parse",
            Error::Eval { .. } => "eval",
            Error::Schema(_) => "schema",
            Error::Validation(_) => "validation",
            Error::UnknownProblem { .. } => "unknown_problem",
            Error::DelayRange { .. } => "delay_range",
            Error::RhsEval { .. } => "rhs_eval",
            Error::NonFinite { .. } => "non_finite",
            Error::Io { .. } => "io",
        };
        Failure {
            kind,
            message: e.to_string(),
        }
    }
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|source| {
        Failure::from(Error::Io {
            path: path.display().to_string(),
            source,
        })
    })
}

fn cmd_solve(source: &str, opts: SolveOptions, csv: Option<PathBuf>) -> Result<u8, Failure> {
    let p = resolve(source)?;
    let s = solve(&p, &opts)?;
    print!("{}", render::solve_summary(&p, &s));
    if let Some(path) = csv {
        write_file(&path, &render::solution_csv(&s))?;
    }
    Ok(0)
}

fn cmd_convergence(
    source: &str,
    ns: &[usize],
    tol: f64,
    max_iter: usize,
    csv: Option<PathBuf>,
) -> Result<u8, Failure> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 {
        return Err(Failure::usage(
            "--n-list needs at least two distinct grid sizes",
        ));
    }
    let p = resolve(source)?;
    let records: Vec<RunRecord> = ns
        .par_iter()
        .map(|&n| RunRecord {
            n,
            outcome: solve(&p, &SolveOptions { n, tol, max_iter })
                .map(|s| RunStats {
                    k: s.iterations,
                    converged: s.converged,
                    error: s.errors.map(|e| e.error),
                    error1: s.errors.map(|e| e.error1),
                })
                .map_err(|e| e.to_string()),
        })
        .collect();
    let pts: Vec<(usize, f64)> = records
        .iter()
        .filter_map(|r| {
            r.outcome
                .as_ref()
                .ok()
                .and_then(|s| s.error)
                .map(|e| (r.n, e))
        })
        .collect();
    let order = empirical_order(&pts).ok();
    print!(
        "{}",
        render::convergence_table(&records, order, p.exact.is_some())
    );
    if let Some(path) = csv {
        write_file(&path, &render::convergence_csv(&records))?;
    }
    if records.iter().all(|r| r.outcome.is_err()) {
        return Err(Failure {
            kind: "solve",
            message: "every grid size failed".into(),
        });
    }
    Ok(0)
}

fn cmd_check(source: &str, density: usize) -> Result<u8, Failure> {
    if density < 2 {
        return Err(Failure::usage("--density must be at least 2"));
    }
    let p = resolve(source)?;
    let report = check_conditions(&p, density)?;
    print!("{}", render::check_report(&p, &report));
    Ok(match report.verdict {
        Verdict::Satisfied => 0,
        Verdict::Violated => EXIT_VIOLATED,
        Verdict::Unknown => EXIT_UNKNOWN,
    })
}

fn cmd_list() -> Result<u8, Failure> {
    for name in BUILTIN_NAMES {
        println!("{}", render::list_row(&fdbvp::builtin(name)?));
    }
    Ok(0)
}

fn fail(f: &Failure) -> ExitCode {
    let line = serde_json::json!({ "error": f.kind, "message": f.message });
    eprintln!("error: {}", f.message);
    eprintln!("{line}");
    ExitCode::from(EXIT_FAILURE)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return fail(&Failure::usage(e.kind().to_string()));
        }
    };
    let result = match cli.command {
        Command::Solve {
            source,
            n,
            tol,
            max_iter,
            csv,
        } => cmd_solve(&source, SolveOptions { n, tol, max_iter }, csv),
        Command::Convergence {
            source,
            n_list,
            tol,
            max_iter,
            csv,
        } => cmd_convergence(&source, &n_list, tol, max_iter, csv),
        Command::Check { source, density } => cmd_check(&source, density),
        Command::List => cmd_list(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => fail(&f),
    }
}
