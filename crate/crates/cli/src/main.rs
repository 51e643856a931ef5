//! `ellopt`: convergence studies, regularization sweeps, spectral reports and
//! matrix export for the elliptic optimal control benchmark.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid invocation, 3 solver
//! non-convergence under `--strict`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use ellopt_core::assembly::assemble_load;
use ellopt_core::linalg::mtx::{save_matrix, save_vector, Symmetry};
use ellopt_core::optctl::report::{format_spectral, format_sweep, format_table, Format};
use ellopt_core::optctl::{run_sweep, spectral_report, LevelSetup};
use ellopt_core::{run_study, MassDiagonal, RunConfig, SolveOptions, SolverKind, Target};

#[derive(Parser, Debug)]
#[command(name = "ellopt", version, about = "Finite element optimal control benchmark driver")]
struct Cli {
    /// Worker threads for assembly and sparse kernels.
    #[arg(long, global = true, env = "ELLOPT_THREADS", default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error and iteration table over a range of levels.
    Study(StudyArgs),
    /// State error as a function of the regularization parameter.
    Sweep(SweepArgs),
    /// Eigenvalue and Rayleigh-quotient estimates per level.
    Spectral(SpectralArgs),
    /// Write K, M and f of one level in Matrix Market format.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, default_value = "md", value_parser = parse_format)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long, default_value_t = 3, value_parser = parse_dim)]
    dim: usize,
    /// Level range `A..B` (inclusive) or a single level.
    #[arg(long, default_value = "1..5", value_parser = parse_levels)]
    levels: (usize, usize),
    #[arg(long, default_value = "1", value_parser = parse_target)]
    target: Target,
    #[arg(long, default_value = "mg-minres", value_parser = parse_solver)]
    solver: SolverKind,
    /// `rho = h^R`.
    #[arg(long, default_value_t = 4.0)]
    rho_exponent: f64,
    #[arg(long, default_value_t = 1e-11)]
    rtol: f64,
    #[arg(long, default_value_t = 4, value_parser = parse_quad)]
    quad_order: usize,
    /// Preconditioner of the inexact Schur complement solver.
    #[arg(long, default_value = "lump", value_parser = parse_variant)]
    diag_variant: MassDiagonal,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Exit with status 3 when a solve does not converge.
    #[arg(long)]
    strict: bool,
    /// Report zero wall times so repeated runs give identical output.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 3, value_parser = parse_dim)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    level: usize,
    #[arg(long, default_value = "1", value_parser = parse_target)]
    target: Target,
    /// Comma-separated values of rho; defaults to h^4 4^j up to 1.
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    #[arg(long, default_value_t = 1e-11)]
    rtol: f64,
    #[arg(long, default_value_t = 4, value_parser = parse_quad)]
    quad_order: usize,
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SpectralArgs {
    #[arg(long, default_value_t = 3, value_parser = parse_dim)]
    dim: usize,
    #[arg(long, default_value = "1..3", value_parser = parse_levels)]
    levels: (usize, usize),
    #[arg(long, default_value_t = 4.0)]
    rho_exponent: f64,
    /// Random vectors per Rayleigh-quotient estimate.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long, default_value_t = 3, value_parser = parse_dim)]
    dim: usize,
    /// A single level, written as `L..L` or `L`.
    #[arg(long, default_value = "1..1", value_parser = parse_levels)]
    levels: (usize, usize),
    #[arg(long, default_value = "1", value_parser = parse_target)]
    target: Target,
    #[arg(long, default_value_t = 4, value_parser = parse_quad)]
    quad_order: usize,
    /// Output paths for K, M and f, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "K.mtx,M.mtx,f.vec")]
    out: Vec<PathBuf>,
}

fn parse_levels(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid level `{t}`"));
    let (a, b) = (parse(a)?, parse(b)?);
    if a == 0 || a > b {
        return Err(format!("invalid level range `{s}`: need 1 <= A <= B"));
    }
    Ok((a, b))
}

fn parse_dim(s: &str) -> Result<usize, String> {
    match s {
        "2" => Ok(2),
        "3" => Ok(3),
        _ => Err(format!("dimension must be 2 or 3, got `{s}`")),
    }
}

fn parse_quad(s: &str) -> Result<usize, String> {
    match s {
        "1" | "2" | "4" => Ok(s.parse().expect("digit")),
        _ => Err(format!("quadrature order must be 1, 2 or 4, got `{s}`")),
    }
}

fn parse_target(s: &str) -> Result<Target, String> {
    s.parse().map_err(|e: ellopt_core::Error| e.to_string())
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse().map_err(|e: ellopt_core::Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<MassDiagonal, String> {
    s.parse().map_err(|e: ellopt_core::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: ellopt_core::Error| e.to_string())
}

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Whether any solve failed to converge.
type Outcome = bool;

fn study(args: &StudyArgs) -> Result<Outcome> {
    let cfg = RunConfig {
        dim: args.dim,
        min_level: args.levels.0,
        max_level: args.levels.1,
        target: args.target,
        solver: args.solver,
        rho_exponent: args.rho_exponent,
        rtol: args.rtol,
        quad_order: args.quad_order,
        diag_variant: args.diag_variant,
        max_iterations: args.max_iterations,
    };
    let mut table = run_study(&cfg)?;
    if args.no_timing {
        table = table.without_timing();
    }
    emit(&args.output, &format_table(&table, args.output.format)?)?;
    Ok(!table.all_converged())
}

fn sweep(args: &SweepArgs) -> Result<Outcome> {
    let opts = SolveOptions {
        rtol: args.rtol,
        ..SolveOptions::default()
    };
    let report = run_sweep(args.dim, args.level, args.target, &args.rho, &opts, args.quad_order)?;
    emit(&args.output, &format_sweep(&report, args.output.format)?)?;
    Ok(report.points.iter().any(|p| !p.converged))
}

fn spectral(args: &SpectralArgs) -> Result<Outcome> {
    let reports = (args.levels.0..=args.levels.1)
        .map(|level| spectral_report(args.dim, level, args.rho_exponent, args.samples, args.seed))
        .collect::<ellopt_core::Result<Vec<_>>>()?;
    emit(&args.output, &format_spectral(&reports, args.output.format)?)?;
    Ok(false)
}

fn export(args: &ExportArgs) -> Result<Outcome> {
    let setup = LevelSetup::new(args.dim, args.levels.0)?;
    let f = assemble_load(setup.mesh(), |x| args.target.evaluate(x), args.quad_order)?;
    let ops = setup.ops();
    save_matrix(&args.out[0], &ops.k, Symmetry::Symmetric)
        .with_context(|| format!("writing {}", args.out[0].display()))?;
    save_matrix(&args.out[1], &ops.m, Symmetry::Symmetric)
        .with_context(|| format!("writing {}", args.out[1].display()))?;
    save_vector(&args.out[2], &f).with_context(|| format!("writing {}", args.out[2].display()))?;
    Ok(false)
}

fn usage_error(kind: ErrorKind, msg: &str) -> ! {
    Cli::command().error(kind, msg).exit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        usage_error(ErrorKind::ValueValidation, "--threads must be at least 1");
    }
    let strict = match &cli.command {
        Command::Study(a) => a.strict,
        Command::Sweep(a) => a.strict,
        Command::Spectral(_) => false,
        Command::Export(a) => {
            if a.levels.0 != a.levels.1 {
                usage_error(ErrorKind::ValueValidation, "export takes a single level");
            }
            if a.out.len() != 3 {
                usage_error(ErrorKind::ValueValidation, "export --out needs three paths: K, M and f");
            }
            false
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Study(a) => study(a),
        Command::Sweep(a) => sweep(a),
        Command::Spectral(a) => spectral(a),
        Command::Export(a) => export(a),
    };
    match result {
        Ok(true) if strict => {
            eprintln!("error: solver did not converge");
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
