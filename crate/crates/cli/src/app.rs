//! Argument parsing and dispatch, shared by the binary and in-process callers.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gradcert::gradlike::DEFAULT_SEED;

use crate::{
    cmd_certify, cmd_check, cmd_deform, cmd_fixture, cmd_stein, grid_export, load_problem,
    write_atomic, CliError, ExportField, ProblemSpec, EXIT_USAGE,
};

#[derive(Parser)]
#[command(name = "gradcert", version, about = "Grid checks for gradient-like vector fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem file.
    #[arg(long)]
    spec: PathBuf,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override `grid_n` from the problem file.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Seed for randomized sampling.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Conditions (1)-(4).
    Check(Common),
    /// Build a global certificate.
    Certify(Common),
    /// Deform a Weinstein structure to `phi_tilde`.
    Deform(Common),
    /// Weinstein structure of a J-convex function.
    Stein(Common),
    /// Check a built-in fixture, e.g. `fixture cotangent 2`.
    Fixture {
        name: String,
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// CSV samples of phi, X, lyapunov or dphi_X.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        field: ExportField,
    },
}

/// What a process running the command would print, and its exit code.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Invocation {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

fn load(c: &Common) -> Result<ProblemSpec, CliError> {
    let mut spec = load_problem(&c.spec)?;
    if let Some(n) = c.grid_n {
        spec.grid_n = n;
    }
    Ok(spec)
}

fn emit(out: Option<&PathBuf>, text: String, inv: &mut Invocation) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            inv.stdout = text;
            Ok(())
        }
    }
}

fn dispatch(cli: Cli, inv: &mut Invocation) -> Result<i32, CliError> {
    let (report, out) = match &cli.command {
        Command::Check(c) => (cmd_check(&load(c)?, c.seed)?, c.out.as_ref()),
        Command::Certify(c) => (cmd_certify(&load(c)?)?, c.out.as_ref()),
        Command::Deform(c) => (cmd_deform(&load(c)?)?, c.out.as_ref()),
        Command::Stein(c) => (cmd_stein(&load(c)?)?, c.out.as_ref()),
        Command::Fixture {
            name,
            n,
            out,
            grid_n,
        } => (cmd_fixture(name, *n, *grid_n)?, out.as_ref()),
        Command::Export { common, field } => {
            let csv = grid_export(&load(common)?, *field)?;
            emit(common.out.as_ref(), csv, inv)?;
            return Ok(0);
        }
    };
    emit(out, report.to_json(), inv)?;
    Ok(report.exit_code())
}

/// Runs `gradcert` with `args` (including the program name).
pub fn run<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut inv = Invocation::default();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                inv.stderr = text;
                inv.code = EXIT_USAGE;
            } else {
                inv.stdout = text;
            }
            return inv;
        }
    };
    match dispatch(cli, &mut inv) {
        Ok(code) => inv.code = code,
        Err(e) => {
            inv.stdout.clear();
            inv.stderr = format!("gradcert: {e}\n");
            inv.code = EXIT_USAGE;
        }
    }
    inv
}
