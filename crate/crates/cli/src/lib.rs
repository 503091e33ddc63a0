//! Command-line front end for qkzr: `verify`, `eval` and `scan`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod eval;
pub mod parse;
pub mod scan;
pub mod target;
pub mod verify;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;
use crate::parse::{parse_complex, parse_entry, parse_grid, parse_lambda, EntrySpec, LambdaSpec};
use crate::scan::{GridVar, ScanRequest};
use crate::target::{Point, Target};
use qkzr::C;

/// Exit status when every check passed.
pub const EXIT_OK: u8 = 0;
/// Exit status when a check failed or a scan row errored.
pub const EXIT_FAIL: u8 = 1;
/// Exit status for configuration, region, evaluation or i/o errors.
pub const EXIT_ERROR: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "qkzr", version, about = "Verify and evaluate elliptic dynamical R-matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run verification suites and write a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated suites: specfun, trig, qkz, exchange, dqybe, equivalence, fusion, all.
        #[arg(long, value_delimiter = ',')]
        suites: Option<Vec<String>>,
        #[arg(long, allow_hyphen_values = true)]
        samples: Option<usize>,
        /// Upper bound on every check's tolerance.
        #[arg(long, allow_hyphen_values = true)]
        tol: Option<f64>,
    },
    /// Evaluate one target at one point and print a JSON record.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = target_arg)]
        target: Target,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Evaluate a target along a grid and write CSV.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = target_arg)]
        target: Target,
        /// Matrix entry, e.g. m=0,l=1,kind=beta.
        #[arg(long, value_parser = entry_arg)]
        entry: Option<EntrySpec>,
        /// Grid a:b:N over the spectral parameter u.
        #[arg(long, allow_hyphen_values = true, value_parser = grid_arg, conflicts_with = "z_grid")]
        u_grid: Option<Grid>,
        /// Grid a:b:N over z (trig, theta, 2phi1).
        #[arg(long, allow_hyphen_values = true, value_parser = grid_arg)]
        z_grid: Option<Grid>,
        /// Add a consistency residual column (exchange, chi).
        #[arg(long)]
        residuals: bool,
        #[command(flatten)]
        point: PointArgs,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON file with RunConfig fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub q: Option<C>,
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub kappa: Option<C>,
    /// "random" or λ_0,…,λ_n.
    #[arg(long, allow_hyphen_values = true, value_parser = lambda_arg)]
    pub lambda: Option<LambdaSpec>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_terms: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub tail_tol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub pole_tol: Option<f64>,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct PointArgs {
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub u: Option<C>,
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub z: Option<C>,
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub tau: Option<C>,
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub r: Option<C>,
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub s: Option<C>,
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub t: Option<C>,
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub zeta: Option<C>,
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    pub sigma: Option<C>,
}

impl PointArgs {
    fn point(&self) -> Point {
        Point {
            u: self.u,
            z: self.z,
            tau: self.tau,
            r: self.r,
            s: self.s,
            t: self.t,
            zeta: self.zeta,
            sigma: self.sigma,
        }
    }
}

fn complex_arg(s: &str) -> Result<C, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

/// A parsed `a:b:N` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<C>);

fn grid_arg(s: &str) -> Result<Grid, String> {
    parse_grid(s).map(Grid).map_err(|e| e.to_string())
}

fn entry_arg(s: &str) -> Result<EntrySpec, String> {
    parse_entry(s).map_err(|e| e.to_string())
}

fn lambda_arg(s: &str) -> Result<LambdaSpec, String> {
    parse_lambda(s).map_err(|e| e.to_string())
}

fn target_arg(s: &str) -> Result<Target, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn resolve(common: &Common, extra: Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(Overrides {
        n: common.n,
        q: common.q,
        kappa: common.kappa,
        lambda: common.lambda.clone(),
        seed: common.seed,
        max_terms: common.max_terms,
        tail_tol: common.tail_tol,
        pole_tol: common.pole_tol,
        out: common.out.clone(),
        ..extra
    });
    Ok(cfg)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Write through `f` to the configured file, or to `stdout`.
fn emit<T>(
    out: &Option<PathBuf>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<T, CliError>,
) -> Result<T, CliError> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
            let v = f(&mut w)?;
            w.flush().map_err(io_err(p))?;
            Ok(v)
        }
        None => f(stdout),
    }
}

fn write_json(w: &mut dyn Write, v: &impl serde::Serialize) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: "output".into(), source };
    serde_json::to_writer_pretty(&mut *w, v).map_err(|e| io(e.into()))?;
    writeln!(w).map_err(io)
}

/// Run a parsed command. Returns the exit status; errors are printed to `stderr` as JSON.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{}", serde_json::to_string_pretty(&e.to_json()).unwrap_or_default());
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<u8, CliError> {
    match cli.command {
        Command::Verify { common, suites, samples, tol } => {
            let cfg = resolve(&common, Overrides { suites, samples, tol, ..Default::default() })?;
            let report = verify::verify(&cfg)?;
            emit(&cfg.out, stdout, |w| write_json(w, &report))?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Eval { common, target, point } => {
            let cfg = resolve(&common, Overrides::default())?;
            let record = eval::eval(&cfg, target, &point.point())?;
            emit(&cfg.out, stdout, |w| write_json(w, &record))?;
            Ok(EXIT_OK)
        }
        Command::Scan { common, target, entry, u_grid, z_grid, residuals, point } => {
            let cfg = resolve(&common, Overrides::default())?;
            let (var, grid) = match (u_grid, z_grid) {
                (Some(g), None) => (GridVar::U, g.0),
                (None, Some(g)) => (GridVar::Z, g.0),
                _ => return Err(CliError::ConfigInvalid("scan needs exactly one of --u-grid, --z-grid".into())),
            };
            let req = ScanRequest { target, entry, var, grid, point: point.point(), residuals };
            let summary = emit(&cfg.out, stdout, |w| scan::scan(&cfg, &req, w))?;
            Ok(if summary.errors == 0 { EXIT_OK } else { EXIT_FAIL })
        }
    }
}

/// Parse `args` (program name first) and run. Usage errors print clap's message.
pub fn run_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, stdout, stderr),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            code
        }
    }
}
