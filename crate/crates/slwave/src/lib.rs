//! Batch driver for `slwave-core`: reads a run configuration, runs one
//! pipeline and writes CSV/JSON artifacts.
//!
//! ```text
//! slwave <command> --config FILE [--out DIR] [--snapshot T]... [--modes N] [--ladder KMIN:KMAX]
//! ```
//!
//! Exit status is 0 on success, 1 for usage, configuration and I/O errors
//! and 2 when the numerical pipeline fails.

pub mod commands;
pub mod config;
pub mod expr;
pub mod output;
pub mod problem;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;
use crate::config::{load_config, parse_ladder, RunConfig};
use crate::output::Writer;
use crate::problem::Setup;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "slwave", version, about = "Sturm-Liouville spectra and wave evolution with singular coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalue table.
    Eigen(Common),
    /// Homogeneous evolution and field dump.
    Solve(Common),
    /// Forced evolution and field dump.
    SolveForced(Common),
    /// Energy inequalities as bounded ratios.
    Estimates(Common),
    /// Spectral results against the finite-difference reference.
    OracleCompare(Common),
    /// Moderateness fits over the ε-ladder.
    VwsModerate(Common),
    /// Decay of differences between two regularizations.
    VwsUnique(Common),
    /// Distance of regularized solutions to the classical one.
    VwsConsistent(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Field dump time; repeatable (replaces numerics.snapshots).
    #[arg(long = "snapshot", value_name = "T")]
    snapshots: Vec<f64>,
    /// Number of modes (overrides numerics.modes).
    #[arg(long, value_name = "N")]
    modes: Option<usize>,
    /// ε-ladder exponents (overrides vws.k_min and vws.k_max).
    #[arg(long, value_name = "KMIN:KMAX", value_parser = parse_ladder)]
    ladder: Option<(u32, u32)>,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Eigen(c)
            | Command::Solve(c)
            | Command::SolveForced(c)
            | Command::Estimates(c)
            | Command::OracleCompare(c)
            | Command::VwsModerate(c)
            | Command::VwsUnique(c)
            | Command::VwsConsistent(c) => c,
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig, String> {
    let mut cfg = load_config(&common.config).map_err(|e| format!("{}: {e}", common.config.display()))?;
    if let Some(out) = &common.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if !common.snapshots.is_empty() {
        cfg.numerics.snapshots = common.snapshots.clone();
    }
    if let Some(m) = common.modes {
        cfg.numerics.modes = m;
    }
    if let Some((a, b)) = common.ladder {
        cfg.vws.k_min = a;
        cfg.vws.k_max = b;
    }
    cfg.validate().map_err(|(_, m)| m)?;
    Ok(cfg)
}

/// Runs the command line `args` (including the program name) and returns
/// the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match resolve(cli.command.common()) {
        Ok(c) => c,
        Err(m) => {
            eprintln!("error: {m}");
            return EXIT_USAGE;
        }
    };
    let setup = match Setup::new(cfg) {
        Ok(s) => s,
        Err(m) => {
            eprintln!("error: {m}");
            return EXIT_USAGE;
        }
    };
    let o = &setup.config.output;
    let mut writer = match Writer::new(&PathBuf::from(&o.dir), o.wants("csv"), o.wants("json")) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", o.dir);
            return EXIT_USAGE;
        }
    };
    let result = writer.always("config.json", &setup.config.to_json()).map_err(Failure::Io).and_then(|_| {
        match &cli.command {
            Command::Eigen(_) => commands::eigen(&setup, &mut writer),
            Command::Solve(_) => commands::solve(&setup, &mut writer),
            Command::SolveForced(_) => commands::solve_forced_cmd(&setup, &mut writer),
            Command::Estimates(_) => commands::estimates(&setup, &mut writer),
            Command::OracleCompare(_) => commands::oracle_compare(&setup, &mut writer),
            Command::VwsModerate(_) => commands::vws_moderate(&setup, &mut writer),
            Command::VwsUnique(_) => commands::vws_unique(&setup, &mut writer),
            Command::VwsConsistent(_) => commands::vws_consistent(&setup, &mut writer),
        }
    });
    match result {
        Ok(()) => {
            for p in &writer.written {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            EXIT_NUMERICAL
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
