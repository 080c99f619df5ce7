//! Command-line front end: argument parsing, run configuration, dispatch and
//! report emission.

pub mod config;
pub mod emit;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{Command, DomainConfig, DomainKind, RunConfig, Tolerances};
pub use emit::{to_json_string, Report, Summary};
pub use run::{error_exit_code, execute, point_seed, Outcome};

use crate::error::{KornError, Result};
use crate::operators::ConstCoeffOperator;
use crate::solve::KornBc;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "KORN_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "korn-lab",
    version,
    about = "Numerical checks of Korn-type inequalities on thin strips"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Randomized inequality suites and thickness sweeps
    Verify {
        #[arg(value_enum)]
        check: VerifyCheck,
    },
    /// First Korn constant over a thickness sweep
    KornFirst,
    /// Maximal strong-ratio at one thickness
    StrongRatio,
    /// Elliptic solve with random profile data at one thickness
    Solve,
    /// Mesh statistics and node coordinates at one thickness
    MeshDump,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyCheck {
    /// 1D weighted Hardy-type estimate
    Hardy,
    /// weighted gradient estimate, constant coefficients
    Lemma21,
    /// weighted gradient estimate for the flattened operator
    Lemma22,
    /// Korn-like ratio of elliptic solutions on straight or capped strips
    Thm11,
    /// Korn-like ratio on a slanted strip against its flattened counterpart
    Thm13,
    /// strong second Korn ratio, u = 0 at the axial ends
    Thm14,
    /// strong second Korn ratio, u periodic
    Thm18,
}

#[derive(Args, Debug, Default)]
pub struct Flags {
    /// JSON run configuration; explicit flags override its fields
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// number of random cases of a suite
    #[arg(long, global = true)]
    pub cases: Option<usize>,
    /// base seed; case i uses seed ^ i
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON report path
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// CSV path (sweep curve or nodal field)
    #[arg(long, global = true)]
    pub csv: Option<String>,
    /// fixed eps of the 1D suite, in (0, 1]
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    /// rect, cap or curved
    #[arg(long, global = true)]
    pub domain: Option<String>,
    /// axial length
    #[arg(long, global = true)]
    pub l: Option<f64>,
    /// relative thickness modulation of cap and curved strips
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// slope bound of the curved strip's lower profile
    #[arg(long, global = true)]
    pub rho1: Option<f64>,
    /// thickness of single-point commands
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// comma-separated thicknesses of a sweep
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub h_sweep: Option<Vec<f64>>,
    /// dirichlet-ends or periodic
    #[arg(long, global = true)]
    pub bc: Option<String>,
    /// elements across the thickness
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    /// axial elements at the largest thickness
    #[arg(long, global = true)]
    pub ny: Option<usize>,
    /// operator coefficients a11,a12,a21,a22
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub op: Option<Vec<f64>>,
    /// slope of the slanted strip
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a2: Option<f64>,
    /// Gauss points per panel of domain quadratures
    #[arg(long, global = true)]
    pub quad_n: Option<usize>,
}

impl CliCommand {
    pub fn command(&self) -> Command {
        match self {
            CliCommand::Verify { check } => match check {
                VerifyCheck::Hardy => Command::VerifyHardy,
                VerifyCheck::Lemma21 => Command::VerifyLemma21,
                VerifyCheck::Lemma22 => Command::VerifyLemma22,
                VerifyCheck::Thm11 => Command::VerifyThm11,
                VerifyCheck::Thm13 => Command::VerifyThm13,
                VerifyCheck::Thm14 => Command::VerifyThm14,
                VerifyCheck::Thm18 => Command::VerifyThm18,
            },
            CliCommand::KornFirst => Command::KornFirst,
            CliCommand::StrongRatio => Command::StrongRatio,
            CliCommand::Solve => Command::Solve,
            CliCommand::MeshDump => Command::MeshDump,
        }
    }
}

/// Configuration from the optional file, the subcommand and explicit flags.
pub fn build_config(cli: &Cli) -> Result<RunConfig> {
    let f = &cli.flags;
    let mut cfg = match &f.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(cli.command.command()),
    };
    cfg.command = cli.command.command();
    if let Some(kind) = &f.domain {
        cfg.domain.kind = DomainKind::parse(kind)?;
    }
    if let Some(bc) = &f.bc {
        cfg.bc = KornBc::parse(bc)?;
    }
    if let Some(op) = &f.op {
        if op.len() != 4 {
            return Err(KornError::Config(format!(
                "--op takes 4 coefficients, got {}",
                op.len()
            )));
        }
        cfg.op = ConstCoeffOperator::new(vec![vec![op[0], op[1]], vec![op[2], op[3]]])?;
    }
    macro_rules! set {
        ($flag:ident => $($field:tt)+) => {
            if let Some(v) = f.$flag.clone() {
                cfg.$($field)+ = v.into();
            }
        };
    }
    set!(cases => cases);
    set!(seed => seed);
    set!(out => out);
    set!(csv => csv);
    set!(eps => eps);
    set!(l => domain.l);
    set!(r => domain.r);
    set!(rho1 => domain.rho1);
    set!(h => h);
    set!(h_sweep => h_sweep);
    set!(nx => nx);
    set!(ny => ny);
    set!(a2 => a2);
    set!(quad_n => quad_n);
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            KornError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))
        })?;
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Parses arguments, runs, writes outputs and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads()
        .and_then(|_| build_config(&cli))
        .and_then(execute)
        .and_then(|outcome| {
            outcome.write()?;
            Ok(outcome)
        });
    match result {
        Ok(outcome) => {
            let s = &outcome.report.summary;
            println!(
                "{}: {} records, {} hold, {} fail, {} unconverged",
                outcome.report.config.command.label(),
                s.records,
                s.holds,
                s.fails,
                s.unconverged
            );
            if let Some(sweep) = &outcome.sweep {
                println!(
                    "fitted exponent {:.4} in [{}, {}]",
                    sweep.fit.exponent, sweep.window[0], sweep.window[1]
                );
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from([
            "korn-lab",
            "korn-first",
            "--domain",
            "curved",
            "--h-sweep",
            "0.2,0.1,0.05",
            "--bc",
            "periodic",
            "--ny",
            "32",
        ])
        .unwrap();
        let cfg = build_config(&cli).unwrap();
        assert_eq!(cfg.command, Command::KornFirst);
        assert_eq!(cfg.domain.kind, DomainKind::Curved);
        assert_eq!(cfg.h_sweep, vec![0.2, 0.1, 0.05]);
        assert_eq!(cfg.bc, KornBc::Periodic);
        assert_eq!(cfg.ny, 32);
        assert_eq!(cfg.nx, 8);
    }

    #[test]
    fn config_round_trips_byte_identically() {
        let mut cfg = RunConfig::new(Command::VerifyThm13);
        cfg.h = Some(0.1);
        cfg.eps = Some(1.0 / 3.0);
        cfg.out = Some("r.json".into());
        let text = cfg.to_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn bad_flags_are_config_errors() {
        let cli = Cli::try_parse_from(["korn-lab", "solve", "--domain", "disk"]).unwrap();
        assert!(matches!(build_config(&cli), Err(KornError::Config(_))));
        let cli = Cli::try_parse_from(["korn-lab", "solve", "--op", "1,0,0"]).unwrap();
        assert!(matches!(build_config(&cli), Err(KornError::Config(_))));
    }
}
