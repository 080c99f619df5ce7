use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Command, DomainKind, RunConfig};
use super::emit::{write_sweep_csv, Report};
use crate::discretize::{assemble, build_mesh, FormKind, DEFAULT_QUAD_ORDER};
use crate::error::{KornError, Result};
use crate::operators::OperatorSpec;
use crate::solve::{
    solve_elliptic, strong_ratio_sup_with, EigenOptions, KornBc, KornProblem, StrongRatioOptions,
};
use crate::verify::{
    korn_like_ratio, random_boundary_data, random_hardy_case, random_weighted_gradient_case,
    random_weighted_gradient_la_case, verify_first_korn_scaling, verify_korn_like,
    verify_strong_second_korn, KornLikeScenario, SweepMesh, SweepReport,
};

pub const DEFAULT_HARDY_CASES: usize = 200;
pub const DEFAULT_DOMAIN_CASES: usize = 100;

/// Result of a run before anything is written.
pub struct Outcome {
    pub report: Report,
    /// the sweep behind a sweep command, for CSV output
    pub sweep: Option<SweepReport>,
    /// CSV text for non-sweep commands (nodal fields, mesh nodes)
    pub table: Option<String>,
}

impl Outcome {
    /// 0 when every verdict holds, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.summary.all_hold {
            0
        } else {
            1
        }
    }

    /// Writes the JSON report and CSV output requested by the configuration.
    pub fn write(&self) -> Result<()> {
        let cfg = &self.report.config;
        if let Some(out) = &cfg.out {
            super::emit::write_report(&self.report, Path::new(out))?;
        }
        if let Some(csv) = &cfg.csv {
            let path = Path::new(csv);
            if let Some(sweep) = &self.sweep {
                write_sweep_csv(sweep, path)?;
            } else if let Some(table) = &self.table {
                std::fs::write(path, table).map_err(|e| KornError::Io {
                    path: csv.clone(),
                    source: e,
                })?;
            }
        }
        Ok(())
    }
}

/// 3 for solver failures, 2 for everything else (configuration, preconditions, IO).
pub fn error_exit_code(e: &KornError) -> i32 {
    match e {
        KornError::NoConvergence { .. }
        | KornError::SingularSystem(_)
        | KornError::NotPositiveDefinite { .. } => 3,
        _ => 2,
    }
}

/// Seed of the `index`-th case or sweep point.
pub fn point_seed(base: u64, index: usize) -> u64 {
    base ^ index as u64
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn require_h(cfg: &RunConfig) -> Result<f64> {
    cfg.h
        .ok_or_else(|| KornError::Config(format!("'{}' needs --h", cfg.command.label())))
}

fn sweep_mesh(cfg: &RunConfig) -> SweepMesh {
    SweepMesh {
        nx: cfg.nx,
        ny_base: cfg.ny,
    }
}

fn eigen_options(cfg: &RunConfig) -> EigenOptions {
    EigenOptions {
        tol: cfg.tolerances.eigen,
        seed: cfg.seed,
        ..EigenOptions::default()
    }
}

fn strong_options(cfg: &RunConfig) -> StrongRatioOptions {
    StrongRatioOptions {
        grid_points: cfg.tolerances.t_grid,
        golden_tol: cfg.tolerances.golden,
        eig: eigen_options(cfg),
        ..StrongRatioOptions::default()
    }
}

fn sweep_outcome(cfg: RunConfig, sweep: SweepReport) -> Result<Outcome> {
    let report = Report::new(cfg, vec![to_value(&sweep)?]);
    Ok(Outcome {
        report,
        sweep: Some(sweep),
        table: None,
    })
}

fn cases<F>(cfg: &RunConfig, default: usize, run: F) -> Result<Vec<Value>>
where
    F: Fn(u64) -> Result<Value> + Sync,
{
    let n = cfg.cases.unwrap_or(default);
    (0..n)
        .into_par_iter()
        .map(|i| run(point_seed(cfg.seed, i)))
        .collect()
}

/// Runs the configured command.
pub fn execute(cfg: RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let simple = |cfg: RunConfig, records: Vec<Value>| {
        Ok(Outcome {
            report: Report::new(cfg, records),
            sweep: None,
            table: None,
        })
    };
    match cfg.command {
        Command::VerifyHardy => {
            let records = cases(&cfg, DEFAULT_HARDY_CASES, |seed| {
                let mut case = random_hardy_case(seed);
                if let Some(eps) = cfg.eps {
                    case.eps = eps;
                }
                to_value(&case.run(cfg.hardy_quad_n)?)
            })?;
            simple(cfg, records)
        }
        Command::VerifyLemma21 => {
            let records = cases(&cfg, DEFAULT_DOMAIN_CASES, |seed| {
                to_value(&random_weighted_gradient_case(seed).run(cfg.quad_n)?)
            })?;
            simple(cfg, records)
        }
        Command::VerifyLemma22 => {
            let records = cases(&cfg, DEFAULT_DOMAIN_CASES, |seed| {
                to_value(&random_weighted_gradient_la_case(seed).run(cfg.quad_n)?)
            })?;
            simple(cfg, records)
        }
        Command::VerifyThm11 | Command::VerifyThm13 => {
            let scenario = match (cfg.command, cfg.domain.kind) {
                (Command::VerifyThm13, _) => KornLikeScenario::Hyperplane { a2: cfg.a2 },
                (_, DomainKind::Rect) => KornLikeScenario::Cylinder,
                (_, DomainKind::Cap) => KornLikeScenario::CurvedCap { r: cfg.domain.r },
                (_, DomainKind::Curved) => {
                    return Err(KornError::Config(
                        "the elliptic sweep supports rect and cap domains".into(),
                    ))
                }
            };
            let sweep = verify_korn_like(
                scenario,
                &cfg.op,
                cfg.domain.l,
                &cfg.h_sweep,
                cfg.seed,
                sweep_mesh(&cfg),
            )?;
            sweep_outcome(cfg, sweep)
        }
        Command::VerifyThm14 | Command::VerifyThm18 => {
            let bc = if cfg.command == Command::VerifyThm14 {
                KornBc::DirichletEnds
            } else {
                KornBc::Periodic
            };
            let sweep = verify_strong_second_korn(
                &cfg.domain.family(),
                &cfg.h_sweep,
                bc,
                sweep_mesh(&cfg),
                &strong_options(&cfg),
            )?;
            sweep_outcome(cfg, sweep)
        }
        Command::KornFirst => {
            let sweep = verify_first_korn_scaling(
                &cfg.domain.family(),
                &cfg.h_sweep,
                cfg.bc,
                sweep_mesh(&cfg),
                &eigen_options(&cfg),
            )?;
            sweep_outcome(cfg, sweep)
        }
        Command::StrongRatio => {
            let h = require_h(&cfg)?;
            let d = cfg.domain.family().domain(h)?;
            let problem = KornProblem::new(&d, cfg.nx, cfg.ny, cfg.bc)?;
            let res = strong_ratio_sup_with(&problem, h, &strong_options(&cfg))?;
            let full = problem.expand(&res.field);
            let (u, v): (Vec<f64>, Vec<f64>) = full.chunks(2).map(|c| (c[0], c[1])).unzip();
            let mut table = Vec::new();
            problem
                .mesh
                .write_csv(&mut table, &["u", "v"], &[&u, &v])
                .map_err(|e| KornError::Io {
                    path: "<field>".into(),
                    source: e,
                })?;
            let record = json!({ "check": "strong_ratio", "h": h, "domain": d, "bc": cfg.bc, "result": res });
            Ok(Outcome {
                report: Report::new(cfg, vec![record]),
                sweep: None,
                table: Some(String::from_utf8_lossy(&table).into()),
            })
        }
        Command::Solve => {
            let h = require_h(&cfg)?;
            let d = cfg.domain.family().domain(h)?;
            let mesh = build_mesh(&d, cfg.nx, cfg.ny)?;
            let data = random_boundary_data(cfg.seed, cfg.domain.l);
            let sol = solve_elliptic(&OperatorSpec::Const(cfg.op.clone()), &mesh, &data)?;
            let q = |form: FormKind| -> Result<f64> {
                Ok(assemble(&mesh, &form, DEFAULT_QUAD_ORDER)?
                    .matrix
                    .quad_form(&sol.field))
            };
            let (grad, u_sq, ux_sq) = (
                q(FormKind::GradScalar)?,
                q(FormKind::MassScalar)?,
                q(FormKind::DxScalar)?,
            );
            let record = json!({
                "check": "elliptic_solve",
                "h": h,
                "domain": d,
                "grad_sq": grad,
                "u_sq": u_sq,
                "ux_sq": ux_sq,
                "ratio": korn_like_ratio(grad, u_sq, ux_sq, h)?,
                "residual": sol.residual,
            });
            let mut table = Vec::new();
            mesh.write_csv(&mut table, &["u"], &[&sol.field])
                .map_err(|e| KornError::Io {
                    path: "<field>".into(),
                    source: e,
                })?;
            Ok(Outcome {
                report: Report::new(cfg, vec![record]),
                sweep: None,
                table: Some(String::from_utf8_lossy(&table).into()),
            })
        }
        Command::MeshDump => {
            let h = require_h(&cfg)?;
            let d = cfg.domain.family().domain(h)?;
            let mesh = build_mesh(&d, cfg.nx, cfg.ny)?;
            let record = json!({ "check": "mesh", "h": h, "domain": d, "nx": cfg.nx, "ny": cfg.ny, "stats": mesh.stats() });
            let mut table = Vec::new();
            mesh.write_csv(&mut table, &[], &[])
                .map_err(|e| KornError::Io {
                    path: "<mesh>".into(),
                    source: e,
                })?;
            Ok(Outcome {
                report: Report::new(cfg, vec![record]),
                sweep: None,
                table: Some(String::from_utf8_lossy(&table).into()),
            })
        }
    }
}
