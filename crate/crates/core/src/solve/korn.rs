use serde::{Deserialize, Serialize};

use super::eigen::{smallest_generalized_eig, EigenOptions, Pencil};
use crate::discretize::{
    assemble, build_mesh, constrain, ConstrainedSpace, Constraint, FormKind, Mesh2D,
    DEFAULT_QUAD_ORDER,
};
use crate::error::{KornError, Result};
use crate::geometry::{BoundarySelector, Face, ThinDomain2D};
use crate::sparse::CsrMatrix;

/// Admissible displacement spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KornBc {
    /// `u = 0` on both axial faces; constant `v` removed.
    DirichletEnds,
    /// `u` periodic in `y`; constant `u` and `v` removed.
    Periodic,
}

impl KornBc {
    pub fn constraints(&self) -> Vec<Constraint> {
        match self {
            KornBc::DirichletEnds => vec![
                Constraint::Dirichlet {
                    faces: BoundarySelector::of(&[Face::AxialStart, Face::AxialEnd]),
                    mask: [true, false],
                },
                Constraint::DeflateConstants {
                    mask: [false, true],
                },
            ],
            KornBc::Periodic => vec![
                Constraint::PeriodicAxial {
                    mask: [true, false],
                },
                Constraint::DeflateConstants { mask: [true, true] },
            ],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dirichlet-ends" => Ok(KornBc::DirichletEnds),
            "periodic" => Ok(KornBc::Periodic),
            other => Err(KornError::Config(format!(
                "unknown boundary condition '{other}'"
            ))),
        }
    }
}

/// Reduced gradient, strain and `u`-mass matrices on a constrained displacement space.
pub struct KornProblem {
    pub mesh: Mesh2D,
    pub bc: KornBc,
    pub space: ConstrainedSpace,
    pub grad: CsrMatrix,
    pub strain: CsrMatrix,
    pub mass_u: CsrMatrix,
}

/// Quadratic functionals of a displacement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    /// `|grad U|^2`
    pub grad: f64,
    /// `|e(U)|^2`
    pub strain: f64,
    /// `|u|^2`
    pub u_sq: f64,
}

impl KornProblem {
    pub fn new(d: &ThinDomain2D, nx: usize, ny: usize, bc: KornBc) -> Result<Self> {
        let mesh = build_mesh(d, nx, ny)?;
        let space = constrain(&mesh, 2, &bc.constraints())?;
        let grad =
            space.reduce(&assemble(&mesh, &FormKind::GradVector, DEFAULT_QUAD_ORDER)?.matrix);
        let strain = space.reduce(&assemble(&mesh, &FormKind::Strain, DEFAULT_QUAD_ORDER)?.matrix);
        let mass_u = space.reduce(
            &assemble(
                &mesh,
                &FormKind::MassComponent { component: 0 },
                DEFAULT_QUAD_ORDER,
            )?
            .matrix,
        );
        Ok(KornProblem {
            mesh,
            bc,
            space,
            grad,
            strain,
            mass_u,
        })
    }

    pub fn dofs(&self) -> usize {
        self.space.n()
    }

    pub fn energies(&self, c: &[f64]) -> Energies {
        Energies {
            grad: self.grad.quad_form(c),
            strain: self.strain.quad_form(c),
            u_sq: self.mass_u.quad_form(c),
        }
    }

    /// `|grad U|^2 / ((1/h) |u| |e(U)| + |e(U)|^2)` for reduced coefficients `c`.
    pub fn strong_ratio(&self, c: &[f64], h: f64) -> Result<f64> {
        let viol = self.space.constraint_violation(c);
        if viol > 1e-8 {
            return Err(KornError::ZeroDenominator(format!(
                "field has a component along the removed constant modes (violation {viol:e})"
            )));
        }
        let e = self.energies(c);
        let den = e.u_sq.sqrt() * e.strain.sqrt() / h + e.strain;
        if !(den > 0.0) {
            return Err(KornError::ZeroDenominator("strain energy vanishes".into()));
        }
        Ok(e.grad / den)
    }

    /// `(t / 2h) M_u + (1 / (2 h t) + 1) S`
    pub fn mixed_denominator(&self, t: f64, h: f64) -> CsrMatrix {
        self.mass_u
            .lin_comb(t / (2.0 * h), &self.strain, 1.0 / (2.0 * h * t) + 1.0)
    }

    /// Full nodal field `(u, v)` interleaved, from reduced coefficients.
    pub fn expand(&self, c: &[f64]) -> Vec<f64> {
        self.space.map.expand(c)
    }
}

/// Optimal first Korn constant on a mesh.
#[derive(Clone, Debug, Serialize)]
pub struct KornResult {
    /// `K = 1 / mu_min`
    pub k: f64,
    pub mu: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `|u|^2 / |grad U|^2` of the extremal field
    pub friedrichs: f64,
    pub nx: usize,
    pub ny: usize,
    pub dofs: usize,
    /// Reduced coefficients of the extremal field; see [`KornProblem::expand`].
    #[serde(skip)]
    pub field: Vec<f64>,
}

pub fn korn_first_constant(
    d: &ThinDomain2D,
    nx: usize,
    ny: usize,
    bc: KornBc,
) -> Result<KornResult> {
    korn_first_constant_with(&KornProblem::new(d, nx, ny, bc)?, &EigenOptions::default())
}

/// Smallest eigenvalue of the (strain, gradient) pencil.
pub fn korn_first_constant_with(problem: &KornProblem, opts: &EigenOptions) -> Result<KornResult> {
    let pencil = Pencil {
        numerator: &problem.strain,
        denominator: &problem.grad,
        space: &problem.space,
    };
    let r = smallest_generalized_eig(&pencil, opts)?;
    let e = problem.energies(&r.vector);
    Ok(KornResult {
        k: 1.0 / r.value,
        mu: r.value,
        residual: r.residual,
        iterations: r.iterations,
        friedrichs: e.u_sq / e.grad,
        nx: problem.mesh.nx,
        ny: problem.mesh.ny,
        dofs: problem.dofs(),
        field: r.vector,
    })
}

/// Coarse intervals whose larger end reaches this fraction of the coarse
/// maximum are subdivided.
pub const DENSIFY_FRACTION: f64 = 0.9;
/// Subintervals per densified coarse interval.
pub const DENSIFY_SUBSTEPS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongRatioOptions {
    /// Grid points on `log10 t` in `[log_t_min, log_t_max]`.
    pub grid_points: usize,
    pub log_t_min: f64,
    pub log_t_max: f64,
    /// Golden-section tolerance in `log10 t`.
    pub golden_tol: f64,
    pub eig: EigenOptions,
}

impl Default for StrongRatioOptions {
    fn default() -> Self {
        StrongRatioOptions {
            grid_points: 33,
            log_t_min: -8.0,
            log_t_max: 8.0,
            golden_tol: 1e-5,
            eig: EigenOptions::default(),
        }
    }
}

/// Maximized strong-ratio functional.
#[derive(Clone, Debug, Serialize)]
pub struct StrongRatioResult {
    pub r_star: f64,
    pub t_star: f64,
    /// Ratio evaluated directly on the maximizing field.
    pub probe: f64,
    /// `(t, max_U |grad U|^2 / Q_t(U))` at every evaluated `t`, in evaluation order.
    pub trace: Vec<(f64, f64)>,
    pub residual: f64,
    pub eig_iterations: usize,
    pub nx: usize,
    pub ny: usize,
    pub dofs: usize,
    /// Reduced coefficients of the extremal field; see [`KornProblem::expand`].
    #[serde(skip)]
    pub field: Vec<f64>,
}

pub fn strong_ratio_sup(
    d: &ThinDomain2D,
    nx: usize,
    ny: usize,
    bc: KornBc,
    h: f64,
) -> Result<StrongRatioResult> {
    strong_ratio_sup_with(
        &KornProblem::new(d, nx, ny, bc)?,
        h,
        &StrongRatioOptions::default(),
    )
}

/// `R* = max_t lambda_max(grad, Q_t)` where
/// `Q_t = (t / 2h) |u|^2 + (1 / (2ht) + 1) |e|^2`, using
/// `|u| |e| = min_t (t |u|^2 + |e|^2 / t) / 2`.
pub fn strong_ratio_sup_with(
    problem: &KornProblem,
    h: f64,
    opts: &StrongRatioOptions,
) -> Result<StrongRatioResult> {
    if !(h > 0.0) {
        return Err(KornError::Config(format!("h must be positive, got {h}")));
    }
    if opts.grid_points < 3 || !(opts.log_t_max > opts.log_t_min) {
        return Err(KornError::Config(
            "t-grid needs at least 3 points on a non-empty range".into(),
        ));
    }
    let mut trace = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut iterations = 0;
    let mut eval = |log_t: f64, trace: &mut Vec<(f64, f64)>| -> Result<(f64, Vec<f64>)> {
        let t = 10f64.powf(log_t);
        let dt = problem.mixed_denominator(t, h);
        let pencil = Pencil {
            numerator: &dt,
            denominator: &problem.grad,
            space: &problem.space,
        };
        let r = smallest_generalized_eig(&pencil, &opts.eig)?;
        max_residual = max_residual.max(r.residual);
        iterations += r.iterations;
        let value = 1.0 / r.value;
        trace.push((t, value));
        Ok((value, r.vector))
    };

    let step = (opts.log_t_max - opts.log_t_min) / (opts.grid_points - 1) as f64;
    let mut grid: Vec<(f64, f64, Vec<f64>)> = Vec::with_capacity(opts.grid_points);
    for k in 0..opts.grid_points {
        let lt = opts.log_t_min + k as f64 * step;
        let (v, u) = eval(lt, &mut trace)?;
        grid.push((lt, v, u));
    }
    // The profile in log t is a maximum over eigen-branches whose peaks sit at
    // different t, so it is multimodal and a narrow peak can hide between two
    // coarse points. Intervals near the top are subdivided before refining.
    let coarse_best = grid.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    let mut extra = Vec::new();
    for w in grid.windows(2) {
        if w[0].1.max(w[1].1) >= DENSIFY_FRACTION * coarse_best {
            for s in 1..DENSIFY_SUBSTEPS {
                let lt = w[0].0 + (w[1].0 - w[0].0) * s as f64 / DENSIFY_SUBSTEPS as f64;
                let (v, u) = eval(lt, &mut trace)?;
                extra.push((lt, v, u));
            }
        }
    }
    grid.extend(extra);
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (mut best_lt, mut best_v, mut best_field) = (0.0, f64::NEG_INFINITY, Vec::new());
    for g in &grid {
        if g.1 > best_v {
            (best_lt, best_v, best_field) = (g.0, g.1, g.2.clone());
        }
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let n = grid.len();
    let peaks: Vec<usize> = (0..n)
        .filter(|&k| {
            (k == 0 || grid[k].1 >= grid[k - 1].1)
                && (k + 1 == n || grid[k].1 >= grid[k + 1].1)
                && grid[k].1 >= DENSIFY_FRACTION * coarse_best
        })
        .collect();
    for k in peaks {
        let mut lo = grid[k.saturating_sub(1)].0;
        let mut hi = grid[(k + 1).min(n - 1)].0;
        let mut c = hi - INV_PHI * (hi - lo);
        let mut d = lo + INV_PHI * (hi - lo);
        let (mut fc, mut uc) = eval(c, &mut trace)?;
        let (mut fd, mut ud) = eval(d, &mut trace)?;
        while hi - lo > opts.golden_tol {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                ud = uc;
                c = hi - INV_PHI * (hi - lo);
                (fc, uc) = eval(c, &mut trace)?;
            } else {
                lo = c;
                c = d;
                fc = fd;
                uc = ud;
                d = lo + INV_PHI * (hi - lo);
                (fd, ud) = eval(d, &mut trace)?;
            }
        }
        for (lt, v, u) in [(c, fc, uc), (d, fd, ud)] {
            if v > best_v {
                (best_lt, best_v, best_field) = (lt, v, u);
            }
        }
    }
    let probe = problem.strong_ratio(&best_field, h)?;
    Ok(StrongRatioResult {
        r_star: best_v,
        t_star: 10f64.powf(best_lt),
        probe,
        trace,
        residual: max_residual,
        eig_iterations: iterations,
        nx: problem.mesh.nx,
        ny: problem.mesh.ny,
        dofs: problem.dofs(),
        field: best_field,
    })
}
