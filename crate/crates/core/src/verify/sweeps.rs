use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::cases::case_rng;
use super::report::{fit_scaling, SweepReport, SweepRow, Verdict};
use crate::analytic::Expr;
use crate::discretize::{assemble, build_mesh, FormKind, Mesh2D, DEFAULT_QUAD_ORDER};
use crate::error::{KornError, Result};
use crate::geometry::{Face, ProfileSpec, ThinDomain2D};
use crate::operators::{shear_transform, ConstCoeffOperator, OperatorSpec, ShearMap};
use crate::solve::{
    korn_first_constant_with, solve_elliptic, strong_ratio_sup_with, DirichletData, EigenOptions,
    KornBc, KornProblem, StrongRatioOptions,
};

/// Exponent window for quantities that stay bounded as `h -> 0`.
pub const BOUNDED_WINDOW: [f64; 2] = [-0.4, 0.4];
/// Exponent window for the first Korn constant, which grows like `h^-2`.
pub const FIRST_KORN_WINDOW: [f64; 2] = [-2.3, -1.7];
/// Slack on the fitted constant in the pointwise `K(h) <= C / h^2` check.
pub const FIRST_KORN_POINTWISE_SLACK: f64 = 1.1;
/// Largest relative gap between a sheared run and its flattened counterpart.
pub const HYPERPLANE_MATCH_TOL: f64 = 0.02;

/// Strips parametrized by the minimal thickness `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DomainFamily {
    /// `[0, h] x [0, l]`
    Rectangle { l: f64 },
    /// flat base, `phi2 = t (1 + r cos(2 pi y / l))` with `t = h / (1 - r)`
    CosineCap { l: f64, r: f64 },
    /// `phi1 = A cos(2 pi y / l)` with `sup |phi1'| = rho1`, `phi2 - phi1 = t (1 + r cos(2 pi y / l))`
    CurvedStrip { l: f64, rho1: f64, r: f64 },
}

impl DomainFamily {
    pub fn l(&self) -> f64 {
        match self {
            DomainFamily::Rectangle { l }
            | DomainFamily::CosineCap { l, .. }
            | DomainFamily::CurvedStrip { l, .. } => *l,
        }
    }

    pub fn domain(&self, h: f64) -> Result<ThinDomain2D> {
        match *self {
            DomainFamily::Rectangle { l } => ThinDomain2D::rectangle(h, l),
            DomainFamily::CosineCap { l, r } => {
                check_ratio(r)?;
                let t = h / (1.0 - r);
                ThinDomain2D::new(
                    l,
                    ProfileSpec::constant(0.0),
                    ProfileSpec::cosine(t, r * t, 2.0 * PI / l, 0.0),
                )
            }
            DomainFamily::CurvedStrip { l, rho1, r } => {
                check_ratio(r)?;
                let t = h / (1.0 - r);
                let freq = 2.0 * PI / l;
                let amp = rho1 / freq;
                ThinDomain2D::new(
                    l,
                    ProfileSpec::cosine(0.0, amp, freq, 0.0),
                    ProfileSpec::cosine(t, amp + r * t, freq, 0.0),
                )
            }
        }
    }
}

fn check_ratio(r: f64) -> Result<()> {
    if (0.0..1.0).contains(&r) {
        Ok(())
    } else {
        Err(KornError::InvalidDomain(format!(
            "thickness modulation must lie in [0, 1), got {r}"
        )))
    }
}

/// Mesh resolution along a sweep: `nx` across the thickness and
/// `ceil(ny_base * h_max / h)` along the axis, so elements keep their aspect ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMesh {
    pub nx: usize,
    pub ny_base: usize,
}

impl SweepMesh {
    pub fn ny(&self, h: f64, h_max: f64) -> usize {
        (self.ny_base as f64 * h_max / h - 1e-9).ceil() as usize
    }

    pub fn doubled(&self) -> Self {
        SweepMesh {
            nx: 2 * self.nx,
            ny_base: 2 * self.ny_base,
        }
    }
}

fn validate_sweep(h_sweep: &[f64]) -> Result<f64> {
    if h_sweep.len() < 3 {
        return Err(KornError::Config(format!(
            "a sweep needs at least 3 thickness values, got {}",
            h_sweep.len()
        )));
    }
    if h_sweep.iter().any(|h| !(*h > 0.0)) {
        return Err(KornError::Config(
            "thickness values must be positive".into(),
        ));
    }
    Ok(h_sweep.iter().copied().fold(0.0, f64::max))
}

/// Which family of elliptic problems a Korn-like sweep solves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum KornLikeScenario {
    /// straight strip `[0, h] x [0, l]`
    Cylinder,
    /// cosine cap over a flat base, see [`DomainFamily::CosineCap`]
    CurvedCap { r: f64 },
    /// strip between the parallel lines `x = a2 y` and `x = h + a2 y`; compared
    /// against the flattened problem on a rectangle
    Hyperplane { a2: f64 },
}

/// Number of sine modes in the random boundary trace.
pub const TRACE_MODES: usize = 4;

/// `sum_k c_k sin(k pi y / l)` with `c_k` in `[-1, 1] / k`.
pub fn random_trace<R: Rng>(rng: &mut R, l: f64) -> Expr {
    Expr::Add(
        (1..=TRACE_MODES)
            .map(|k| {
                let c = rng.gen_range(-1.0..1.0) / k as f64;
                Expr::c(c) * (Expr::c(k as f64 * PI / l) * Expr::Y).sin()
            })
            .collect(),
    )
}

/// Random traces on both profiles, zero on the axial faces.
pub fn random_boundary_data(seed: u64, l: f64) -> DirichletData {
    let mut rng = case_rng(seed);
    let lower = random_trace(&mut rng, l);
    let upper = random_trace(&mut rng, l);
    DirichletData::from_faces(vec![
        (Face::LowerProfile, lower),
        (Face::UpperProfile, upper),
        (Face::AxialStart, Expr::c(0.0)),
        (Face::AxialEnd, Expr::c(0.0)),
    ])
}

/// `|grad u|^2`, `|u|^2`, `|u_x|^2` of a nodal field; `grad_form` overrides the gradient form.
fn scalar_energies(mesh: &Mesh2D, field: &[f64], grad_form: &FormKind) -> Result<(f64, f64, f64)> {
    let q = |form: &FormKind| -> Result<f64> {
        Ok(assemble(mesh, form, DEFAULT_QUAD_ORDER)?
            .matrix
            .quad_form(field))
    };
    Ok((
        q(grad_form)?,
        q(&FormKind::MassScalar)?,
        q(&FormKind::DxScalar)?,
    ))
}

/// `R(h) = |grad u|^2 / ((1/h) |u| |u_x| + |u_x|^2)`.
pub fn korn_like_ratio(grad: f64, u_sq: f64, ux_sq: f64, h: f64) -> Result<f64> {
    let den = u_sq.sqrt() * ux_sq.sqrt() / h + ux_sq;
    if !(den > 0.0) {
        return Err(KornError::ZeroDenominator("u_x vanishes".into()));
    }
    Ok(grad / den)
}

/// Solves `L(u) = 0` with random profile traces and zero axial data for each `h`
/// and fits the Korn-like ratio `R(h)`.
pub fn verify_korn_like(
    scenario: KornLikeScenario,
    op: &ConstCoeffOperator,
    l: f64,
    h_sweep: &[f64],
    boundary_data_seed: u64,
    mesh: SweepMesh,
) -> Result<SweepReport> {
    let h_max = validate_sweep(h_sweep)?;
    let data = random_boundary_data(boundary_data_seed, l);
    let rows = h_sweep
        .par_iter()
        .map(|&h| -> Result<SweepRow> {
            let ny = mesh.ny(h, h_max);
            let domain = match scenario {
                KornLikeScenario::Cylinder => ThinDomain2D::rectangle(h, l)?,
                KornLikeScenario::CurvedCap { r } => DomainFamily::CosineCap { l, r }.domain(h)?,
                KornLikeScenario::Hyperplane { a2 } => {
                    ThinDomain2D::new(l, ProfileSpec::affine(0.0, a2), ProfileSpec::affine(h, a2))?
                }
            };
            let m = build_mesh(&domain, mesh.nx, ny)?;
            let sol = solve_elliptic(&OperatorSpec::Const(op.clone()), &m, &data)?;
            let (grad, u_sq, ux_sq) = scalar_energies(&m, &sol.field, &FormKind::GradScalar)?;
            let ratio = korn_like_ratio(grad, u_sq, ux_sq, h)?;
            let mut extra = BTreeMap::new();
            extra.insert("nx".into(), mesh.nx as f64);
            extra.insert("ny".into(), ny as f64);
            extra.insert("solve_residual".into(), sol.residual);
            if let KornLikeScenario::Hyperplane { a2 } = scenario {
                let flat = flattened_ratio(op, a2, l, h, mesh.nx, ny, &data)?;
                extra.insert("flattened_ratio".into(), flat);
                extra.insert(
                    "relative_difference".into(),
                    (ratio - flat).abs() / flat.abs(),
                );
            }
            Ok(SweepRow {
                h,
                lhs: grad,
                rhs: u_sq.sqrt() * ux_sq.sqrt() / h + ux_sq,
                ratio,
                extra,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let params = json!({
        "scenario": scenario,
        "op": op,
        "l": l,
        "h_sweep": h_sweep,
        "boundary_data_seed": boundary_data_seed,
        "mesh": mesh,
    });
    let mut report = SweepReport::from_rows("korn_like", rows, BOUNDED_WINDOW, params)?;
    if matches!(scenario, KornLikeScenario::Hyperplane { .. }) {
        let worst = report
            .rows
            .iter()
            .map(|r| r.extra["relative_difference"])
            .fold(0.0, f64::max);
        report
            .summary
            .insert("max_relative_difference".into(), worst);
        if !(worst < HYPERPLANE_MATCH_TOL) {
            report.verdict = Verdict::Fails;
        }
    }
    Ok(report)
}

/// Same problem after the shear `x1 = x - a2 y`: a rectangle with operator
/// `S A S^T` and gradient energy `grad u1 . B grad u1`, `B = [[1 + a2^2, -a2], [-a2, 1]]`.
fn flattened_ratio(
    op: &ConstCoeffOperator,
    a2: f64,
    l: f64,
    h: f64,
    nx: usize,
    ny: usize,
    data: &DirichletData,
) -> Result<f64> {
    let transformed = shear_transform(op, &ShearMap::new(vec![0.0, a2]))?;
    let rect = ThinDomain2D::rectangle(h, l)?;
    let m = build_mesh(&rect, nx, ny)?;
    let sol = solve_elliptic(&OperatorSpec::Const(transformed.op), &m, data)?;
    let metric = ConstCoeffOperator::new(vec![vec![1.0 + a2 * a2, -a2], vec![-a2, 1.0]])?;
    let (grad, u_sq, ux_sq) =
        scalar_energies(&m, &sol.field, &FormKind::OperatorEnergy { op: metric })?;
    korn_like_ratio(grad, u_sq, ux_sq, h)
}

/// Fits the maximal strong-ratio `R*(h)` over the sweep.
pub fn verify_strong_second_korn(
    family: &DomainFamily,
    h_sweep: &[f64],
    bc: KornBc,
    mesh: SweepMesh,
    opts: &StrongRatioOptions,
) -> Result<SweepReport> {
    let h_max = validate_sweep(h_sweep)?;
    let rows = h_sweep
        .par_iter()
        .map(|&h| -> Result<SweepRow> {
            let d = family.domain(h)?;
            if bc == KornBc::Periodic && !d.is_periodic_compatible() {
                return Err(KornError::PeriodicIncompatibleProfiles(format!(
                    "{family:?} at h = {h}"
                )));
            }
            let problem = KornProblem::new(&d, mesh.nx, mesh.ny(h, h_max), bc)?;
            let res = strong_ratio_sup_with(&problem, h, opts)?;
            let e = problem.energies(&res.field);
            let mut extra = BTreeMap::new();
            extra.insert("t_star".into(), res.t_star);
            extra.insert("probe".into(), res.probe);
            extra.insert("eigen_residual".into(), res.residual);
            extra.insert("eigen_iterations".into(), res.eig_iterations as f64);
            extra.insert("nx".into(), res.nx as f64);
            extra.insert("ny".into(), res.ny as f64);
            extra.insert("dofs".into(), res.dofs as f64);
            Ok(SweepRow {
                h,
                lhs: e.grad,
                rhs: e.u_sq.sqrt() * e.strain.sqrt() / h + e.strain,
                ratio: res.r_star,
                extra,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let params =
        json!({ "family": family, "h_sweep": h_sweep, "bc": bc, "mesh": mesh, "options": opts });
    SweepReport::from_rows("strong_second_korn", rows, BOUNDED_WINDOW, params)
}

/// Fits `K(h)` against `h^-2`, checks `K(h) <= 1.1 C_fit / h^2` at every point
/// and reports the scaling of the Friedrichs quotient `|u|^2 / |grad U|^2`.
pub fn verify_first_korn_scaling(
    family: &DomainFamily,
    h_sweep: &[f64],
    bc: KornBc,
    mesh: SweepMesh,
    opts: &EigenOptions,
) -> Result<SweepReport> {
    let h_max = validate_sweep(h_sweep)?;
    let rows = h_sweep
        .par_iter()
        .map(|&h| -> Result<SweepRow> {
            let d = family.domain(h)?;
            if bc == KornBc::Periodic && !d.is_periodic_compatible() {
                return Err(KornError::PeriodicIncompatibleProfiles(format!(
                    "{family:?} at h = {h}"
                )));
            }
            let problem = KornProblem::new(&d, mesh.nx, mesh.ny(h, h_max), bc)?;
            let res = korn_first_constant_with(&problem, opts)?;
            let e = problem.energies(&res.field);
            let mut extra = BTreeMap::new();
            extra.insert("eigen_residual".into(), res.residual);
            extra.insert("eigen_iterations".into(), res.iterations as f64);
            extra.insert("friedrichs".into(), res.friedrichs);
            extra.insert("nx".into(), res.nx as f64);
            extra.insert("ny".into(), res.ny as f64);
            extra.insert("dofs".into(), res.dofs as f64);
            Ok(SweepRow {
                h,
                lhs: e.grad,
                rhs: e.strain,
                ratio: res.k,
                extra,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let params =
        json!({ "family": family, "h_sweep": h_sweep, "bc": bc, "mesh": mesh, "options": opts });
    let mut report = SweepReport::from_rows("first_korn", rows, FIRST_KORN_WINDOW, params)?;
    // C_fit: geometric mean of K h^2
    let c_fit = (report
        .rows
        .iter()
        .map(|r| (r.ratio * r.h * r.h).ln())
        .sum::<f64>()
        / report.rows.len() as f64)
        .exp();
    let pointwise = report
        .rows
        .iter()
        .all(|r| r.ratio <= FIRST_KORN_POINTWISE_SLACK * c_fit / (r.h * r.h));
    let friedrichs = fit_scaling(
        &report
            .rows
            .iter()
            .map(|r| (r.h, r.extra["friedrichs"]))
            .collect::<Vec<_>>(),
    )?;
    report.summary.insert("c_fit".into(), c_fit);
    report.summary.insert(
        "pointwise_bound_holds".into(),
        if pointwise { 1.0 } else { 0.0 },
    );
    report
        .summary
        .insert("friedrichs_exponent".into(), friedrichs.exponent);
    if !pointwise {
        report.verdict = Verdict::Fails;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_have_requested_thickness() {
        for fam in [
            DomainFamily::Rectangle { l: 1.0 },
            DomainFamily::CosineCap { l: 1.0, r: 0.2 },
            DomainFamily::CurvedStrip {
                l: 1.0,
                rho1: 0.3,
                r: 0.2,
            },
        ] {
            let d = fam.domain(0.05).unwrap();
            assert!((d.metrics().h - 0.05).abs() < 1e-12, "{fam:?}");
            assert!(d.is_periodic_compatible());
        }
        let d = DomainFamily::CurvedStrip {
            l: 2.0,
            rho1: 0.3,
            r: 0.0,
        }
        .domain(0.1)
        .unwrap();
        assert!((d.metrics().rho1 - 0.3).abs() < 1e-6);
    }

    #[test]
    fn axial_resolution_scales_with_inverse_thickness() {
        let m = SweepMesh { nx: 8, ny_base: 16 };
        assert_eq!(m.ny(0.2, 0.2), 16);
        assert_eq!(m.ny(0.1, 0.2), 32);
        assert_eq!(m.ny(0.025, 0.2), 128);
    }

    #[test]
    fn hyperplane_matches_flattened_problem() {
        let op = ConstCoeffOperator::diagonal(&[1.0, 2.0]);
        let rep = verify_korn_like(
            KornLikeScenario::Hyperplane { a2: 0.5 },
            &op,
            1.0,
            &[0.2, 0.1, 0.05],
            3,
            SweepMesh { nx: 4, ny_base: 16 },
        )
        .unwrap();
        assert!(rep.summary["max_relative_difference"] < 1e-8);
    }

    #[test]
    fn short_sweep_rejected() {
        let r = verify_korn_like(
            KornLikeScenario::Cylinder,
            &ConstCoeffOperator::laplacian(2),
            1.0,
            &[0.1, 0.05],
            0,
            SweepMesh { nx: 4, ny_base: 8 },
        );
        assert!(matches!(r, Err(KornError::Config(_))));
    }
}
