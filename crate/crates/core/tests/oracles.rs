//! Reference values: closed forms, dense brute-force solves and frozen
//! quadrature results at doubled resolution.

// frozen values are pasted as printed
#![allow(clippy::excessive_precision)]

mod common;

use std::f64::consts::PI;

use common::rel_diff;
use korn_lab::analytic::Expr;
use korn_lab::ansatz::{cosh_sine_field, default_bump, rigid_field, shear_ansatz, ShearVariant};
use korn_lab::discretize::{
    assemble, build_mesh, interpolate_scalar, interpolate_vector, FormKind, DEFAULT_QUAD_ORDER,
};
use korn_lab::geometry::{BoundarySelector, Face, ProfileSpec, ThinDomain2D};
use korn_lab::operators::{ConstCoeffOperator, VarCoeffOperatorLa};
use korn_lab::solve::{
    dense_constrained_eigenvalues, korn_first_constant_with, strong_ratio_sup_with, EigenOptions,
    KornBc, KornProblem, Pencil, StrongRatioOptions,
};
use korn_lab::verify::*;

fn dense_korn_constant(problem: &KornProblem) -> f64 {
    let pencil = Pencil {
        numerator: &problem.strain,
        denominator: &problem.grad,
        space: &problem.space,
    };
    1.0 / dense_constrained_eigenvalues(&pencil).unwrap()[0]
}

#[test]
fn hardy_closed_form_examples() {
    let r = check_hardy(&Expr::c(1.0), 1.0, 2.0, 0.5, 64).unwrap();
    assert!((r.lhs - 0.5).abs() < 1e-14 && (r.rhs - 2.0).abs() < 1e-14);
    assert_eq!(r.verdict, Verdict::Holds);
    // f(t) = t - 1 on [1, 2]: lhs = 7/24, rhs = 1/6 + 4/3
    let r = check_hardy(&(Expr::X - Expr::c(1.0)), 1.0, 2.0, 0.5, 64).unwrap();
    assert!((r.lhs - 7.0 / 24.0).abs() < 1e-14);
    assert!((r.rhs - 1.5).abs() < 1e-14);
    assert!(r.holds());
}

#[test]
fn hardy_random_suite_holds_at_doubled_resolution() {
    for i in 0..200u64 {
        let case = random_hardy_case(i);
        let coarse = case.run(64).unwrap();
        let fine = case.run(128).unwrap();
        assert!(coarse.holds() && fine.holds(), "seed {i}");
        assert!(
            rel_diff(coarse.lhs, fine.lhs) < 1e-10 && rel_diff(coarse.rhs, fine.rhs) < 1e-10,
            "seed {i}"
        );
    }
}

#[test]
fn weighted_gradient_reference_field() {
    // sin(pi x)(1 + y^2) on the unit square vanishes on the profile faces
    let d = ThinDomain2D::rectangle(1.0, 1.0).unwrap();
    let f = (Expr::c(PI) * Expr::X).sin() * (Expr::c(1.0) + Expr::Y.powi(2));
    let r = check_weighted_gradient(
        &f,
        &ConstCoeffOperator::laplacian(2),
        &d,
        &BoundarySelector::axial(),
        16,
    )
    .unwrap();
    assert!(r.holds());
    assert!(
        rel_diff(r.lhs, 7.251029814737830e-1) < 1e-10,
        "lhs {}",
        r.lhs
    );
    assert!(
        rel_diff(r.rhs, 9.090567073132179e0) < 1e-10,
        "rhs {}",
        r.rhs
    );
    assert!(r.quad_change < 1e-12);
    assert_eq!(r.constants["4n*Lambda^2/lambda^2+1"], 9.0);
    assert_eq!(r.constants["1/lambda^2"], 1.0);
}

#[test]
fn weighted_gradient_la_reference_field() {
    let d = ThinDomain2D::rectangle(0.3, 1.0).unwrap();
    let la = VarCoeffOperatorLa::new(ProfileSpec::constant(0.5));
    let f = cutoff(&d, &BoundarySelector::axial()) * (Expr::c(2.0 * PI) * Expr::Y).sin() * Expr::X;
    let r = check_weighted_gradient_la(&f, &la, &d, &BoundarySelector::profiles(), 16).unwrap();
    assert!(r.holds());
    assert!(
        rel_diff(r.lhs, 8.415225144158789e-5) < 1e-9,
        "lhs {}",
        r.lhs
    );
    assert!(
        rel_diff(r.rhs, 3.841383308838017e-2) < 1e-9,
        "rhs {}",
        r.rhs
    );
    assert!(rel_diff(r.constants["C"], 155.02017526388533) < 1e-12);
    assert_eq!(r.constants["boundary_term"], 0.0);
}

#[test]
fn periodic_boundary_contributions_cancel() {
    let d = ThinDomain2D::rectangle(0.3, 1.0).unwrap();
    let la = VarCoeffOperatorLa::new(ProfileSpec::cosine(0.0, 0.3, 2.0 * PI, 0.0));
    let f = (Expr::c(2.0 * PI) * Expr::Y).cos() * (Expr::c(1.0) + Expr::X) + Expr::X.powi(2);
    let terms = boundary_terms(&f, &la, &d, &BoundarySelector::profiles(), 16).unwrap();
    let at = |face: Face| terms.iter().find(|t| t.0 == face).unwrap().1;
    assert!(at(Face::AxialStart).abs() > 1e-3);
    assert!((at(Face::AxialStart) + at(Face::AxialEnd)).abs() < 1e-10);
    assert!(
        check_boundary_integral(&f, &la, &d, &BoundarySelector::profiles(), 16)
            .unwrap()
            .abs()
            < 1e-10
    );
}

#[test]
fn generic_field_has_nonzero_boundary_term() {
    let d = ThinDomain2D::rectangle(0.3, 1.0).unwrap();
    let la = VarCoeffOperatorLa::new(ProfileSpec::cosine(0.0, 0.3, 2.0 * PI, 0.0));
    let f = Expr::X + Expr::Y.powi(2);
    let v = check_boundary_integral(&f, &la, &d, &BoundarySelector::profiles(), 16).unwrap();
    assert!((v - 3.825e-3).abs() < 1e-12, "boundary term {v}");
    let r = check_weighted_gradient_la(&f, &la, &d, &BoundarySelector::profiles(), 16);
    assert!(matches!(
        r,
        Err(korn_lab::KornError::BoundaryConditionViolated { .. })
    ));
}

#[test]
fn korn_constant_matches_dense_oracle_on_thin_rectangle() {
    let d = ThinDomain2D::rectangle(0.1, 1.0).unwrap();
    let p = KornProblem::new(&d, 8, 32, KornBc::DirichletEnds).unwrap();
    let k = korn_first_constant_with(&p, &EigenOptions::default())
        .unwrap()
        .k;
    let dense = dense_korn_constant(&p);
    assert!(rel_diff(k, dense) < 1e-8, "{k} vs {dense}");
    assert!(rel_diff(dense, 2.341972769677944e2) < 1e-9);
}

#[test]
fn square_korn_constant_is_order_one() {
    let d = ThinDomain2D::rectangle(1.0, 1.0).unwrap();
    let p = KornProblem::new(&d, 32, 32, KornBc::DirichletEnds).unwrap();
    let k = korn_first_constant_with(&p, &EigenOptions::default())
        .unwrap()
        .k;
    assert!(rel_diff(k, 5.481581219882900) < 1e-7, "K {k}");
    assert!(k <= 100.0);
    let coarse = KornProblem::new(&d, 16, 16, KornBc::DirichletEnds).unwrap();
    let kc = korn_first_constant_with(&coarse, &EigenOptions::default())
        .unwrap()
        .k;
    assert!(rel_diff(kc, dense_korn_constant(&coarse)) < 1e-8);
}

#[test]
fn curved_family_korn_exponent() {
    let fam = DomainFamily::CurvedStrip {
        l: 1.0,
        rho1: 0.3,
        r: 0.2,
    };
    let rep = verify_first_korn_scaling(
        &fam,
        &[0.2, 0.1, 0.05, 0.025],
        KornBc::DirichletEnds,
        SweepMesh { nx: 8, ny_base: 64 },
        &EigenOptions::default(),
    )
    .unwrap();
    assert!(rep.holds());
    assert!(
        (rep.fit.exponent - (-1.9382276034908377)).abs() < 1e-6,
        "exponent {}",
        rep.fit.exponent
    );
}

#[test]
fn strong_ratio_maximum_confirmed_by_dense_t_grid() {
    let fam = DomainFamily::Rectangle { l: 1.0 };
    let dense_grid = StrongRatioOptions {
        grid_points: 321,
        ..StrongRatioOptions::default()
    };
    for h in [0.2, 0.1, 0.05] {
        let d = fam.domain(h).unwrap();
        let p = KornProblem::new(
            &d,
            8,
            SweepMesh { nx: 8, ny_base: 16 }.ny(h, 0.2),
            KornBc::DirichletEnds,
        )
        .unwrap();
        let r = strong_ratio_sup_with(&p, h, &StrongRatioOptions::default()).unwrap();
        let oracle = strong_ratio_sup_with(&p, h, &dense_grid).unwrap();
        assert!(
            rel_diff(r.r_star, oracle.r_star) < 1e-6,
            "h {h}: {} vs {}",
            r.r_star,
            oracle.r_star
        );
        assert!(rel_diff(r.probe, r.r_star) < 1e-6);
    }
}

#[test]
fn cosh_sine_energies_match_closed_forms() {
    let h = 0.1;
    let c = cosh_sine_field(h, 0.0, 1.0).unwrap();
    let (k, s) = (PI, (PI * h).sinh());
    // integrals of cosh^2, sinh^2 over [0, h] times 1/2 from sin^2 or cos^2 over [0, 1]
    let norm = 0.5 * (h / 2.0 + s / (2.0 * k));
    let dx = 0.5 * k * k * (s / (2.0 * k) - h / 2.0);
    let dy = k * k * norm;
    assert!(rel_diff(c.norm_sq(), norm) < 1e-13);
    assert!(rel_diff(c.dx_sq(), dx) < 1e-13);
    assert!(rel_diff(c.grad_sq(), dx + dy) < 1e-13);
    assert!(rel_diff(c.korn_like_ratio(), 3.401508283133144) < 1e-12);
    let q = c.quadrature_energies(16, 8);
    assert!(
        rel_diff(q[0], norm) < 1e-12
            && rel_diff(q[1], dx) < 1e-12
            && rel_diff(q[2], dx + dy) < 1e-12
    );
}

#[test]
fn cosh_sine_is_harmonic_at_random_points() {
    use rand::Rng;
    let c = cosh_sine_field(0.2, 0.3, 1.7).unwrap();
    let mut rng = case_rng(3);
    for _ in 0..10_000 {
        let (x, y) = (rng.gen_range(0.0..0.2), rng.gen_range(0.3..1.7));
        let lap = c.expr.jet(x, y).laplacian();
        assert!(lap.abs() < 1e-12, "laplacian {lap} at ({x}, {y})");
    }
    for x in [0.0, 0.05, 0.2] {
        assert!(c.expr.value(x, 0.3).abs() < 1e-14 && c.expr.value(x, 1.7).abs() < 1e-14);
    }
}

#[test]
fn shear_ansatz_reference_energies() {
    let (bump, support) = default_bump(1.0);
    let direct = shear_ansatz(&bump, Some(support), 0.5, 0.0, ShearVariant::Direct).unwrap();
    let (e, change) = direct.energies(&ThinDomain2D::rectangle(0.5, 1.0).unwrap(), 16);
    assert!(change < 1e-10);
    assert!(rel_diff(e.grad, 1.2344432024080218e-3) < 1e-9);
    assert!(rel_diff(e.strain, 6.628350581902125e-4) < 1e-9);
    assert!(rel_diff(e.u_sq, 4.8493320766794336e-5) < 1e-9);
    let kirchhoff = shear_ansatz(&bump, Some(support), 0.1, 0.5, ShearVariant::Kirchhoff).unwrap();
    let (e, _) = kirchhoff.energies(&ThinDomain2D::rectangle(0.1, 1.0).unwrap(), 16);
    assert!(rel_diff(e.grad, 2.8899623183708846e-3) < 1e-9);
    assert!(rel_diff(e.strain, 1.5052351244779453e-3) < 1e-9);
    assert!(rel_diff(e.u_sq, 3.066986898564249e-6) < 1e-9);
}

fn interpolated_energy_errors(
    field: &korn_lab::ansatz::AnalyticVectorField,
    d: &ThinDomain2D,
    nx: usize,
    ny: usize,
) -> [f64; 3] {
    let (exact, _) = field.energies(d, 16);
    let mesh = build_mesh(d, nx, ny).unwrap();
    let nodal = interpolate_vector(&mesh, |x, y| {
        let (u, _) = field.eval(x, y);
        (u[0], u[1])
    });
    let q = |form: FormKind| {
        assemble(&mesh, &form, DEFAULT_QUAD_ORDER)
            .unwrap()
            .matrix
            .quad_form(&nodal)
    };
    [
        rel_diff(q(FormKind::GradVector), exact.grad),
        rel_diff(q(FormKind::Strain), exact.strain),
        rel_diff(q(FormKind::MassComponent { component: 0 }), exact.u_sq),
    ]
}

#[test]
fn interpolated_ansatz_energies_agree_with_quadrature() {
    let d = ThinDomain2D::rectangle(0.1, 1.0).unwrap();
    let (bump, support) = default_bump(1.0);
    for variant in [ShearVariant::Direct, ShearVariant::Kirchhoff] {
        let field = shear_ansatz(&bump, Some(support), 0.1, 0.0, variant).unwrap();
        let errs = interpolated_energy_errors(&field, &d, 64, 64);
        assert!(errs.iter().all(|e| *e < 0.01), "{variant:?}: {errs:?}");
    }
    // the compressed support of alpha = 1/2 is resolved at second order
    let field = shear_ansatz(&bump, Some(support), 0.1, 0.5, ShearVariant::Kirchhoff).unwrap();
    let coarse = interpolated_energy_errors(&field, &d, 8, 128);
    let fine = interpolated_energy_errors(&field, &d, 8, 256);
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(*f < 0.01 && (c / f).log2() > 1.7, "{coarse:?} -> {fine:?}");
    }

    let mesh = build_mesh(&d, 64, 64).unwrap();
    let c = cosh_sine_field(0.1, 0.0, 1.0).unwrap();
    let nodal = interpolate_scalar(&mesh, |x, y| c.expr.value(x, y));
    let q = |form: FormKind| {
        assemble(&mesh, &form, DEFAULT_QUAD_ORDER)
            .unwrap()
            .matrix
            .quad_form(&nodal)
    };
    assert!(rel_diff(q(FormKind::MassScalar), c.norm_sq()) < 0.01);
    assert!(rel_diff(q(FormKind::DxScalar), c.dx_sq()) < 0.01);
    assert!(rel_diff(q(FormKind::GradScalar), c.grad_sq()) < 0.01);
}

#[test]
fn rigid_field_gradient_energy_is_twice_omega_squared_area() {
    let d = ThinDomain2D::new(
        1.3,
        ProfileSpec::constant(0.0),
        ProfileSpec::cosine(0.2, 0.05, 2.0 * PI / 1.3, 0.0),
    )
    .unwrap();
    let omega = 0.7;
    let (e, _) = rigid_field([0.3, -1.2], omega).energies(&d, 16);
    // the cosine averages out over a full period, so the area is 0.2 * 1.3
    assert!(rel_diff(e.grad, 2.0 * omega * omega * 0.26) < 1e-12);
    assert!(e.strain <= 1e-14);
    let (e, _) = rigid_field([0.3, -1.2], 0.0).energies(&d, 16);
    assert_eq!(e.grad, 0.0);
}

#[test]
fn noisy_power_law_fit() {
    use rand::Rng;
    let mut rng = case_rng(11);
    let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&h: &f64| (h, h.powi(-2) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))))
        .collect();
    let fit = fit_scaling(&pts).unwrap();
    assert!(
        (fit.exponent + 2.0).abs() < 0.05,
        "exponent {}",
        fit.exponent
    );
}

#[test]
fn korn_like_exponent_stable_under_mesh_doubling() {
    let mut rng = case_rng(5);
    let op = random_operator(&mut rng);
    let mesh = SweepMesh { nx: 8, ny_base: 32 };
    let hs = [0.2, 0.1, 0.05, 0.025];
    let scenario = KornLikeScenario::CurvedCap { r: 0.2 };
    let coarse = verify_korn_like(scenario, &op, 1.0, &hs, 5, mesh).unwrap();
    let fine = verify_korn_like(scenario, &op, 1.0, &hs, 5, mesh.doubled()).unwrap();
    assert!(coarse.holds() && fine.holds());
    assert!((coarse.fit.exponent - fine.fit.exponent).abs() < 0.1);
}
