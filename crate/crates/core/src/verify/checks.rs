use std::collections::BTreeMap;

use serde_json::json;

use super::report::{relative_change, InequalityReport};
use crate::analytic::{Expr, Jet};
use crate::error::{KornError, Result};
use crate::geometry::{
    distance_to_gamma1, BoundarySelector, Face, ThinDomain2D, DEFAULT_DISTANCE_RESOLUTION,
};
use crate::operators::{ellipticity_constants, lambda_a, ConstCoeffOperator, VarCoeffOperatorLa};
use crate::quadrature::{domain_rule, GaussRule};

/// Smallest accepted number of Gauss points per subinterval in the 1D check.
pub const MIN_HARDY_QUAD: usize = 64;
/// Panels across the thickness and along the axis for domain integrals.
/// Both are even so that the midlines, where distance functions to opposite
/// faces have a kink, fall on panel edges.
pub const PANELS_XI: usize = 2;
pub const PANELS_Y: usize = 8;
/// Trace samples per face when checking that a field vanishes there.
pub const TRACE_SAMPLES: usize = 257;
/// Largest admissible trace on faces where the field must vanish.
pub const TRACE_TOL: f64 = 1e-10;
/// Relative size of the boundary term above which it is reported as violated.
pub const BOUNDARY_TERM_TOL: f64 = 1e-8;

/// One-dimensional weighted Hardy-type estimate on `[a, b]` with `c = a + eps (b - a)`:
/// `int_c^b f^2 <= (2 / eps) int_a^c f^2 + 4 int_a^b f'^2 (b - t)^2`.
///
/// `f` is an expression in `X`.
pub fn check_hardy(f: &Expr, a: f64, b: f64, eps: f64, quad_n: usize) -> Result<InequalityReport> {
    if !(a > 0.0 && b > a) {
        return Err(KornError::BadInterval(format!(
            "need b > a > 0, got a = {a}, b = {b}"
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(KornError::BadInterval(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    if quad_n < MIN_HARDY_QUAD {
        return Err(KornError::Config(format!(
            "quad_n must be at least {MIN_HARDY_QUAD}, got {quad_n}"
        )));
    }
    let c = a + eps * (b - a);
    let integrals = |n: usize| -> [f64; 3] {
        let rule = GaussRule::new(n);
        let sq = |t: f64| f.eval1(t).0.powi(2);
        let weighted = |t: f64| (f.eval1(t).1 * (b - t)).powi(2);
        let tail = if c < b { rule.integrate(c, b, sq) } else { 0.0 };
        let head = rule.integrate(a, c, sq);
        let grad = rule.integrate(a, c, weighted)
            + if c < b {
                rule.integrate(c, b, weighted)
            } else {
                0.0
            };
        [tail, head, grad]
    };
    let coarse = integrals(quad_n);
    let fine = integrals(2 * quad_n);
    let change = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| relative_change(*c, *f))
        .fold(0.0, f64::max);
    let [tail, head, grad] = coarse;
    let mut constants = BTreeMap::new();
    constants.insert("2/eps".to_string(), 2.0 / eps);
    constants.insert("4".to_string(), 4.0);
    let rhs = 2.0 / eps * head + 4.0 * grad;
    Ok(InequalityReport::new(
        "hardy",
        tail,
        rhs,
        constants,
        quad_n,
        change,
        json!({ "a": a, "b": b, "eps": eps, "f": f }),
    ))
}

/// Product of factors vanishing on each face of `gamma2`:
/// `x - phi1(y)`, `phi2(y) - x`, `y` and `l - y`.
pub fn cutoff(d: &ThinDomain2D, gamma2: &BoundarySelector) -> Expr {
    let mut factors = Vec::new();
    for face in gamma2.faces() {
        factors.push(match face {
            Face::LowerProfile => Expr::X - Expr::profile(d.phi1.clone(), Expr::Y),
            Face::UpperProfile => Expr::profile(d.phi2.clone(), Expr::Y) - Expr::X,
            Face::AxialStart => Expr::Y,
            Face::AxialEnd => Expr::c(d.l) - Expr::Y,
        });
    }
    if factors.is_empty() {
        Expr::c(1.0)
    } else {
        Expr::Mul(factors)
    }
}

/// Points `(x, y)` sampled uniformly along one face.
fn face_samples(d: &ThinDomain2D, face: Face, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            match face {
                Face::LowerProfile => (d.phi1.value(s * d.l), s * d.l),
                Face::UpperProfile => (d.phi2.value(s * d.l), s * d.l),
                Face::AxialStart => {
                    let (a, b) = (d.phi1.value(0.0), d.phi2.value(0.0));
                    (a + s * (b - a), 0.0)
                }
                Face::AxialEnd => {
                    let (a, b) = (d.phi1.value(d.l), d.phi2.value(d.l));
                    (a + s * (b - a), d.l)
                }
            }
        })
        .collect()
}

/// Largest `|f|` sampled on the faces of `sel`.
pub fn max_trace(f: &Expr, d: &ThinDomain2D, sel: &BoundarySelector) -> f64 {
    sel.faces()
        .into_iter()
        .flat_map(|face| face_samples(d, face, TRACE_SAMPLES))
        .map(|(x, y)| f.value(x, y).abs())
        .fold(0.0, f64::max)
}

fn require_vanishing(f: &Expr, d: &ThinDomain2D, gamma1: &BoundarySelector) -> Result<()> {
    let trace = max_trace(f, d, &gamma1.complement());
    if trace > TRACE_TOL {
        return Err(KornError::CutoffMissing { max_trace: trace });
    }
    Ok(())
}

/// Quadrature sample of a field with the distance to `Gamma_1`.
struct Sample {
    w: f64,
    y: f64,
    delta: f64,
    jet: Jet,
}

fn samples(
    f: &Expr,
    d: &ThinDomain2D,
    gamma1: &BoundarySelector,
    quad_n: usize,
) -> Result<Vec<Sample>> {
    let rule = GaussRule::new(quad_n);
    domain_rule(d, &rule, PANELS_XI, PANELS_Y, (0.0, d.l))
        .into_iter()
        .map(|[x, y, w]| {
            Ok(Sample {
                w,
                y,
                delta: distance_to_gamma1(d, gamma1, (x, y), DEFAULT_DISTANCE_RESOLUTION)?,
                jet: f.jet(x, y),
            })
        })
        .collect()
}

/// Evaluates `integrands` at `quad_n` and `2 quad_n`; returns the coarse values
/// and the largest relative change.
fn integrate_twice<const K: usize>(
    f: &Expr,
    d: &ThinDomain2D,
    gamma1: &BoundarySelector,
    quad_n: usize,
    integrands: impl Fn(&Sample) -> [f64; K],
) -> Result<([f64; K], f64)> {
    let run = |n: usize| -> Result<[f64; K]> {
        let mut acc = [0.0; K];
        for s in samples(f, d, gamma1, n)? {
            let v = integrands(&s);
            for k in 0..K {
                acc[k] += s.w * v[k];
            }
        }
        Ok(acc)
    };
    let coarse = run(quad_n)?;
    let fine = run(2 * quad_n)?;
    let change = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| relative_change(*c, *f))
        .fold(0.0, f64::max);
    Ok((coarse, change))
}

fn grad_sq(j: &Jet) -> f64 {
    j.g[0] * j.g[0] + j.g[1] * j.g[1]
}

/// Weighted gradient estimate for a constant-coefficient operator:
/// `|delta grad f|^2 <= (4 n Lambda^2 / lambda^2 + 1) |f|^2 + (1 / lambda^2) |delta^2 L f|^2`,
/// with `delta` the distance to `Gamma_1` and `f` vanishing on the other faces.
pub fn check_weighted_gradient(
    f: &Expr,
    op: &ConstCoeffOperator,
    d: &ThinDomain2D,
    gamma1: &BoundarySelector,
    quad_n: usize,
) -> Result<InequalityReport> {
    if op.n != 2 {
        return Err(KornError::DimensionMismatch(format!(
            "fields are 2D, operator is {}-dimensional",
            op.n
        )));
    }
    if gamma1.is_empty() {
        return Err(KornError::EmptySelector);
    }
    require_vanishing(f, d, gamma1)?;
    let e = ellipticity_constants(op)?;
    let a = &op.a;
    let ([weighted_grad, f_sq, op_sq], change) = integrate_twice(f, d, gamma1, quad_n, |s| {
        let j = &s.jet;
        let lf = a[0][0] * j.h[0] + (a[0][1] + a[1][0]) * j.h[1] + a[1][1] * j.h[2];
        let d2 = s.delta * s.delta;
        [d2 * grad_sq(j), j.v * j.v, d2 * d2 * lf * lf]
    })?;
    let n = op.n as f64;
    let c_f = 4.0 * n * e.big_lambda.powi(2) / e.lambda.powi(2) + 1.0;
    let c_op = 1.0 / e.lambda.powi(2);
    let mut constants = BTreeMap::new();
    constants.insert("4n*Lambda^2/lambda^2+1".to_string(), c_f);
    constants.insert("1/lambda^2".to_string(), c_op);
    constants.insert("lambda".to_string(), e.lambda);
    constants.insert("Lambda".to_string(), e.big_lambda);
    let params = json!({ "op": op, "domain": d, "gamma1": gamma1, "f": f });
    Ok(InequalityReport::new(
        "weighted_gradient",
        weighted_grad,
        c_f * f_sq + c_op * op_sq,
        constants,
        quad_n,
        change,
        params,
    ))
}

/// Constant of the weighted gradient estimate for `L_a` with `M = sup|a|`, `M1 = sup|a'|`.
pub fn la_constant(m: f64, m1: f64) -> f64 {
    let lambda = lambda_a(m);
    let m2 = m * m;
    (1.0 / lambda) * (1.0 + (16.0 * (1.0 + m2).powi(2) + 64.0 * m2 + 16.0 + 4.0 * m1 * m1) / lambda)
}

/// `oint f delta^2 (f_x nu_1 (1 + a^2) - 2 a f_x nu_2 + f_y nu_2) dS` over the whole boundary.
pub fn check_boundary_integral(
    f: &Expr,
    la: &VarCoeffOperatorLa,
    d: &ThinDomain2D,
    gamma1: &BoundarySelector,
    quad_n: usize,
) -> Result<f64> {
    Ok(boundary_terms(f, la, d, gamma1, quad_n)?
        .iter()
        .map(|(_, v)| v)
        .sum())
}

/// Contribution of each face to the boundary integral.
pub fn boundary_terms(
    f: &Expr,
    la: &VarCoeffOperatorLa,
    d: &ThinDomain2D,
    gamma1: &BoundarySelector,
    quad_n: usize,
) -> Result<Vec<(Face, f64)>> {
    let rule = GaussRule::new(quad_n);
    let integrand = |x: f64, y: f64, nu: (f64, f64)| -> Result<f64> {
        let j = f.jet(x, y);
        let delta = distance_to_gamma1(d, gamma1, (x, y), DEFAULT_DISTANCE_RESOLUTION)?;
        let (a, _) = la.coeff(y);
        let flux = j.g[0] * nu.0 * (1.0 + a * a) - 2.0 * a * j.g[0] * nu.1 + j.g[1] * nu.1;
        Ok(j.v * delta * delta * flux)
    };
    let mut out = Vec::new();
    for face in Face::ALL {
        let mut total = 0.0;
        match face {
            Face::LowerProfile | Face::UpperProfile => {
                let step = d.l / PANELS_Y as f64;
                for p in 0..PANELS_Y {
                    for (y, w) in rule.on_interval(p as f64 * step, (p + 1) as f64 * step) {
                        // outward normal times arc length: (-1, phi1') dy below, (1, -phi2') dy above
                        let (x, nu) = if face == Face::LowerProfile {
                            let (v, d1, _) = d.phi1.eval(y);
                            (v, (-1.0, d1))
                        } else {
                            let (v, d1, _) = d.phi2.eval(y);
                            (v, (1.0, -d1))
                        };
                        total += w * integrand(x, y, nu)?;
                    }
                }
            }
            Face::AxialStart | Face::AxialEnd => {
                let (y, sign) = if face == Face::AxialStart {
                    (0.0, -1.0)
                } else {
                    (d.l, 1.0)
                };
                let (a, b) = (d.phi1.value(y), d.phi2.value(y));
                let half = 0.5 * (a + b);
                for (lo, hi) in [(a, half), (half, b)] {
                    for (x, w) in rule.on_interval(lo, hi) {
                        total += w * integrand(x, y, (0.0, sign))?;
                    }
                }
            }
        }
        out.push((face, total));
    }
    Ok(out)
}

/// Weighted gradient estimate for `L_a`:
/// `|delta grad f|^2 <= C(M, M1) (|(1 + delta) f|^2 + |delta^2 L_a f|^2)`, requiring the
/// boundary term to vanish.
pub fn check_weighted_gradient_la(
    f: &Expr,
    la: &VarCoeffOperatorLa,
    d: &ThinDomain2D,
    gamma1: &BoundarySelector,
    quad_n: usize,
) -> Result<InequalityReport> {
    if gamma1.is_empty() {
        return Err(KornError::EmptySelector);
    }
    let ([weighted_grad, shifted_sq, op_sq, f_sq], change) =
        integrate_twice(f, d, gamma1, quad_n, |s| {
            let j = &s.jet;
            let lf = la.apply(s.y, j.g[0], j.h[0], j.h[1], j.h[2]);
            let d2 = s.delta * s.delta;
            [
                d2 * grad_sq(j),
                ((1.0 + s.delta) * j.v).powi(2),
                d2 * d2 * lf * lf,
                j.v * j.v,
            ]
        })?;
    let boundary = check_boundary_integral(f, la, d, gamma1, quad_n)?;
    let threshold = BOUNDARY_TERM_TOL * (f_sq + weighted_grad);
    if boundary.abs() > threshold {
        return Err(KornError::BoundaryConditionViolated {
            value: boundary,
            threshold,
        });
    }
    let (m, m1) = la.bounds(d.l);
    let c = la_constant(m, m1);
    let mut constants = BTreeMap::new();
    constants.insert("C".to_string(), c);
    constants.insert("M".to_string(), m);
    constants.insert("M1".to_string(), m1);
    constants.insert("lambda_a".to_string(), lambda_a(m));
    constants.insert("boundary_term".to_string(), boundary);
    constants.insert("boundary_scale".to_string(), f_sq + weighted_grad);
    let params = json!({ "a": la.a_profile, "domain": d, "gamma1": gamma1, "f": f });
    Ok(InequalityReport::new(
        "weighted_gradient_la",
        weighted_grad,
        c * (shifted_sq + op_sq),
        constants,
        quad_n,
        change,
        params,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ProfileSpec;
    use std::f64::consts::PI;

    #[test]
    fn hardy_constant_function() {
        let r = check_hardy(&Expr::c(1.0), 1.0, 2.0, 0.5, 64).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-14);
        assert!((r.rhs - 2.0).abs() < 1e-14);
        assert!(r.holds());
    }

    #[test]
    fn hardy_linear_function() {
        let r = check_hardy(&(Expr::X - Expr::c(1.0)), 1.0, 2.0, 0.5, 64).unwrap();
        assert!((r.lhs - 7.0 / 24.0).abs() < 1e-14);
        assert!((r.rhs - 1.5).abs() < 1e-14);
    }

    #[test]
    fn hardy_bad_input() {
        assert!(matches!(
            check_hardy(&Expr::X, 0.0, 1.0, 0.5, 64),
            Err(KornError::BadInterval(_))
        ));
        assert!(matches!(
            check_hardy(&Expr::X, 1.0, 2.0, 0.0, 64),
            Err(KornError::BadInterval(_))
        ));
        assert!(matches!(
            check_hardy(&Expr::X, 1.0, 2.0, 1.5, 64),
            Err(KornError::BadInterval(_))
        ));
        assert!(matches!(
            check_hardy(&Expr::X, 2.0, 1.0, 0.5, 64),
            Err(KornError::BadInterval(_))
        ));
    }

    #[test]
    fn zero_field_holds_with_zero_margin() {
        let d = ThinDomain2D::rectangle(1.0, 1.0).unwrap();
        let r = check_weighted_gradient(
            &Expr::c(0.0),
            &ConstCoeffOperator::laplacian(2),
            &d,
            &BoundarySelector::axial(),
            8,
        )
        .unwrap();
        assert!(r.holds());
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn missing_cutoff_detected() {
        let d = ThinDomain2D::rectangle(1.0, 1.0).unwrap();
        let f = (Expr::c(PI) * Expr::X).sin() * (Expr::c(1.0) + Expr::Y.powi(2));
        // vanishes on the profile faces x = 0, 1 but Gamma_2 = axial faces here
        let r = check_weighted_gradient(
            &f,
            &ConstCoeffOperator::laplacian(2),
            &d,
            &BoundarySelector::profiles(),
            8,
        );
        assert!(matches!(r, Err(KornError::CutoffMissing { .. })));
        assert!(check_weighted_gradient(
            &f,
            &ConstCoeffOperator::laplacian(2),
            &d,
            &BoundarySelector::axial(),
            8
        )
        .unwrap()
        .holds());
    }

    #[test]
    fn cutoff_vanishes_on_curved_faces() {
        let d = ThinDomain2D::new(
            1.5,
            ProfileSpec::cosine(0.0, 0.05, 3.0, 0.2),
            ProfileSpec::cosine(0.2, 0.04, 2.0, 0.0),
        )
        .unwrap();
        for sel in [
            BoundarySelector::all(),
            BoundarySelector::profiles(),
            BoundarySelector::of(&[Face::AxialEnd]),
        ] {
            let f = cutoff(&d, &sel) * (Expr::X + Expr::Y).cos();
            assert!(max_trace(&f, &d, &sel) < 1e-15);
        }
    }

    #[test]
    fn boundary_term_vanishes_with_cutoff_and_profile_gamma1() {
        let d = ThinDomain2D::rectangle(0.3, 1.0).unwrap();
        let la = VarCoeffOperatorLa::new(ProfileSpec::constant(0.5));
        let f = cutoff(&d, &BoundarySelector::axial()) * (Expr::c(2.0) * Expr::X + Expr::Y).sin();
        let v = check_boundary_integral(&f, &la, &d, &BoundarySelector::profiles(), 16).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn la_constant_at_zero_slope() {
        // lambda_a(0) = 1, so C = 1 + 16 + 16
        assert!((la_constant(0.0, 0.0) - 33.0).abs() < 1e-12);
    }
}
