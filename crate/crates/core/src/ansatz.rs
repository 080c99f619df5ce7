//! Closed-form fields for which the Korn-type inequalities are tight, and rigid
//! displacements.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytic::Expr;
use crate::error::{KornError, Result};
use crate::geometry::ThinDomain2D;
use crate::quadrature::{domain_rule, GaussRule};
use crate::solve::Energies;

/// Separable harmonic field `cosh(k (x - h/2)) sin(k (y - a))`, `k = pi / (b - a)`,
/// on `[0, h] x [a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoshSineField {
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub expr: Expr,
}

pub fn cosh_sine_field(h: f64, a: f64, b: f64) -> Result<CoshSineField> {
    if !(b > a) {
        return Err(KornError::BadInterval(format!(
            "need b > a, got a = {a}, b = {b}"
        )));
    }
    if !(h > 0.0) {
        return Err(KornError::NonPositiveThickness { min: h });
    }
    let k = PI / (b - a);
    let expr = (Expr::c(k) * (Expr::X - Expr::c(h / 2.0))).cosh()
        * (Expr::c(k) * (Expr::Y - Expr::c(a))).sin();
    Ok(CoshSineField { h, a, b, expr })
}

impl CoshSineField {
    pub fn k(&self) -> f64 {
        PI / (self.b - self.a)
    }

    /// `(int_0^h cosh^2, int_0^h sinh^2)` of `k (x - h/2)`.
    fn thickness_integrals(&self) -> (f64, f64) {
        let k = self.k();
        let s = (k * self.h).sinh() / (2.0 * k);
        (self.h / 2.0 + s, s - self.h / 2.0)
    }

    /// `|u|^2`
    pub fn norm_sq(&self) -> f64 {
        self.thickness_integrals().0 * (self.b - self.a) / 2.0
    }

    /// `|u_x|^2`
    pub fn dx_sq(&self) -> f64 {
        self.k().powi(2) * self.thickness_integrals().1 * (self.b - self.a) / 2.0
    }

    /// `|grad u|^2`
    pub fn grad_sq(&self) -> f64 {
        let (c2, s2) = self.thickness_integrals();
        self.k().powi(2) * (c2 + s2) * (self.b - self.a) / 2.0
    }

    /// `|grad u|^2 / ((1/h) |u| |u_x| + |u_x|^2)`
    pub fn korn_like_ratio(&self) -> f64 {
        let ux = self.dx_sq();
        self.grad_sq() / ((self.norm_sq() * ux).sqrt() / self.h + ux)
    }

    /// `(|u|^2, |u_x|^2, |grad u|^2)` by tensor Gauss quadrature with `n` points per panel.
    pub fn quadrature_energies(&self, n: usize, panels: usize) -> [f64; 3] {
        let rule = GaussRule::new(n);
        let mut out = [0.0; 3];
        let (dx, dy) = (self.h / panels as f64, (self.b - self.a) / panels as f64);
        for i in 0..panels {
            for (x, wx) in rule.on_interval(i as f64 * dx, (i + 1) as f64 * dx) {
                for j in 0..panels {
                    for (y, wy) in
                        rule.on_interval(self.a + j as f64 * dy, self.a + (j + 1) as f64 * dy)
                    {
                        let jet = self.expr.jet(x, y);
                        let w = wx * wy;
                        out[0] += w * jet.v * jet.v;
                        out[1] += w * jet.g[0] * jet.g[0];
                        out[2] += w * (jet.g[0] * jet.g[0] + jet.g[1] * jet.g[1]);
                    }
                }
            }
        }
        out
    }
}

/// Displacement `U = (u, v)` given by two closed-form components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticVectorField {
    pub u: Expr,
    pub v: Expr,
    /// Axial range outside of which the field is known to vanish or be trivial;
    /// quadrature panels are placed inside it.
    #[serde(default)]
    pub y_support: Option<(f64, f64)>,
}

/// Panels across the thickness and along the axial support in field quadratures.
const FIELD_PANELS_XI: usize = 2;
const FIELD_PANELS_Y: usize = 16;

impl AnalyticVectorField {
    pub fn new(u: Expr, v: Expr) -> Self {
        AnalyticVectorField {
            u,
            v,
            y_support: None,
        }
    }

    /// `(U, grad U)` at a point, gradient row-major `[[u_x, u_y], [v_x, v_y]]`.
    pub fn eval(&self, x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let (ju, jv) = (self.u.jet(x, y), self.v.jet(x, y));
        ([ju.v, jv.v], [ju.g, jv.g])
    }

    /// `e(U) = (grad U + grad U^T) / 2` as `[e11, e12, e22]`.
    pub fn strain(&self, x: f64, y: f64) -> [f64; 3] {
        let (_, g) = self.eval(x, y);
        [g[0][0], 0.5 * (g[0][1] + g[1][0]), g[1][1]]
    }

    fn integrate(&self, d: &ThinDomain2D, n: usize) -> Energies {
        let rule = GaussRule::new(n);
        let range = self
            .y_support
            .map_or((0.0, d.l), |(lo, hi)| (lo.max(0.0), hi.min(d.l)));
        let mut e = Energies {
            grad: 0.0,
            strain: 0.0,
            u_sq: 0.0,
        };
        for [x, y, w] in domain_rule(d, &rule, FIELD_PANELS_XI, FIELD_PANELS_Y, range) {
            let (val, g) = self.eval(x, y);
            let s12 = 0.5 * (g[0][1] + g[1][0]);
            e.grad += w * (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2));
            e.strain += w * (g[0][0].powi(2) + 2.0 * s12 * s12 + g[1][1].powi(2));
            e.u_sq += w * val[0] * val[0];
        }
        e
    }

    /// `|grad U|^2`, `|e(U)|^2`, `|u|^2` at `quad_n` points per panel, and the
    /// largest relative change when `quad_n` is doubled.
    pub fn energies(&self, d: &ThinDomain2D, quad_n: usize) -> (Energies, f64) {
        let coarse = self.integrate(d, quad_n);
        let fine = self.integrate(d, 2 * quad_n);
        let rel = |a: f64, b: f64| {
            if (a - b).abs() <= 1e-300 {
                0.0
            } else {
                (a - b).abs() / a.abs().max(b.abs())
            }
        };
        let change = rel(coarse.grad, fine.grad)
            .max(rel(coarse.strain, fine.strain))
            .max(rel(coarse.u_sq, fine.u_sq));
        (coarse, change)
    }

    /// Comma-separated samples `x,y,u,v` on an `nx x ny` grid of the reference square.
    pub fn write_point_cloud<W: Write>(
        &self,
        d: &ThinDomain2D,
        nx: usize,
        ny: usize,
        mut w: W,
    ) -> Result<()> {
        let io = |e: std::io::Error| KornError::Io {
            path: "<point cloud>".into(),
            source: e,
        };
        writeln!(w, "x,y,u,v").map_err(io)?;
        for j in 0..=ny {
            for i in 0..=nx {
                let (x, y) =
                    d.map_reference(i as f64 / nx.max(1) as f64, j as f64 / ny.max(1) as f64);
                let (val, _) = self.eval(x, y);
                writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", x, y, val[0], val[1]).map_err(io)?;
            }
        }
        Ok(())
    }
}

/// Second component of the shear ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShearVariant {
    /// `v = -(x / h^alpha) f(y / h^alpha)`
    Direct,
    /// `v = -(x / h^alpha) f'(y / h^alpha)`, shear-free when `alpha = 0`
    Kirchhoff,
}

/// `U = (f(s), -(x / h^alpha) g(s))` with `s = y / h^alpha` and `g = f` or `f'`.
///
/// `f` is an expression in `X`. `support` is the axial interval `[s0, s1]` on
/// which `f` may be nonzero; the field's support `[s0 h^alpha, s1 h^alpha]` is
/// used to place quadrature panels.
pub fn shear_ansatz(
    f: &Expr,
    support: Option<(f64, f64)>,
    h: f64,
    alpha: f64,
    variant: ShearVariant,
) -> Result<AnalyticVectorField> {
    if !(h > 0.0 && h < 1.0) {
        return Err(KornError::Config(format!(
            "thickness must lie in (0, 1), got {h}"
        )));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(KornError::Config(format!(
            "alpha must lie in [0, 1/2], got {alpha}"
        )));
    }
    let scale = h.powf(alpha);
    let s = Expr::c(1.0 / scale) * Expr::Y;
    let g = match variant {
        ShearVariant::Direct => f.clone(),
        ShearVariant::Kirchhoff => f.diff(false),
    };
    let u = f.subst(&s, &Expr::c(0.0));
    let v = -(Expr::c(1.0 / scale) * Expr::X * g.subst(&s, &Expr::c(0.0)));
    Ok(AnalyticVectorField {
        u,
        v,
        y_support: support.map(|(a, b)| (a * scale, b * scale)),
    })
}

/// `exp(-1 / (s (l - s)))` on `(0, l)`, zero elsewhere, with its support.
pub fn default_bump(l: f64) -> (Expr, (f64, f64)) {
    (Expr::bump(l, 0, Expr::X), (0.0, l))
}

/// `U = (a1 - omega y, a2 + omega x)`.
pub fn rigid_field(a: [f64; 2], omega: f64) -> AnalyticVectorField {
    AnalyticVectorField::new(
        Expr::c(a[0]) - Expr::c(omega) * Expr::Y,
        Expr::c(a[1]) + Expr::c(omega) * Expr::X,
    )
}

/// `|grad U|^2 / ((1/h) |u| |e(U)| + |e(U)|^2)`.
pub fn strong_ratio(e: &Energies, h: f64) -> Result<f64> {
    let den = (e.u_sq * e.strain).sqrt() / h + e.strain;
    if !(den > 0.0) {
        return Err(KornError::ZeroDenominator("strain energy vanishes".into()));
    }
    Ok(e.grad / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosh_sine_is_harmonic_and_vanishes_at_ends() {
        let f = cosh_sine_field(0.1, 0.3, 1.7).unwrap();
        for (x, y) in [(0.0, 0.5), (0.05, 1.1), (0.1, 1.69)] {
            assert!(f.expr.jet(x, y).laplacian().abs() < 1e-12);
        }
        for x in [0.0, 0.03, 0.1] {
            assert!(f.expr.value(x, 0.3).abs() < 1e-14);
            assert!(f.expr.value(x, 1.7).abs() < 1e-14);
        }
    }

    #[test]
    fn cosh_sine_closed_forms_match_quadrature() {
        let f = cosh_sine_field(0.2, 0.0, 1.0).unwrap();
        let q = f.quadrature_energies(12, 4);
        let exact = [f.norm_sq(), f.dx_sq(), f.grad_sq()];
        for (a, b) in q.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-10 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn kirchhoff_variant_is_shear_free_at_alpha_zero() {
        let (f, sup) = default_bump(1.0);
        let field = shear_ansatz(&f, Some(sup), 0.1, 0.0, ShearVariant::Kirchhoff).unwrap();
        for (x, y) in [(0.01, 0.2), (0.05, 0.5), (0.09, 0.77)] {
            assert!(field.strain(x, y)[1].abs() < 1e-14);
        }
        let direct = shear_ansatz(&f, Some(sup), 0.1, 0.0, ShearVariant::Direct).unwrap();
        assert!(direct.strain(0.05, 0.3)[1].abs() > 1e-6);
    }

    #[test]
    fn rigid_field_has_no_strain() {
        let d = ThinDomain2D::rectangle(0.3, 2.0).unwrap();
        let (e, _) = rigid_field([0.4, -1.0], 0.7).energies(&d, 8);
        assert!(e.strain < 1e-14);
        assert!((e.grad - 2.0 * 0.49 * 0.6).abs() < 1e-12);
        let (e, _) = rigid_field([0.4, -1.0], 0.0).energies(&d, 8);
        assert_eq!(e.grad, 0.0);
    }

    #[test]
    fn point_cloud_has_header_and_grid() {
        let d = ThinDomain2D::rectangle(0.1, 1.0).unwrap();
        let mut buf = Vec::new();
        rigid_field([1.0, 0.0], 0.0)
            .write_point_cloud(&d, 2, 3, &mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 4);
        assert_eq!(text.lines().next(), Some("x,y,u,v"));
    }
}
