//! Closed-form scalar expressions in `(x, y)` with exact first and second
//! derivatives by forward-mode propagation of second-order jets.

use std::ops;

use serde::{Deserialize, Serialize};

use crate::geometry::ProfileSpec;

/// Value, gradient and Hessian `[xx, xy, yy]` of a function of two variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [f64; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet {
            v,
            g: [0.0; 2],
            h: [0.0; 3],
        }
    }

    pub fn var_x(x: f64) -> Self {
        Jet {
            v: x,
            g: [1.0, 0.0],
            h: [0.0; 3],
        }
    }

    pub fn var_y(y: f64) -> Self {
        Jet {
            v: y,
            g: [0.0, 1.0],
            h: [0.0; 3],
        }
    }

    /// `phi(self)` given `(phi, phi', phi'')` at `self.v`.
    pub fn compose(&self, d0: f64, d1: f64, d2: f64) -> Jet {
        let [gx, gy] = self.g;
        Jet {
            v: d0,
            g: [d1 * gx, d1 * gy],
            h: [
                d2 * gx * gx + d1 * self.h[0],
                d2 * gx * gy + d1 * self.h[1],
                d2 * gy * gy + d1 * self.h[2],
            ],
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            v: s * self.v,
            g: [s * self.g[0], s * self.g[1]],
            h: [s * self.h[0], s * self.h[1], s * self.h[2]],
        }
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0] + self.h[2]
    }
}

impl ops::Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl ops::Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self, o);
        Jet {
            v: a.v * b.v,
            g: [a.g[0] * b.v + a.v * b.g[0], a.g[1] * b.v + a.v * b.g[1]],
            h: [
                a.h[0] * b.v + 2.0 * a.g[0] * b.g[0] + a.v * b.h[0],
                a.h[1] * b.v + a.g[0] * b.g[1] + a.g[1] * b.g[0] + a.v * b.h[1],
                a.h[2] * b.v + 2.0 * a.g[1] * b.g[1] + a.v * b.h[2],
            ],
        }
    }
}

impl ops::Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Expression tree; the 1D functions used by the Hardy check depend on `X` only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(f64),
    X,
    Y,
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Sinh(Box<Expr>),
    Cosh(Box<Expr>),
    Exp(Box<Expr>),
    /// `deriv`-th derivative of `s -> exp(-1 / (s (len - s)))` on `(0, len)`, zero outside.
    Bump {
        len: f64,
        deriv: u8,
        arg: Box<Expr>,
    },
    /// A geometry profile composed with `arg`.
    Profile {
        spec: ProfileSpec,
        arg: Box<Expr>,
    },
}

/// Scalar test functions are plain expressions.
pub type AnalyticScalar = Expr;

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    pub fn sinh(self) -> Expr {
        Expr::Sinh(Box::new(self))
    }

    pub fn cosh(self) -> Expr {
        Expr::Cosh(Box::new(self))
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn bump(len: f64, deriv: u8, arg: Expr) -> Expr {
        Expr::Bump {
            len,
            deriv,
            arg: Box::new(arg),
        }
    }

    pub fn profile(spec: ProfileSpec, arg: Expr) -> Expr {
        Expr::Profile {
            spec,
            arg: Box::new(arg),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn jet(&self, x: f64, y: f64) -> Jet {
        match self {
            Expr::Const(c) => Jet::constant(*c),
            Expr::X => Jet::var_x(x),
            Expr::Y => Jet::var_y(y),
            Expr::Add(terms) => terms
                .iter()
                .fold(Jet::constant(0.0), |acc, t| acc + t.jet(x, y)),
            Expr::Mul(terms) => terms
                .iter()
                .fold(Jet::constant(1.0), |acc, t| acc * t.jet(x, y)),
            Expr::Neg(e) => -e.jet(x, y),
            Expr::Pow(e, n) => {
                let j = e.jet(x, y);
                let n = *n;
                let nf = n as f64;
                let d0 = j.v.powi(n);
                let d1 = if n == 0 { 0.0 } else { nf * j.v.powi(n - 1) };
                let d2 = if n == 0 || n == 1 {
                    0.0
                } else {
                    nf * (nf - 1.0) * j.v.powi(n - 2)
                };
                j.compose(d0, d1, d2)
            }
            Expr::Sin(e) => {
                let j = e.jet(x, y);
                let (s, c) = j.v.sin_cos();
                j.compose(s, c, -s)
            }
            Expr::Cos(e) => {
                let j = e.jet(x, y);
                let (s, c) = j.v.sin_cos();
                j.compose(c, -s, -c)
            }
            Expr::Sinh(e) => {
                let j = e.jet(x, y);
                let (s, c) = (j.v.sinh(), j.v.cosh());
                j.compose(s, c, s)
            }
            Expr::Cosh(e) => {
                let j = e.jet(x, y);
                let (s, c) = (j.v.sinh(), j.v.cosh());
                j.compose(c, s, c)
            }
            Expr::Exp(e) => {
                let j = e.jet(x, y);
                let v = j.v.exp();
                j.compose(v, v, v)
            }
            Expr::Bump { len, deriv, arg } => {
                let j = arg.jet(x, y);
                let d = bump_derivatives(*len, j.v);
                let k = *deriv as usize;
                j.compose(d[k], d[k + 1], d[k + 2])
            }
            Expr::Profile { spec, arg } => {
                let j = arg.jet(x, y);
                let (p, d1, d2) = spec.eval(j.v);
                j.compose(p, d1, d2)
            }
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).v
    }

    /// Symbolic partial derivative in `X` (`wrt_y == false`) or `Y`.
    pub fn diff(&self, wrt_y: bool) -> Expr {
        let d = |e: &Expr| e.diff(wrt_y);
        match self {
            Expr::Const(_) => Expr::c(0.0),
            Expr::X => Expr::c(if wrt_y { 0.0 } else { 1.0 }),
            Expr::Y => Expr::c(if wrt_y { 1.0 } else { 0.0 }),
            Expr::Add(terms) => Expr::Add(terms.iter().map(d).collect()),
            Expr::Mul(terms) => Expr::Add(
                (0..terms.len())
                    .map(|k| {
                        Expr::Mul(
                            terms
                                .iter()
                                .enumerate()
                                .map(|(j, t)| if j == k { d(t) } else { t.clone() })
                                .collect(),
                        )
                    })
                    .collect(),
            ),
            Expr::Neg(e) => -d(e),
            Expr::Pow(e, n) => {
                if *n == 0 {
                    Expr::c(0.0)
                } else {
                    Expr::c(*n as f64) * e.as_ref().clone().powi(n - 1) * d(e)
                }
            }
            Expr::Sin(e) => e.as_ref().clone().cos() * d(e),
            Expr::Cos(e) => -(e.as_ref().clone().sin() * d(e)),
            Expr::Sinh(e) => e.as_ref().clone().cosh() * d(e),
            Expr::Cosh(e) => e.as_ref().clone().sinh() * d(e),
            Expr::Exp(e) => self.clone() * d(e),
            Expr::Bump { len, deriv, arg } => {
                assert!(
                    *deriv < MAX_BUMP_DERIV,
                    "bump derivative order exceeds {MAX_BUMP_DERIV}"
                );
                Expr::bump(*len, deriv + 1, arg.as_ref().clone()) * d(arg)
            }
            Expr::Profile { spec, arg } => {
                Expr::profile(spec.derivative(), arg.as_ref().clone()) * d(arg)
            }
        }
    }

    /// Replaces `X` by `x` and `Y` by `y`.
    pub fn subst(&self, x: &Expr, y: &Expr) -> Expr {
        let s = |e: &Expr| Box::new(e.subst(x, y));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::X => x.clone(),
            Expr::Y => y.clone(),
            Expr::Add(terms) => Expr::Add(terms.iter().map(|t| t.subst(x, y)).collect()),
            Expr::Mul(terms) => Expr::Mul(terms.iter().map(|t| t.subst(x, y)).collect()),
            Expr::Neg(e) => Expr::Neg(s(e)),
            Expr::Pow(e, n) => Expr::Pow(s(e), *n),
            Expr::Sin(e) => Expr::Sin(s(e)),
            Expr::Cos(e) => Expr::Cos(s(e)),
            Expr::Sinh(e) => Expr::Sinh(s(e)),
            Expr::Cosh(e) => Expr::Cosh(s(e)),
            Expr::Exp(e) => Expr::Exp(s(e)),
            Expr::Bump { len, deriv, arg } => Expr::Bump {
                len: *len,
                deriv: *deriv,
                arg: s(arg),
            },
            Expr::Profile { spec, arg } => Expr::Profile {
                spec: spec.clone(),
                arg: s(arg),
            },
        }
    }

    /// `(f, f', f'')` for an expression in `X` alone.
    pub fn eval1(&self, t: f64) -> (f64, f64, f64) {
        let j = self.jet(t, 0.0);
        (j.v, j.g[0], j.h[0])
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        match self {
            Expr::Add(mut v) => {
                v.push(o);
                Expr::Add(v)
            }
            s => Expr::Add(vec![s, o]),
        }
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        self + (-o)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        match self {
            Expr::Mul(mut v) => {
                v.push(o);
                Expr::Mul(v)
            }
            s => Expr::Mul(vec![s, o]),
        }
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

/// Highest bump derivative order available to [`Expr::Bump`] (jets need two more).
pub const MAX_BUMP_DERIV: u8 = 4;

/// Derivatives of orders 0..=6 of `exp(-1 / (s (len - s)))` at `s`.
///
/// Taylor coefficients of `q(s + t) = s(len - s) + (len - 2s) t - t^2` are
/// inverted and exponentiated as truncated power series.
pub fn bump_derivatives(len: f64, s: f64) -> [f64; 7] {
    const N: usize = 7;
    let q0 = s * (len - s);
    // below this the factor exp(-1/q) underflows faster than the powers of 1/q grow
    if !(s > 0.0 && s < len) || q0 < 1.0 / 700.0 {
        return [0.0; N];
    }
    let q = [q0, len - 2.0 * s, -1.0, 0.0, 0.0, 0.0, 0.0];
    let mut r = [0.0; N];
    r[0] = 1.0 / q[0];
    for k in 1..N {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += q[j] * r[k - j];
        }
        r[k] = -acc / q[0];
    }
    let g: Vec<f64> = r.iter().map(|v| -v).collect();
    let mut e = [0.0; N];
    e[0] = g[0].exp();
    for k in 1..N {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += j as f64 * g[j] * e[k - j];
        }
        e[k] = acc / k as f64;
    }
    let mut fact = 1.0;
    let mut out = [0.0; N];
    for k in 0..N {
        if k > 0 {
            fact *= k as f64;
        }
        out[k] = e[k] * fact;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_expr() -> Expr {
        // sin(2x + y) * cosh(0.5 y) + x^3 y - exp(0.3 x) * bump(y)
        let e1 = (Expr::c(2.0) * Expr::X + Expr::Y).sin() * (Expr::c(0.5) * Expr::Y).cosh();
        let e2 = Expr::X.powi(3) * Expr::Y;
        let e3 = (Expr::c(0.3) * Expr::X).exp() * Expr::bump(1.0, 1, Expr::Y);
        let e4 = Expr::profile(ProfileSpec::cosine(0.1, 0.02, 6.0, 0.3), Expr::X * Expr::Y).sinh();
        e1 + e2 - e3 + e4
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = sample_expr();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eps = 1e-5;
        for _ in 0..500 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y: f64 = rng.gen_range(0.05..0.95);
            let j = f.jet(x, y);
            let fx = (f.value(x + eps, y) - f.value(x - eps, y)) / (2.0 * eps);
            let fy = (f.value(x, y + eps) - f.value(x, y - eps)) / (2.0 * eps);
            assert!((j.g[0] - fx).abs() < 1e-6, "fx {} vs {}", j.g[0], fx);
            assert!((j.g[1] - fy).abs() < 1e-6);
            let jp = f.jet(x + eps, y);
            let jm = f.jet(x - eps, y);
            assert!((j.h[0] - (jp.g[0] - jm.g[0]) / (2.0 * eps)).abs() < 1e-6);
            assert!((j.h[1] - (jp.g[1] - jm.g[1]) / (2.0 * eps)).abs() < 1e-6);
            let jp = f.jet(x, y + eps);
            let jm = f.jet(x, y - eps);
            assert!((j.h[2] - (jp.g[1] - jm.g[1]) / (2.0 * eps)).abs() < 1e-6);
        }
    }

    #[test]
    fn bump_closed_form_low_orders() {
        let len = 1.3;
        for k in 1..50 {
            let s = len * k as f64 / 50.0;
            let q = s * (len - s);
            let dq = len - 2.0 * s;
            let b = (-1.0 / q).exp();
            let b1 = dq / (q * q) * b;
            let g1 = dq / (q * q);
            let g2 = (-2.0 * q - 2.0 * dq * dq) / (q * q * q);
            let b2 = (g2 + g1 * g1) * b;
            let d = bump_derivatives(len, s);
            assert!((d[0] - b).abs() <= 1e-14 * b.max(1e-300));
            assert!((d[1] - b1).abs() <= 1e-12 * b1.abs().max(1e-20));
            assert!((d[2] - b2).abs() <= 1e-12 * b2.abs().max(1e-20));
        }
    }

    #[test]
    fn bump_higher_orders_by_differences() {
        let eps = 1e-6;
        for k in 1..20 {
            let s = k as f64 / 20.0;
            let d = bump_derivatives(1.0, s);
            let p = bump_derivatives(1.0, s + eps);
            let m = bump_derivatives(1.0, s - eps);
            for o in 0..6 {
                let fd = (p[o] - m[o]) / (2.0 * eps);
                assert!(
                    (d[o + 1] - fd).abs() <= 1e-5 * d[o + 1].abs().max(1e-3),
                    "order {o} at {s}"
                );
            }
        }
    }

    #[test]
    fn bump_vanishes_outside_support() {
        assert_eq!(bump_derivatives(1.0, 0.0), [0.0; 7]);
        assert_eq!(bump_derivatives(1.0, 1.0), [0.0; 7]);
        assert_eq!(bump_derivatives(1.0, -0.5), [0.0; 7]);
        assert_eq!(bump_derivatives(1.0, 1e-5), [0.0; 7]);
    }

    #[test]
    fn symbolic_derivative_matches_jet() {
        let f = sample_expr();
        let (fx, fy) = (f.diff(false), f.diff(true));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y: f64 = rng.gen_range(0.05..0.95);
            let j = f.jet(x, y);
            let jx = fx.jet(x, y);
            assert!((jx.v - j.g[0]).abs() <= 1e-12 * j.g[0].abs().max(1.0));
            assert!((fy.value(x, y) - j.g[1]).abs() <= 1e-12 * j.g[1].abs().max(1.0));
            assert!((jx.g[0] - j.h[0]).abs() <= 1e-11 * j.h[0].abs().max(1.0));
            assert!((jx.g[1] - j.h[1]).abs() <= 1e-11 * j.h[1].abs().max(1.0));
        }
    }

    #[test]
    fn substitution_composes() {
        let f = (Expr::X * Expr::c(3.0)).sin() + Expr::Y.powi(2);
        let g = f.subst(&(Expr::Y * Expr::c(0.5)), &Expr::X);
        for (x, y) in [(0.1, 0.7), (-0.4, 0.3)] {
            assert!((g.value(x, y) - f.value(0.5 * y, x)).abs() < 1e-15);
        }
    }

    #[test]
    fn json_round_trip() {
        let f = sample_expr();
        let s = serde_json::to_string(&f).unwrap();
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
