//! Gauss–Legendre rules and composite integration on intervals.

use std::f64::consts::PI;

use crate::geometry::ThinDomain2D;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule; nodes by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule: `panels` equal subintervals of `[a, b]`, each with `rule`.
pub fn composite<F: FnMut(f64) -> f64>(
    rule: &GaussRule,
    a: f64,
    b: f64,
    panels: usize,
    mut f: F,
) -> f64 {
    let step = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * step;
        let hi = if k + 1 == panels { b } else { lo + step };
        total += rule.integrate(lo, hi, &mut f);
    }
    total
}

/// Composite tensor rule on a thin domain, as `[x, y, weight]` triples.
///
/// The domain is parametrized by `x = phi1(y) + xi (phi2 - phi1)(y)`, so the
/// area element is `(phi2 - phi1)(y) dxi dy`. Only `y` in `y_range` is covered.
pub fn domain_rule(
    d: &ThinDomain2D,
    rule: &GaussRule,
    panels_xi: usize,
    panels_y: usize,
    y_range: (f64, f64),
) -> Vec<[f64; 3]> {
    let (y0, y1) = y_range;
    let mut out = Vec::with_capacity(rule.len() * rule.len() * panels_xi * panels_y);
    let sy = (y1 - y0) / panels_y as f64;
    let sx = 1.0 / panels_xi as f64;
    for py in 0..panels_y {
        let lo = y0 + py as f64 * sy;
        for (y, wy) in rule.on_interval(lo, lo + sy) {
            let base = d.phi1.value(y);
            let t = d.phi2.value(y) - base;
            for px in 0..panels_xi {
                let xlo = px as f64 * sx;
                for (xi, wx) in rule.on_interval(xlo, xlo + sx) {
                    out.push([base + xi * t, y, wx * wy * t]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_sorted() {
        for n in 1..=40 {
            let r = GaussRule::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in 1..=20 {
            let r = GaussRule::new(n);
            for deg in 0..(2 * n) {
                let got = r.integrate(0.0, 1.0, |x| x.powi(deg as i32));
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn known_two_point_rule() {
        let r = GaussRule::new(2);
        assert!((r.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_rule_area_of_cosine_strip() {
        let d = ThinDomain2D::new(
            2.0,
            crate::geometry::ProfileSpec::constant(0.0),
            crate::geometry::ProfileSpec::cosine(0.3, 0.1, PI, 0.0),
        )
        .unwrap();
        let pts = domain_rule(&d, &GaussRule::new(10), 2, 4, (0.0, 2.0));
        let area: f64 = pts.iter().map(|p| p[2]).sum();
        // integral of 0.3 + 0.1 cos(pi y) over [0, 2]
        assert!((area - 0.6).abs() < 1e-13);
        let first_moment: f64 = pts.iter().map(|p| p[0] * p[2]).sum();
        // integral of t(y)^2 / 2 = 0.5 (0.09 * 2 + 0.01 * 1)
        assert!((first_moment - 0.095).abs() < 1e-13);
    }

    #[test]
    fn composite_trig() {
        let r = GaussRule::new(8);
        let v = composite(&r, 0.0, PI, 4, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
    }
}
