//! Seeded random instances for the inequality checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checks::{check_hardy, check_weighted_gradient, check_weighted_gradient_la, cutoff};
use super::report::InequalityReport;
use crate::analytic::Expr;
use crate::error::Result;
use crate::geometry::{BoundarySelector, Face, ProfileSpec, ThinDomain2D};
use crate::operators::{ConstCoeffOperator, VarCoeffOperatorLa};

/// Largest trigonometric degree of the random 1D test functions.
pub const MAX_TRIG_DEGREE: usize = 6;

pub fn case_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `sum_{k <= deg} a_k cos(k t) + b_k sin(k t)` in `X` with coefficients in `[-1, 1]`.
pub fn random_trig_1d<R: Rng>(rng: &mut R) -> Expr {
    let deg = rng.gen_range(0..=MAX_TRIG_DEGREE);
    let mut terms = vec![Expr::c(rng.gen_range(-1.0..1.0))];
    for k in 1..=deg {
        let arg = Expr::c(k as f64) * Expr::X;
        terms.push(Expr::c(rng.gen_range(-1.0..1.0)) * arg.clone().cos());
        terms.push(Expr::c(rng.gen_range(-1.0..1.0)) * arg.sin());
    }
    Expr::Add(terms)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyCase {
    pub f: Expr,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub seed: u64,
}

/// `[a, b]` inside `[0.5, 3]` with `b - a >= 0.05`, `eps` in `[0.05, 1]`.
pub fn random_hardy_case(seed: u64) -> HardyCase {
    let mut rng = case_rng(seed);
    let f = random_trig_1d(&mut rng);
    let a = rng.gen_range(0.5..2.95);
    let b = rng.gen_range(a + 0.05..=3.0);
    let eps = rng.gen_range(0.05..=1.0);
    HardyCase { f, a, b, eps, seed }
}

impl HardyCase {
    pub fn run(&self, quad_n: usize) -> Result<InequalityReport> {
        Ok(check_hardy(&self.f, self.a, self.b, self.eps, quad_n)?.with_seed(self.seed))
    }
}

/// Largest `curvature * max thickness` of random curved profiles. Keeps the
/// cut locus of the distance to a profile outside the strip.
pub const MAX_CURVATURE_THICKNESS: f64 = 0.5;

/// Random strip: a rectangle, a cosine cap over a flat base, or a strip whose
/// both profiles are curved.
pub fn random_domain<R: Rng>(rng: &mut R) -> ThinDomain2D {
    let l = rng.gen_range(0.5..2.0);
    let h = rng.gen_range(0.05..0.5);
    let freq = 2.0 * PI / l;
    // amplitude `A` of a cosine profile has curvature at most `A freq^2`
    let amp_cap = |big_h: f64| MAX_CURVATURE_THICKNESS / (big_h * freq * freq);
    let domain = match rng.gen_range(0..3) {
        0 => ThinDomain2D::rectangle(h, l),
        1 => {
            let r = rng.gen_range(0.0..0.5f64);
            let amp = (r * h).min(amp_cap(h * (1.0 + r)));
            ThinDomain2D::new(
                l,
                ProfileSpec::constant(0.0),
                ProfileSpec::cosine(h, amp, freq, 0.0),
            )
        }
        _ => {
            let r = rng.gen_range(0.0..0.5f64);
            let big_h = h * (1.0 + r);
            let amp = (rng.gen_range(0.0..0.5) * l / (2.0 * PI))
                .min(amp_cap(big_h) - r * h)
                .max(0.0);
            ThinDomain2D::new(
                l,
                ProfileSpec::cosine(0.0, amp, freq, 0.0),
                ProfileSpec::cosine(h, amp + r * h, freq, 0.0),
            )
        }
    };
    domain.expect("random strips have positive thickness")
}

/// Choice of `Gamma_1` for which the distance is smooth away from panel edges:
/// any single face or both axial ends when the lower profile is flat, both
/// profiles only on rectangles, a single profile on strips with a curved base.
pub fn random_gamma1<R: Rng>(rng: &mut R, d: &ThinDomain2D) -> BoundarySelector {
    let flat_base = d.phi1.is_straight();
    if !flat_base {
        return BoundarySelector::of(&[Face::ALL[rng.gen_range(0..2)]]);
    }
    let choices = if d.phi2.is_straight() { 6 } else { 5 };
    match rng.gen_range(0..choices) {
        k @ 0..=3 => BoundarySelector::of(&[Face::ALL[k]]),
        4 => BoundarySelector::axial(),
        _ => BoundarySelector::profiles(),
    }
}

/// Smooth field `c0 + sum_k c_k sin(p_k x + q_k y + r_k)` with wavelengths
/// comparable to the thickness across and to the length along the strip.
pub fn random_smooth_field<R: Rng>(rng: &mut R, d: &ThinDomain2D, periodic: bool) -> Expr {
    let h = d.metrics().big_h;
    let mut terms = vec![Expr::c(rng.gen_range(-1.0..1.0))];
    for _ in 0..3 {
        let p = rng.gen_range(-1.0..1.0) * PI / h;
        let q = if periodic {
            2.0 * PI * rng.gen_range(-2i32..=2) as f64 / d.l
        } else {
            rng.gen_range(-3.0..3.0) * PI / d.l
        };
        let phase = rng.gen_range(0.0..2.0 * PI);
        let arg = Expr::c(p) * Expr::X + Expr::c(q) * Expr::Y + Expr::c(phase);
        terms.push(Expr::c(rng.gen_range(-1.0..1.0)) * arg.sin());
    }
    Expr::Add(terms)
}

/// Uniformly elliptic 2x2 matrix: diagonal in `[1, 3]`, off-diagonal in `[-0.5, 0.5]`.
pub fn random_operator<R: Rng>(rng: &mut R) -> ConstCoeffOperator {
    let mut a = vec![vec![0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = if i == j {
                rng.gen_range(1.0..3.0)
            } else {
                rng.gen_range(-0.5..0.5)
            };
        }
    }
    ConstCoeffOperator::new(a).expect("2x2 finite matrix")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedGradientCase {
    pub f: Expr,
    pub op: ConstCoeffOperator,
    pub domain: ThinDomain2D,
    pub gamma1: BoundarySelector,
    pub seed: u64,
}

pub fn random_weighted_gradient_case(seed: u64) -> WeightedGradientCase {
    let mut rng = case_rng(seed);
    let domain = random_domain(&mut rng);
    let gamma1 = random_gamma1(&mut rng, &domain);
    let op = random_operator(&mut rng);
    let f = cutoff(&domain, &gamma1.complement()) * random_smooth_field(&mut rng, &domain, false);
    WeightedGradientCase {
        f,
        op,
        domain,
        gamma1,
        seed,
    }
}

impl WeightedGradientCase {
    pub fn run(&self, quad_n: usize) -> Result<InequalityReport> {
        Ok(
            check_weighted_gradient(&self.f, &self.op, &self.domain, &self.gamma1, quad_n)?
                .with_seed(self.seed),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedGradientLaCase {
    pub f: Expr,
    pub la: VarCoeffOperatorLa,
    pub domain: ThinDomain2D,
    pub gamma1: BoundarySelector,
    /// Field and coefficient are `l`-periodic and `Gamma_1` is both profiles,
    /// so the boundary term cancels between the axial ends.
    pub periodic: bool,
    pub seed: u64,
}

/// Every fourth seed yields a periodic case on a rectangle; the others use a cutoff.
pub fn random_weighted_gradient_la_case(seed: u64) -> WeightedGradientLaCase {
    let mut rng = case_rng(seed);
    let periodic = seed % 4 == 3;
    let domain = if periodic {
        ThinDomain2D::rectangle(rng.gen_range(0.05..0.5), rng.gen_range(0.5..2.0))
            .expect("positive thickness")
    } else {
        random_domain(&mut rng)
    };
    let m = rng.gen_range(0.0..1.0);
    let split = rng.gen_range(0.0..1.0);
    let freq = 2.0 * PI * rng.gen_range(1..=2) as f64 / domain.l;
    let la = VarCoeffOperatorLa::new(ProfileSpec::cosine(
        m * split,
        m * (1.0 - split),
        freq,
        rng.gen_range(0.0..2.0 * PI),
    ));
    let (gamma1, f) = if periodic {
        (
            BoundarySelector::profiles(),
            random_smooth_field(&mut rng, &domain, true),
        )
    } else {
        let gamma1 = random_gamma1(&mut rng, &domain);
        let f =
            cutoff(&domain, &gamma1.complement()) * random_smooth_field(&mut rng, &domain, false);
        (gamma1, f)
    };
    WeightedGradientLaCase {
        f,
        la,
        domain,
        gamma1,
        periodic,
        seed,
    }
}

impl WeightedGradientLaCase {
    pub fn run(&self, quad_n: usize) -> Result<InequalityReport> {
        Ok(
            check_weighted_gradient_la(&self.f, &self.la, &self.domain, &self.gamma1, quad_n)?
                .with_seed(self.seed),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_are_reproducible() {
        assert_eq!(random_hardy_case(7), random_hardy_case(7));
        assert_eq!(
            random_weighted_gradient_case(7),
            random_weighted_gradient_case(7)
        );
        assert_eq!(
            random_weighted_gradient_la_case(7),
            random_weighted_gradient_la_case(7)
        );
        assert_ne!(random_hardy_case(7), random_hardy_case(8));
    }

    #[test]
    fn hardy_cases_in_range() {
        for seed in 0..200 {
            let c = random_hardy_case(seed);
            assert!(c.a >= 0.5 && c.b <= 3.0 && c.b - c.a >= 0.05);
            assert!(c.eps >= 0.05 && c.eps <= 1.0);
        }
    }
}
