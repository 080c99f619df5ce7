//! Profile functions, thin curved strips and the distance to a boundary portion.
//!
//! A strip is `{(x, y) : 0 < y < l, phi1(y) < x < phi2(y)}`. The thin direction
//! is `x`; `y` runs along the axis.

use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};

/// Tolerance used when checking `p(0) = p(l)` and `p'(0) = p'(l)`.
pub const PERIODIC_TOL: f64 = 1e-12;

/// Closed-form profile families with exact first and second derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProfileSpec {
    Constant {
        c: f64,
    },
    Affine {
        c0: f64,
        c1: f64,
    },
    /// `c0 + amp * cos(freq * y + phase)`
    Cosine {
        c0: f64,
        amp: f64,
        freq: f64,
        phase: f64,
    },
    /// `sum_k coefficients[k] * y^k`
    Polynomial {
        coefficients: Vec<f64>,
    },
}

impl ProfileSpec {
    pub fn constant(c: f64) -> Self {
        ProfileSpec::Constant { c }
    }

    pub fn affine(c0: f64, c1: f64) -> Self {
        ProfileSpec::Affine { c0, c1 }
    }

    pub fn cosine(c0: f64, amp: f64, freq: f64, phase: f64) -> Self {
        ProfileSpec::Cosine {
            c0,
            amp,
            freq,
            phase,
        }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        ProfileSpec::Polynomial { coefficients }
    }

    /// Returns `(p(y), p'(y), p''(y))`.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        match self {
            ProfileSpec::Constant { c } => (*c, 0.0, 0.0),
            ProfileSpec::Affine { c0, c1 } => (c0 + c1 * y, *c1, 0.0),
            ProfileSpec::Cosine {
                c0,
                amp,
                freq,
                phase,
            } => {
                let arg = freq * y + phase;
                let (s, c) = arg.sin_cos();
                (c0 + amp * c, -amp * freq * s, -amp * freq * freq * c)
            }
            ProfileSpec::Polynomial { coefficients } => {
                // Horner on (p, p', p'') simultaneously
                let mut p = 0.0;
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for &c in coefficients.iter().rev() {
                    d2 = d2 * y + 2.0 * d1;
                    d1 = d1 * y + p;
                    p = p * y + c;
                }
                (p, d1, d2)
            }
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.eval(y).0
    }

    /// True when the graph is a straight line.
    pub fn is_straight(&self) -> bool {
        match self {
            ProfileSpec::Constant { .. } | ProfileSpec::Affine { .. } => true,
            ProfileSpec::Cosine { amp, freq, .. } => *amp == 0.0 || *freq == 0.0,
            ProfileSpec::Polynomial { coefficients } => {
                coefficients.iter().skip(2).all(|c| *c == 0.0)
            }
        }
    }

    /// `p(0) = p(l)` and `p'(0) = p'(l)` within [`PERIODIC_TOL`].
    pub fn is_periodic_compatible(&self, l: f64) -> bool {
        let (p0, d0, _) = self.eval(0.0);
        let (pl, dl, _) = self.eval(l);
        (p0 - pl).abs() <= PERIODIC_TOL && (d0 - dl).abs() <= PERIODIC_TOL
    }
}

/// Derived extrema of a strip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainMetrics {
    /// `inf (phi2 - phi1)`
    pub h: f64,
    /// `sup (phi2 - phi1)`
    pub big_h: f64,
    /// `H / h`
    pub m: f64,
    /// `sup |phi1'|`
    pub rho1: f64,
    /// `sup |phi2'|`
    pub rho2: f64,
    /// `sup |phi1''|`
    pub rho1_prime: f64,
}

/// Thin curved strip bounded by two profiles over `[0, l]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThinDomain2D {
    pub l: f64,
    pub phi1: ProfileSpec,
    pub phi2: ProfileSpec,
    #[serde(skip)]
    metrics: DomainMetrics,
}

#[derive(Deserialize)]
struct DomainRepr {
    l: f64,
    phi1: ProfileSpec,
    phi2: ProfileSpec,
}

impl<'de> Deserialize<'de> for ThinDomain2D {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let repr = DomainRepr::deserialize(deserializer)?;
        ThinDomain2D::new(repr.l, repr.phi1, repr.phi2).map_err(serde::de::Error::custom)
    }
}

/// Default sampling density used when a domain is constructed.
pub const DEFAULT_METRIC_SAMPLES: usize = 512;

impl ThinDomain2D {
    pub fn new(l: f64, phi1: ProfileSpec, phi2: ProfileSpec) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(KornError::InvalidDomain(format!(
                "length must be positive, got {l}"
            )));
        }
        let metrics = compute_metrics(l, &phi1, &phi2, DEFAULT_METRIC_SAMPLES)?;
        Ok(ThinDomain2D {
            l,
            phi1,
            phi2,
            metrics,
        })
    }

    /// Rectangle `[0, h] x [0, l]`.
    pub fn rectangle(h: f64, l: f64) -> Result<Self> {
        Self::new(l, ProfileSpec::constant(0.0), ProfileSpec::constant(h))
    }

    pub fn metrics(&self) -> &DomainMetrics {
        &self.metrics
    }

    pub fn thickness(&self, y: f64) -> f64 {
        self.phi2.value(y) - self.phi1.value(y)
    }

    pub fn is_periodic_compatible(&self) -> bool {
        self.phi1.is_periodic_compatible(self.l) && self.phi2.is_periodic_compatible(self.l)
    }

    /// Point of the closed strip for reference coordinates `(xi, eta)` in `[0, 1]^2`.
    pub fn map_reference(&self, xi: f64, eta: f64) -> (f64, f64) {
        let y = eta * self.l;
        let a = self.phi1.value(y);
        let b = self.phi2.value(y);
        (a + xi * (b - a), y)
    }

    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        y >= -tol && y <= self.l + tol && {
            let yc = y.clamp(0.0, self.l);
            x >= self.phi1.value(yc) - tol && x <= self.phi2.value(yc) + tol
        }
    }
}

/// Extrema of the strip metrics over a grid of `n_samples` points, refined by
/// golden-section search around each discrete extremizer.
pub fn domain_metrics(d: &ThinDomain2D, n_samples: usize) -> Result<DomainMetrics> {
    if n_samples < 64 {
        return Err(KornError::InvalidDomain(format!(
            "n_samples must be at least 64, got {n_samples}"
        )));
    }
    compute_metrics(d.l, &d.phi1, &d.phi2, n_samples)
}

fn compute_metrics(
    l: f64,
    phi1: &ProfileSpec,
    phi2: &ProfileSpec,
    n: usize,
) -> Result<DomainMetrics> {
    let thick = |y: f64| phi2.value(y) - phi1.value(y);
    let h = -sup_on_interval(|y| -thick(y), l, n);
    if !(h > 0.0) || !h.is_finite() {
        return Err(KornError::NonPositiveThickness { min: h });
    }
    let big_h = sup_on_interval(thick, l, n);
    let rho1 = sup_on_interval(|y| phi1.eval(y).1.abs(), l, n);
    let rho2 = sup_on_interval(|y| phi2.eval(y).1.abs(), l, n);
    let rho1_prime = sup_on_interval(|y| phi1.eval(y).2.abs(), l, n);
    let metrics = DomainMetrics {
        h,
        big_h,
        m: big_h / h,
        rho1,
        rho2,
        rho1_prime,
    };
    if [big_h, rho1, rho2, rho1_prime]
        .iter()
        .any(|v| !v.is_finite())
    {
        return Err(KornError::InvalidDomain(
            "non-finite profile metrics".into(),
        ));
    }
    Ok(metrics)
}

/// `sup_{[0,l]} g` from a uniform grid plus local golden-section refinement.
pub(crate) fn sup_on_interval<F: Fn(f64) -> f64>(g: F, l: f64, n: usize) -> f64 {
    let step = l / (n - 1) as f64;
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..n {
        let v = g(k as f64 * step);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let lo = (best_k as f64 - 1.0).max(0.0) * step;
    let hi = ((best_k + 1) as f64 * step).min(l);
    let (_, v) = golden_max(&g, lo, hi, 1e-13 * l.max(1.0));
    best.max(v)
}

/// Golden-section maximization of `g` on `[a, b]`; returns `(argmax, max)`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(g: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < 200 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
        iter += 1;
    }
    let mut best = (c, gc);
    for x in [a, b, d] {
        let v = g(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// One of the four boundary faces of a strip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Face {
    /// `x = phi1(y)`
    LowerProfile,
    /// `x = phi2(y)`
    UpperProfile,
    /// `y = 0`
    AxialStart,
    /// `y = l`
    AxialEnd,
}

impl Face {
    pub const ALL: [Face; 4] = [
        Face::LowerProfile,
        Face::UpperProfile,
        Face::AxialStart,
        Face::AxialEnd,
    ];

    fn bit(self) -> u8 {
        match self {
            Face::LowerProfile => 1,
            Face::UpperProfile => 2,
            Face::AxialStart => 4,
            Face::AxialEnd => 8,
        }
    }
}

/// A set of boundary faces (the portion `Gamma_1`); its complement is `Gamma_2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct BoundarySelector {
    bits: u8,
}

impl BoundarySelector {
    pub fn empty() -> Self {
        BoundarySelector { bits: 0 }
    }

    pub fn all() -> Self {
        BoundarySelector { bits: 15 }
    }

    pub fn of(faces: &[Face]) -> Self {
        BoundarySelector {
            bits: faces.iter().fold(0, |acc, f| acc | f.bit()),
        }
    }

    pub fn profiles() -> Self {
        Self::of(&[Face::LowerProfile, Face::UpperProfile])
    }

    pub fn axial() -> Self {
        Self::of(&[Face::AxialStart, Face::AxialEnd])
    }

    pub fn contains(&self, face: Face) -> bool {
        self.bits & face.bit() != 0
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn complement(&self) -> Self {
        BoundarySelector {
            bits: !self.bits & 15,
        }
    }

    pub fn faces(&self) -> Vec<Face> {
        Face::ALL
            .iter()
            .copied()
            .filter(|f| self.contains(*f))
            .collect()
    }
}

impl Serialize for BoundarySelector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.faces().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundarySelector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let faces = Vec::<Face>::deserialize(d)?;
        Ok(BoundarySelector::of(&faces))
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

fn profile_distance(profile: &ProfileSpec, l: f64, pt: (f64, f64), resolution: usize) -> f64 {
    if profile.is_straight() {
        return segment_distance(pt, (profile.value(0.0), 0.0), (profile.value(l), l));
    }
    let step = l / resolution as f64;
    let mut prev = (profile.value(0.0), 0.0);
    let mut best = f64::INFINITY;
    let mut best_k = 0;
    for k in 1..=resolution {
        let y = if k == resolution { l } else { k as f64 * step };
        let cur = (profile.value(y), y);
        let dist = segment_distance(pt, prev, cur);
        if dist < best {
            best = dist;
            best_k = k - 1;
        }
        prev = cur;
    }
    // refine on the exact curve across the neighbouring segments
    let lo = (best_k as f64 - 1.0).max(0.0) * step;
    let hi = ((best_k + 2) as f64 * step).min(l);
    let d2 = |y: f64| -((profile.value(y) - pt.0).powi(2) + (y - pt.1).powi(2));
    // the chords cut across concave arcs, so only the exact curve value is returned
    let (_, neg) = golden_max(&d2, lo, hi, 1e-14 * l.max(1.0));
    (-neg).max(0.0).sqrt()
}

/// Distance from `pt` to a single face of `d`.
pub fn face_distance(d: &ThinDomain2D, face: Face, pt: (f64, f64), resolution: usize) -> f64 {
    match face {
        Face::LowerProfile => profile_distance(&d.phi1, d.l, pt, resolution),
        Face::UpperProfile => profile_distance(&d.phi2, d.l, pt, resolution),
        Face::AxialStart => {
            segment_distance(pt, (d.phi1.value(0.0), 0.0), (d.phi2.value(0.0), 0.0))
        }
        Face::AxialEnd => segment_distance(pt, (d.phi1.value(d.l), d.l), (d.phi2.value(d.l), d.l)),
    }
}

/// `dist(pt, Gamma_1)` where `Gamma_1` is the union of the selected faces.
///
/// Curved faces are sampled with `resolution` polyline segments and the nearest
/// segment is refined on the exact curve.
pub fn distance_to_gamma1(
    d: &ThinDomain2D,
    sel: &BoundarySelector,
    pt: (f64, f64),
    resolution: usize,
) -> Result<f64> {
    if sel.is_empty() {
        return Err(KornError::EmptySelector);
    }
    Ok(sel
        .faces()
        .into_iter()
        .map(|f| face_distance(d, f, pt, resolution.max(1)))
        .fold(f64::INFINITY, f64::min))
}

/// Default polyline resolution for distance evaluations.
pub const DEFAULT_DISTANCE_RESOLUTION: usize = 128;
