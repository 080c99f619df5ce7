//! Second-order elliptic operators: constant-coefficient operators in any
//! dimension, the variable-coefficient family `L_a` arising from flattening a
//! curved strip, and the affine shear that straightens a hyperplane boundary.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};
use crate::geometry::{sup_on_interval, ProfileSpec};

/// `L(u) = sum_ij a_ij d^2 u / dx_i dx_j` with constant coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstCoeffOperator {
    pub n: usize,
    pub a: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ConstRepr {
    n: usize,
    a: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for ConstCoeffOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ConstRepr::deserialize(d)?;
        ConstCoeffOperator::new(r.a)
            .and_then(|op| {
                if op.n == r.n {
                    Ok(op)
                } else {
                    Err(KornError::DimensionMismatch(format!(
                        "n = {} but matrix is {}x{}",
                        r.n, op.n, op.n
                    )))
                }
            })
            .map_err(serde::de::Error::custom)
    }
}

impl ConstCoeffOperator {
    pub fn new(a: Vec<Vec<f64>>) -> Result<Self> {
        let n = a.len();
        if n < 2 {
            return Err(KornError::DimensionMismatch(format!(
                "operator dimension must be at least 2, got {n}"
            )));
        }
        if a.iter().any(|row| row.len() != n) {
            return Err(KornError::DimensionMismatch(
                "coefficient matrix must be square".into(),
            ));
        }
        if a.iter().flatten().any(|v| !v.is_finite()) {
            return Err(KornError::DimensionMismatch(
                "coefficients must be finite".into(),
            ));
        }
        Ok(ConstCoeffOperator { n, a })
    }

    pub fn laplacian(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(b: &[f64]) -> Self {
        let n = b.len();
        let a = (0..n)
            .map(|i| (0..n).map(|j| if i == j { b[i] } else { 0.0 }).collect())
            .collect();
        ConstCoeffOperator { n, a }
    }

    /// `(a + a^T) / 2`
    pub fn symmetric_part(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| 0.5 * (self.a[i][j] + self.a[j][i]))
    }

    pub fn is_diagonal(&self) -> bool {
        self.first_mixed_term().is_none()
    }

    fn first_mixed_term(&self) -> Option<(usize, usize, f64)> {
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.a[i][j] != 0.0 {
                    return Some((i, j, self.a[i][j]));
                }
            }
        }
        None
    }

    /// Applies the operator to a Hessian given row-major.
    pub fn apply_hessian(&self, hess: &[Vec<f64>]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.a[i][j] * hess[i][j];
            }
        }
        s
    }

    /// The symmetric 2x2 coefficient block, for planar operators.
    pub fn sym2(&self) -> [[f64; 2]; 2] {
        let s = 0.5 * (self.a[0][1] + self.a[1][0]);
        [[self.a[0][0], s], [s, self.a[1][1]]]
    }
}

/// Ellipticity constants of a constant-coefficient operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipticity {
    /// smallest eigenvalue of the symmetric part
    pub lambda: f64,
    /// largest absolute column sum of the raw coefficients
    pub big_lambda: f64,
}

/// Returns `(lambda, Lambda)`; fails with `NotElliptic` when `lambda <= 0`.
pub fn ellipticity_constants(op: &ConstCoeffOperator) -> Result<Ellipticity> {
    let sym = op.symmetric_part();
    let eig = SymmetricEigen::new(sym.clone());
    let (k, lambda) =
        eig.eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    let v = eig.eigenvectors.column(k);
    let residual = (&sym * v - v * lambda).norm();
    debug_assert!(
        residual <= 1e-12 * sym.norm().max(1.0),
        "eigen residual {residual}"
    );
    let big_lambda = (0..op.n)
        .map(|j| (0..op.n).map(|i| op.a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if !(lambda > 0.0) {
        return Err(KornError::NotElliptic { lambda });
    }
    Ok(Ellipticity { lambda, big_lambda })
}

/// Smallest eigenvalue of `[[1 + a^2, -a], [-a, 1]]`, evaluated as
/// `2 / (2 + a^2 + |a| sqrt(4 + a^2))`.
pub fn lambda_a(a: f64) -> f64 {
    let m = a.abs();
    2.0 / (2.0 + m * m + m * (4.0 + m * m).sqrt())
}

/// The hyperplane `x_1 = a_1 + sum_{i>=2} a_i x_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearMap {
    /// `[a_1, a_2, ..., a_n]`
    pub coeffs: Vec<f64>,
}

impl ShearMap {
    pub fn new(coeffs: Vec<f64>) -> Self {
        ShearMap { coeffs }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    /// `A = max_i |a_i|`
    pub fn big_a(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Linear part `S` of `y = S x - (a_1, 0, ..., 0)`.
    pub fn linear_part(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut s = DMatrix::identity(n, n);
        for i in 1..n {
            s[(0, i)] = -self.coeffs[i];
        }
        s
    }

    /// Image of `x` under the change of variables.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        y[0] = x[0] - self.coeffs[0] - (1..self.n()).map(|i| self.coeffs[i] * x[i]).sum::<f64>();
        y
    }
}

/// Result of pulling a diagonal operator through a [`ShearMap`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShearTransform {
    pub op: ConstCoeffOperator,
    /// `lambda * lambda_A / (n - 1)`
    pub lambda_claimed: f64,
    /// `Lambda * (1 + (n - 1)(A + A^2))`
    pub big_lambda_claimed: f64,
}

/// Coefficients of `L'` with `L'(v)(y) = L(u)(x)` for `u(x) = v(y)`.
///
/// With `y = S x + c` the chain rule gives `Hess_x u = S^T Hess_y v S`, so the
/// transformed coefficient matrix is `S A S^T`.
pub fn shear_transform(diag_op: &ConstCoeffOperator, map: &ShearMap) -> Result<ShearTransform> {
    if let Some((i, j, value)) = diag_op.first_mixed_term() {
        return Err(KornError::MixedTermsPresent { i, j, value });
    }
    let n = diag_op.n;
    if map.n() != n {
        return Err(KornError::DimensionMismatch(format!(
            "operator is {n}-dimensional, shear map has {} coefficients",
            map.n()
        )));
    }
    let s = map.linear_part();
    let a = DMatrix::from_fn(n, n, |i, j| diag_op.a[i][j]);
    let t = &s * a * s.transpose();
    let op = ConstCoeffOperator::new(
        (0..n)
            .map(|i| (0..n).map(|j| t[(i, j)]).collect())
            .collect(),
    )?;

    let base = ellipticity_constants(diag_op)?;
    let big_a = map.big_a();
    let k = (n - 1) as f64;
    Ok(ShearTransform {
        op,
        lambda_claimed: base.lambda * lambda_a(big_a) / k,
        big_lambda_claimed: base.big_lambda * (1.0 + k * (big_a + big_a * big_a)),
    })
}

/// `L_a(u) = (1 + a^2) u_xx - 2 a u_xy + u_yy - a' u_x` with `a = a(y)`.
///
/// `L_a(u) = div(A(y) grad u)` with `A = [[1 + a^2, -a], [-a, 1]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarCoeffOperatorLa {
    pub a_profile: ProfileSpec,
}

impl VarCoeffOperatorLa {
    pub fn new(a_profile: ProfileSpec) -> Self {
        VarCoeffOperatorLa { a_profile }
    }

    /// `(a(y), a'(y))`
    pub fn coeff(&self, y: f64) -> (f64, f64) {
        let (a, da, _) = self.a_profile.eval(y);
        (a, da)
    }

    /// Principal-part matrix `A(y)`.
    pub fn principal(&self, y: f64) -> [[f64; 2]; 2] {
        let a = self.a_profile.value(y);
        [[1.0 + a * a, -a], [-a, 1.0]]
    }

    /// `(M, M1) = (sup |a|, sup |a'|)` over `[0, l]`.
    pub fn bounds(&self, l: f64) -> (f64, f64) {
        let m = sup_on_interval(|y| self.a_profile.value(y).abs(), l, 1024);
        let m1 = sup_on_interval(|y| self.a_profile.eval(y).1.abs(), l, 1024);
        (m, m1)
    }

    /// `(1 + a^2) u_xx - 2 a u_xy + u_yy - a' u_x` from pointwise derivatives.
    pub fn apply(&self, y: f64, ux: f64, uxx: f64, uxy: f64, uyy: f64) -> f64 {
        let (a, da) = self.coeff(y);
        (1.0 + a * a) * uxx - 2.0 * a * uxy + uyy - da * ux
    }
}

/// Operator description as read from configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    La {
        #[serde(rename = "La")]
        la: VarCoeffOperatorLa,
    },
    Const(ConstCoeffOperator),
}

impl ProfileSpec {
    /// Exact derivative, expressed in the same family.
    pub fn derivative(&self) -> ProfileSpec {
        match self {
            ProfileSpec::Constant { .. } => ProfileSpec::constant(0.0),
            ProfileSpec::Affine { c1, .. } => ProfileSpec::constant(*c1),
            ProfileSpec::Cosine {
                amp, freq, phase, ..
            } => ProfileSpec::cosine(0.0, amp * freq, *freq, phase + std::f64::consts::FRAC_PI_2),
            ProfileSpec::Polynomial { coefficients } => ProfileSpec::polynomial(
                coefficients
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| k as f64 * c)
                    .collect(),
            ),
        }
    }
}

/// Operator governing `u^1(x_1, y) = u(x_1 + phi1(y), y)`: `L_{phi1'}(u^1) = Laplace(u)`.
pub fn flatten_operator(phi1: &ProfileSpec) -> VarCoeffOperatorLa {
    VarCoeffOperatorLa::new(phi1.derivative())
}
