//! Smallest eigenpair of a symmetric pencil `N c = mu D c` restricted to the
//! zero-mean subspace of a [`ConstrainedSpace`].
//!
//! With `V = {c : w_j . c = 0}` and `K = span(k_j)`, the shifted pencil
//! `T = N + gamma sum w_j w_j^T`, `D~ = D + tau sum w_j w_j^T` is block diagonal
//! on `V + K` whenever `N k_j` and `D k_j` lie in `span(w)`, which holds for
//! the gradient, strain and component-mass forms. Inverse iteration on
//! `(T, D~)` with an oblique projection onto `V` therefore converges to the
//! eigenpairs of `(N, D)` on `V`.
//!
//! The iteration is a restarted block Krylov method with Rayleigh-Ritz
//! extraction. Once the residual is moderate, `N` is replaced by `N - sigma D`
//! with `sigma` just below the Ritz value; a failed factorization means
//! `sigma` overshot and the shift is backed off. This separates the tight
//! clusters that appear when one term of the numerator dominates. The residual
//! is measured in the `T^{-1}` norm, which is insensitive to rounding in
//! high-frequency modes. Solves with `T` use a sparse Cholesky factor plus
//! diagonal pins and a Woodbury correction for the rank-one terms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretize::ConstrainedSpace;
use crate::error::{KornError, Result};
use crate::sparse::{axpy, dot, norm, CsrMatrix, SkylineCholesky};

/// Pair of reduced symmetric matrices on a common constrained space.
pub struct Pencil<'a> {
    pub numerator: &'a CsrMatrix,
    pub denominator: &'a CsrMatrix,
    pub space: &'a ConstrainedSpace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Bound on the relative dual residual `|N c - mu D c|_{T^-1} / sqrt(|mu| c^T D c)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of Ritz vectors kept between restarts.
    pub block: usize,
    /// Block Krylov steps per restart.
    pub krylov_steps: usize,
    pub seed: u64,
    /// Residual below which the inverse is shifted towards the Ritz value.
    pub shift_residual: f64,
    /// Smallest relative distance between shift and Ritz value.
    pub min_shift_gap: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_iter: 500,
            block: 6,
            krylov_steps: 6,
            seed: 0x5eed,
            shift_residual: 1e-2,
            min_shift_gap: 1e-7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub value: f64,
    /// Reduced coefficients, normalized so that `c^T D c = 1`.
    pub vector: Vec<f64>,
    pub residual: f64,
    /// Number of restarts.
    pub iterations: usize,
}

/// Applies `T^{-1}` with `T = A0 + U C U^T`; construction fails unless `T` is
/// positive definite.
struct ShiftedSolver {
    chol: SkylineCholesky,
    u: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    cap: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl ShiftedSolver {
    /// `scales[j]` is the diagonal scale of `N` on the support of constant mode `j`.
    fn new(
        n_mat: &CsrMatrix,
        space: &ConstrainedSpace,
        w_hat: &[Vec<f64>],
        scales: &[f64],
    ) -> Result<Self> {
        let n = n_mat.n;
        let pins: Vec<usize> = space
            .deflations
            .iter()
            .map(|d| {
                d.k.iter()
                    .position(|v| *v != 0.0)
                    .expect("constant mode has support")
            })
            .collect();
        let mut a0 = n_mat.clone();
        for (&p, &s) in pins.iter().zip(scales) {
            a0 = a0.with_diagonal_shift(&[p], s);
        }
        let chol = SkylineCholesky::factor(&a0)?;
        let mut u = Vec::new();
        let mut c = Vec::new();
        for (&p, &s) in pins.iter().zip(scales) {
            let mut e = vec![0.0; n];
            e[p] = 1.0;
            u.push(e);
            c.push(-s);
        }
        for (w, &s) in w_hat.iter().zip(scales) {
            u.push(w.clone());
            c.push(s);
        }
        let z: Vec<Vec<f64>> = u.iter().map(|col| chol.solve(col)).collect();
        let m = u.len();
        let cap = if m == 0 {
            None
        } else {
            let mat = DMatrix::from_fn(m, m, |i, j| {
                0.5 * (dot(&u[i], &z[j]) + dot(&u[j], &z[i]))
                    + if i == j { 1.0 / c[i] } else { 0.0 }
            });
            // T is positive definite iff the capacitance matrix has as many
            // positive eigenvalues as C has positive entries
            let positive = mat
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .filter(|v| **v > 0.0)
                .count();
            if positive != c.iter().filter(|v| **v > 0.0).count() {
                return Err(KornError::NotPositiveDefinite { row: n, pivot: 0.0 });
            }
            Some(mat.lu())
        };
        Ok(ShiftedSolver { chol, u, z, cap })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.chol.solve(b);
        if let Some(cap) = &self.cap {
            let rhs = DVector::from_iterator(self.u.len(), self.u.iter().map(|col| dot(col, &x)));
            let y = cap
                .solve(&rhs)
                .expect("capacitance matrix of an invertible update");
            for (zj, yj) in self.z.iter().zip(y.iter()) {
                axpy(-yj, zj, &mut x);
            }
        }
        x
    }
}

/// Smallest eigenpair of `N c = mu D c` on the constrained space.
pub fn smallest_generalized_eig(p: &Pencil, opts: &EigenOptions) -> Result<EigenResult> {
    let n = p.numerator.n;
    if p.denominator.n != n || p.space.n() != n {
        return Err(KornError::DimensionMismatch(
            "pencil matrices and constrained space differ in size".into(),
        ));
    }
    let free = n - p.space.deflations.len();
    if free == 0 {
        return Err(KornError::DimensionMismatch(
            "constrained space is empty".into(),
        ));
    }
    let w_hat: Vec<Vec<f64>> = p
        .space
        .deflations
        .iter()
        .map(|d| {
            let s = norm(&d.w);
            d.w.iter().map(|v| v / s).collect()
        })
        .collect();
    let n_scales = component_scales(p.numerator, p.space);
    let d_scales = component_scales(p.denominator, p.space);
    let solver = ShiftedSolver::new(p.numerator, p.space, &w_hat, &n_scales)
        .map_err(|e| KornError::SingularSystem(format!("shifted numerator: {e}")))?;
    // spectral shift below the smallest eigenvalue; `gap` is its relative distance
    // from the current Ritz value and shrinks while factorizations succeed
    let mut shifted: Option<ShiftedSolver> = None;
    let mut gap = 1e-2;
    let apply_d_tilde = |x: &[f64]| -> Vec<f64> {
        let mut y = p.denominator.mul_vec(x);
        for (w, s) in w_hat.iter().zip(&d_scales) {
            axpy(s * dot(w, x), w, &mut y);
        }
        y
    };

    let block = opts.block.clamp(1, free);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    for col in x.iter_mut() {
        p.space.project(col);
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dbasis: Vec<Vec<f64>> = Vec::new();
    extend_d_orthonormal(&mut basis, &mut dbasis, x, p.denominator, p.space);

    let mut last_residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        // block Krylov space of the shift-inverted operator, started from the current Ritz block
        let mut frontier = basis.clone();
        for _ in 0..opts.krylov_steps {
            let next: Vec<Vec<f64>> = frontier
                .iter()
                .map(|col| {
                    let mut v = shifted
                        .as_ref()
                        .unwrap_or(&solver)
                        .solve(&apply_d_tilde(col));
                    p.space.project(&mut v);
                    v
                })
                .collect();
            let before = basis.len();
            extend_d_orthonormal(&mut basis, &mut dbasis, next, p.denominator, p.space);
            if basis.len() == before || basis.len() >= free {
                break;
            }
            frontier = basis[before..].to_vec();
        }
        let nb: Vec<Vec<f64>> = basis.iter().map(|c| p.numerator.mul_vec(c)).collect();
        let m = basis.len();
        let ar = DMatrix::from_fn(m, m, |i, j| {
            0.5 * (dot(&basis[i], &nb[j]) + dot(&basis[j], &nb[i]))
        });
        let eig = SymmetricEigen::new(ar);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let combine = |vs: &[Vec<f64>], q: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (i, v) in vs.iter().enumerate() {
                axpy(eig.eigenvectors[(i, q)], v, &mut out);
            }
            out
        };
        let keep = block.min(m);
        let ritz: Vec<Vec<f64>> = order[..keep].iter().map(|&q| combine(&basis, q)).collect();
        let mu = eig.eigenvalues[order[0]];
        let dx0 = p.denominator.mul_vec(&ritz[0]);
        let mut r = p.numerator.mul_vec(&ritz[0]);
        axpy(-mu, &dx0, &mut r);
        let tr = solver.solve(&r);
        let residual = (dot(&r, &tr).max(0.0) / (mu.abs() * dot(&ritz[0], &dx0))).sqrt();
        if !mu.is_finite() || !residual.is_finite() {
            return Err(KornError::NoConvergence {
                iterations: it,
                residual,
            });
        }
        if residual <= opts.tol {
            let mut vector = ritz.into_iter().next().expect("at least one Ritz vector");
            let scale = p.denominator.quad_form(&vector).sqrt();
            vector.iter_mut().for_each(|v| *v /= scale);
            return Ok(EigenResult {
                value: mu,
                vector,
                residual,
                iterations: it,
            });
        }
        last_residual = residual;
        if residual < opts.shift_residual {
            let sigma = mu * (1.0 - gap);
            let a = p.numerator.lin_comb(1.0, p.denominator, -sigma);
            match ShiftedSolver::new(&a, p.space, &w_hat, &n_scales) {
                Ok(s) => {
                    shifted = Some(s);
                    gap = (gap * 0.1).max(opts.min_shift_gap);
                }
                // sigma lies above the smallest eigenvalue
                Err(_) => gap = (gap * 10.0).min(0.5),
            }
        }
        basis.clear();
        dbasis.clear();
        extend_d_orthonormal(&mut basis, &mut dbasis, ritz, p.denominator, p.space);
    }
    Err(KornError::NoConvergence {
        iterations: opts.max_iter,
        residual: last_residual,
    })
}

/// Mean diagonal of `a` over the support of each constant mode.
fn component_scales(a: &CsrMatrix, space: &ConstrainedSpace) -> Vec<f64> {
    space
        .deflations
        .iter()
        .map(|d| {
            let (sum, count) =
                d.k.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .fold((0.0, 0usize), |(s, c), (i, _)| (s + a.get(i, i), c + 1));
            let s = sum / count as f64;
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect()
}

/// Appends the `D`-orthonormalized `new` columns to `basis` (passes of
/// modified Gram-Schmidt, repeated while
/// the norm drops sharply); numerically dependent columns are dropped.
fn extend_d_orthonormal(
    basis: &mut Vec<Vec<f64>>,
    dbasis: &mut Vec<Vec<f64>>,
    new: Vec<Vec<f64>>,
    d: &CsrMatrix,
    space: &ConstrainedSpace,
) {
    for mut y in new {
        let before = d.quad_form(&y).max(0.0).sqrt();
        if !(before > 0.0) {
            continue;
        }
        let mut prev = before;
        let (mut dy, mut nrm) = (Vec::new(), 0.0);
        for _ in 0..3 {
            for (b, db) in basis.iter().zip(dbasis.iter()) {
                let c = dot(db, &y);
                axpy(-c, b, &mut y);
            }
            // the constant modes are invisible to D; keep rounding from accumulating there
            space.project(&mut y);
            dy = d.mul_vec(&y);
            nrm = dot(&y, &dy).max(0.0).sqrt();
            if nrm > 0.5 * prev {
                break;
            }
            prev = nrm;
        }
        if nrm > 1e-10 * before {
            y.iter_mut().for_each(|v| *v /= nrm);
            basis.push(y);
            dbasis.push(dy.into_iter().map(|v| v / nrm).collect());
        }
    }
}

/// Dense reference: all eigenvalues of `(N, D)` on the constrained space,
/// obtained by eliminating one dof per mean-value constraint.
pub fn dense_constrained_eigenvalues(p: &Pencil) -> Result<Vec<f64>> {
    let n = p.numerator.n;
    let defl = &p.space.deflations;
    // basis of V: c = P z where each constraint eliminates one pinned dof
    let pins: Vec<usize> = defl
        .iter()
        .map(|d| d.k.iter().position(|v| *v != 0.0).unwrap_or(0))
        .collect();
    let free: Vec<usize> = (0..n).filter(|i| !pins.contains(i)).collect();
    let m = free.len();
    let mut basis = DMatrix::zeros(n, m);
    for (col, &i) in free.iter().enumerate() {
        basis[(i, col)] = 1.0;
        for (d, &pin) in defl.iter().zip(&pins) {
            basis[(pin, col)] -= d.w[i] / d.w[pin];
        }
    }
    let nd = p.numerator.to_dense();
    let dd = p.denominator.to_dense();
    let a = basis.transpose() * &nd * &basis;
    let b = basis.transpose() * &dd * &basis;
    let a = (&a + a.transpose()) * 0.5;
    let b = (&b + b.transpose()) * 0.5;
    let chol = b.cholesky().ok_or(KornError::NotPositiveDefinite {
        row: 0,
        pivot: f64::NAN,
    })?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| KornError::SingularSystem("dense denominator".into()))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}
