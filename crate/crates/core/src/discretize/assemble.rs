use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::{shape, Mesh2D};
use crate::error::{KornError, Result};
use crate::geometry::{distance_to_gamma1, BoundarySelector, DEFAULT_DISTANCE_RESOLUTION};
use crate::operators::{ConstCoeffOperator, VarCoeffOperatorLa};
use crate::quadrature::GaussRule;
use crate::sparse::CsrMatrix;

/// Default tensor Gauss order per direction.
pub const DEFAULT_QUAD_ORDER: usize = 3;

/// Bilinear forms available for assembly. Vector forms use dof `2 * node + component`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    /// `int f g`
    MassScalar,
    /// `int grad f . grad g`
    GradScalar,
    /// `int f_x g_x`
    DxScalar,
    /// `int grad f . A_sym grad g`, the weak form of a constant-coefficient operator
    OperatorEnergy { op: ConstCoeffOperator },
    /// `int grad f . A(y) grad g` with `div(A(y) grad u) = L_a(u)`
    OperatorEnergyLa { la: VarCoeffOperatorLa },
    /// `int delta^power grad f . grad g` with `delta` the distance to `gamma1`
    WeightedGrad {
        gamma1: BoundarySelector,
        power: i32,
    },
    /// `int U_c W_c` for one component `c` of vector fields
    MassComponent { component: usize },
    /// `int grad U : grad W`
    GradVector,
    /// `int e(U) : e(W)` with `e(U) = (grad U + grad U^T) / 2`
    Strain,
}

impl FormKind {
    /// Parses the parameter-free descriptors by name.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "mass_scalar" => FormKind::MassScalar,
            "grad_scalar" => FormKind::GradScalar,
            "dx_scalar" => FormKind::DxScalar,
            "mass_u_component" => FormKind::MassComponent { component: 0 },
            "mass_v_component" => FormKind::MassComponent { component: 1 },
            "grad_vector" => FormKind::GradVector,
            "strain" => FormKind::Strain,
            other => return Err(KornError::UnknownDescriptor(other.to_string())),
        })
    }

    /// Number of field components the form acts on.
    pub fn components(&self) -> usize {
        match self {
            FormKind::MassComponent { .. } | FormKind::GradVector | FormKind::Strain => 2,
            _ => 1,
        }
    }
}

/// Assembled Galerkin matrix of a bilinear form.
#[derive(Clone, Debug)]
pub struct SymmetricForm {
    pub kind: FormKind,
    pub components: usize,
    pub matrix: CsrMatrix,
}

type Local = [[f64; 8]; 8];

/// Galerkin matrix of `form` on `mesh` with `quad_order` Gauss points per direction.
pub fn assemble(mesh: &Mesh2D, form: &FormKind, quad_order: usize) -> Result<SymmetricForm> {
    if !(1..=10).contains(&quad_order) {
        return Err(KornError::Config(format!(
            "quad_order must lie in 1..=10, got {quad_order}"
        )));
    }
    if let FormKind::WeightedGrad { gamma1, .. } = form {
        if gamma1.is_empty() {
            return Err(KornError::EmptySelector);
        }
    }
    if let FormKind::OperatorEnergy { op } = form {
        if op.n != 2 {
            return Err(KornError::DimensionMismatch(format!(
                "planar assembly needs a 2x2 operator, got n = {}",
                op.n
            )));
        }
    }
    if let FormKind::MassComponent { component } = form {
        if *component > 1 {
            return Err(KornError::UnknownDescriptor(format!(
                "mass component {component}"
            )));
        }
    }
    let rule = GaussRule::new(quad_order);
    let nc = form.components();
    let nloc = 4 * nc;
    let locals: Vec<Local> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| local_matrix(mesh, e, form, &rule))
        .collect();
    let mut trip = Vec::with_capacity(locals.len() * nloc * nloc);
    for (e, local) in locals.iter().enumerate() {
        let corners = mesh.elements[e];
        for a in 0..nloc {
            let ga = nc * corners[a / nc] + a % nc;
            for b in 0..nloc {
                let v = local[a][b];
                if v != 0.0 {
                    trip.push((ga, nc * corners[b / nc] + b % nc, v));
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(nc * mesh.num_nodes(), &trip);
    Ok(SymmetricForm {
        kind: form.clone(),
        components: nc,
        matrix,
    })
}

fn local_matrix(mesh: &Mesh2D, e: usize, form: &FormKind, rule: &GaussRule) -> Local {
    let mut k = [[0.0; 8]; 8];
    for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let (p, jac, det) = mesh.element_map(e, s, t);
            let (n, dn) = shape(s, t);
            let w = ws * wt * det;
            let mut gx = [0.0; 4];
            let mut gy = [0.0; 4];
            for a in 0..4 {
                gx[a] = (jac[1][1] * dn[a][0] - jac[1][0] * dn[a][1]) / det;
                gy[a] = (-jac[0][1] * dn[a][0] + jac[0][0] * dn[a][1]) / det;
            }
            match form {
                FormKind::MassScalar => add_outer(&mut k, &n, &n, w),
                FormKind::GradScalar => {
                    add_outer(&mut k, &gx, &gx, w);
                    add_outer(&mut k, &gy, &gy, w);
                }
                FormKind::DxScalar => add_outer(&mut k, &gx, &gx, w),
                FormKind::OperatorEnergy { op } => add_aniso(&mut k, &gx, &gy, op.sym2(), w),
                FormKind::OperatorEnergyLa { la } => {
                    add_aniso(&mut k, &gx, &gy, la.principal(p[1]), w)
                }
                FormKind::WeightedGrad { gamma1, power } => {
                    let delta = distance_to_gamma1(
                        &mesh.domain,
                        gamma1,
                        (p[0], p[1]),
                        DEFAULT_DISTANCE_RESOLUTION,
                    )
                    .expect("selector checked non-empty");
                    let wd = w * delta.powi(*power);
                    add_outer(&mut k, &gx, &gx, wd);
                    add_outer(&mut k, &gy, &gy, wd);
                }
                FormKind::MassComponent { component } => {
                    let r = spread(&n, *component);
                    add_outer(&mut k, &r, &r, w);
                }
                FormKind::GradVector => {
                    for c in 0..2 {
                        let rx = spread(&gx, c);
                        let ry = spread(&gy, c);
                        add_outer(&mut k, &rx, &rx, w);
                        add_outer(&mut k, &ry, &ry, w);
                    }
                }
                FormKind::Strain => {
                    let e11 = spread(&gx, 0);
                    let e22 = spread(&gy, 1);
                    let mut g12 = spread(&gy, 0);
                    let v = spread(&gx, 1);
                    for i in 0..8 {
                        g12[i] += v[i];
                    }
                    add_outer(&mut k, &e11, &e11, w);
                    add_outer(&mut k, &e22, &e22, w);
                    add_outer(&mut k, &g12, &g12, 0.5 * w);
                }
            }
        }
    }
    k
}

/// Embeds per-node values into the 8 local vector dofs of one component.
fn spread(v: &[f64; 4], component: usize) -> [f64; 8] {
    let mut out = [0.0; 8];
    for a in 0..4 {
        out[2 * a + component] = v[a];
    }
    out
}

fn add_outer<const N: usize>(k: &mut Local, a: &[f64; N], b: &[f64; N], w: f64) {
    for i in 0..N {
        if a[i] == 0.0 {
            continue;
        }
        let wa = w * a[i];
        for j in 0..N {
            k[i][j] += wa * b[j];
        }
    }
}

fn add_aniso(k: &mut Local, gx: &[f64; 4], gy: &[f64; 4], m: [[f64; 2]; 2], w: f64) {
    for i in 0..4 {
        for j in 0..4 {
            k[i][j] += w
                * (gx[i] * (m[0][0] * gx[j] + m[0][1] * gy[j])
                    + gy[i] * (m[1][0] * gx[j] + m[1][1] * gy[j]));
        }
    }
}

/// Nodal interpolant of a scalar function.
pub fn interpolate_scalar<F: Fn(f64, f64) -> f64>(mesh: &Mesh2D, f: F) -> Vec<f64> {
    mesh.nodes.iter().map(|p| f(p[0], p[1])).collect()
}

/// Nodal interpolant of a vector function, interleaved `(u, v)` per node.
pub fn interpolate_vector<F: Fn(f64, f64) -> (f64, f64)>(mesh: &Mesh2D, f: F) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * mesh.num_nodes());
    for p in &mesh.nodes {
        let (u, v) = f(p[0], p[1]);
        out.push(u);
        out.push(v);
    }
    out
}
