use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analytic::Expr;
use crate::discretize::mesh::shape;
use crate::discretize::{assemble, constrain, Constraint, FormKind, Mesh2D, DEFAULT_QUAD_ORDER};
use crate::error::{KornError, Result};
use crate::geometry::{BoundarySelector, Face};
use crate::operators::{ellipticity_constants, OperatorSpec};
use crate::quadrature::GaussRule;
use crate::sparse::{norm, SkylineCholesky};

/// Dirichlet trace per boundary face; nodes shared by two faces take the value
/// of the later face in [`Face::ALL`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletData {
    pub faces: BTreeMap<Face, Expr>,
}

impl DirichletData {
    /// The same function on every face.
    pub fn uniform(f: Expr) -> Self {
        DirichletData {
            faces: Face::ALL.iter().map(|&face| (face, f.clone())).collect(),
        }
    }

    pub fn from_faces(entries: Vec<(Face, Expr)>) -> Self {
        DirichletData {
            faces: entries.into_iter().collect(),
        }
    }
}

/// Galerkin solution of a homogeneous elliptic equation.
#[derive(Clone, Debug)]
pub struct EllipticSolution {
    /// Nodal values over the whole mesh.
    pub field: Vec<f64>,
    /// `|K_II u_I - b| / |b|` of the interior system.
    pub residual: f64,
}

/// Solves `L(u) = 0` with the given Dirichlet data on all faces.
pub fn solve_elliptic(
    op: &OperatorSpec,
    mesh: &Mesh2D,
    data: &DirichletData,
) -> Result<EllipticSolution> {
    for face in Face::ALL {
        if !data.faces.contains_key(&face) {
            return Err(KornError::Config(format!(
                "missing Dirichlet data on face {face:?}"
            )));
        }
    }
    let form = match op {
        OperatorSpec::Const(c) => {
            ellipticity_constants(c)?;
            FormKind::OperatorEnergy { op: c.clone() }
        }
        OperatorSpec::La { la } => FormKind::OperatorEnergyLa { la: la.clone() },
    };
    let k = assemble(mesh, &form, DEFAULT_QUAD_ORDER)?.matrix;
    let mut g = vec![0.0; mesh.num_nodes()];
    for face in Face::ALL {
        let f = &data.faces[&face];
        for node in mesh.face_nodes(face) {
            let [x, y] = mesh.nodes[node];
            g[node] = f.value(x, y);
        }
    }
    let space = constrain(
        mesh,
        1,
        &[Constraint::Dirichlet {
            faces: BoundarySelector::all(),
            mask: [true, false],
        }],
    )?;
    let kg = k.mul_vec(&g);
    let rhs: Vec<f64> = space.map.reduce_vector(&kg).iter().map(|v| -v).collect();
    let kii = space.reduce(&k);
    let mut field = g;
    if kii.n == 0 {
        return Ok(EllipticSolution {
            field,
            residual: 0.0,
        });
    }
    let chol =
        SkylineCholesky::factor(&kii).map_err(|e| KornError::SingularSystem(e.to_string()))?;
    let u = chol.solve(&rhs);
    let mut r = kii.mul_vec(&u);
    for (ri, bi) in r.iter_mut().zip(&rhs) {
        *ri -= bi;
    }
    let scale = norm(&rhs);
    let residual = if scale > 0.0 {
        norm(&r) / scale
    } else {
        norm(&r)
    };
    for (i, m) in space.map.full_to_reduced.iter().enumerate() {
        if let Some(m) = m {
            field[i] = u[*m];
        }
    }
    Ok(EllipticSolution { field, residual })
}

/// `|| u_h - f ||_{L^2}` for a nodal scalar field `u_h`.
pub fn l2_error<F: Fn(f64, f64) -> f64>(
    mesh: &Mesh2D,
    field: &[f64],
    f: F,
    quad_order: usize,
) -> f64 {
    let rule = GaussRule::new(quad_order);
    let mut total = 0.0;
    for (e, corners) in mesh.elements.iter().enumerate() {
        for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let (p, _, det) = mesh.element_map(e, s, t);
                let (n, _) = shape(s, t);
                let uh: f64 = (0..4).map(|a| n[a] * field[corners[a]]).sum();
                total += ws * wt * det * (uh - f(p[0], p[1])).powi(2);
            }
        }
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_mesh;
    use crate::geometry::{ProfileSpec, ThinDomain2D};
    use crate::operators::{ConstCoeffOperator, VarCoeffOperatorLa};

    fn unit_square(n: usize) -> Mesh2D {
        build_mesh(&ThinDomain2D::rectangle(1.0, 1.0).unwrap(), n, n).unwrap()
    }

    #[test]
    fn affine_data_reproduced() {
        let mesh = unit_square(6);
        let op = OperatorSpec::Const(ConstCoeffOperator::laplacian(2));
        let sol = solve_elliptic(&op, &mesh, &DirichletData::uniform(Expr::X + Expr::Y)).unwrap();
        for (k, p) in mesh.nodes.iter().enumerate() {
            assert!((sol.field[k] - (p[0] + p[1])).abs() < 1e-10);
        }
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn la_constant_affine_kernel() {
        let d = ThinDomain2D::new(
            1.0,
            ProfileSpec::affine(0.0, 0.7),
            ProfileSpec::affine(0.2, 0.7),
        )
        .unwrap();
        let mesh = build_mesh(&d, 5, 9).unwrap();
        let c1 = 0.7;
        let op = OperatorSpec::La {
            la: VarCoeffOperatorLa::new(ProfileSpec::constant(c1)),
        };
        let w = Expr::X + Expr::c(c1) * Expr::Y;
        let sol = solve_elliptic(&op, &mesh, &DirichletData::uniform(w.clone())).unwrap();
        for (k, p) in mesh.nodes.iter().enumerate() {
            assert!((sol.field[k] - w.value(p[0], p[1])).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_quadratic_second_order() {
        let exact = |x: f64, y: f64| x * x - y * y;
        let data = DirichletData::uniform(Expr::X.powi(2) - Expr::Y.powi(2));
        let op = OperatorSpec::Const(ConstCoeffOperator::laplacian(2));
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let mesh = unit_square(n);
                let sol = solve_elliptic(&op, &mesh, &data).unwrap();
                l2_error(&mesh, &sol.field, exact, 4)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.3, "order {order}");
        }
    }

    #[test]
    fn non_elliptic_rejected() {
        let mesh = unit_square(3);
        let op = OperatorSpec::Const(
            ConstCoeffOperator::new(vec![vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap(),
        );
        assert!(matches!(
            solve_elliptic(&op, &mesh, &DirichletData::uniform(Expr::X)),
            Err(KornError::NotElliptic { .. })
        ));
    }
}
