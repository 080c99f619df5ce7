use serde::{Deserialize, Serialize};

use super::assemble::{assemble, FormKind};
use super::mesh::Mesh2D;
use crate::error::{KornError, Result};
use crate::geometry::{BoundarySelector, Face};
use crate::sparse::{dot, CsrMatrix};

/// A constraint on the coefficient space. `mask[c]` selects component `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Eliminates the dofs on the selected faces.
    Dirichlet {
        faces: BoundarySelector,
        mask: [bool; 2],
    },
    /// Identifies the dofs on `y = l` with those on `y = 0`.
    PeriodicAxial { mask: [bool; 2] },
    /// Restricts each masked component to zero mean.
    DeflateConstants { mask: [bool; 2] },
}

/// Map from full dofs to the reduced (free, identified) dofs.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub components: usize,
    pub full_to_reduced: Vec<Option<usize>>,
    pub n_reduced: usize,
}

impl DofMap {
    pub fn n_full(&self) -> usize {
        self.full_to_reduced.len()
    }

    /// `P^T A P` where `P` maps reduced to full coefficients.
    pub fn reduce_matrix(&self, a: &CsrMatrix) -> CsrMatrix {
        let mut trip = Vec::with_capacity(a.nnz());
        for i in 0..a.n {
            let Some(r) = self.full_to_reduced[i] else {
                continue;
            };
            for (j, v) in a.row(i) {
                if let Some(s) = self.full_to_reduced[j] {
                    trip.push((r, s, v));
                }
            }
        }
        CsrMatrix::from_triplets(self.n_reduced, &trip)
    }

    /// `P^T b` (identified entries are summed).
    pub fn reduce_vector(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_reduced];
        for (i, r) in self.full_to_reduced.iter().enumerate() {
            if let Some(r) = r {
                out[*r] += b[i];
            }
        }
        out
    }

    /// Coefficients of a full vector that already satisfies the constraints.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_reduced];
        for (i, r) in self.full_to_reduced.iter().enumerate().rev() {
            if let Some(r) = r {
                out[*r] = full[i];
            }
        }
        out
    }

    /// `P c`, with eliminated dofs set to zero.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.full_to_reduced
            .iter()
            .map(|r| r.map_or(0.0, |r| reduced[r]))
            .collect()
    }

    pub fn is_free(&self, full_dof: usize) -> bool {
        self.full_to_reduced[full_dof].is_some()
    }
}

/// Mean-value constraint on one component: `w . c = 0`; `k` is the constant mode.
#[derive(Clone, Debug)]
pub struct Deflation {
    pub component: usize,
    pub w: Vec<f64>,
    pub k: Vec<f64>,
}

/// Reduced coefficient space with its mean-value constraints.
#[derive(Clone, Debug)]
pub struct ConstrainedSpace {
    pub map: DofMap,
    pub deflations: Vec<Deflation>,
    pub eliminated: usize,
    pub identified_pairs: usize,
}

impl ConstrainedSpace {
    pub fn reduce(&self, a: &CsrMatrix) -> CsrMatrix {
        self.map.reduce_matrix(a)
    }

    pub fn n(&self) -> usize {
        self.map.n_reduced
    }

    /// Projection onto the constrained space along the constant modes.
    pub fn project(&self, c: &mut [f64]) {
        for d in &self.deflations {
            let s = dot(&d.w, c) / dot(&d.w, &d.k);
            for (ci, ki) in c.iter_mut().zip(&d.k) {
                *ci -= s * ki;
            }
        }
    }

    /// Largest `|w . c| / (|w| |c|)` over the mean-value constraints.
    pub fn constraint_violation(&self, c: &[f64]) -> f64 {
        let nc = crate::sparse::norm(c);
        self.deflations
            .iter()
            .map(|d| dot(&d.w, c).abs() / (crate::sparse::norm(&d.w) * nc).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Applies `constraints` to the `components`-component coefficient space of `mesh`.
pub fn constrain(
    mesh: &Mesh2D,
    components: usize,
    constraints: &[Constraint],
) -> Result<ConstrainedSpace> {
    if components == 0 || components > 2 {
        return Err(KornError::DimensionMismatch(format!(
            "fields have 1 or 2 components, got {components}"
        )));
    }
    let n_full = components * mesh.num_nodes();
    let dof = |node: usize, c: usize| components * node + c;
    let mut fixed = vec![false; n_full];
    let mut master: Vec<usize> = (0..n_full).collect();
    let mut deflate = [false; 2];
    let mut identified_pairs = 0;

    for con in constraints {
        match con {
            Constraint::Dirichlet { faces, mask } => {
                for face in faces.faces() {
                    for node in mesh.face_nodes(face) {
                        for c in 0..components {
                            if mask[c] {
                                fixed[dof(node, c)] = true;
                            }
                        }
                    }
                }
            }
            Constraint::PeriodicAxial { mask } => {
                if !mesh.domain.is_periodic_compatible() {
                    return Err(KornError::PeriodicIncompatibleProfiles(format!(
                        "phi1 = {:?}, phi2 = {:?} on [0, {}]",
                        mesh.domain.phi1, mesh.domain.phi2, mesh.domain.l
                    )));
                }
                let start = mesh.face_nodes(Face::AxialStart);
                let end = mesh.face_nodes(Face::AxialEnd);
                for (&s, &e) in start.iter().zip(&end) {
                    for c in 0..components {
                        if mask[c] && master[dof(e, c)] == dof(e, c) {
                            master[dof(e, c)] = dof(s, c);
                            identified_pairs += 1;
                        }
                    }
                }
            }
            Constraint::DeflateConstants { mask } => {
                for c in 0..components {
                    deflate[c] |= mask[c];
                }
            }
        }
    }
    // an identified pair is eliminated as soon as either end is
    for i in 0..n_full {
        let m = master[i];
        if m != i && (fixed[i] || fixed[m]) {
            fixed[i] = true;
            fixed[m] = true;
        }
    }
    let mut full_to_reduced = vec![None; n_full];
    let mut n_reduced = 0;
    for i in 0..n_full {
        if fixed[i] || master[i] != i {
            continue;
        }
        full_to_reduced[i] = Some(n_reduced);
        n_reduced += 1;
    }
    for i in 0..n_full {
        if !fixed[i] && master[i] != i {
            full_to_reduced[i] = full_to_reduced[master[i]];
        }
    }
    let map = DofMap {
        components,
        full_to_reduced,
        n_reduced,
    };
    let eliminated = fixed.iter().filter(|f| **f).count();

    let mut deflations = Vec::new();
    if deflate.iter().any(|d| *d) {
        let mass = assemble(mesh, &FormKind::MassScalar, 2)?;
        let ones = vec![1.0; mesh.num_nodes()];
        let node_weights = mass.matrix.mul_vec(&ones);
        for c in 0..components {
            if !deflate[c] {
                continue;
            }
            if (0..mesh.num_nodes()).any(|node| fixed[dof(node, c)]) {
                return Err(KornError::DeflationOnConstrainedComponent);
            }
            let mut w_full = vec![0.0; n_full];
            let mut k_full = vec![0.0; n_full];
            for node in 0..mesh.num_nodes() {
                w_full[dof(node, c)] = node_weights[node];
                k_full[dof(node, c)] = 1.0;
            }
            deflations.push(Deflation {
                component: c,
                w: map.reduce_vector(&w_full),
                k: map.restrict(&k_full),
            });
        }
    }
    Ok(ConstrainedSpace {
        map,
        deflations,
        eliminated,
        identified_pairs,
    })
}

/// Convenience constructor for a full-boundary or partial Dirichlet selector on one component.
pub fn dirichlet(faces: &[Face], mask: [bool; 2]) -> Constraint {
    Constraint::Dirichlet {
        faces: BoundarySelector::of(faces),
        mask,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::mesh::build_mesh;
    use crate::geometry::{ProfileSpec, ThinDomain2D};

    fn rect_mesh() -> Mesh2D {
        build_mesh(&ThinDomain2D::rectangle(0.1, 1.0).unwrap(), 2, 2).unwrap()
    }

    #[test]
    fn dirichlet_counts() {
        let mesh = rect_mesh();
        let space = constrain(
            &mesh,
            2,
            &[dirichlet(
                &[Face::AxialStart, Face::AxialEnd],
                [true, false],
            )],
        )
        .unwrap();
        assert_eq!(space.eliminated, 6);
        assert_eq!(space.n(), 18 - 6);
    }

    #[test]
    fn periodic_pairs() {
        let mesh = rect_mesh();
        let space = constrain(
            &mesh,
            2,
            &[Constraint::PeriodicAxial {
                mask: [true, false],
            }],
        )
        .unwrap();
        assert_eq!(space.identified_pairs, 3);
        assert_eq!(space.n(), 15);
        let full = space
            .map
            .expand(&(0..15).map(|k| k as f64).collect::<Vec<_>>());
        for i in 0..3 {
            assert_eq!(full[2 * i], full[2 * (6 + i)]);
        }
    }

    #[test]
    fn periodic_requires_compatible_profiles() {
        let d = ThinDomain2D::new(
            1.0,
            ProfileSpec::constant(0.0),
            ProfileSpec::affine(0.1, 0.05),
        )
        .unwrap();
        let mesh = build_mesh(&d, 2, 4).unwrap();
        assert!(matches!(
            constrain(
                &mesh,
                2,
                &[Constraint::PeriodicAxial { mask: [true, true] }]
            ),
            Err(KornError::PeriodicIncompatibleProfiles(_))
        ));
    }

    #[test]
    fn deflation_rejected_on_dirichlet_component() {
        let mesh = rect_mesh();
        let r = constrain(
            &mesh,
            2,
            &[
                dirichlet(&[Face::AxialStart], [true, false]),
                Constraint::DeflateConstants {
                    mask: [true, false],
                },
            ],
        );
        assert!(matches!(r, Err(KornError::DeflationOnConstrainedComponent)));
    }

    #[test]
    fn deflation_functional_is_component_area() {
        let mesh = build_mesh(&ThinDomain2D::rectangle(0.5, 2.0).unwrap(), 3, 5).unwrap();
        let space = constrain(
            &mesh,
            2,
            &[
                Constraint::PeriodicAxial { mask: [true, true] },
                Constraint::DeflateConstants { mask: [true, true] },
            ],
        )
        .unwrap();
        for d in &space.deflations {
            assert!((dot(&d.w, &d.k) - 1.0).abs() < 1e-12);
        }
        let mut c: Vec<f64> = (0..space.n()).map(|k| (k as f64).sin()).collect();
        space.project(&mut c);
        assert!(space.constraint_violation(&c) < 1e-14);
    }
}
