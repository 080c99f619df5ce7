use std::io::Write;

use serde::Serialize;

use crate::error::{KornError, Result};
use crate::geometry::{Face, ThinDomain2D};

/// Mapped tensor-product mesh of bilinear quadrilaterals.
///
/// Node `(i, j)` sits at reference point `(i / nx, j / ny)`; the index `i`
/// runs across the thickness and varies fastest.
#[derive(Clone, Debug)]
pub struct Mesh2D {
    pub domain: ThinDomain2D,
    pub nx: usize,
    pub ny: usize,
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise corner nodes in reference orientation.
    pub elements: Vec<[usize; 4]>,
}

/// Summary statistics of a mesh.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeshStats {
    pub nodes: usize,
    pub elements: usize,
    pub min_jacobian: f64,
    /// largest ratio of axial to transverse element size
    pub max_aspect: f64,
}

impl Mesh2D {
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Nodes on `face`, ordered along the face.
    pub fn face_nodes(&self, face: Face) -> Vec<usize> {
        match face {
            Face::LowerProfile => (0..=self.ny).map(|j| self.node_index(0, j)).collect(),
            Face::UpperProfile => (0..=self.ny).map(|j| self.node_index(self.nx, j)).collect(),
            Face::AxialStart => (0..=self.nx).map(|i| self.node_index(i, 0)).collect(),
            Face::AxialEnd => (0..=self.nx).map(|i| self.node_index(i, self.ny)).collect(),
        }
    }

    /// Physical point and Jacobian determinant at reference point `(s, t)` in `[-1, 1]^2` of element `e`.
    pub fn element_map(&self, e: usize, s: f64, t: f64) -> ([f64; 2], [[f64; 2]; 2], f64) {
        let corners = self.elements[e];
        let (n, dn) = shape(s, t);
        let mut p = [0.0; 2];
        // jac[r][c] = d x_r / d ref_c
        let mut jac = [[0.0; 2]; 2];
        for a in 0..4 {
            let x = self.nodes[corners[a]];
            for r in 0..2 {
                p[r] += n[a] * x[r];
                jac[r][0] += dn[a][0] * x[r];
                jac[r][1] += dn[a][1] * x[r];
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        (p, jac, det)
    }

    pub fn stats(&self) -> MeshStats {
        let mut min_jacobian = f64::INFINITY;
        let mut max_aspect: f64 = 0.0;
        let g = 1.0 / 3f64.sqrt();
        for (e, c) in self.elements.iter().enumerate() {
            for (s, t) in [(-g, -g), (g, -g), (g, g), (-g, g)] {
                min_jacobian = min_jacobian.min(self.element_map(e, s, t).2);
            }
            let dx = dist(self.nodes[c[0]], self.nodes[c[1]]);
            let dy = dist(self.nodes[c[0]], self.nodes[c[3]]);
            max_aspect = max_aspect.max(dy / dx);
        }
        MeshStats {
            nodes: self.num_nodes(),
            elements: self.num_elements(),
            min_jacobian,
            max_aspect,
        }
    }

    /// `node,x,y[,value...]` rows; `fields` holds per-node columns.
    pub fn write_csv<W: Write>(
        &self,
        mut w: W,
        names: &[&str],
        fields: &[&[f64]],
    ) -> std::io::Result<()> {
        write!(w, "node,x,y")?;
        for n in names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (k, p) in self.nodes.iter().enumerate() {
            write!(w, "{k},{:.16e},{:.16e}", p[0], p[1])?;
            for f in fields {
                write!(w, ",{:.16e}", f[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Bilinear shape functions and their reference derivatives at `(s, t)`.
pub fn shape(s: f64, t: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    const SIGN: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    let mut n = [0.0; 4];
    let mut dn = [[0.0; 2]; 4];
    for a in 0..4 {
        let [sa, ta] = SIGN[a];
        n[a] = 0.25 * (1.0 + sa * s) * (1.0 + ta * t);
        dn[a] = [0.25 * sa * (1.0 + ta * t), 0.25 * ta * (1.0 + sa * s)];
    }
    (n, dn)
}

/// Tensor grid on `d` with `nx` elements across and `ny` along the axis.
pub fn build_mesh(d: &ThinDomain2D, nx: usize, ny: usize) -> Result<Mesh2D> {
    if nx < 2 || ny < 2 {
        return Err(KornError::InvalidDomain(format!(
            "mesh needs nx, ny >= 2 (got {nx}, {ny})"
        )));
    }
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let eta = j as f64 / ny as f64;
        let y = if j == ny { d.l } else { eta * d.l };
        let a = d.phi1.value(y);
        let b = d.phi2.value(y);
        if !(b > a) {
            return Err(KornError::NonPositiveThickness { min: b - a });
        }
        for i in 0..=nx {
            let x = match i {
                0 => a,
                _ if i == nx => b,
                _ => a + (i as f64 / nx as f64) * (b - a),
            };
            nodes.push([x, y]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Ok(Mesh2D {
        domain: d.clone(),
        nx,
        ny,
        nodes,
        elements,
    })
}
