//! Mapped quadrilateral meshes, Galerkin assembly and constraints.

pub mod assemble;
pub mod constrain;
pub mod mesh;

pub use assemble::{
    assemble, interpolate_scalar, interpolate_vector, FormKind, SymmetricForm, DEFAULT_QUAD_ORDER,
};
pub use constrain::{constrain, ConstrainedSpace, Constraint, Deflation, DofMap};
pub use mesh::{build_mesh, Mesh2D, MeshStats};
