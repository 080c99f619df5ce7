//! Elliptic Dirichlet solves, constrained generalized eigenproblems and the
//! Korn-constant and strong-ratio drivers built on them.

pub mod eigen;
pub mod elliptic;
pub mod korn;

pub use eigen::{
    dense_constrained_eigenvalues, smallest_generalized_eig, EigenOptions, EigenResult, Pencil,
};
pub use elliptic::{l2_error, solve_elliptic, DirichletData, EllipticSolution};
pub use korn::{
    korn_first_constant, korn_first_constant_with, strong_ratio_sup, strong_ratio_sup_with,
    Energies, KornBc, KornProblem, KornResult, StrongRatioOptions, StrongRatioResult,
};
