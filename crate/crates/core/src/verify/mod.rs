//! Inequality checks with explicit constants and scaling sweeps in the thickness.

mod cases;
mod checks;
mod report;
mod sweeps;

pub use cases::*;
pub use checks::*;
pub use report::*;
pub use sweeps::*;
