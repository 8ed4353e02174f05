//! Spectra of the PT-symmetric deformed Mathieu operator
//! `-u'' + 2q (cos 2x + i delta sin 2jx) u = a u` on `[0, pi]` with Neumann
//! or Dirichlet ends, and the exceptional lines where its levels leave the
//! real axis.

pub mod eig;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod phase;
pub mod sweep;

pub use eig::{converged_spectrum, Spectrum, SolverSettings};
pub use error::{Error, Result};
pub use model::{assemble_matrix, BoundaryCondition, ModelParams, OperatorMatrix};
pub use fit::{power_law_fit, FitResult};
pub use phase::{critical_q, trace_exceptional_line, ExceptionalLine, PhaseSettings, QCrit, Side};
