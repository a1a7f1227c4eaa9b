//! Magnetic Schrödinger resolvents on truncated boxes, Morawetz multipliers,
//! Morrey-Campanato norms and admissibility of electromagnetic potentials.

pub mod admissibility;
pub mod error;
pub mod fields;
pub mod grid;
pub mod multipliers;
pub mod norms;
pub mod quadrature;
pub mod resolvent;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{GridSpec, RadialGrid, ScalarField};
