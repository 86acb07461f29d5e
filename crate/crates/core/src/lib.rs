//! Model solutions, a curvilinear Poisson solver and numerical checks of the
//! integral identities and inequalities behind rigidity results for
//! `Δu = -2` with constant Dirichlet and Neumann data on doubly connected
//! planar domains.

pub mod domain;
pub mod error;
pub mod field_io;
pub mod linalg;
pub mod model;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
