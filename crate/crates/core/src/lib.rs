//! Clifford-spinor dynamics of relativistic point particles, their U(N)
//! ensembles, truncated matrix mechanics and Clifford worldsheets.

pub mod clifford;
pub mod ensemble;
pub mod error;
pub mod export;
pub mod linalg;
pub mod matmech;
pub mod particle;
pub mod spinor;
pub mod string;
pub mod verify;

pub use error::{Error, Result};
