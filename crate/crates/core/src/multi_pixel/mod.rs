//! Multi-pixel identification: van Dam style collective Hadamard queries,
//! the pixel-by-pixel classifier, per-photon mutual information and Grover
//! search with absorption.
//!
//! Rows, pixels and modes are 0-based; row 0 of the Sylvester matrix is the
//! all-ones row.

mod collective;
mod grover;
mod hadamard;
mod information;

pub use collective::*;
pub use grover::*;
pub use hadamard::*;
pub use information::*;
