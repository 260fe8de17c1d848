//! Simulation and verification of minimal-absorption measurement protocols.
//!
//! The crate covers discrimination of faint objects while keeping the number
//! of photons they absorb small:
//!
//! - [`stats`]: inverse error function, exact binomial/Poisson laws and the
//!   equal-prior likelihood-ratio test.
//! - [`domain`]: two-object tasks, image sets and every closed-form
//!   absorption bound.
//! - [`fock`], [`script`], [`audit`]: exact ancilla/photon/object evolution of
//!   arbitrary protocols and a checker for the overlap inequality chain.
//! - [`single_pixel`]: transmission counting and k-pass interferometry.
//! - [`multi_pixel`]: collective Hadamard identification, the individual-pixel
//!   classifier, per-pixel mutual information and damped Grover search.
//! - [`experiment`]: seeded batch runs and CSV/JSON reports.

pub mod audit;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod multi_pixel;
pub mod script;
pub mod seed;
pub mod single_pixel;
pub mod stats;

pub use error::{Error, Result};
