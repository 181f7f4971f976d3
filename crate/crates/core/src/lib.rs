//! Simulation library for information scrambling in hierarchical
//! star-topology spin registers.
//!
//! The crate builds branch-decomposed Hamiltonians for a central spin
//! coupled to two layers of satellites, prepares combination multiple-
//! quantum coherences (MQCs), evolves them under unitary, constant-time-
//! protocol or dephasing dynamics, and evaluates out-of-time-ordered
//! correlators (OTOCs) together with their Fourier spectra.

pub mod algebra;
pub mod analysis;
pub mod config;
pub mod error;
pub mod evolution;
pub mod mqc;
pub mod otoc;
pub mod runner;
pub mod topology;
pub mod util;

pub use error::{Error, Result};
