//! Two-particle discrete-time quantum walks on dynamically percolated lines
//! and circles: attractor spaces, asymptotic cycles and their entanglement.

pub mod asymptotics;
pub mod attractors;
pub mod channel;
pub mod cli;
pub mod entanglement;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod percolation;
pub mod report;

pub use error::{Error, Result};
