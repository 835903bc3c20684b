//! Binary coherent-state communication over a Gaussian phase-diffusion
//! channel: truncated Fock-space numerics, displaced photon-counting receiver
//! statistics, discrimination metrics, and joint receiver optimization.

pub mod calibration;
pub mod error;
mod fit;
pub mod fock;
pub mod mc_sim;
pub mod metrics;
pub mod optimizer;
pub mod photostats;
pub mod quad;

pub use error::{Error, Result};
