//! Positive radial solutions of the critical p-Laplacian equation with a Hardy potential
//!
//! `−Δ_p u − μ|x|^{−p}u^{p−1} = |x|^{−s}u^{p*(s)−1} + λu^{p−1}`,
//!
//! on all of space (the ground state, `λ = 0`) and on the unit ball with Dirichlet data.

pub mod ball_shooting;
pub mod cli;
pub mod closed_forms;
pub mod ef_system;
pub mod error;
pub mod exponents;
pub mod ground_state;
pub mod numerics;
pub mod profile;
pub mod verify;

pub use error::{Error, Result};
pub use exponents::{derive, Exponents, Params};
pub use profile::RadialProfile;
