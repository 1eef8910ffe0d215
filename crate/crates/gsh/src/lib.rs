//! Global solvability and global hypoellipticity of first-order evolution
//! operators on tori times products of three-spheres.

pub mod error;
pub mod numerics;
pub mod harmonics;
pub mod fourier;
pub mod operator_model;
pub mod diophantine;
pub mod sublevel;
pub mod ode_solver;
pub mod global_solver;
pub mod adversarial;

pub use error::{GshError, Result};
