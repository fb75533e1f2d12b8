//! Singular self-similar profiles of the fast diffusion equation
//! `u_t = Δ(u^m/m)` and a radial solver for the evolution problem.
//!
//! The numerical kernels and the parameter algebra are generic over
//! [`Scalar`]; the profile, asymptotics and PDE layers work in [`Real`].

pub mod asymptotics;
pub mod error;
pub mod numerics;
pub mod params;
pub mod pde;
pub mod profile;
pub mod scalar;
pub mod weight;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Working precision of the profile and PDE layers.
pub type Real = f64;
