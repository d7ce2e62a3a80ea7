//! Analytic Gömböc surfaces.
//!
//! The surfaces are radial perturbations of the unit sphere,
//!
//! ```text
//! r^4 = F^4(theta, phi) = 1 + 4 beta sin(theta) cos(phi - P(theta)),
//! ```
//!
//! with the center of mass at the origin whenever the phase law `P` satisfies
//! `∫ sin^3(theta) exp(i P(theta)) dtheta = 0` over `[0, pi]`.
//!
//! The crate builds these shapes ([`surface`]), certifies the center of mass
//! ([`moments`]), counts and classifies the equilibria ([`equilibria`]),
//! checks convexity through principal curvatures ([`curvature`]) and exports
//! triangle meshes ([`mesh`]).
//!
//! A purely axisymmetric body cannot be mono-monostatic, which is why the
//! perturbation always carries a `phi` dependence.

pub mod curvature;
pub mod equilibria;
mod error;
pub mod mesh;
pub mod moments;
pub mod quadrature;
pub mod surface;

pub use error::{GombocError, Result};
pub use surface::{PhaseFunction, Preset, ShapeSpec, SurfaceJet};
