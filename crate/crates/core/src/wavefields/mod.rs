//! Spherical harmonics, helicity basis functions and Herglotz wave fields.

pub mod bessel;
pub mod harmonics;
pub mod herglotz;
pub mod sphere;
pub mod vsh;

pub use herglotz::{HerglotzBasis, HerglotzSample};
pub use sphere::SphereQuadrature;
pub use vsh::{basis_size, block_size, circ_basis_values, circ_eval, vsh_eval, BasisIndex, Helicity, VshKind, CV3};
