//! Design of thin metallic nanowires whose far-field scattering is maximally
//! electromagnetically chiral.
//!
//! The wire is a tube of vanishing radius around a cubic spline spine, carried
//! by an adapted (twisted) frame and an elliptical cross-section. Its far-field
//! operator is assembled from an asymptotic thin-wire formula in the basis of
//! circular vector spherical harmonics, scored by Hilbert-Schmidt chirality
//! measures and improved by a cautious BFGS iteration.

pub mod app;
pub mod chirality;
pub mod error;
pub mod farfield;
pub mod geometry;
pub mod material;
pub mod objective;
pub mod optimizer;
pub mod wavefields;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type V3 = nalgebra::Vector3<f64>;

/// Vacuum permittivity in F/m, at the precision used throughout.
pub const EPS0: f64 = 8.85e-12;
/// Vacuum permeability in H/m, at the precision used throughout.
pub const MU0: f64 = 1.25e-6;

/// Wavenumber `k = 2 pi f sqrt(eps0 mu0)` for a frequency in THz.
pub fn wavenumber_thz(f_thz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_thz * 1e12 * (EPS0 * MU0).sqrt()
}

/// Wavelength in metres for a frequency in THz.
pub fn wavelength_thz(f_thz: f64) -> f64 {
    2.0 * std::f64::consts::PI / wavenumber_thz(f_thz)
}
