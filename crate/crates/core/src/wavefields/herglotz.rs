//! Herglotz wave fields of the helicity basis and their gradients.
//!
//! Each Cartesian component of a density `A` on the sphere is expanded in
//! scalar harmonics; the plane-wave expansion then gives
//! `E[A](x) = sum_lm 4 pi i^l j_l(k|x|) Y_l^m(xhat) <A, Y_l^m>`.
//! The gradient `d_j E` is the Herglotz field of the density `i k theta_j A`,
//! whose components have degree at most `N + 2`. The projections are exact
//! because the sphere rule integrates the band-limited products exactly.

use nalgebra::{Matrix3, Matrix3xX};

use super::bessel::spherical_jn;
use super::harmonics::spherical_harmonics;
use super::sphere::SphereQuadrature;
use super::vsh::{basis_size, circ_basis_values, BasisIndex, CV3};
use crate::error::Result;
use crate::{C64, V3};

/// Fields of all `Q` basis densities at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzSample {
    /// `e[(i, q)]`: component `i` of the field of density `q`.
    pub e: Matrix3xX<C64>,
    /// `grad[j][(i, q)]`: derivative along `x_j` of component `i`.
    pub grad: [Matrix3xX<C64>; 3],
}

/// Precomputed expansion coefficients for the helicity basis up to degree `N`.
#[derive(Debug, Clone)]
pub struct HerglotzBasis {
    pub nmax: usize,
    pub k: f64,
    lmax: usize,
    /// Per basis function: (harmonic index, degree, 3 field + 9 gradient coefficients).
    terms: Vec<Vec<(usize, usize, [C64; 12])>>,
}

impl HerglotzBasis {
    pub fn new(nmax: usize, k: f64) -> Self {
        let lmax = nmax + 2;
        let nh = (lmax + 1) * (lmax + 1);
        let q = basis_size(nmax);
        let quad = SphereQuadrature::gauss_product(nmax + 4, 2 * nmax + 8);
        debug_assert!(quad.exactness_degree() >= 2 * lmax);
        let mut acc = vec![[C64::new(0.0, 0.0); 12]; q * nh];
        let ik = C64::new(0.0, k);
        for (theta, &w) in quad.nodes.iter().zip(&quad.weights) {
            let a = circ_basis_values(nmax, theta);
            let y = spherical_harmonics(lmax, theta);
            for (qi, av) in a.iter().enumerate() {
                let mut dens = [C64::new(0.0, 0.0); 12];
                for i in 0..3 {
                    dens[i] = av[i] * w;
                    for j in 0..3 {
                        dens[3 + 3 * j + i] = ik * theta[j] * av[i] * w;
                    }
                }
                let row = &mut acc[qi * nh..(qi + 1) * nh];
                for (lm, yv) in y.iter().enumerate() {
                    let yc = yv.conj();
                    for c in 0..12 {
                        row[lm][c] += dens[c] * yc;
                    }
                }
            }
        }
        let four_pi = 4.0 * std::f64::consts::PI;
        let ipow = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
        let mut terms = Vec::with_capacity(q);
        for qi in 0..q {
            let row = &acc[qi * nh..(qi + 1) * nh];
            let scale = row.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, z| m.max(z.norm()));
            let mut list = Vec::new();
            for l in 0..=lmax {
                let f = ipow[l % 4] * four_pi;
                for lm in l * l..(l + 1) * (l + 1) {
                    if row[lm].iter().any(|z| z.norm() > 1e-13 * scale) {
                        let mut c = row[lm];
                        for z in c.iter_mut() {
                            *z *= f;
                        }
                        list.push((lm, l, c));
                    }
                }
            }
            terms.push(list);
        }
        Self { nmax, k, lmax, terms }
    }

    pub fn size(&self) -> usize {
        self.terms.len()
    }

    /// Fields and gradients of every basis density at `x`.
    pub fn sample(&self, x: &V3) -> HerglotzSample {
        let q = self.size();
        let g = self.radial_harmonics(x);
        let mut e = Matrix3xX::zeros(q);
        let mut grad = [Matrix3xX::zeros(q), Matrix3xX::zeros(q), Matrix3xX::zeros(q)];
        for (qi, list) in self.terms.iter().enumerate() {
            let mut acc = [C64::new(0.0, 0.0); 12];
            for (lm, _, c) in list {
                let gv = g[*lm];
                for k in 0..12 {
                    acc[k] += c[k] * gv;
                }
            }
            for i in 0..3 {
                e[(i, qi)] = acc[i];
                for j in 0..3 {
                    grad[j][(i, qi)] = acc[3 + 3 * j + i];
                }
            }
        }
        HerglotzSample { e, grad }
    }

    /// Fields of every basis density at `x`, without gradients.
    pub fn sample_values(&self, x: &V3) -> Matrix3xX<C64> {
        let g = self.radial_harmonics(x);
        let mut e = Matrix3xX::zeros(self.size());
        for (qi, list) in self.terms.iter().enumerate() {
            let mut acc = [C64::new(0.0, 0.0); 3];
            for (lm, _, c) in list {
                let gv = g[*lm];
                for k in 0..3 {
                    acc[k] += c[k] * gv;
                }
            }
            for i in 0..3 {
                e[(i, qi)] = acc[i];
            }
        }
        e
    }

    fn radial_harmonics(&self, x: &V3) -> Vec<C64> {
        let jl = spherical_jn(self.lmax, self.k * x.norm());
        let mut g = spherical_harmonics(self.lmax, x);
        for l in 0..=self.lmax {
            for lm in l * l..(l + 1) * (l + 1) {
                g[lm] *= jl[l];
            }
        }
        g
    }

    /// Field and gradient `[i][j] = d_j E_i` of one basis density.
    pub fn field(&self, index: &BasisIndex, x: &V3) -> Result<(CV3, Matrix3<C64>)> {
        let qi = index.linear(self.nmax)?;
        let s = self.sample(x);
        let e = CV3::new(s.e[(0, qi)], s.e[(1, qi)], s.e[(2, qi)]);
        let mut g = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                g[(i, j)] = s.grad[j][(i, qi)];
            }
        }
        Ok((e, g))
    }
}

/// Direct sphere quadrature of the Herglotz integral and its gradient.
pub fn herglotz_direct(density: impl Fn(&V3) -> CV3, x: &V3, k: f64, quad: &SphereQuadrature) -> (CV3, Matrix3<C64>) {
    let mut e = CV3::zeros();
    let mut g = Matrix3::zeros();
    for (theta, &w) in quad.nodes.iter().zip(&quad.weights) {
        let phase = C64::from_polar(w, k * theta.dot(x));
        let a = density(theta) * phase;
        e += a;
        for i in 0..3 {
            for j in 0..3 {
                g[(i, j)] += C64::new(0.0, k * theta[j]) * a[i];
            }
        }
    }
    (e, g)
}
