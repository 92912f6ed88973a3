//! Product quadrature on the unit sphere.

use serde::{Deserialize, Serialize};

use crate::V3;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre in the polar angle times the trapezoid rule in azimuth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereQuadrature {
    pub nodes: Vec<V3>,
    pub weights: Vec<f64>,
    pub n_polar: usize,
    pub n_azi: usize,
}

impl SphereQuadrature {
    pub fn gauss_product(n_polar: usize, n_azi: usize) -> Self {
        let (x, w) = gauss_legendre(n_polar);
        let mut nodes = Vec::with_capacity(n_polar * n_azi);
        let mut weights = Vec::with_capacity(n_polar * n_azi);
        let dphi = 2.0 * std::f64::consts::PI / n_azi as f64;
        for (ct, wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..n_azi {
                let phi = dphi * j as f64;
                nodes.push(V3::new(st * phi.cos(), st * phi.sin(), *ct));
                weights.push(wt * dphi);
            }
        }
        Self { nodes, weights, n_polar, n_azi }
    }

    /// Smallest rule integrating spherical polynomials of degree `degree` exactly.
    pub fn for_degree(degree: usize) -> Self {
        Self::gauss_product(degree / 2 + 1, degree + 1)
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn exactness_degree(&self) -> usize {
        (2 * self.n_polar - 1).min(self.n_azi - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
