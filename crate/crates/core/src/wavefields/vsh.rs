//! Tangential vector spherical harmonics and the helicity basis.
//!
//! `X_n^m = L Y_n^m / sqrt(n(n+1))` with the angular momentum operator `L`,
//! `V_n^m = i X_n^m`, `U_n^m = -i xhat x X_n^m` (so `U` is the normalized
//! surface gradient and `V = xhat x U`). The helicity pair is
//! `A = (U + iV)/sqrt(2)` with `i xhat x A = A` and `B = (U - iV)/sqrt(2)`
//! with `i xhat x B = -B`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::harmonics::{lm_index, spherical_harmonics};
use crate::error::{Error, Result};
use crate::{C64, V3};

pub type CV3 = Vector3<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Helicity {
    Plus,
    Minus,
}

impl Helicity {
    pub fn sign(self) -> f64 {
        match self {
            Helicity::Plus => 1.0,
            Helicity::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Helicity::Plus => Helicity::Minus,
            Helicity::Minus => Helicity::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VshKind {
    U,
    V,
}

/// `(n, m, helicity)` with the plus block stored before the minus block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisIndex {
    pub degree: usize,
    pub order: i64,
    pub helicity: Helicity,
}

/// Number of basis functions per helicity, `N(N+2)`.
pub fn block_size(nmax: usize) -> usize {
    nmax * (nmax + 2)
}

/// Total basis size `Q = 2N(N+2)`.
pub fn basis_size(nmax: usize) -> usize {
    2 * block_size(nmax)
}

impl BasisIndex {
    pub fn new(degree: usize, order: i64, helicity: Helicity) -> Result<Self> {
        if degree == 0 || order.unsigned_abs() as usize > degree {
            return Err(Error::InvalidInput(format!("invalid basis index n = {degree}, m = {order}")));
        }
        Ok(Self { degree, order, helicity })
    }

    pub fn linear(&self, nmax: usize) -> Result<usize> {
        if self.degree > nmax {
            return Err(Error::InvalidInput(format!("degree {} exceeds N = {nmax}", self.degree)));
        }
        let within = (self.degree * self.degree - 1) + (self.order + self.degree as i64) as usize;
        Ok(match self.helicity {
            Helicity::Plus => within,
            Helicity::Minus => within + block_size(nmax),
        })
    }

    pub fn from_linear(nmax: usize, q: usize) -> Result<Self> {
        if q >= basis_size(nmax) {
            return Err(Error::InvalidInput(format!("index {q} out of range for N = {nmax}")));
        }
        let (helicity, r) =
            if q < block_size(nmax) { (Helicity::Plus, q) } else { (Helicity::Minus, q - block_size(nmax)) };
        let degree = ((r + 1) as f64).sqrt().floor() as usize;
        let degree = if (degree + 1) * (degree + 1) - 1 <= r { degree + 1 } else { degree };
        let order = r as i64 - (degree * degree - 1) as i64 - degree as i64;
        Self::new(degree, order, helicity)
    }

    /// All indices in linear order.
    pub fn all(nmax: usize) -> Vec<BasisIndex> {
        (0..basis_size(nmax)).map(|q| Self::from_linear(nmax, q).unwrap()).collect()
    }
}

/// `X_n^m` from a harmonic table `y` of degree at least `n`.
fn x_from_table(n: usize, m: i64, y: &[C64]) -> CV3 {
    let nf = n as i64;
    let get = |mm: i64| {
        if mm.abs() > nf {
            C64::new(0.0, 0.0)
        } else {
            y[lm_index(n, mm)]
        }
    };
    let lp = (((nf - m) * (nf + m + 1)) as f64).sqrt() * get(m + 1);
    let lm = (((nf + m) * (nf - m + 1)) as f64).sqrt() * get(m - 1);
    let lx = 0.5 * (lp + lm);
    let ly = (lp - lm) / C64::new(0.0, 2.0);
    let lz = m as f64 * get(m);
    CV3::new(lx, ly, lz) / C64::from(((n * (n + 1)) as f64).sqrt())
}

fn cross(a: &V3, b: &CV3) -> CV3 {
    CV3::new(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x)
}

/// `(U_n^m, V_n^m)` from a harmonic table.
pub fn uv_from_table(n: usize, m: i64, dir: &V3, y: &[C64]) -> (CV3, CV3) {
    let i = C64::new(0.0, 1.0);
    let x = x_from_table(n, m, y);
    let d = dir.normalize();
    (cross(&d, &x) * (-i), x * i)
}

pub fn vsh_eval(n: usize, m: i64, kind: VshKind, dir: &V3) -> Result<CV3> {
    BasisIndex::new(n, m, Helicity::Plus)?;
    let y = spherical_harmonics(n, dir);
    let (u, v) = uv_from_table(n, m, dir, &y);
    Ok(match kind {
        VshKind::U => u,
        VshKind::V => v,
    })
}

fn circ_from_uv(u: CV3, v: CV3, h: Helicity) -> CV3 {
    let i = C64::new(0.0, 1.0);
    let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    match h {
        Helicity::Plus => (u + v * i) * s,
        Helicity::Minus => (u - v * i) * s,
    }
}

/// `A_n^m` for positive and `B_n^m` for negative helicity.
pub fn circ_eval(index: &BasisIndex, dir: &V3) -> Result<CV3> {
    BasisIndex::new(index.degree, index.order, index.helicity)?;
    let y = spherical_harmonics(index.degree, dir);
    let (u, v) = uv_from_table(index.degree, index.order, dir, &y);
    Ok(circ_from_uv(u, v, index.helicity))
}

/// All `Q` helicity basis functions at one direction, in linear order.
pub fn circ_basis_values(nmax: usize, dir: &V3) -> Vec<CV3> {
    let y = spherical_harmonics(nmax, dir);
    let mut out = Vec::with_capacity(basis_size(nmax));
    for h in [Helicity::Plus, Helicity::Minus] {
        for n in 1..=nmax {
            for m in -(n as i64)..=(n as i64) {
                let (u, v) = uv_from_table(n, m, dir, &y);
                out.push(circ_from_uv(u, v, h));
            }
        }
    }
    out
}
