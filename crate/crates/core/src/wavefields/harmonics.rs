//! Orthonormal scalar spherical harmonics with the Condon-Shortley phase.

use crate::{C64, V3};

/// Linear index of `Y_l^m` in tables produced by [`spherical_harmonics`].
#[inline]
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// `Y_l^m(dir)` for `0 <= l <= lmax`, stored at `l*l + l + m`.
///
/// `dir` need not be normalized. At the poles the azimuth is taken as zero.
pub fn spherical_harmonics(lmax: usize, dir: &V3) -> Vec<C64> {
    let r = dir.norm();
    let (x, y, z) = if r > 0.0 { (dir.x / r, dir.y / r, dir.z / r) } else { (0.0, 0.0, 1.0) };
    let rho = (x * x + y * y).sqrt();
    let eiphi = if rho > 0.0 { C64::new(x / rho, y / rho) } else { C64::new(1.0, 0.0) };
    let ct = z.clamp(-1.0, 1.0);
    let st = rho;

    let size = (lmax + 1) * (lmax + 1);
    let mut out = vec![C64::new(0.0, 0.0); size];
    // Normalized associated Legendre values p[l][m] for m >= 0.
    let mut p = vec![0.0; size];
    let idx = |l: usize, m: usize| l * l + l + m;
    let inv4pi = 1.0 / (4.0 * std::f64::consts::PI);
    p[0] = inv4pi.sqrt();
    for m in 1..=lmax {
        let prev = p[idx(m - 1, m - 1)];
        p[idx(m, m)] = -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * st * prev;
    }
    for m in 0..lmax {
        p[idx(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * ct * p[idx(m, m)];
    }
    for m in 0..=lmax {
        for l in m + 2..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[idx(l, m)] = a * (ct * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    let mut phase = C64::new(1.0, 0.0);
    for m in 0..=lmax {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for l in m..=lmax {
            let v = phase * p[idx(l, m)];
            out[idx(l, m)] = v;
            if m > 0 {
                out[l * l + l - m] = v.conj() * sign;
            }
        }
        phase *= eiphi;
    }
    out
}
