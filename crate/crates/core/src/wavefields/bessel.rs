//! Spherical Bessel functions of the first kind.

/// `j_0(z), ..., j_lmax(z)` for real `z >= 0`.
///
/// Small arguments use the power series; otherwise Miller's downward
/// recurrence normalized against whichever of `j_0`, `j_1` is larger.
pub fn spherical_jn(lmax: usize, z: f64) -> Vec<f64> {
    let z = z.abs();
    if z < 0.5 {
        return (0..=lmax).map(|l| series(l, z)).collect();
    }
    let start = lmax.max(z.ceil() as usize) + 40;
    let mut out = vec![0.0; lmax + 1];
    let mut jp1 = 0.0;
    let mut j = 1e-280;
    for l in (1..=start).rev() {
        let jm1 = (2 * l + 1) as f64 / z * j - jp1;
        jp1 = j;
        j = jm1;
        if l - 1 <= lmax {
            out[l - 1] = j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // `j` now holds the unnormalized j_0 and `jp1` the unnormalized j_1.
    let (s, c) = z.sin_cos();
    let j0 = s / z;
    let j1 = s / (z * z) - c / z;
    let scale = if j0.abs() >= j1.abs() { j0 / j } else { j1 / jp1 };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

fn series(l: usize, z: f64) -> f64 {
    // z^l / (2l+1)!!
    let mut lead = 1.0;
    for k in 0..l {
        lead *= z / (2 * k + 3) as f64;
    }
    let z2 = z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= -z2 / (2.0 * k as f64 * (2 * l + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    lead * sum
}
