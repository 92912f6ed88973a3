//! Nanowire geometry: spine splines, adapted frames and sampling helpers.

pub mod frame;
pub mod quadrature;
pub mod spline;

pub use frame::{
    apply_twist, build_rmf, default_reference_normal, frame_defects, transport_sample, twist_rate, twist_rate_discrete,
    update_frame, AdaptedFrame, FrameDefects, FrameSample, TOL_FLIP,
};
pub use quadrature::SimpsonRule;
pub use spline::{CardinalBasis, Partition, ScalarSpline, SpineSamples, SpineSpline, TwistSpline};

use crate::V3;

/// Radius of the smallest origin-centred ball containing the points.
pub fn circumscribing_radius(points: &[V3]) -> f64 {
    points.iter().fold(0.0, |r, p| r.max(p.norm()))
}

/// Smallest distance between samples that are far apart along the curve.
///
/// Pairs whose arc-length separation is below `min_arc` are ignored, so
/// neighbouring samples never count as contacts. Arc length is accumulated
/// with the trapezoid rule from `speeds = |p'|` at `params`.
pub fn min_nonadjacent_distance(params: &[f64], points: &[V3], speeds: &[f64], min_arc: f64) -> f64 {
    let mut arc = vec![0.0; params.len()];
    for i in 1..params.len() {
        arc[i] = arc[i - 1] + 0.5 * (speeds[i] + speeds[i - 1]) * (params[i] - params[i - 1]);
    }
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if arc[j] - arc[i] > min_arc {
                best = best.min((points[i] - points[j]).norm());
            }
        }
    }
    best
}

/// Self-contact check for a tube of half-width `threshold / 2`.
pub fn is_simple(params: &[f64], points: &[V3], speeds: &[f64], threshold: f64) -> bool {
    min_nonadjacent_distance(params, points, speeds, std::f64::consts::PI * threshold) > threshold
}


/// A design direction sampled at quadrature nodes: spine displacement `h`
/// with its first two parameter derivatives, and twist increment `phi` with
/// its first derivative.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeDirection {
    pub h: Vec<V3>,
    pub dh: Vec<V3>,
    pub ddh: Vec<V3>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

impl NodeDirection {
    pub fn zeros(m: usize) -> Self {
        Self {
            h: vec![V3::zeros(); m],
            dh: vec![V3::zeros(); m],
            ddh: vec![V3::zeros(); m],
            phi: vec![0.0; m],
            dphi: vec![0.0; m],
        }
    }

    pub fn from_splines(h: &SpineSpline, phi: &TwistSpline, params: &[f64]) -> crate::Result<Self> {
        let mut d = Self::zeros(params.len());
        for (i, &t) in params.iter().enumerate() {
            let (a, b, c) = h.eval(t)?;
            let (f, df, _) = phi.eval(t)?;
            d.h[i] = a;
            d.dh[i] = b;
            d.ddh[i] = c;
            d.phi[i] = f;
            d.dphi[i] = df;
        }
        Ok(d)
    }

    /// Direction of the cardinal spline of spine knot `knot`, coordinate `axis`.
    pub fn spine_cardinal(basis: &CardinalBasis, knot: usize, axis: usize) -> Self {
        let m = basis.b0.nrows();
        let mut d = Self::zeros(m);
        for i in 0..m {
            d.h[i][axis] = basis.b0[(i, knot)];
            d.dh[i][axis] = basis.b1[(i, knot)];
            d.ddh[i][axis] = basis.b2[(i, knot)];
        }
        d
    }

    /// Direction of the cardinal spline of twist knot `knot`.
    pub fn twist_cardinal(basis: &CardinalBasis, knot: usize) -> Self {
        let m = basis.b0.nrows();
        let mut d = Self::zeros(m);
        for i in 0..m {
            d.phi[i] = basis.b0[(i, knot)];
            d.dphi[i] = basis.b1[(i, knot)];
        }
        d
    }
}

/// A real linear functional on node directions,
/// `sum_i h_i.h + dh_i.h' + ddh_i.h'' + phi_i phi + dphi_i phi'`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeForm {
    pub h: Vec<V3>,
    pub dh: Vec<V3>,
    pub ddh: Vec<V3>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

impl NodeForm {
    pub fn zeros(m: usize) -> Self {
        Self {
            h: vec![V3::zeros(); m],
            dh: vec![V3::zeros(); m],
            ddh: vec![V3::zeros(); m],
            phi: vec![0.0; m],
            dphi: vec![0.0; m],
        }
    }

    pub fn apply(&self, d: &NodeDirection) -> f64 {
        let mut s = 0.0;
        for i in 0..self.h.len() {
            s += self.h[i].dot(&d.h[i]) + self.dh[i].dot(&d.dh[i]) + self.ddh[i].dot(&d.ddh[i]);
            s += self.phi[i] * d.phi[i] + self.dphi[i] * d.dphi[i];
        }
        s
    }

    pub fn add_scaled(&mut self, other: &NodeForm, c: f64) {
        for i in 0..self.h.len() {
            self.h[i] += c * other.h[i];
            self.dh[i] += c * other.dh[i];
            self.ddh[i] += c * other.ddh[i];
            self.phi[i] += c * other.phi[i];
            self.dphi[i] += c * other.dphi[i];
        }
    }

    /// Values on all cardinal directions: `3n` spine entries ordered
    /// `x_1..x_n, y_1..y_n, z_1..z_n`, then `n` twist entries.
    pub fn knot_gradient(&self, basis: &CardinalBasis) -> Vec<f64> {
        let n = basis.b0.ncols();
        let m = basis.b0.nrows();
        let mut g = vec![0.0; 4 * n];
        for j in 0..n {
            for i in 0..m {
                let (c0, c1, c2) = (basis.b0[(i, j)], basis.b1[(i, j)], basis.b2[(i, j)]);
                for a in 0..3 {
                    g[a * n + j] += c0 * self.h[i][a] + c1 * self.dh[i][a] + c2 * self.ddh[i][a];
                }
                g[3 * n + j] += c0 * self.phi[i] + c1 * self.dphi[i];
            }
        }
        g
    }
}
