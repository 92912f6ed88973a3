//! Rotation-minimizing and geometry-adapted frames along the spine.
//!
//! Every sample carries the triad together with the parameter derivative of
//! the tangent and the twist rate `n'.b`, which fixes the derivatives of the
//! normal and binormal:
//! `n' = -(n.t')t + beta b`, `b' = -(b.t')t - beta n`.

use serde::{Deserialize, Serialize};

use super::spline::{SpineSpline, TwistSpline};
use crate::error::{Error, Result};
use crate::V3;

/// Default tolerance on `1 + t.t~` before a transported frame counts as flipped.
pub const TOL_FLIP: f64 = 1e-6;

/// Oversampling factor of the double reflection sweep.
pub const RMF_OVERSAMPLING: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    pub t: V3,
    pub n: V3,
    pub b: V3,
    /// Parameter derivative of the unit tangent.
    pub dt: V3,
    /// `n'.b`, per unit parameter.
    pub twist_rate: f64,
}

impl FrameSample {
    pub fn dn(&self) -> V3 {
        -self.n.dot(&self.dt) * self.t + self.twist_rate * self.b
    }

    pub fn db(&self) -> V3 {
        -self.b.dot(&self.dt) * self.t - self.twist_rate * self.n
    }

    /// Rotates the normal plane by `phi`, adding `dphi` to the twist rate.
    pub fn rotated(&self, phi: f64, dphi: f64) -> FrameSample {
        let (s, c) = phi.sin_cos();
        FrameSample {
            t: self.t,
            n: c * self.n + s * self.b,
            b: -s * self.n + c * self.b,
            dt: self.dt,
            twist_rate: self.twist_rate + dphi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedFrame {
    pub params: Vec<f64>,
    pub samples: Vec<FrameSample>,
    pub twisted: bool,
}

/// Worst-case deviations from the frame invariants.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameDefects {
    pub orthonormality: f64,
    pub handedness: f64,
    pub tangency: f64,
}

impl FrameDefects {
    pub fn max(&self) -> f64 {
        self.orthonormality.max(self.handedness).max(self.tangency)
    }
}

fn unit_tangent(d1: &V3, d2: &V3, t: f64) -> Result<(V3, V3)> {
    let s = d1.norm();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Geometry(format!("vanishing p' at t = {t}")));
    }
    let tan = d1 / s;
    let dt = (d2 - tan.dot(d2) * tan) / s;
    Ok((tan, dt))
}

fn orthonormalize(t: &V3, n: &V3) -> (V3, V3) {
    let n = (n - n.dot(t) * t).normalize();
    (n, t.cross(&n))
}

/// Picks a normal at `t(0)` from the coordinate axis least aligned with it.
pub fn default_reference_normal(spine: &SpineSpline) -> Result<V3> {
    let (_, d1, _) = spine.eval(0.0)?;
    let t = d1.normalize();
    let mut best = V3::x();
    let mut score = f64::INFINITY;
    for axis in [V3::x(), V3::y(), V3::z()] {
        let a = axis.dot(&t).abs();
        if a < score - 1e-12 {
            score = a;
            best = axis;
        }
    }
    Ok((best - best.dot(&t) * t).normalize())
}

/// Rotation-minimizing frame by double reflection on an oversampled grid.
pub fn build_rmf(spine: &SpineSpline, params: &[f64], reference_normal: &V3) -> Result<AdaptedFrame> {
    if params.is_empty() {
        return Err(Error::InvalidInput("no frame samples requested".into()));
    }
    if params.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("frame samples must be increasing".into()));
    }
    let mut grid = Vec::with_capacity(RMF_OVERSAMPLING * params.len() + 1);
    let mut keep = Vec::with_capacity(params.len());
    let start = if params[0] > 0.0 {
        grid.push(0.0);
        0.0
    } else {
        params[0]
    };
    let mut prev = start;
    for &s in params {
        if s > prev {
            for k in 1..RMF_OVERSAMPLING {
                grid.push(prev + (s - prev) * k as f64 / RMF_OVERSAMPLING as f64);
            }
        }
        keep.push(grid.len());
        grid.push(s);
        prev = s;
    }

    let mut pos = Vec::with_capacity(grid.len());
    let mut tan = Vec::with_capacity(grid.len());
    let mut dtan = Vec::with_capacity(grid.len());
    for &s in &grid {
        let (p, d1, d2) = spine.eval(s)?;
        let (t, dt) = unit_tangent(&d1, &d2, s)?;
        pos.push(p);
        tan.push(t);
        dtan.push(dt);
    }

    let rn = reference_normal.norm();
    if !(rn > 0.0) || !rn.is_finite() {
        return Err(Error::ReferenceNormal("zero or non-finite reference".into()));
    }
    let r = reference_normal / rn;
    let along = r.dot(&tan[0]);
    if along.abs() > 1e-8 {
        return Err(Error::ReferenceNormal(format!("not orthogonal to t(0): |n.t| = {:e}", along.abs())));
    }
    let mut normals = Vec::with_capacity(grid.len());
    normals.push(orthonormalize(&tan[0], &r).0);
    for i in 0..grid.len() - 1 {
        if tan[i].dot(&tan[i + 1]) <= 0.0 {
            return Err(Error::Geometry(format!("tangent reversal between t = {} and t = {}", grid[i], grid[i + 1])));
        }
        let ri = normals[i];
        let v1 = pos[i + 1] - pos[i];
        let c1 = v1.dot(&v1);
        let (rl, tl) = if c1 > 0.0 {
            (ri - (2.0 / c1) * v1.dot(&ri) * v1, tan[i] - (2.0 / c1) * v1.dot(&tan[i]) * v1)
        } else {
            (ri, tan[i])
        };
        let v2 = tan[i + 1] - tl;
        let c2 = v2.dot(&v2);
        let rn = if c2 > 0.0 { rl - (2.0 / c2) * v2.dot(&rl) * v2 } else { rl };
        normals.push(orthonormalize(&tan[i + 1], &rn).0);
    }

    let samples = keep
        .iter()
        .map(|&g| {
            let (n, b) = orthonormalize(&tan[g], &normals[g]);
            FrameSample { t: tan[g], n, b, dt: dtan[g], twist_rate: 0.0 }
        })
        .collect();
    Ok(AdaptedFrame { params: params.to_vec(), samples, twisted: false })
}

/// Rotates normal and binormal by the twist angle at each sample.
pub fn apply_twist(frame: &AdaptedFrame, twist: &TwistSpline) -> Result<AdaptedFrame> {
    let mut samples = Vec::with_capacity(frame.samples.len());
    for (s, &t) in frame.samples.iter().zip(&frame.params) {
        let (th, dth, _) = twist.eval(t)?;
        samples.push(s.rotated(th, dth));
    }
    Ok(AdaptedFrame { params: frame.params.clone(), samples, twisted: true })
}

/// Transports one sample to a new tangent, after rotating it by `phi`.
///
/// The new normal is the image of the rotated normal under the rotation
/// taking `t` to `t_new` about `t x t_new`. Derivatives follow by the chain rule.
pub fn transport_sample(
    s: &FrameSample,
    t_new: &V3,
    dt_new: &V3,
    phi: f64,
    dphi: f64,
    tol_flip: f64,
) -> Result<FrameSample> {
    let r = s.rotated(phi, dphi);
    let (t, dt) = (r.t, r.dt);
    let (n1, b1) = (r.n, r.b);
    let (dn1, db1) = (r.dn(), r.db());

    let c = t.dot(t_new);
    let den = 1.0 + c;
    if !(den > tol_flip) {
        return Err(Error::FrameFlip(den));
    }
    let dc = dt.dot(t_new) + t.dot(dt_new);
    let w = t.cross(t_new);
    let dw = dt.cross(t_new) + t.cross(dt_new);

    let bt = b1.dot(t_new);
    let dbt = db1.dot(t_new) + b1.dot(dt_new);
    let nt = n1.dot(t_new);
    let dnt = dn1.dot(t_new) + n1.dot(dt_new);

    let gn = bt / den;
    let dgn = (dbt * den - bt * dc) / (den * den);
    let gb = nt / den;

    let n_new = c * n1 - gn * w - nt * t;
    let b_new = c * b1 + gb * w - bt * t;
    let dn_new = dc * n1 + c * dn1 - dgn * w - gn * dw - dnt * t - nt * dt;

    let (n_new, b_new) = {
        let n = (n_new - n_new.dot(t_new) * t_new).normalize();
        let b = t_new.cross(&n);
        debug_assert!((b - b_new).norm() < 1e-6);
        (n, b)
    };
    Ok(FrameSample { t: *t_new, n: n_new, b: b_new, dt: *dt_new, twist_rate: dn_new.dot(&b_new) })
}

/// Frame of the perturbed spine `new_spine = p + h` with twist increment `phi`.
pub fn update_frame(
    frame: &AdaptedFrame,
    new_spine: &SpineSpline,
    phi: &TwistSpline,
    tol_flip: f64,
) -> Result<AdaptedFrame> {
    let mut samples = Vec::with_capacity(frame.samples.len());
    for (s, &t) in frame.samples.iter().zip(&frame.params) {
        let (_, d1, d2) = new_spine.eval(t)?;
        let (tn, dtn) = unit_tangent(&d1, &d2, t)?;
        let (f, df, _) = phi.eval(t)?;
        samples.push(transport_sample(s, &tn, &dtn, f, df, tol_flip)?);
    }
    Ok(AdaptedFrame { params: frame.params.clone(), samples, twisted: frame.twisted })
}

/// Twist rate per unit parameter from the analytic frame derivative.
pub fn twist_rate(frame: &AdaptedFrame) -> Vec<f64> {
    frame.samples.iter().map(|s| s.twist_rate).collect()
}

/// Twist rate from centered differences of `n` dotted with `b`.
pub fn twist_rate_discrete(frame: &AdaptedFrame) -> Vec<f64> {
    let m = frame.samples.len();
    if m < 2 {
        return vec![0.0; m];
    }
    (0..m)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(m - 1));
            let dn = (frame.samples[hi].n - frame.samples[lo].n) / (frame.params[hi] - frame.params[lo]);
            dn.dot(&frame.samples[i].b)
        })
        .collect()
}

/// Invariant defects of a frame against its spine.
pub fn frame_defects(frame: &AdaptedFrame, spine: &SpineSpline) -> Result<FrameDefects> {
    let mut d = FrameDefects::default();
    for (s, &t) in frame.samples.iter().zip(&frame.params) {
        let on = [
            (s.t.norm() - 1.0).abs(),
            (s.n.norm() - 1.0).abs(),
            (s.b.norm() - 1.0).abs(),
            s.t.dot(&s.n).abs(),
            s.t.dot(&s.b).abs(),
            s.n.dot(&s.b).abs(),
        ];
        d.orthonormality = on.iter().fold(d.orthonormality, |a, &b| a.max(b));
        d.handedness = d.handedness.max((s.t.cross(&s.n) - s.b).norm());
        let (_, d1, _) = spine.eval(t)?;
        d.tangency = d.tangency.max((d1.normalize() - s.t).norm());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::spline::Partition;
    use std::f64::consts::PI;

    fn helix(r: f64, c: f64, turns: f64, n: usize) -> SpineSpline {
        let l = 2.0 * PI * turns;
        let p = Partition::uniform(l, n).unwrap();
        let pts: Vec<V3> = p.knots().iter().map(|&s| V3::new(r * s.cos(), r * s.sin(), c * s)).collect();
        SpineSpline::new(p, &pts).unwrap()
    }

    fn straight(l: f64, n: usize) -> SpineSpline {
        let p = Partition::uniform(l, n).unwrap();
        let pts: Vec<V3> = p.knots().iter().map(|&s| V3::new(0.0, 0.0, s)).collect();
        SpineSpline::new(p, &pts).unwrap()
    }

    fn grid(l: f64, m: usize) -> Vec<f64> {
        (0..m).map(|i| l * i as f64 / (m - 1) as f64).collect()
    }

    #[test]
    fn straight_segment_constant_frame() {
        let sp = straight(2.0, 5);
        let f = build_rmf(&sp, &grid(2.0, 30), &V3::x()).unwrap();
        for s in &f.samples {
            assert!((s.t - V3::z()).norm() < 1e-14);
            assert!((s.n - V3::x()).norm() < 1e-14);
            assert!((s.b - V3::y()).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_reference() {
        let sp = straight(1.0, 4);
        assert!(matches!(build_rmf(&sp, &grid(1.0, 5), &V3::new(1.0, 0.0, 1e-3)), Err(Error::ReferenceNormal(_))));
        assert!(build_rmf(&sp, &grid(1.0, 5), &V3::z()).is_err());
        assert!(build_rmf(&sp, &grid(1.0, 5), &V3::new(1.0, 0.0, 1e-10)).is_ok());
    }

    /// RMF normal by integrating n' = -(n.t')t with classical RK4 on a fine grid.
    fn rmf_ode(sp: &SpineSpline, n0: V3, l: f64, steps: usize) -> V3 {
        *rmf_ode_path(sp, n0, l, steps).last().unwrap()
    }

    fn rmf_ode_path(sp: &SpineSpline, n0: V3, l: f64, steps: usize) -> Vec<V3> {
        let rhs = |s: f64, n: &V3| {
            let (_, d1, d2) = sp.eval(s.clamp(0.0, l)).unwrap();
            let (t, dt) = unit_tangent(&d1, &d2, s).unwrap();
            -n.dot(&dt) * t
        };
        let h = l / steps as f64;
        let mut n = n0;
        let mut path = vec![n];
        for i in 0..steps {
            let s = i as f64 * h;
            let k1 = rhs(s, &n);
            let k2 = rhs(s + h / 2.0, &(n + h / 2.0 * k1));
            let k3 = rhs(s + h / 2.0, &(n + h / 2.0 * k2));
            let k4 = rhs(s + h, &(n + h * k3));
            n += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            path.push(n);
        }
        path
    }

    /// Twist of a frame relative to the exact RMF, as the rate of the angle
    /// between its normal and the ODE-propagated normal.
    fn twist_against_ode(sp: &SpineSpline, f: &AdaptedFrame, substeps: usize) -> f64 {
        let l = sp.length();
        let m = f.params.len();
        let path = rmf_ode_path(sp, f.samples[0].n, l, (m - 1) * substeps);
        let angle: Vec<f64> = (0..m)
            .map(|i| {
                let s = &f.samples[i];
                let n = path[i * substeps];
                (n.dot(&s.b)).atan2(n.dot(&s.n))
            })
            .collect();
        (1..m).fold(0.0f64, |a, i| a.max(((angle[i] - angle[i - 1]) / (f.params[i] - f.params[i - 1])).abs()))
    }

    #[test]
    fn helix_rmf_matches_ode_and_has_small_twist() {
        let sp = helix(1.0, 0.3, 1.0, 60);
        let l = sp.length();
        let r = default_reference_normal(&sp).unwrap();
        let f = build_rmf(&sp, &grid(l, 400), &r).unwrap();
        let n_end = rmf_ode(&sp, f.samples[0].n, l, 4000);
        assert!((f.samples.last().unwrap().n - n_end).norm() < 1e-6);
        let max = twist_against_ode(&sp, &f, 10);
        assert!(max <= 1e-6, "twist {max}");
        assert!(frame_defects(&f, &sp).unwrap().max() < 1e-12);
    }

    #[test]
    fn planar_arc_normal_stays_in_plane() {
        let r = 1.3;
        let l = PI * r;
        let p = Partition::uniform(l, 30).unwrap();
        let pts: Vec<V3> = p.knots().iter().map(|&s| V3::new(r * (s / r).cos(), r * (s / r).sin(), 0.0)).collect();
        let sp = SpineSpline::new(p, &pts).unwrap();
        let t0 = sp.eval(0.0).unwrap().1.normalize();
        let r0 = V3::new(-1.0, 0.0, 0.0);
        let f = build_rmf(&sp, &grid(l, 200), &(r0 - r0.dot(&t0) * t0)).unwrap();
        for s in &f.samples {
            assert!(s.n.z.abs() < 1e-9);
        }
        assert!(twist_against_ode(&sp, &f, 10) <= 1e-6);
    }

    #[test]
    fn rmf_twist_converges_at_least_second_order() {
        let sp = helix(1.0, 0.5, 1.0, 40);
        let l = sp.length();
        let r = default_reference_normal(&sp).unwrap();
        let err = |m: usize| {
            let f = build_rmf(&sp, &grid(l, m), &r).unwrap();
            let n_end = rmf_ode(&sp, f.samples[0].n, l, 8000);
            (f.samples.last().unwrap().n - n_end).norm()
        };
        let (e1, e2) = (err(10), err(20));
        assert!(e1 / e2 > 4.0, "order too low: {e1} {e2}");
    }

    #[test]
    fn twist_quarter_turn_and_identity() {
        let sp = straight(1.0, 5);
        let f = build_rmf(&sp, &grid(1.0, 11), &V3::x()).unwrap();
        let part = sp.partition().clone();
        let id = apply_twist(&f, &TwistSpline::zero(part.clone())).unwrap();
        for (a, b) in id.samples.iter().zip(&f.samples) {
            assert_eq!(a.n, b.n);
        }
        let q = apply_twist(&f, &TwistSpline::new(part, vec![PI / 2.0; 5]).unwrap()).unwrap();
        for (a, b) in q.samples.iter().zip(&f.samples) {
            assert!((a.n - b.b).norm() < 1e-15);
            assert!((a.b + b.n).norm() < 1e-15);
        }
    }

    #[test]
    fn linear_twist_on_straight_wire() {
        let sp = straight(2.0, 6);
        let f = build_rmf(&sp, &grid(2.0, 41), &V3::x()).unwrap();
        let omega = 0.8;
        let tw = TwistSpline::new(sp.partition().clone(), sp.partition().knots().iter().map(|s| omega * s).collect())
            .unwrap();
        let g = apply_twist(&f, &tw).unwrap();
        assert!(twist_rate(&g).iter().all(|b| (b - omega).abs() < 1e-12));
        assert!(twist_rate_discrete(&g).iter().all(|b| (b - omega).abs() < 1e-3));
    }

    #[test]
    fn helix_with_quadratic_twist() {
        let sp = helix(1.0, 0.4, 0.25, 30);
        let l = sp.length();
        let r = default_reference_normal(&sp).unwrap();
        let f = build_rmf(&sp, &grid(l, 4001), &r).unwrap();
        let tw =
            TwistSpline::new(sp.partition().clone(), sp.partition().knots().iter().map(|s| s * s).collect()).unwrap();
        let g = apply_twist(&f, &tw).unwrap();
        let beta = twist_rate_discrete(&g);
        for i in 1..g.params.len() - 1 {
            assert!((beta[i] - 2.0 * g.params[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn update_identity_and_constant_rotation() {
        let sp = helix(0.8, 0.3, 0.5, 12);
        let l = sp.length();
        let f = build_rmf(&sp, &grid(l, 31), &default_reference_normal(&sp).unwrap()).unwrap();
        let part = sp.partition().clone();
        let u = update_frame(&f, &sp, &TwistSpline::zero(part.clone()), TOL_FLIP).unwrap();
        for (a, b) in u.samples.iter().zip(&f.samples) {
            assert!((a.n - b.n).norm() < 1e-14);
            assert!((a.twist_rate - b.twist_rate).abs() < 1e-13);
        }
        let c = 0.37;
        let u = update_frame(&f, &sp, &TwistSpline::new(part, vec![c; 12]).unwrap(), TOL_FLIP).unwrap();
        for (a, b) in u.samples.iter().zip(&f.samples) {
            assert!((a.n - (c.cos() * b.n + c.sin() * b.b)).norm() < 1e-14);
        }
    }

    #[test]
    fn update_flags_flip() {
        let sp = straight(1.0, 4);
        let f = build_rmf(&sp, &grid(1.0, 5), &V3::x()).unwrap();
        let p = sp.partition().clone();
        let back: Vec<V3> = p.knots().iter().map(|&s| V3::new(0.0, 0.0, -s)).collect();
        let rev = SpineSpline::new(p.clone(), &back).unwrap();
        assert!(matches!(update_frame(&f, &rev, &TwistSpline::zero(p), TOL_FLIP), Err(Error::FrameFlip(_))));
    }

    #[test]
    fn transported_twist_rate_matches_discrete_derivative() {
        let sp = helix(1.0, 0.3, 0.75, 20);
        let l = sp.length();
        let f = build_rmf(&sp, &grid(l, 3001), &default_reference_normal(&sp).unwrap()).unwrap();
        let p = sp.partition().clone();
        let pts: Vec<V3> = sp
            .points()
            .iter()
            .enumerate()
            .map(|(j, q)| q + 0.05 * V3::new((j as f64).sin(), (2.0 * j as f64).cos(), 0.3))
            .collect();
        let moved = SpineSpline::new(p.clone(), &pts).unwrap();
        let phi = TwistSpline::new(p, (0..20).map(|j| 0.1 * (j as f64 * 0.7).sin()).collect()).unwrap();
        let u = update_frame(&f, &moved, &phi, TOL_FLIP).unwrap();
        assert!(frame_defects(&u, &moved).unwrap().max() < 1e-12);
        // Richardson-extrapolated centered differences of n dotted with b.
        let knots = moved.partition().knots().to_vec();
        let d = |i: usize, k: usize| {
            (u.samples[i + k].n - u.samples[i - k].n).dot(&u.samples[i].b) / (u.params[i + k] - u.params[i - k])
        };
        for i in 2..u.params.len() - 2 {
            // Differences lose their order where the third derivative jumps.
            if knots.iter().any(|&k| k > u.params[i - 2] && k < u.params[i + 2]) {
                continue;
            }
            let rich = (4.0 * d(i, 1) - d(i, 2)) / 3.0;
            assert!((rich - u.samples[i].twist_rate).abs() < 1e-7, "{i} {rich} {}", u.samples[i].twist_rate);
        }
    }
}
