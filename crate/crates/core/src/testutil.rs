//! Shared fixtures for unit tests.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::farfield::{FarFieldOperator, OperatorSpec, WireState};
use crate::geometry::{
    apply_twist, build_rmf, default_reference_normal, AdaptedFrame, Partition, SimpsonRule, SpineSpline, TwistSpline,
};
use crate::material::EllipticalCrossSection;
use crate::{C64, V3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Helix of `turns` turns with radius `r` and pitch `pitch`, sampled at `n` knots.
pub fn helix_points(n: usize, r: f64, pitch: f64, turns: f64) -> Vec<V3> {
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64 * turns * std::f64::consts::TAU;
            Vector3::new(r * s.cos(), r * s.sin(), pitch * s / std::f64::consts::TAU)
        })
        .collect()
}

/// A gently bent random wire of about unit size.
pub fn random_points(n: usize, rng: &mut impl Rng) -> Vec<V3> {
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64 - 0.5;
            Vector3::new(s, 0.25 * (3.0 * s).sin(), 0.2 * s * s)
                + (1.25 / (n * n) as f64) * Vector3::new(rng.gen(), rng.gen(), rng.gen())
        })
        .collect()
}

pub struct Wire {
    pub spine: SpineSpline,
    pub frame: AdaptedFrame,
    pub quad: SimpsonRule,
}

pub fn wire(points: &[V3], twist: &[f64], simpson: usize) -> Wire {
    let part = Partition::uniform(1.0, points.len()).unwrap();
    let spine = SpineSpline::new(part.clone(), points).unwrap();
    let twist = TwistSpline::new(part.clone(), twist.to_vec()).unwrap();
    let quad = SimpsonRule::new(&part, simpson).unwrap();
    let r = default_reference_normal(&spine).unwrap();
    let rmf = build_rmf(&spine, &quad.params, &r).unwrap();
    let frame = apply_twist(&rmf, &twist).unwrap();
    Wire { spine, frame, quad }
}

impl Wire {
    pub fn state(&self) -> WireState {
        WireState::new(&self.spine, &self.frame, &self.quad).unwrap()
    }
}

/// Silver-like permittivity at 1 wavelength units.
pub fn spec(nmax: usize, aspect: f64) -> OperatorSpec {
    OperatorSpec {
        nmax,
        k: std::f64::consts::TAU,
        rho: 0.01,
        cross_section: EllipticalCrossSection::from_aspect(aspect).unwrap(),
        eps_r: C64::new(-8.0, 0.3),
    }
}

pub fn operator(nmax: usize, aspect: f64) -> FarFieldOperator {
    FarFieldOperator::new(spec(nmax, aspect)).unwrap()
}
