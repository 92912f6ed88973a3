//! Shared setup for the integration tests.
#![allow(dead_code)]

use chiralwire::app::runs::{initial_design, optimize_design, physics, Physics, RunOutcome};
use chiralwire::app::RunConfig;
use chiralwire::chirality::{measure, ChiralityReport};
use chiralwire::farfield::{FarFieldOperator, OperatorSpec, WireState};
use chiralwire::material::{resonant_aspect, EllipticalCrossSection, MaterialDb};
use chiralwire::objective::{pack, ObjectiveConfig, WireProblem};
use chiralwire::optimizer::seeded_rng;
use chiralwire::V3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TAU: f64 = std::f64::consts::TAU;

/// Operator for `metal` at `f` THz with the resonant cross-section and the
/// default thickness rule, lengths in wavelengths.
pub fn resonant_spec(metal: &str, f_thz: f64, nmax: usize) -> OperatorSpec {
    let db = MaterialDb::default();
    let table = db.table(metal).unwrap();
    let cross_section = EllipticalCrossSection::from_aspect(resonant_aspect(table, f_thz).unwrap()).unwrap();
    OperatorSpec {
        nmax,
        k: TAU,
        rho: 0.05 / (TAU * (cross_section.a * cross_section.b).sqrt()),
        cross_section,
        eps_r: table.lookup(f_thz).unwrap(),
    }
}

pub fn problem(spec: OperatorSpec, knots: usize, simpson_points: usize, length: f64, alpha: [f64; 3]) -> WireProblem {
    WireProblem::new(ObjectiveConfig { alpha, length, knots, simpson_points, operator: spec }).unwrap()
}

pub fn straight(n: usize, length: f64) -> Vec<V3> {
    (0..n).map(|i| V3::new(0.0, 0.0, length * (i as f64 / (n - 1) as f64 - 0.5))).collect()
}

/// Random bent wire: a few smooth modes of random size plus knot noise.
pub fn random_wire(n: usize, length: f64, rng: &mut ChaCha8Rng) -> (Vec<V3>, Vec<f64>) {
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.2..0.2)).collect();
    let pts = (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64 - 0.5;
            let noise = V3::new(rng.gen(), rng.gen(), rng.gen()) * (0.5 / (n * n) as f64);
            length
                * (V3::new(s + c[0] * s * s, c[1] * (3.0 * s).sin() + c[2] * s, c[3] * (2.0 * s).cos() + c[4] * s * s)
                    + noise)
        })
        .collect();
    let tw = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (pts, tw)
}

/// Operator of a design with an explicit reference normal, projected off `t(0)`.
pub fn design_matrix(
    p: &WireProblem,
    points: &[V3],
    twist: &[f64],
    reference: V3,
) -> nalgebra::DMatrix<chiralwire::C64> {
    let x = pack(points, twist).unwrap();
    let (spine, _) = p.splines(&x).unwrap();
    // Only the component normal to the start tangent matters.
    let t0 = spine.eval(0.0).unwrap().1.normalize();
    let reference = (reference - t0 * t0.dot(&reference)).normalize();
    let it = p.initial_iterate(&x, Some(reference)).unwrap();
    let st = WireState::new(&spine, &it.frame, &p.quad).unwrap();
    p.op.assemble_t(&st).data
}

pub fn design_report(p: &WireProblem, points: &[V3], twist: &[f64], reference: V3) -> ChiralityReport {
    measure(&design_matrix(p, points, twist, reference)).unwrap()
}

pub fn with_rho(spec: OperatorSpec, rho: f64) -> FarFieldOperator {
    FarFieldOperator::new(OperatorSpec { rho, ..spec }).unwrap()
}

/// Example 5.1 run: twist-only on a straight wire, no files written.
pub fn twist_only(metal: &str, f_thz: f64, length: f64, nmax: usize) -> (Physics, RunOutcome) {
    let cfg = RunConfig {
        metal: metal.into(),
        f_opt_thz: f_thz,
        length_lambda: length,
        nmax: Some(nmax),
        ..RunConfig::preset("twist-only").unwrap()
    };
    let db = MaterialDb::default();
    let phys = physics(&cfg, &db).unwrap();
    let init = initial_design(&cfg, &mut seeded_rng(cfg.seed)).unwrap();
    let out = optimize_design(&cfg, &phys, &init, cfg.seed, "test", None).unwrap();
    (phys, out)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    seeded_rng(seed)
}
