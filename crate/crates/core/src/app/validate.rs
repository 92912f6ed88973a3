//! Property batteries run by the `validate` command.

use nalgebra::{DMatrix, Matrix2, Rotation3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::RunConfig;
use super::runs::{material_db, objective_config, physics, Physics};
use crate::chirality::measure;
use crate::error::Result;
use crate::farfield::{truncation_adequate, FarFieldOperator, OperatorSpec, WireState};
use crate::geometry::{circumscribing_radius, Partition, SpineSpline};
use crate::material::{check_bounds, cross_section_tensor, polarization_tensor, EllipticalCrossSection, MaterialDb};
use crate::objective::{central_difference_gradient, pack, relative_inf_error, WireProblem};
use crate::optimizer::{seeded_rng, Objective};
use crate::{C64, V3};

/// Aspect ratios swept by the bound suite.
pub const BOUND_ASPECTS: [f64; 5] = [1.0, 2.0, 5.0, 12.5, 26.94];
pub const BOUND_TOL: f64 = 1e-10;

/// Cross-section tensor under test; swapped out to check that the suite catches faults.
pub type TensorFn = fn(&EllipticalCrossSection, C64) -> Result<Matrix2<C64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub suites: Vec<SuiteResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.status != Status::Fail)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

fn result(name: &str, ok: bool, detail: String) -> SuiteResult {
    SuiteResult { name: name.into(), status: if ok { Status::Pass } else { Status::Fail }, detail }
}

fn unit_vectors(rng: &mut ChaCha8Rng, count: usize) -> Vec<V3> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = V3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            out.push(v / n);
        }
    }
    out
}

/// Worst-case outcome of the polarization-tensor bounds over a table sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSweep {
    pub cases: usize,
    pub sign_failures: usize,
    pub min_real_margin: f64,
    pub max_imag_excess: f64,
    pub max_eigen_defect: f64,
}

impl BoundSweep {
    pub fn holds(&self, tol: f64) -> bool {
        self.sign_failures == 0
            && self.min_real_margin >= -tol
            && self.max_imag_excess <= tol
            && self.max_eigen_defect <= tol
    }
}

/// Checks both bounds and `M t = t` for every table row and aspect ratio, over
/// `directions` random unit vectors and a few frame orientations.
pub fn bound_sweep(db: &MaterialDb, tensor: TensorFn, directions: usize, seed: u64) -> Result<BoundSweep> {
    let mut rng = seeded_rng(seed);
    let xis = unit_vectors(&mut rng, directions);
    let mut sweep = BoundSweep {
        cases: 0,
        sign_failures: 0,
        min_real_margin: f64::INFINITY,
        max_imag_excess: f64::NEG_INFINITY,
        max_eigen_defect: 0.0,
    };
    let frames: Vec<_> = (0..3)
        .map(|_| {
            *Rotation3::from_euler_angles(rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5), rng.gen_range(-3.0..3.0))
                .matrix()
        })
        .collect();
    for metal in db.metals() {
        for row in db.table(metal)?.rows() {
            for &aspect in &BOUND_ASPECTS {
                let cs = EllipticalCrossSection::from_aspect(aspect)?;
                let m = tensor(&cs, row.eps)?;
                for v in &frames {
                    let m3 = polarization_tensor(v, &m)?;
                    let rep = check_bounds(row.eps, &m3, &xis);
                    sweep.cases += 1;
                    sweep.sign_failures += rep.sign_conditions.iter().filter(|ok| !**ok).count();
                    sweep.min_real_margin = sweep.min_real_margin.min(rep.real_margin);
                    sweep.max_imag_excess = sweep.max_imag_excess.max(rep.imag_excess);
                    let t = Vector3::from(v.column(0)).map(C64::from);
                    sweep.max_eigen_defect = sweep.max_eigen_defect.max((m3 * t - t).norm());
                }
            }
        }
    }
    Ok(sweep)
}

/// Random complex square matrix with entries of mixed scale.
pub fn random_block_matrix(rng: &mut ChaCha8Rng, half: usize) -> DMatrix<C64> {
    let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
    DMatrix::from_fn(2 * half, 2 * half, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)
}

/// Gently bent wire of length about `length`, centred near the origin, with small twist.
pub fn random_design(n: usize, length: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (a1, a2, ph) = (rng.gen_range(0.05..0.25), rng.gen_range(-0.2..0.2), rng.gen_range(0.0..6.0));
    let noise = 1.25 / (n * n) as f64;
    let points: Vec<V3> = (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64 - 0.5;
            length * V3::new(s, a1 * (3.0 * s + ph).sin(), a2 * s * s)
                + length * noise * V3::new(rng.gen(), rng.gen(), rng.gen())
        })
        .collect();
    let twist: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    pack(&points, &twist).expect("lengths agree")
}

fn straight(n: usize, length: f64) -> Vec<V3> {
    (0..n).map(|i| V3::new(0.0, 0.0, length * (i as f64 / (n - 1) as f64 - 0.5))).collect()
}

fn state_of(problem: &WireProblem, x: &[f64]) -> Result<WireState> {
    let it = problem.initial_iterate(x, None)?;
    let (spine, _) = problem.splines(x)?;
    WireState::new(&spine, &it.frame, &problem.quad)
}

fn chain_suite(phys: &Physics, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let half = rng.gen_range(1..6);
        let r = measure(&random_block_matrix(rng, half))?;
        worst = worst.max(-r.chi_hs).max(r.chi_hs - r.chi2).max(r.chi2 - r.hs_norm);
    }
    let problem = WireProblem::new(objective_config(cfg, phys, cfg.length_lambda, 3))?;
    for _ in 0..10 {
        let x = random_design(cfg.knots, cfg.length_lambda, rng);
        let st = state_of(&problem, &x)?;
        let r = measure(&problem.op.assemble_t(&st).data)?;
        worst = worst.max(-r.chi_hs).max(r.chi_hs - r.chi2).max(r.chi2 - r.hs_norm);
    }
    Ok(result("chirality-chain", worst <= 1e-10, format!("largest violation {worst:.3e}")))
}

fn achirality_suite(phys: &Physics, cfg: &RunConfig) -> Result<SuiteResult> {
    let problem = WireProblem::new(objective_config(cfg, phys, cfg.length_lambda, 3))?;
    let x = pack(&straight(cfg.knots, cfg.length_lambda), &vec![0.0; cfg.knots])?;
    let r = measure(&problem.op.assemble_t(&state_of(&problem, &x)?).data)?;
    let worst = r.j2.max(r.j_hs);
    Ok(result("achirality", worst <= 1e-8, format!("straight wire J = {worst:.3e}")))
}

fn gradient_suite(phys: &Physics, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut c = cfg.clone();
    c.alpha1 = c.alpha1.max(1.0);
    c.alpha2 = c.alpha2.max(1e-3);
    c.alpha3 = c.alpha3.max(1e-3);
    let problem = WireProblem::new(objective_config(&c, phys, c.length_lambda, 3))?;
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let x = random_design(c.knots, c.length_lambda, rng);
        let it = problem.initial_iterate(&x, None)?;
        let (_, it) = problem.evaluate(&x, &it)?;
        let g = problem.gradient(&x, &it)?;
        let fd = central_difference_gradient(&problem, &x, &it, 1e-6)?;
        worst = worst.max(relative_inf_error(&g, &fd));
    }
    Ok(result("gradient", worst <= 1e-5, format!("relative error {worst:.3e}")))
}

fn truncation_suite(phys: &Physics, cfg: &RunConfig) -> Result<SuiteResult> {
    let k = std::f64::consts::TAU;
    let part = Partition::uniform(cfg.length_lambda, cfg.knots)?;
    let spine = SpineSpline::new(part, &straight(cfg.knots, cfg.length_lambda))?;
    let radius = circumscribing_radius(&spine.points());
    let _ = phys;
    Ok(match cfg.nmax {
        Some(n) if !truncation_adequate(n, k, radius) => SuiteResult {
            name: "truncation".into(),
            status: Status::Warn,
            detail: format!("N = {n} is below kR = {:.3}", k * radius),
        },
        n => result("truncation", true, format!("N = {:?}, kR = {:.3}", n, k * radius)),
    })
}

fn homogeneity_suite(phys: &Physics, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let problem = WireProblem::new(objective_config(cfg, phys, cfg.length_lambda, 3))?;
    let x = random_design(cfg.knots, cfg.length_lambda, rng);
    let st = state_of(&problem, &x)?;
    let spec = problem.op.spec;
    let a = measure(&problem.op.assemble_t(&st).data)?;
    let op2 = FarFieldOperator::new(OperatorSpec { rho: 2.0 * spec.rho, ..spec })?;
    let b = measure(&op2.assemble_t(&st).data)?;
    let err = (a.j2 - b.j2).abs().max((a.j_hs - b.j_hs).abs()).max((b.hs_norm / a.hs_norm - 4.0).abs());
    Ok(result("rho-homogeneity", err <= 1e-12, format!("deviation {err:.3e}")))
}

/// Runs every suite with the given cross-section tensor.
pub fn validate_with(cfg: &RunConfig, tensor: TensorFn) -> Result<ValidationReport> {
    cfg.validate()?;
    let db = material_db(cfg)?;
    let phys = physics(cfg, &db)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut suites = Vec::new();
    let sweep = bound_sweep(&db, tensor, 1000, cfg.seed)?;
    suites.push(result(
        "bounds",
        sweep.holds(BOUND_TOL),
        format!(
            "{} cases, sign failures {}, min real margin {:.3e}, max imag excess {:.3e}, eigenvector defect {:.3e}",
            sweep.cases, sweep.sign_failures, sweep.min_real_margin, sweep.max_imag_excess, sweep.max_eigen_defect
        ),
    ));
    suites.push(chain_suite(&phys, cfg, &mut rng)?);
    suites.push(achirality_suite(&phys, cfg)?);
    suites.push(gradient_suite(&phys, cfg, &mut rng)?);
    suites.push(truncation_suite(&phys, cfg)?);
    suites.push(homogeneity_suite(&phys, cfg, &mut rng)?);
    Ok(ValidationReport { suites })
}

pub fn run_validate(cfg: &RunConfig) -> Result<ValidationReport> {
    validate_with(cfg, cross_section_tensor)
}
