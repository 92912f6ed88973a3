//! The five commands: optimize, scan, multistart, validate and export.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{InitialSpine, RunConfig};
use super::io::{frame_block, write_history, write_json, Checkpoint, GeometryFile, Provenance};
use crate::chirality::measure;
use crate::error::{Error, Result};
use crate::farfield::{truncation_adequate, truncation_degree, FarFieldOperator, OperatorSpec, WireState};
use crate::geometry::{
    apply_twist, build_rmf, circumscribing_radius, default_reference_normal, AdaptedFrame, Partition, SimpsonRule,
    SpineSpline,
};
use crate::material::{resonant_aspect, EllipticalCrossSection, MaterialDb};
use crate::objective::{pack, unpack, Evaluation, ObjectiveConfig, WireIterate, WireProblem, RECORD_FIELDS};
use crate::optimizer::{
    optimize, resume, seeded_rng, uniform_values, BfgsParams, BfgsState, IterationRecord, Termination,
};
use crate::{wavelength_thz, C64, V3};

/// Helices shorter than this many wavelengths are redrawn.
const MIN_HELIX_LENGTH: f64 = 0.1;

pub fn material_db(cfg: &RunConfig) -> Result<MaterialDb> {
    match &cfg.permittivity_csv {
        Some(p) => MaterialDb::from_csv_file(p),
        None => Ok(MaterialDb::default()),
    }
}

/// Material and cross-section data at the design frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub eps_r: C64,
    pub cross_section: EllipticalCrossSection,
    pub wavelength_m: f64,
    /// Thickness in wavelengths.
    pub rho_lambda: f64,
}

pub fn physics(cfg: &RunConfig, db: &MaterialDb) -> Result<Physics> {
    let table = db.table(&cfg.metal)?;
    let eps_r = table.lookup(cfg.f_opt_thz)?;
    let aspect = match cfg.aspect {
        Some(a) => a,
        None => resonant_aspect(table, cfg.f_opt_thz)?,
    };
    let cross_section = EllipticalCrossSection::from_aspect(aspect)?;
    let k = std::f64::consts::TAU;
    let rho_lambda = cfg.rho_rule / (k * (cross_section.a * cross_section.b).sqrt());
    Ok(Physics { eps_r, cross_section, wavelength_m: wavelength_thz(cfg.f_opt_thz), rho_lambda })
}

/// Initial spine and twist in wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDesign {
    pub length: f64,
    pub points: Vec<V3>,
    pub twist: Vec<f64>,
    pub reference_normal: Option<V3>,
    /// Helix radius and height when the spine is a helix.
    pub helix: Option<(f64, f64)>,
}

fn helix_points(n: usize, radius: f64, height: f64, turns: f64) -> Vec<V3> {
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            let a = std::f64::consts::TAU * turns * s;
            V3::new(radius * a.cos(), radius * a.sin(), height * (s - 0.5))
        })
        .collect()
}

pub fn initial_design(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<InitialDesign> {
    let n = cfg.knots;
    let mut design = match cfg.init {
        InitialSpine::Straight => {
            let l = cfg.length_lambda;
            let points = (0..n).map(|i| V3::new(0.0, 0.0, l * (i as f64 / (n - 1) as f64 - 0.5))).collect();
            InitialDesign { length: l, points, twist: vec![0.0; n], reference_normal: None, helix: None }
        }
        InitialSpine::Helix => {
            let (radius, height) = loop {
                let r = cfg.helix_radius_lambda.unwrap_or_else(|| rng.gen_range(0.0..=cfg.helix_radius_max_lambda));
                let h = cfg.helix_height_lambda.unwrap_or_else(|| rng.gen_range(0.0..=cfg.helix_height_max_lambda));
                let len = ((std::f64::consts::TAU * r * cfg.helix_turns).powi(2) + h * h).sqrt();
                if len >= MIN_HELIX_LENGTH {
                    break (r, h);
                }
                if cfg.helix_radius_lambda.is_some() && cfg.helix_height_lambda.is_some() {
                    return Err(Error::Config(format!("helix of length {len} wavelengths is too short")));
                }
            };
            let length = ((std::f64::consts::TAU * radius * cfg.helix_turns).powi(2) + height * height).sqrt();
            InitialDesign {
                length,
                points: helix_points(n, radius, height, cfg.helix_turns),
                twist: vec![0.0; n],
                reference_normal: None,
                helix: Some((radius, height)),
            }
        }
        InitialSpine::Geometry => {
            let path = cfg.init_geometry.as_ref().expect("validated");
            let g = GeometryFile::read(path)?;
            if g.knots() != n {
                return Err(Error::Config(format!("init geometry has {} knots, config asks for {n}", g.knots())));
            }
            let (params, points, twist) = g.design_lambda();
            InitialDesign {
                length: *params.last().expect("validated"),
                points,
                twist,
                reference_normal: Some(V3::from(g.reference_normal)),
                helix: None,
            }
        }
    };
    if cfg.spine_perturbation_lambda > 0.0 {
        let amp = cfg.spine_perturbation_lambda;
        for p in &mut design.points {
            *p += V3::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp));
        }
    }
    if cfg.twist_amplitude_rad > 0.0 {
        for (t, d) in design.twist.iter_mut().zip(uniform_values(rng, n, cfg.twist_amplitude_rad)) {
            *t += d;
        }
    }
    Ok(design)
}

/// `ceil(kR) + 1` for the spine sampled at the quadrature nodes.
pub fn degree_for(spine: &SpineSpline, quad: &SimpsonRule, k: f64, floor: usize) -> Result<usize> {
    let s = spine.sample(&quad.params)?;
    Ok(truncation_degree(k, circumscribing_radius(&s.p), floor))
}

pub fn objective_config(cfg: &RunConfig, phys: &Physics, length: f64, nmax: usize) -> ObjectiveConfig {
    ObjectiveConfig {
        alpha: cfg.alpha(),
        length,
        knots: cfg.knots,
        simpson_points: cfg.simpson_points,
        operator: OperatorSpec {
            nmax,
            k: std::f64::consts::TAU,
            rho: phys.rho_lambda,
            cross_section: phys.cross_section,
            eps_r: phys.eps_r,
        },
    }
}

/// Final state of one optimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub nmax: usize,
    pub termination: Termination,
    pub iterations: usize,
    pub evaluation: Evaluation,
    pub message: Option<String>,
    #[serde(skip)]
    pub geometry: Option<GeometryFile>,
    #[serde(skip)]
    pub history: Vec<IterationRecord>,
    #[serde(skip)]
    pub helix: Option<(f64, f64)>,
}

fn geometry_file(
    cfg: &RunConfig,
    phys: &Physics,
    problem: &WireProblem,
    x: &[f64],
    reference_normal: V3,
    frame: &AdaptedFrame,
    provenance: Provenance,
) -> Result<GeometryFile> {
    let lam = phys.wavelength_m;
    let (points, twist) = unpack(x)?;
    Ok(GeometryFile {
        length_m: problem.partition.length() * lam,
        knot_parameters: problem.partition.knots().iter().map(|t| t * lam).collect(),
        spine_knots: points.iter().map(|p| [p.x * lam, p.y * lam, p.z * lam]).collect(),
        twist_knots: twist,
        reference_normal: [reference_normal.x, reference_normal.y, reference_normal.z],
        wavelength_m: lam,
        f_opt_thz: cfg.f_opt_thz,
        metal: cfg.metal.clone(),
        cross_section: phys.cross_section,
        rho_m: phys.rho_lambda * lam,
        frame: Some(frame_block(frame, cfg.simpson_points, lam)),
        provenance: Some(provenance),
    })
}

fn bfgs_params(cfg: &RunConfig, seed: u64) -> BfgsParams {
    BfgsParams { max_iter: cfg.max_iter, mask: cfg.mode.mask(cfg.knots), seed, ..Default::default() }
}

/// Optimizes one initial design; writes results into `out` when given.
pub fn optimize_design(
    cfg: &RunConfig,
    phys: &Physics,
    init: &InitialDesign,
    seed: u64,
    command: &str,
    out: Option<&Path>,
) -> Result<RunOutcome> {
    let part = Partition::uniform(init.length, cfg.knots)?;
    let quad = SimpsonRule::new(&part, cfg.simpson_points)?;
    let spine = SpineSpline::new(part.clone(), &init.points)?;
    let k = std::f64::consts::TAU;
    let rule = degree_for(&spine, &quad, k, cfg.nmax_floor)?;
    let nmax = cfg.nmax.unwrap_or(rule);
    let radius = circumscribing_radius(&spine.sample(&quad.params)?.p);
    if !truncation_adequate(nmax, k, radius) {
        log::warn!("N = {nmax} is below kR = {:.3}; the operator may be under-resolved", k * radius);
    }
    let problem = WireProblem::new(objective_config(cfg, phys, init.length, nmax))?;
    let x0 = pack(&init.points, &init.twist)?;
    let reference = match init.reference_normal {
        Some(r) => r,
        None => default_reference_normal(&spine)?,
    };
    let it0 = problem.initial_iterate(&x0, Some(reference))?;
    let params = bfgs_params(cfg, seed);
    let provenance = Provenance::new(command, cfg, seed);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let every = cfg.checkpoint_every;
    let mut save = |st: &BfgsState<WireIterate>| -> Result<()> {
        if let Some(dir) = out {
            if every > 0 && st.iteration % every == 0 {
                Checkpoint { provenance: provenance.clone(), nmax, rho_lambda: phys.rho_lambda, state: st.clone() }
                    .write(&dir.join("checkpoint.json"))?;
            }
        }
        Ok(())
    };
    let outcome = optimize(&problem, x0, &it0, &params, &mut save)?;
    finish_run(cfg, phys, &problem, reference, outcome, seed, nmax, provenance, out, init.helix)
}

#[allow(clippy::too_many_arguments)]
fn finish_run(
    cfg: &RunConfig,
    phys: &Physics,
    problem: &WireProblem,
    reference: V3,
    outcome: crate::optimizer::BfgsOutcome<WireIterate>,
    seed: u64,
    nmax: usize,
    provenance: Provenance,
    out: Option<&Path>,
    helix: Option<(f64, f64)>,
) -> Result<RunOutcome> {
    let st = &outcome.state;
    let evaluation = match &st.aux.eval {
        Some(e) => e.clone(),
        None => problem.evaluate(&st.x, &st.aux)?.0.eval,
    };
    let geometry = geometry_file(cfg, phys, problem, &st.x, reference, &st.aux.frame, provenance)?;
    let result = RunOutcome {
        seed,
        nmax,
        termination: outcome.termination,
        iterations: st.iteration,
        evaluation,
        message: outcome.message.clone(),
        geometry: Some(geometry),
        history: outcome.history,
        helix,
    };
    if let Some(dir) = out {
        let g = result.geometry.as_ref().expect("set above");
        g.write(&dir.join("geometry.json"))?;
        write_history(&dir.join("iterations.csv"), &result.history, &RECORD_FIELDS)?;
        write_json(&dir.join("report.json"), &result)?;
    }
    log::info!(
        "finished: {:?} after {} iterations, J2 = {:.4}, J_HS = {:.4}",
        result.termination,
        result.iterations,
        result.evaluation.report.j2,
        result.evaluation.report.j_hs
    );
    Ok(result)
}

pub fn run_optimize(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let db = material_db(cfg)?;
    let phys = physics(cfg, &db)?;
    let mut rng = seeded_rng(cfg.seed);
    let init = initial_design(cfg, &mut rng)?;
    optimize_design(cfg, &phys, &init, cfg.seed, "optimize", Some(&cfg.output_dir))
}

/// Keys that may change when resuming; everything else is fixed by the checkpoint.
pub const RESUME_KEYS: [&str; 3] = ["max_iter", "checkpoint_every", "output_dir"];

/// Continues an optimization from a checkpoint file, with optional
/// `key=value` overrides limited to [`RESUME_KEYS`].
pub fn run_resume<S: AsRef<str>>(path: &Path, overrides: &[S]) -> Result<RunOutcome> {
    let ck = Checkpoint::read(path)?;
    for o in overrides {
        let key = o.as_ref().split_once('=').map(|(k, _)| k.trim()).unwrap_or("");
        if !RESUME_KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "'{}' cannot be changed on resume (allowed: {})",
                o.as_ref(),
                RESUME_KEYS.join(", ")
            )));
        }
    }
    let cfg = ck.provenance.config.with_overrides(overrides)?;
    cfg.validate()?;
    let db = material_db(&cfg)?;
    let phys = physics(&cfg, &db)?;
    let n = cfg.knots;
    if ck.state.x.len() != 4 * n {
        return Err(Error::Parse("checkpoint does not match its configuration".into()));
    }
    let length = ck.state.aux.frame.params.last().copied().unwrap_or(0.0);
    let problem = WireProblem::new(objective_config(&cfg, &phys, length, ck.nmax))?;
    if problem.quad.params != ck.state.aux.frame.params {
        return Err(Error::Parse("checkpoint frame does not match the quadrature".into()));
    }
    let params = bfgs_params(&cfg, ck.provenance.seed);
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out)?;
    let reference = ck.state.aux.frame.samples[0].n;
    let provenance = ck.provenance.clone();
    let every = cfg.checkpoint_every;
    let mut save = |st: &BfgsState<WireIterate>| -> Result<()> {
        if every > 0 && st.iteration % every == 0 {
            Checkpoint { provenance: provenance.clone(), nmax: ck.nmax, rho_lambda: ck.rho_lambda, state: st.clone() }
                .write(&out.join("checkpoint.json"))?;
        }
        Ok(())
    };
    let outcome = resume(&problem, ck.state.clone(), &params, seeded_rng(params.seed), &mut save)?;
    finish_run(
        &cfg,
        &phys,
        &problem,
        reference,
        outcome,
        ck.provenance.seed,
        ck.nmax,
        ck.provenance.clone(),
        Some(&out),
        None,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub f_thz: f64,
    pub j2: f64,
    pub j_hs: f64,
    pub hs_norm: f64,
}

/// Evaluates a fixed geometry at a range of frequencies. The degree is
/// `nmax` when given and `ceil(kR) + 1` (at least `nmax_floor`) otherwise.
pub fn scan_geometry(
    g: &GeometryFile,
    db: &MaterialDb,
    freqs: &[f64],
    nmax: Option<usize>,
    nmax_floor: usize,
    simpson_points: usize,
) -> Result<Vec<ScanRow>> {
    let (spine, quad, frame) = geometry_frame(g, simpson_points)?;
    let state = WireState::new(&spine, &frame, &quad)?;
    let radius = circumscribing_radius(&state.p);
    let table = db.table(&g.metal)?;
    let rho = g.rho_m / g.wavelength_m;
    freqs
        .par_iter()
        .map(|&f| {
            let eps_r = table.lookup(f)?;
            let k = std::f64::consts::TAU * f / g.f_opt_thz;
            let nmax = nmax.unwrap_or_else(|| truncation_degree(k, radius, nmax_floor));
            let op = FarFieldOperator::new(OperatorSpec { nmax, k, rho, cross_section: g.cross_section, eps_r })?;
            let t = op.assemble_t(&state);
            let r = measure(&t.data)?;
            Ok(ScanRow { f_thz: f, j2: r.j2, j_hs: r.j_hs, hs_norm: r.hs_norm })
        })
        .collect()
}

pub fn write_scan(path: &Path, rows: &[ScanRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    w.write_record(["f_THz", "J2", "JHS", "hs_norm"]).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    for r in rows {
        w.write_record([
            r.f_thz.to_string(),
            format!("{:e}", r.j2),
            format!("{:e}", r.j_hs),
            format!("{:e}", r.hs_norm),
        ])
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_scan(cfg: &RunConfig) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    let path = cfg.geometry.as_ref().ok_or_else(|| Error::Config("scan needs `geometry`".into()))?;
    let g = GeometryFile::read(path)?;
    let db = material_db(cfg)?;
    db.table(&g.metal)?;
    let points = g.frame.as_ref().map_or(cfg.simpson_points, |f| f.simpson_points);
    let rows = scan_geometry(&g, &db, &cfg.scan_grid()?, None, cfg.nmax_floor, points)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_scan(&cfg.output_dir.join("scan.csv"), &rows)?;
    Ok(rows)
}

/// One entry of a ranked campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignEntry {
    pub run: usize,
    pub seed: u64,
    pub radius_lambda: f64,
    pub height_lambda: f64,
    pub outcome: RunOutcome,
}

/// Seed of campaign run `i`.
pub fn run_seed(campaign_seed: u64, i: usize) -> u64 {
    campaign_seed.wrapping_add(i as u64)
}

/// Independent optimizations from sampled initial helices, ranked by `J_HS`.
pub fn run_multistart(cfg: &RunConfig) -> Result<Vec<CampaignEntry>> {
    cfg.validate()?;
    let db = material_db(cfg)?;
    let phys = physics(cfg, &db)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let helix_cfg = RunConfig { init: InitialSpine::Helix, ..cfg.clone() };
    let job = |i: usize| -> Result<CampaignEntry> {
        let seed = run_seed(cfg.seed, i);
        let mut rng = seeded_rng(seed);
        let init = initial_design(&helix_cfg, &mut rng)?;
        let dir = cfg.output_dir.join(format!("run_{i:03}"));
        let run_cfg = RunConfig { seed, ..helix_cfg.clone() };
        let outcome = optimize_design(&run_cfg, &phys, &init, seed, "multistart", Some(&dir))?;
        let (r, h) = init.helix.unwrap_or((0.0, 0.0));
        Ok(CampaignEntry { run: i, seed, radius_lambda: r, height_lambda: h, outcome })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let results: Vec<Result<CampaignEntry>> =
        pool.install(|| (0..cfg.multistart_count).into_par_iter().map(job).collect());
    let mut entries = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => entries.push(e),
            Err(e) => log::warn!("run {i} failed: {e}"),
        }
    }
    if entries.is_empty() {
        return Err(Error::Numerical("every campaign run failed".into()));
    }
    entries.sort_by(|a, b| {
        b.outcome.evaluation.report.j_hs.total_cmp(&a.outcome.evaluation.report.j_hs).then(a.run.cmp(&b.run))
    });
    let mut w = csv::Writer::from_path(cfg.output_dir.join("ranking.csv"))
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record([
        "rank",
        "run",
        "seed",
        "radius_lambda",
        "height_lambda",
        "J2",
        "JHS",
        "hs_norm",
        "phi",
        "termination",
    ])
    .map_err(io)?;
    for (rank, e) in entries.iter().enumerate() {
        let r = &e.outcome.evaluation.report;
        w.write_record([
            (rank + 1).to_string(),
            e.run.to_string(),
            e.seed.to_string(),
            e.radius_lambda.to_string(),
            e.height_lambda.to_string(),
            format!("{:e}", r.j2),
            format!("{:e}", r.j_hs),
            format!("{:e}", r.hs_norm),
            format!("{:e}", e.outcome.evaluation.phi),
            format!("{:?}", e.outcome.termination),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(entries)
}

/// Spine, quadrature and frame of a stored geometry. The stored frame is used
/// when it was saved with `simpson_points`; otherwise the frame is rebuilt from the
/// reference normal and twist.
pub fn geometry_frame(g: &GeometryFile, simpson_points: usize) -> Result<(SpineSpline, SimpsonRule, AdaptedFrame)> {
    let (spine, twist) = g.splines_lambda()?;
    let quad = SimpsonRule::new(spine.partition(), simpson_points)?;
    let frame = match g.frame_lambda(&spine, &quad.params, simpson_points)? {
        Some(f) => f,
        None => apply_twist(&build_rmf(&spine, &quad.params, &V3::from(g.reference_normal))?, &twist)?,
    };
    Ok((spine, quad, frame))
}

/// Writes the tube mesh of `cfg.geometry` to `mesh.txt`; returns the warnings.
pub fn run_export(cfg: &RunConfig, rho_m: Option<f64>) -> Result<Vec<String>> {
    cfg.validate()?;
    let path = cfg.geometry.as_ref().ok_or_else(|| Error::Config("export needs `geometry`".into()))?;
    let g = GeometryFile::read(path)?;
    let opts = super::mesh::MeshOptions { rings: cfg.mesh_rings, ring_size: cfg.mesh_ring, cap: cfg.mesh_cap, rho_m };
    let (mesh, warnings) = super::mesh::export_geometry(&g, &opts)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    mesh.write(&cfg.output_dir.join("mesh.txt"))?;
    Ok(warnings)
}
