//! Cautious BFGS with backtracking Armijo line search.
//!
//! Objectives carry an auxiliary state along the iteration (for wires, the
//! transported frame): every trial point is evaluated from the state of the
//! last accepted iterate and hands back its own.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait Objective {
    type State: Clone + Serialize + DeserializeOwned;

    /// Value at `x`, derived from the state of the base iterate.
    fn value(&self, x: &[f64], base: &Self::State) -> Result<(f64, Self::State)>;

    /// Gradient at an iterate whose state came from [`Objective::value`].
    fn gradient(&self, x: &[f64], state: &Self::State) -> Result<Vec<f64>>;

    /// Nudges the iterate off a nondifferentiable point. The default declines.
    fn jitter(&self, _x: &mut Vec<f64>, _state: &Self::State, _rng: &mut ChaCha8Rng) -> Result<()> {
        Err(Error::DomainX("objective provides no jitter".into()))
    }

    /// Extra numbers recorded with every accepted iterate.
    fn record(&self, _state: &Self::State) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfgsParams {
    pub eps_cautious: f64,
    pub sigma: f64,
    pub delta: f64,
    pub rel_step_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    /// Iterations between positive-definiteness checks of `H`.
    pub pd_check_every: usize,
    /// Gradient components with `false` are zeroed.
    pub mask: Option<Vec<bool>>,
    pub seed: u64,
}

impl Default for BfgsParams {
    fn default() -> Self {
        Self {
            eps_cautious: 1e-5,
            sigma: 1e-4,
            delta: 0.9,
            rel_step_tol: 1e-4,
            max_iter: 500,
            max_backtracks: 60,
            pd_check_every: 10,
            mask: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    RelativeStep,
    MaxIterations,
    Stagnation,
    Stationary,
    Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phi: f64,
    pub step_norm: f64,
    pub backtracks: usize,
    pub updated: bool,
    pub extra: Vec<f64>,
}

/// Everything needed to resume an iteration exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfgsState<S> {
    pub x: Vec<f64>,
    pub phi: f64,
    pub grad: Vec<f64>,
    pub h: DMatrix<f64>,
    pub aux: S,
    pub iteration: usize,
    pub jittered: bool,
    pub rng_word_pos: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub accepted: bool,
    pub step_norm: f64,
    pub rel_step: f64,
    pub backtracks: usize,
    pub updated: bool,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome<S> {
    pub state: BfgsState<S>,
    pub termination: Termination,
    pub history: Vec<IterationRecord>,
    pub message: Option<String>,
}

fn masked(mut g: Vec<f64>, mask: &Option<Vec<bool>>) -> Result<Vec<f64>> {
    if let Some(m) = mask {
        if m.len() != g.len() {
            return Err(Error::Dimension { expected: g.len(), got: m.len() });
        }
        for (v, keep) in g.iter_mut().zip(m) {
            if !keep {
                *v = 0.0;
            }
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite gradient".into()));
    }
    Ok(g)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    h.clone().symmetric_eigenvalues().min()
}

/// Initial state at `x0` with `H = I`.
pub fn initialize<O: Objective>(
    obj: &O,
    x0: Vec<f64>,
    aux0: &O::State,
    params: &BfgsParams,
) -> Result<BfgsState<O::State>> {
    let (phi, aux) = obj.value(&x0, aux0)?;
    if !phi.is_finite() {
        return Err(Error::Numerical("non-finite objective at the initial point".into()));
    }
    let grad = masked(obj.gradient(&x0, &aux)?, &params.mask)?;
    let n = x0.len();
    Ok(BfgsState { x: x0, phi, grad, h: DMatrix::identity(n, n), aux, iteration: 0, jittered: false, rng_word_pos: 0 })
}

fn direction(h: &mut DMatrix<f64>, g: &[f64]) -> Vec<f64> {
    let rhs = -DVector::from_column_slice(g);
    match h.clone().cholesky() {
        Some(c) => c.solve(&rhs).iter().copied().collect(),
        None => {
            log::warn!("BFGS matrix lost positive definiteness; reset to identity");
            *h = DMatrix::identity(h.nrows(), h.ncols());
            rhs.iter().copied().collect()
        }
    }
}

/// One cautious BFGS iteration. Returns `accepted = false` when the line
/// search exhausts its backtracks; the state is then unchanged.
pub fn bfgs_step<O: Objective>(obj: &O, st: &mut BfgsState<O::State>, params: &BfgsParams) -> Result<StepReport> {
    let d = direction(&mut st.h, &st.grad);
    let slope = dot(&st.grad, &d);
    let mut lambda = 1.0;
    let mut trial = None;
    let mut backtracks = 0;
    for j in 0..=params.max_backtracks {
        backtracks = j;
        let x: Vec<f64> = st.x.iter().zip(&d).map(|(a, b)| a + lambda * b).collect();
        match obj.value(&x, &st.aux) {
            Ok((phi, aux)) if phi.is_finite() && phi <= st.phi + params.sigma * lambda * slope => {
                trial = Some((x, phi, aux));
                break;
            }
            Ok((phi, _)) => log::debug!("trial {j}: phi {phi:e} fails the Armijo test"),
            Err(e @ (Error::FrameFlip(_) | Error::Geometry(_))) => log::debug!("trial {j}: {e}"),
            Err(e) => return Err(e),
        }
        lambda *= params.delta;
    }
    let Some((x, phi, aux)) = trial else {
        return Ok(StepReport { accepted: false, step_norm: 0.0, rel_step: 0.0, backtracks, updated: false });
    };
    let grad = masked(obj.gradient(&x, &aux)?, &params.mask)?;
    let s: Vec<f64> = x.iter().zip(&st.x).map(|(a, b)| a - b).collect();
    let y: Vec<f64> = grad.iter().zip(&st.grad).map(|(a, b)| a - b).collect();
    let ss = dot(&s, &s);
    let ys = dot(&y, &s);
    let updated = ss > 0.0 && ys / ss > params.eps_cautious * norm(&st.grad);
    if updated {
        let sv = DVector::from_column_slice(&s);
        let yv = DVector::from_column_slice(&y);
        let hs = &st.h * &sv;
        let shs = sv.dot(&hs);
        st.h -= &hs * hs.transpose() / shs;
        st.h += &yv * yv.transpose() / ys;
        // Symmetrize against rounding.
        st.h = (&st.h + st.h.transpose()) * 0.5;
    }
    let step_norm = ss.sqrt();
    let xn = norm(&st.x);
    let rel_step = if xn > 0.0 { step_norm / xn } else { step_norm };
    st.x = x;
    st.phi = phi;
    st.grad = grad;
    st.aux = aux;
    st.iteration += 1;
    Ok(StepReport { accepted: true, step_norm, rel_step, backtracks, updated })
}

/// Runs cautious BFGS from `x0`. `checkpoint` is called after every accepted step.
pub fn optimize<O: Objective>(
    obj: &O,
    x0: Vec<f64>,
    aux0: &O::State,
    params: &BfgsParams,
    checkpoint: &mut dyn FnMut(&BfgsState<O::State>) -> Result<()>,
) -> Result<BfgsOutcome<O::State>> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let st = match initialize(obj, x0.clone(), aux0, params) {
        Ok(s) => s,
        Err(Error::DomainX(msg)) => {
            let (_, aux) = obj.value(&x0, aux0)?;
            let mut x = x0;
            obj.jitter(&mut x, &aux, &mut rng).map_err(|_| Error::DomainX(msg.clone()))?;
            let mut s = initialize(obj, x, &aux, params)?;
            s.jittered = true;
            s
        }
        Err(e) => return Err(e),
    };
    resume(obj, st, params, rng, checkpoint)
}

/// Continues an iteration from a saved state.
pub fn resume<O: Objective>(
    obj: &O,
    mut st: BfgsState<O::State>,
    params: &BfgsParams,
    mut rng: ChaCha8Rng,
    checkpoint: &mut dyn FnMut(&BfgsState<O::State>) -> Result<()>,
) -> Result<BfgsOutcome<O::State>> {
    if st.rng_word_pos != 0 {
        rng.set_word_pos(st.rng_word_pos);
    }
    let mut history = vec![IterationRecord {
        iteration: st.iteration,
        phi: st.phi,
        step_norm: 0.0,
        backtracks: 0,
        updated: false,
        extra: obj.record(&st.aux),
    }];
    let finish = |st, termination, history, message| Ok(BfgsOutcome { state: st, termination, history, message });
    loop {
        if st.grad.iter().all(|&g| g == 0.0) {
            return finish(st, Termination::Stationary, history, None);
        }
        if st.iteration >= params.max_iter {
            return finish(st, Termination::MaxIterations, history, None);
        }
        let report = match bfgs_step(obj, &mut st, params) {
            Ok(r) => r,
            Err(Error::DomainX(msg)) if !st.jittered => {
                log::warn!("left the differentiable domain ({msg}); jittering once");
                let mut x = st.x.clone();
                if obj.jitter(&mut x, &st.aux, &mut rng).is_err() {
                    return finish(st, Termination::Domain, history, Some(msg));
                }
                st.rng_word_pos = rng.get_word_pos();
                match obj.value(&x, &st.aux).and_then(|(phi, aux)| {
                    let g = masked(obj.gradient(&x, &aux)?, &params.mask)?;
                    Ok((phi, aux, g))
                }) {
                    Ok((phi, aux, g)) => {
                        st.x = x;
                        st.phi = phi;
                        st.aux = aux;
                        st.grad = g;
                        st.jittered = true;
                        continue;
                    }
                    Err(e) => return finish(st, Termination::Domain, history, Some(e.to_string())),
                }
            }
            Err(Error::DomainX(msg)) => return finish(st, Termination::Domain, history, Some(msg)),
            Err(e) => return Err(e),
        };
        if !report.accepted {
            // A badly scaled H can make every backtrack overshoot; fall back to
            // steepest descent before giving up.
            let id = DMatrix::identity(st.x.len(), st.x.len());
            if st.h != id {
                log::warn!("line search failed at iteration {}; reset H to identity", st.iteration);
                st.h = id;
                continue;
            }
            return finish(st, Termination::Stagnation, history, None);
        }
        if params.pd_check_every > 0 && st.iteration % params.pd_check_every == 0 {
            let ev = min_eigenvalue(&st.h);
            if !(ev > 0.0) {
                log::warn!("BFGS matrix has eigenvalue {ev:e}; reset to identity");
                st.h = DMatrix::identity(st.x.len(), st.x.len());
            }
        }
        log::info!(
            "iter {} phi {:.8e} step {:.3e} backtracks {} update {}",
            st.iteration,
            st.phi,
            report.step_norm,
            report.backtracks,
            report.updated
        );
        history.push(IterationRecord {
            iteration: st.iteration,
            phi: st.phi,
            step_norm: report.step_norm,
            backtracks: report.backtracks,
            updated: report.updated,
            extra: obj.record(&st.aux),
        });
        checkpoint(&st)?;
        if report.rel_step < params.rel_step_tol {
            return finish(st, Termination::RelativeStep, history, None);
        }
    }
}

/// Seeded generator used for random initial data.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` values uniform in `[-amp, amp]`.
pub fn uniform_values(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-amp..=amp)).collect()
}
