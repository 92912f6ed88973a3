//! Regularized objective `Phi = -J_HS + a1 Psi1 + a2 Psi2 + a3 Psi3` over the
//! design vector, with its gradient.
//!
//! Lengths are in units of the design wavelength, so `k = 2 pi` and the
//! curvature and twist penalties are dimensionless.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chirality::{j_hs_weight, measure, ChiralityReport};
use crate::error::{Error, Result};
use crate::farfield::{FarFieldMatrix, FarFieldOperator, OperatorSpec, WireState};
use crate::geometry::{
    apply_twist, build_rmf, default_reference_normal, update_frame, AdaptedFrame, CardinalBasis, NodeForm, Partition,
    SimpsonRule, SpineSpline, TwistSpline, TOL_FLIP,
};
use crate::optimizer::Objective;
use crate::{C64, V3};

/// Amplitude of the twist jitter used to leave a nondifferentiable point.
pub const JITTER: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMode {
    #[default]
    Full,
    TwistOnly,
    SpineOnly,
}

impl DesignMode {
    /// Gradient mask over the `4n` design coordinates.
    pub fn mask(self, n: usize) -> Option<Vec<bool>> {
        match self {
            DesignMode::Full => None,
            DesignMode::TwistOnly => Some((0..4 * n).map(|i| i >= 3 * n).collect()),
            DesignMode::SpineOnly => Some((0..4 * n).map(|i| i < 3 * n).collect()),
        }
    }
}

/// `x_1..x_n, y_1..y_n, z_1..z_n, theta_1..theta_n`.
pub fn pack(points: &[V3], twist: &[f64]) -> Result<Vec<f64>> {
    let n = points.len();
    if twist.len() != n {
        return Err(Error::Dimension { expected: n, got: twist.len() });
    }
    let mut x = Vec::with_capacity(4 * n);
    for a in 0..3 {
        x.extend(points.iter().map(|p| p[a]));
    }
    x.extend_from_slice(twist);
    Ok(x)
}

pub fn unpack(x: &[f64]) -> Result<(Vec<V3>, Vec<f64>)> {
    if x.len() % 4 != 0 || x.is_empty() {
        return Err(Error::Dimension { expected: 4 * (x.len() / 4).max(1), got: x.len() });
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Geometry(format!("non-finite design entry {v}")));
    }
    let n = x.len() / 4;
    let points = (0..n).map(|i| V3::new(x[i], x[n + i], x[2 * n + i])).collect();
    Ok((points, x[3 * n..].to_vec()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub alpha: [f64; 3],
    /// Target length in wavelengths; also the spline parameter range.
    pub length: f64,
    pub knots: usize,
    pub simpson_points: usize,
    /// Operator data with `k = 2 pi` and `rho` in wavelengths.
    pub operator: OperatorSpec,
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Config(format!("penalty weights must be nonnegative: {:?}", self.alpha)));
        }
        if !(self.length > 0.0) {
            return Err(Error::Config("length must be positive".into()));
        }
        if self.knots < 2 {
            return Err(Error::Config("need at least two knots".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub phi: f64,
    pub report: ChiralityReport,
    pub penalties: [f64; 3],
}

/// `-J_HS + sum alpha_i Psi_i`.
pub fn phi_value(j_hs: f64, alpha: &[f64; 3], penalties: &[f64; 3]) -> f64 {
    -j_hs + alpha.iter().zip(penalties).map(|(a, p)| a * p).sum::<f64>()
}

/// Uniform-length penalty: `sum_j (1/(n-1) - l_j / L)^2` over segments.
pub fn psi1(wire: &WireState, quad: &SimpsonRule, length: f64) -> (f64, NodeForm) {
    let nseg = quad.segments.len();
    let target = 1.0 / nseg as f64;
    let mut value = 0.0;
    let mut form = NodeForm::zeros(wire.len());
    for seg in &quad.segments {
        let l: f64 = seg.iter().map(|&(i, w)| w * wire.speed(i)).sum();
        let r = target - l / length;
        value += r * r;
        let c = -2.0 * r / length;
        for &(i, w) in seg {
            form.dh[i] += c * w * wire.frame.samples[i].t;
        }
    }
    (value, form)
}

/// Curvature penalty `(1/L) int kappa^2 |p'| dt`.
pub fn psi2(wire: &WireState, length: f64) -> (f64, NodeForm) {
    let mut value = 0.0;
    let mut form = NodeForm::zeros(wire.len());
    for i in 0..wire.len() {
        let (d1, d2) = (wire.d1[i], wire.d2[i]);
        let s = d1.norm();
        let c = d1.cross(&d2);
        let c2 = c.norm_squared();
        let s5 = s.powi(5);
        let w = wire.weights[i] / length;
        value += w * c2 / s5;
        form.dh[i] = w * (2.0 * d2.cross(&c) / s5 - 5.0 * c2 / (s5 * s * s) * d1);
        form.ddh[i] = w * 2.0 * c.cross(&d1) / s5;
    }
    (value, form)
}

/// Twist penalty `(1/L) int beta^2 |p'| dt` with `beta` per unit length.
pub fn psi3(wire: &WireState, length: f64) -> (f64, NodeForm) {
    let mut value = 0.0;
    let mut form = NodeForm::zeros(wire.len());
    for i in 0..wire.len() {
        let f = &wire.frame.samples[i];
        let s = wire.speed(i);
        let tr = f.twist_rate;
        let w = wire.weights[i] / length;
        value += w * tr * tr / s;
        let rot = f.dt.dot(&f.n) * f.b - f.dt.dot(&f.b) * f.n;
        form.dh[i] = w * (2.0 * tr / (s * s) * rot - tr * tr / (s * s) * f.t);
        form.dphi[i] = w * 2.0 * tr / s;
    }
    (value, form)
}

/// Auxiliary iterate data: the adapted frame and the design it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireIterate {
    pub x: Vec<f64>,
    pub frame: AdaptedFrame,
    pub eval: Option<Evaluation>,
}

/// Everything about one design evaluated at once.
#[derive(Debug, Clone)]
pub struct WireSnapshot {
    pub spine: SpineSpline,
    pub twist: TwistSpline,
    pub state: WireState,
    pub t: FarFieldMatrix,
    pub eval: Evaluation,
}

/// The wire design problem for a fixed configuration.
#[derive(Debug, Clone)]
pub struct WireProblem {
    pub cfg: ObjectiveConfig,
    pub partition: Partition,
    pub quad: SimpsonRule,
    pub basis: CardinalBasis,
    pub op: FarFieldOperator,
}

impl WireProblem {
    pub fn new(cfg: ObjectiveConfig) -> Result<Self> {
        cfg.validate()?;
        let partition = Partition::uniform(cfg.length, cfg.knots)?;
        let quad = SimpsonRule::new(&partition, cfg.simpson_points)?;
        let basis = partition.cardinal_basis(&quad.params)?;
        let op = FarFieldOperator::new(cfg.operator)?;
        Ok(Self { cfg, partition, quad, basis, op })
    }

    pub fn knots(&self) -> usize {
        self.partition.len()
    }

    pub fn splines(&self, x: &[f64]) -> Result<(SpineSpline, TwistSpline)> {
        let (points, twist) = unpack(x)?;
        if points.len() != self.knots() {
            return Err(Error::Dimension { expected: 4 * self.knots(), got: x.len() });
        }
        Ok((SpineSpline::new(self.partition.clone(), &points)?, TwistSpline::new(self.partition.clone(), twist)?))
    }

    /// Adapted frame built from scratch: rotation-minimizing frame plus twist.
    pub fn initial_iterate(&self, x: &[f64], reference_normal: Option<V3>) -> Result<WireIterate> {
        let (spine, twist) = self.splines(x)?;
        let r = match reference_normal {
            Some(r) => r,
            None => default_reference_normal(&spine)?,
        };
        let rmf = build_rmf(&spine, &self.quad.params, &r)?;
        let frame = apply_twist(&rmf, &twist)?;
        Ok(WireIterate { x: x.to_vec(), frame, eval: None })
    }

    /// Frame of design `x` transported from `base`.
    pub fn transported_frame(&self, x: &[f64], base: &WireIterate) -> Result<(SpineSpline, TwistSpline, AdaptedFrame)> {
        let (spine, twist) = self.splines(x)?;
        if x == base.x.as_slice() {
            return Ok((spine, twist, base.frame.clone()));
        }
        let n = self.knots();
        let inc: Vec<f64> = x[3 * n..].iter().zip(&base.x[3 * n..]).map(|(a, b)| a - b).collect();
        let phi = TwistSpline::new(self.partition.clone(), inc)?;
        let frame = update_frame(&base.frame, &spine, &phi, TOL_FLIP)?;
        Ok((spine, twist, frame))
    }

    pub fn penalties(&self, state: &WireState) -> [f64; 3] {
        let l = self.cfg.length;
        [psi1(state, &self.quad, l).0, psi2(state, l).0, psi3(state, l).0]
    }

    /// Evaluates a design with a frame already consistent with it.
    pub fn snapshot(&self, spine: SpineSpline, twist: TwistSpline, frame: &AdaptedFrame) -> Result<WireSnapshot> {
        let state = WireState::new(&spine, frame, &self.quad)?;
        let t = self.op.assemble_t(&state);
        let report = measure(&t.data)?;
        let penalties = self.penalties(&state);
        let phi = phi_value(report.j_hs, &self.cfg.alpha, &penalties);
        Ok(WireSnapshot { spine, twist, state, t, eval: Evaluation { phi, report, penalties } })
    }

    pub fn evaluate(&self, x: &[f64], base: &WireIterate) -> Result<(WireSnapshot, WireIterate)> {
        let (spine, twist, frame) = self.transported_frame(x, base)?;
        let snap = self.snapshot(spine, twist, &frame)?;
        let it = WireIterate { x: x.to_vec(), frame, eval: Some(snap.eval.clone()) };
        Ok((snap, it))
    }

    /// Gradient over the `4n` design coordinates at a frame consistent with `x`.
    pub fn gradient_at(&self, x: &[f64], frame: &AdaptedFrame) -> Result<Vec<f64>> {
        let (spine, _) = self.splines(x)?;
        let state = WireState::new(&spine, frame, &self.quad)?;
        let fields = self.op.fields(&state);
        let t = self.op.assemble(&state, &fields);
        let w = j_hs_weight(&t.data)?;
        self.gradient_from_weight(&state, &fields, &w)
    }

    fn gradient_from_weight(
        &self,
        state: &WireState,
        fields: &[crate::wavefields::HerglotzSample],
        w: &DMatrix<C64>,
    ) -> Result<Vec<f64>> {
        let mut form = self.penalty_form(state);
        form.add_scaled(&self.op.adjoint_form(state, fields, w), -1.0);
        Ok(form.knot_gradient(&self.basis))
    }

    fn penalty_form(&self, state: &WireState) -> NodeForm {
        let mut form = NodeForm::zeros(state.len());
        let l = self.cfg.length;
        let [a1, a2, a3] = self.cfg.alpha;
        if a1 != 0.0 {
            form.add_scaled(&psi1(state, &self.quad, l).1, a1);
        }
        if a2 != 0.0 {
            form.add_scaled(&psi2(state, l).1, a2);
        }
        if a3 != 0.0 {
            form.add_scaled(&psi3(state, l).1, a3);
        }
        form
    }

    /// Penalty part of the gradient alone, as if every `T'` vanished.
    pub fn penalty_gradient(&self, x: &[f64], frame: &AdaptedFrame) -> Result<Vec<f64>> {
        let (spine, _) = self.splines(x)?;
        let state = WireState::new(&spine, frame, &self.quad)?;
        Ok(self.penalty_form(&state).knot_gradient(&self.basis))
    }
}

impl Objective for WireProblem {
    type State = WireIterate;

    fn value(&self, x: &[f64], base: &WireIterate) -> Result<(f64, WireIterate)> {
        let (snap, it) = self.evaluate(x, base)?;
        Ok((snap.eval.phi, it))
    }

    fn gradient(&self, x: &[f64], state: &WireIterate) -> Result<Vec<f64>> {
        self.gradient_at(x, &state.frame)
    }

    fn jitter(&self, x: &mut Vec<f64>, _state: &WireIterate, rng: &mut ChaCha8Rng) -> Result<()> {
        let n = self.knots();
        for v in &mut x[3 * n..] {
            *v += rng.gen_range(-JITTER..=JITTER);
        }
        Ok(())
    }

    fn record(&self, state: &WireIterate) -> Vec<f64> {
        match &state.eval {
            Some(e) => {
                vec![e.report.j2, e.report.j_hs, e.report.hs_norm, e.penalties[0], e.penalties[1], e.penalties[2]]
            }
            None => Vec::new(),
        }
    }
}

/// Central differences of `Phi` with step `tau`, frames transported from `base`.
pub fn central_difference_gradient(problem: &WireProblem, x: &[f64], base: &WireIterate, tau: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[i] += tau;
        b[i] -= tau;
        out.push((problem.evaluate(&a, base)?.0.eval.phi - problem.evaluate(&b, base)?.0.eval.phi) / (2.0 * tau));
    }
    Ok(out)
}

/// `max |a - b| / max |b|`.
pub fn relative_inf_error(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / b.iter().fold(0.0f64, |m, y| m.max(y.abs()))
}

/// Column names of [`WireProblem::record`].
pub const RECORD_FIELDS: [&str; 6] = ["j2", "j_hs", "hs_norm", "psi1", "psi2", "psi3"];
