//! Truncated far-field operator of a thin wire in the helicity basis, its
//! shape derivative, and the helicity block structure.
//!
//! With the Herglotz fields `E_q` of the basis densities the entries are
//! `T[q', q] = C sum_i w_i |p'_i| E_q'(y_i)^H M(y_i) E_q(y_i)` where
//! `C = |B'| (k rho)^2 (eps_r - 1)`. This follows from exchanging the sphere
//! and curve integrals: projecting the far field of `E_q` onto `A_q'` turns
//! the phase `exp(-i k xhat.y)` into the conjugate Herglotz field `E_q'(y)`.

use std::io::Write;

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix3xX};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AdaptedFrame, NodeDirection, NodeForm, SimpsonRule, SpineSpline};
use crate::material::{cross_section_tensor, frame_matrix_derivative, polarization_at, EllipticalCrossSection};
use crate::wavefields::{basis_size, block_size, HerglotzBasis, HerglotzSample, SphereQuadrature, CV3};
use crate::{C64, V3};

/// Nodes per parallel work item; fixed so reductions are reproducible.
const CHUNK: usize = 32;

/// Physical and discretization parameters of the operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub nmax: usize,
    pub k: f64,
    pub rho: f64,
    pub cross_section: EllipticalCrossSection,
    pub eps_r: C64,
}

impl OperatorSpec {
    /// `|B'| (k rho)^2 (eps_r - 1)`.
    pub fn prefactor(&self) -> C64 {
        let kr = self.k * self.rho;
        (self.eps_r - 1.0) * (self.cross_section.area() * kr * kr)
    }

    pub fn cross_tensor(&self) -> Result<Matrix2<C64>> {
        cross_section_tensor(&self.cross_section, self.eps_r)
    }
}

/// Spine and frame sampled at the curve quadrature nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WireState {
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
    pub p: Vec<V3>,
    pub d1: Vec<V3>,
    pub d2: Vec<V3>,
    pub frame: AdaptedFrame,
}

impl WireState {
    pub fn new(spine: &SpineSpline, frame: &AdaptedFrame, quad: &SimpsonRule) -> Result<Self> {
        if frame.params != quad.params {
            return Err(Error::InvalidInput("frame samples differ from quadrature nodes".into()));
        }
        let s = spine.sample(&quad.params)?;
        if let Some(i) = s.d1.iter().position(|d| !(d.norm() > 0.0)) {
            return Err(Error::Geometry(format!("vanishing p' at t = {}", quad.params[i])));
        }
        Ok(Self {
            params: quad.params.clone(),
            weights: quad.weights.clone(),
            p: s.p,
            d1: s.d1,
            d2: s.d2,
            frame: frame.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn speed(&self, i: usize) -> f64 {
        self.d1[i].norm()
    }
}

/// `Q x Q` matrix in the helicity basis with metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldMatrix {
    pub data: DMatrix<C64>,
    pub nmax: usize,
    pub k: f64,
    pub rho: f64,
    pub area: f64,
    pub eps_r: C64,
}

/// Helicity blocks `T^{cd}`: rows of output helicity `c`, columns of input helicity `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub pp: DMatrix<C64>,
    pub pm: DMatrix<C64>,
    pub mp: DMatrix<C64>,
    pub mm: DMatrix<C64>,
}

impl Blocks {
    pub fn of(data: &DMatrix<C64>) -> Self {
        let h = data.nrows() / 2;
        Self {
            pp: data.view((0, 0), (h, h)).into_owned(),
            pm: data.view((0, h), (h, h)).into_owned(),
            mp: data.view((h, 0), (h, h)).into_owned(),
            mm: data.view((h, h), (h, h)).into_owned(),
        }
    }

    pub fn reassemble(&self) -> DMatrix<C64> {
        let h = self.pp.nrows();
        let mut out = DMatrix::zeros(2 * h, 2 * h);
        out.view_mut((0, 0), (h, h)).copy_from(&self.pp);
        out.view_mut((0, h), (h, h)).copy_from(&self.pm);
        out.view_mut((h, 0), (h, h)).copy_from(&self.mp);
        out.view_mut((h, h), (h, h)).copy_from(&self.mm);
        out
    }

    /// HS norms in the order `++, +-, -+, --`.
    pub fn norms(&self) -> [f64; 4] {
        [self.pp.norm(), self.pm.norm(), self.mp.norm(), self.mm.norm()]
    }
}

impl FarFieldMatrix {
    pub fn blocks(&self) -> Blocks {
        Blocks::of(&self.data)
    }

    pub fn hs_norm(&self) -> f64 {
        self.data.norm()
    }

    /// Text dump: a header line with `Q N k rho`, then one row per line as
    /// `re im` pairs.
    pub fn dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {:e} {:e}", self.data.nrows(), self.nmax, self.k, self.rho)?;
        for r in 0..self.data.nrows() {
            let line: Vec<String> = (0..self.data.ncols())
                .map(|c| format!("{:e} {:e}", self.data[(r, c)].re, self.data[(r, c)].im))
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Operator assembly for one material, frequency and truncation degree.
#[derive(Debug, Clone)]
pub struct FarFieldOperator {
    pub spec: OperatorSpec,
    pub basis: HerglotzBasis,
    m2: Matrix2<C64>,
}

fn frame_tensor(wire: &WireState, i: usize, m2: &Matrix2<C64>) -> Matrix3<C64> {
    polarization_at(&wire.frame.samples[i], m2)
}

fn chunk_ranges(m: usize) -> Vec<(usize, usize)> {
    (0..m).step_by(CHUNK).map(|a| (a, (a + CHUNK).min(m))).collect()
}

fn ordered_sum(parts: Vec<DMatrix<C64>>, q: usize) -> DMatrix<C64> {
    parts.into_iter().fold(DMatrix::zeros(q, q), |acc, p| acc + p)
}

impl FarFieldOperator {
    pub fn new(spec: OperatorSpec) -> Result<Self> {
        if spec.nmax == 0 {
            return Err(Error::InvalidInput("truncation degree must be at least 1".into()));
        }
        if !(spec.k > 0.0 && spec.rho > 0.0) {
            return Err(Error::InvalidInput("wavenumber and thickness must be positive".into()));
        }
        let m2 = spec.cross_tensor()?;
        Ok(Self { basis: HerglotzBasis::new(spec.nmax, spec.k), spec, m2 })
    }

    pub fn size(&self) -> usize {
        basis_size(self.spec.nmax)
    }

    pub fn cross_tensor(&self) -> &Matrix2<C64> {
        &self.m2
    }

    /// Herglotz samples at every node, evaluated once per geometry.
    pub fn fields(&self, wire: &WireState) -> Vec<HerglotzSample> {
        wire.p.par_iter().map(|x| self.basis.sample(x)).collect()
    }

    fn wrap(&self, data: DMatrix<C64>) -> FarFieldMatrix {
        FarFieldMatrix {
            data,
            nmax: self.spec.nmax,
            k: self.spec.k,
            rho: self.spec.rho,
            area: self.spec.cross_section.area(),
            eps_r: self.spec.eps_r,
        }
    }

    /// Field values alone at every node; enough for assembly.
    pub fn values(&self, wire: &WireState) -> Vec<Matrix3xX<C64>> {
        wire.p.par_iter().map(|x| self.basis.sample_values(x)).collect()
    }

    pub fn assemble(&self, wire: &WireState, fields: &[HerglotzSample]) -> FarFieldMatrix {
        self.assemble_values(wire, |i| &fields[i].e)
    }

    fn assemble_values<'a, F>(&self, wire: &WireState, field: F) -> FarFieldMatrix
    where
        F: Fn(usize) -> &'a Matrix3xX<C64> + Sync,
    {
        let q = self.size();
        let c = self.spec.prefactor();
        let parts: Vec<DMatrix<C64>> = chunk_ranges(wire.len())
            .into_par_iter()
            .map(|(a, b)| {
                let mut acc = DMatrix::<C64>::zeros(q, q);
                for i in a..b {
                    let m = frame_tensor(wire, i, &self.m2);
                    let e = field(i);
                    let me: Matrix3xX<C64> = m * e;
                    let wi = c * (wire.weights[i] * wire.speed(i));
                    acc.gemm_ad(wi, e, &me, C64::from(1.0));
                }
                acc
            })
            .collect();
        self.wrap(ordered_sum(parts, q))
    }

    /// Convenience: fields plus assembly.
    pub fn assemble_t(&self, wire: &WireState) -> FarFieldMatrix {
        let v = self.values(wire);
        self.assemble_values(wire, |i| &v[i])
    }

    /// Derivative of the operator along a node direction.
    pub fn derivative(&self, wire: &WireState, fields: &[HerglotzSample], dir: &NodeDirection) -> FarFieldMatrix {
        let q = self.size();
        let c = self.spec.prefactor();
        let parts: Vec<DMatrix<C64>> = chunk_ranges(wire.len())
            .into_par_iter()
            .map(|(a, b)| {
                let mut acc = DMatrix::<C64>::zeros(q, q);
                for i in a..b {
                    let s = &wire.frame.samples[i];
                    let speed = wire.speed(i);
                    let m = frame_tensor(wire, i, &self.m2);
                    let dm =
                        crate::material::polarization_tensor_derivative(s, &dir.dh[i], speed, dir.phi[i], &self.m2);
                    let f = &fields[i];
                    let h = dir.h[i];
                    let d: Matrix3xX<C64> =
                        &f.grad[0] * C64::from(h.x) + &f.grad[1] * C64::from(h.y) + &f.grad[2] * C64::from(h.z);
                    let me: Matrix3xX<C64> = m * &f.e;
                    let md: Matrix3xX<C64> = m * &d;
                    let dme: Matrix3xX<C64> = dm * &f.e;
                    let wi = c * (wire.weights[i] * speed);
                    let arc = c * (wire.weights[i] * wire.d1[i].dot(&dir.dh[i]) / speed);
                    acc.gemm_ad(wi, &d, &me, C64::from(1.0));
                    acc.gemm_ad(wi, &f.e, &md, C64::from(1.0));
                    acc.gemm_ad(wi, &f.e, &dme, C64::from(1.0));
                    acc.gemm_ad(arc, &f.e, &me, C64::from(1.0));
                }
                acc
            })
            .collect();
        self.wrap(ordered_sum(parts, q))
    }

    /// The functional `d -> Re <W, T'(d)>_HS` as a node form.
    pub fn adjoint_form(&self, wire: &WireState, fields: &[HerglotzSample], w: &DMatrix<C64>) -> NodeForm {
        let c = self.spec.prefactor();
        let wa = w.adjoint();
        let parts: Vec<Vec<(V3, V3, f64)>> = chunk_ranges(wire.len())
            .into_par_iter()
            .map(|(a, b)| {
                (a..b)
                    .map(|i| {
                        let s = &wire.frame.samples[i];
                        let speed = wire.speed(i);
                        let m = frame_tensor(wire, i, &self.m2);
                        let f = &fields[i];
                        let ew: Matrix3xX<C64> = &f.e * w;
                        let ewa: Matrix3xX<C64> = &f.e * &wa;
                        let k3: Matrix3<C64> = &ewa * f.e.adjoint();
                        let mut alpha = CV3::zeros();
                        for j in 0..3 {
                            let pj: Matrix3<C64> = &f.grad[j] * ew.adjoint();
                            let rj: Matrix3<C64> = &ewa * f.grad[j].adjoint();
                            alpha[j] = (m * (pj + rj)).trace();
                        }
                        let kappa = (m * k3).trace();
                        let mu = |hn: f64, hb: f64, phi: f64| {
                            let dv = frame_matrix_derivative(s, &(hn * s.n + hb * s.b), 1.0, phi);
                            let dm = crate::material::polarization_tensor_derivative_from(s, &dv, &self.m2);
                            (dm * k3).trace()
                        };
                        let (mu_n, mu_b, mu_phi) = (mu(1.0, 0.0, 0.0), mu(0.0, 1.0, 0.0), mu(0.0, 0.0, 1.0));
                        let cw = c * wire.weights[i];
                        let u = alpha.map(|z| (cw * speed * z).re);
                        let v = (cw * mu_n).re * s.n + (cw * mu_b).re * s.b + (cw * kappa).re * s.t;
                        let tau = (cw * speed * mu_phi).re;
                        (u, v, tau)
                    })
                    .collect()
            })
            .collect();
        let mut form = NodeForm::zeros(wire.len());
        for (i, (u, v, tau)) in parts.into_iter().flatten().enumerate() {
            form.h[i] = u;
            form.dh[i] = v;
            form.phi[i] = tau;
        }
        form
    }

    /// Reference assembly through the far-field pattern on a sphere rule:
    /// `T[q', q] = sum_x w_x A_q'(x)^H (T A_q)(x)`.
    pub fn assemble_by_projection(&self, wire: &WireState, quad: &SphereQuadrature) -> FarFieldMatrix {
        let q = self.size();
        let c = self.spec.prefactor();
        let fields = self.fields(wire);
        let tensors: Vec<Matrix3<C64>> = (0..wire.len()).map(|i| frame_tensor(wire, i, &self.m2)).collect();
        let mut out = DMatrix::<C64>::zeros(q, q);
        for (xhat, &wx) in quad.nodes.iter().zip(&quad.weights) {
            let out_basis = crate::wavefields::circ_basis_values(self.spec.nmax, xhat);
            // Far-field pattern of every input at xhat.
            let mut pattern = Matrix3xX::<C64>::zeros(q);
            for i in 0..wire.len() {
                let phase = C64::from_polar(wire.weights[i] * wire.speed(i), -self.spec.k * xhat.dot(&wire.p[i]));
                let me: Matrix3xX<C64> = tensors[i] * &fields[i].e;
                pattern += me * phase;
            }
            for (r, a) in out_basis.iter().enumerate() {
                for col in 0..q {
                    let v = CV3::new(pattern[(0, col)], pattern[(1, col)], pattern[(2, col)]);
                    // The tangential projection drops out against tangential outputs.
                    out[(r, col)] += a.dotc(&v) * c * wx;
                }
            }
        }
        self.wrap(out)
    }
}

/// Operator of a wire in one call: sample the wire and assemble.
pub fn assemble_t(
    spine: &SpineSpline,
    frame: &AdaptedFrame,
    quad: &SimpsonRule,
    spec: OperatorSpec,
) -> Result<FarFieldMatrix> {
    let op = FarFieldOperator::new(spec)?;
    let wire = WireState::new(spine, frame, quad)?;
    Ok(op.assemble_t(&wire))
}

/// Truncation rule `N = ceil(k R) + 1`, never below `floor`.
pub fn truncation_degree(k: f64, radius: f64, floor: usize) -> usize {
    (((k * radius).ceil() as usize) + 1).max(floor).max(1)
}

/// True when `N` is at least `k R` (the minimum for an adequate truncation).
pub fn truncation_adequate(nmax: usize, k: f64, radius: f64) -> bool {
    nmax as f64 >= (k * radius).ceil()
}

/// Block size per helicity for `N`.
pub fn half_size(nmax: usize) -> usize {
    block_size(nmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{update_frame, TwistSpline, TOL_FLIP};
    use crate::testutil::{helix_points, operator, random_points, rng, spec, wire};
    use nalgebra::Vector3;
    use rand::Rng;

    fn rel(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn vacuum_gives_zero() {
        let w = wire(&helix_points(8, 0.2, 0.3, 1.0), &[0.0; 8], 5);
        let mut sp = spec(2, 2.0);
        sp.eps_r = C64::from(1.0);
        let t = FarFieldOperator::new(sp).unwrap().assemble_t(&w.state());
        assert_eq!(t.data.nrows(), 16);
        assert!(t.data.iter().all(|z| *z == C64::from(0.0)));
    }

    #[test]
    fn quadratic_in_thickness() {
        let w = wire(&helix_points(8, 0.2, 0.3, 1.0), &[0.1; 8], 5);
        let sp = spec(3, 2.0);
        let mut sp2 = sp;
        sp2.rho *= 2.0;
        let t1 = FarFieldOperator::new(sp).unwrap().assemble_t(&w.state());
        let t2 = FarFieldOperator::new(sp2).unwrap().assemble_t(&w.state());
        assert!(rel(&t2.data, &(&t1.data * C64::from(4.0))) < 1e-14);
    }

    #[test]
    fn straight_wire_is_achiral() {
        let pts: Vec<V3> = (0..6).map(|i| Vector3::new(0.1 * i as f64, 0.05 * i as f64, -0.02 * i as f64)).collect();
        let w = wire(&pts, &[0.0; 6], 11);
        let t = operator(3, 3.0).assemble_t(&w.state());
        let n = t.blocks().norms();
        assert!((n[0] - n[3]).abs() <= 1e-10 * n[0]);
        assert!((n[1] - n[2]).abs() <= 1e-10 * n[1]);
        assert!(n[1] > 1e-3 * n[0]);
    }

    #[test]
    fn matches_far_field_projection() {
        let mut r = rng(3);
        let w = wire(&random_points(5, &mut r), &[0.0, 0.3, -0.2, 0.5, 0.1], 21);
        let op = operator(2, 2.5);
        let t = op.assemble_t(&w.state());
        let quad = SphereQuadrature::for_degree(40);
        let tp = op.assemble_by_projection(&w.state(), &quad);
        assert!(rel(&tp.data, &t.data) < 1e-8, "{}", rel(&tp.data, &t.data));
    }

    #[test]
    fn refined_quadrature_agrees() {
        let mut r = rng(5);
        let pts = random_points(40, &mut r);
        let tw: Vec<f64> = (0..40).map(|i| 0.4 * (0.3 * i as f64).sin()).collect();
        let op = operator(3, 2.0);
        let t = op.assemble_t(&wire(&pts, &tw, 21).state());
        let tf = op.assemble_t(&wire(&pts, &tw, 41).state());
        assert!(rel(&t.data, &tf.data) < 1e-8, "{}", rel(&t.data, &tf.data));
    }

    #[test]
    fn blocks_reassemble_and_split_norm() {
        let mut r = rng(9);
        let m = DMatrix::from_fn(16, 16, |_, _| C64::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5));
        let b = Blocks::of(&m);
        assert_eq!(b.reassemble(), m);
        let s: f64 = b.norms().iter().map(|x| x * x).sum();
        assert!((s - m.norm_squared()).abs() < 1e-12 * s);

        let mut only = DMatrix::zeros(16, 16);
        only.view_mut((0, 0), (8, 8)).copy_from(&m.view((0, 0), (8, 8)));
        let b = Blocks::of(&only);
        assert_eq!(b.pp, m.view((0, 0), (8, 8)).into_owned());
        assert_eq!(b.norms()[1..], [0.0, 0.0, 0.0]);
    }

    fn random_direction(w: &crate::testutil::Wire, r: &mut impl Rng, twist: bool) -> (SpineSpline, TwistSpline) {
        let part = w.spine.partition().clone();
        let n = part.len();
        let h: Vec<V3> = (0..n)
            .map(|_| Vector3::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5) * 0.2)
            .collect();
        let phi: Vec<f64> = (0..n).map(|_| if twist { r.gen::<f64>() - 0.5 } else { 0.0 }).collect();
        (SpineSpline::new(part.clone(), &h).unwrap(), TwistSpline::new(part, phi).unwrap())
    }

    fn perturbed(
        op: &FarFieldOperator,
        w: &crate::testutil::Wire,
        h: &SpineSpline,
        phi: &TwistSpline,
        tau: f64,
    ) -> DMatrix<C64> {
        let pts: Vec<V3> = w.spine.points().iter().zip(h.points()).map(|(p, d)| p + tau * d).collect();
        let spine = SpineSpline::new(w.spine.partition().clone(), &pts).unwrap();
        let scaled = TwistSpline::new(phi.partition().clone(), phi.values().iter().map(|v| tau * v).collect()).unwrap();
        let frame = update_frame(&w.frame, &spine, &scaled, TOL_FLIP).unwrap();
        let state = WireState::new(&spine, &frame, &w.quad).unwrap();
        op.assemble_t(&state).data
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut r = rng(11);
        let w = wire(&random_points(6, &mut r), &[0.0, 0.4, 0.1, -0.3, 0.2, 0.6], 11);
        let op = operator(3, 2.0);
        let state = w.state();
        let fields = op.fields(&state);
        for _ in 0..3 {
            let (h, phi) = random_direction(&w, &mut r, true);
            let dir = NodeDirection::from_splines(&h, &phi, &state.params).unwrap();
            let d = op.derivative(&state, &fields, &dir).data;
            let tau = 1e-5;
            let fd = (perturbed(&op, &w, &h, &phi, tau) - perturbed(&op, &w, &h, &phi, -tau)) / C64::from(2.0 * tau);
            assert!(rel(&d, &fd) < 1e-6, "{}", rel(&d, &fd));
        }
    }

    #[test]
    fn zero_direction_gives_zero() {
        let w = wire(&helix_points(6, 0.2, 0.3, 1.0), &[0.0; 6], 5);
        let op = operator(2, 2.0);
        let state = w.state();
        let f = op.fields(&state);
        let d = op.derivative(&state, &f, &NodeDirection::zeros(state.len()));
        assert!(d.data.iter().all(|z| *z == C64::from(0.0)));
    }

    #[test]
    fn twisting_a_round_straight_wire_changes_nothing() {
        let pts: Vec<V3> = (0..5).map(|i| Vector3::new(0.0, 0.0, 0.2 * i as f64)).collect();
        let w = wire(&pts, &[0.0; 5], 11);
        let op = operator(3, 1.0);
        let state = w.state();
        let f = op.fields(&state);
        let part = w.spine.partition().clone();
        let phi = TwistSpline::new(part.clone(), vec![0.3, -0.1, 0.7, 0.2, 0.5]).unwrap();
        let h = SpineSpline::new(part, &[V3::zeros(); 5]).unwrap();
        let dir = NodeDirection::from_splines(&h, &phi, &state.params).unwrap();
        let d = op.derivative(&state, &f, &dir).data;
        assert!(d.norm() <= 1e-14 * op.assemble(&state, &f).hs_norm());
    }

    #[test]
    fn adjoint_form_matches_derivative() {
        let mut r = rng(17);
        let w = wire(&random_points(5, &mut r), &[0.2, -0.1, 0.4, 0.0, 0.3], 7);
        let op = operator(2, 3.0);
        let state = w.state();
        let f = op.fields(&state);
        let q = op.size();
        let wm = DMatrix::from_fn(q, q, |_, _| C64::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5));
        let form = op.adjoint_form(&state, &f, &wm);
        for _ in 0..3 {
            let (h, phi) = random_direction(&w, &mut r, true);
            let dir = NodeDirection::from_splines(&h, &phi, &state.params).unwrap();
            let d = op.derivative(&state, &f, &dir).data;
            let direct = wm.iter().zip(d.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
            let via = form.apply(&dir);
            assert!((direct - via).abs() <= 1e-10 * direct.abs().max(1e-12), "{direct} {via}");
        }
    }

    #[test]
    fn dump_round_trips_shape() {
        let w = wire(&helix_points(5, 0.2, 0.3, 1.0), &[0.0; 5], 5);
        let t = operator(1, 2.0).assemble_t(&w.state());
        let mut buf = Vec::new();
        t.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].starts_with("6 1 "));
        assert_eq!(lines[1].split_whitespace().count(), 12);
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(truncation_degree(std::f64::consts::TAU, 0.5, 1), 5);
        assert!(truncation_adequate(4, std::f64::consts::TAU, 0.5));
        assert!(!truncation_adequate(3, std::f64::consts::TAU, 0.5));
    }
}
