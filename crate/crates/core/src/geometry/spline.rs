//! Cubic not-a-knot interpolating splines on a fixed knot partition.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::V3;

/// Strictly increasing knot parameters `0 = t_1 < ... < t_n = L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    knots: Vec<f64>,
}

impl Partition {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidPartition(format!("need at least 2 knots, got {}", knots.len())));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidPartition("non-finite knot".into()));
        }
        if knots[0] != 0.0 {
            return Err(Error::InvalidPartition(format!("first knot must be 0, got {}", knots[0])));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition("knots not strictly increasing".into()));
        }
        Ok(Self { knots })
    }

    pub fn uniform(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidPartition(format!("length must be positive, got {length}")));
        }
        if n < 2 {
            return Err(Error::InvalidPartition(format!("need at least 2 knots, got {n}")));
        }
        let mut knots: Vec<f64> = (0..n).map(|j| length * j as f64 / (n - 1) as f64).collect();
        knots[n - 1] = length;
        Self::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn length(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Segment index containing `t`; endpoints belong to the adjacent segment.
    pub fn segment(&self, t: f64) -> Result<usize> {
        let l = self.length();
        if !(t >= 0.0 && t <= l) {
            return Err(Error::OutOfDomain { t, length: l });
        }
        let idx = self.knots.partition_point(|&k| k <= t);
        Ok(idx.clamp(1, self.knots.len() - 1) - 1)
    }

    /// Second-derivative moments of the not-a-knot spline through `values`.
    fn moments(&self, values: &[f64]) -> Vec<f64> {
        let n = self.knots.len();
        if n == 2 {
            return vec![0.0; 2];
        }
        let h: Vec<f64> = self.knots.windows(2).map(|w| w[1] - w[0]).collect();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for j in 1..n - 1 {
            a[(j, j - 1)] = h[j - 1];
            a[(j, j)] = 2.0 * (h[j - 1] + h[j]);
            a[(j, j + 1)] = h[j];
            rhs[j] = 6.0 * ((values[j + 1] - values[j]) / h[j] - (values[j] - values[j - 1]) / h[j - 1]);
        }
        if n == 3 {
            // A single parabola: equal moments everywhere.
            a[(0, 0)] = 1.0;
            a[(0, 1)] = -1.0;
            a[(2, 1)] = -1.0;
            a[(2, 2)] = 1.0;
        } else {
            // Third derivative continuous across the second and penultimate knots.
            a[(0, 0)] = h[1];
            a[(0, 1)] = -(h[0] + h[1]);
            a[(0, 2)] = h[0];
            a[(n - 1, n - 3)] = h[n - 2];
            a[(n - 1, n - 2)] = -(h[n - 3] + h[n - 2]);
            a[(n - 1, n - 1)] = h[n - 3];
        }
        let m = a.lu().solve(&rhs).expect("not-a-knot system is nonsingular for increasing knots");
        m.iter().copied().collect()
    }

    /// Values and first two derivatives at `params` of the cardinal splines
    /// `c_j` with `c_j(t_i) = delta_ij`, as `params.len() x n` matrices.
    pub fn cardinal_basis(&self, params: &[f64]) -> Result<CardinalBasis> {
        let n = self.len();
        let mut b0 = DMatrix::zeros(params.len(), n);
        let mut b1 = DMatrix::zeros(params.len(), n);
        let mut b2 = DMatrix::zeros(params.len(), n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let s = ScalarSpline::new(self.clone(), e)?;
            for (i, &t) in params.iter().enumerate() {
                let (v, d1, d2) = s.eval(t)?;
                b0[(i, j)] = v;
                b1[(i, j)] = d1;
                b2[(i, j)] = d2;
            }
        }
        Ok(CardinalBasis { b0, b1, b2 })
    }
}

/// Cardinal spline values and derivatives sampled at fixed parameters.
#[derive(Debug, Clone)]
pub struct CardinalBasis {
    pub b0: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
}

/// Scalar not-a-knot cubic spline.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSpline {
    partition: Partition,
    values: Vec<f64>,
    moments: Vec<f64>,
}

impl ScalarSpline {
    pub fn new(partition: Partition, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::Dimension { expected: partition.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite spline value".into()));
        }
        let moments = partition.moments(&values);
        Ok(Self { partition, values, moments })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value, first and second derivative at `t`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        let j = self.partition.segment(t)?;
        let k = &self.partition.knots;
        let h = k[j + 1] - k[j];
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        let (m0, m1) = (self.moments[j], self.moments[j + 1]);
        let a = (k[j + 1] - t) / h;
        let b = (t - k[j]) / h;
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let d2 = a * m0 + b * m1;
        Ok((v, d1, d2))
    }

    /// Third derivative on segment `j` (constant per segment).
    pub fn third_derivative(&self, j: usize) -> f64 {
        let k = &self.partition.knots;
        (self.moments[j + 1] - self.moments[j]) / (k[j + 1] - k[j])
    }
}

/// Spine curve `p : [0, L] -> R^3` as three scalar splines on one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SpineSpline {
    coords: [ScalarSpline; 3],
}

impl SpineSpline {
    pub fn new(partition: Partition, points: &[V3]) -> Result<Self> {
        if points.len() != partition.len() {
            return Err(Error::Dimension { expected: partition.len(), got: points.len() });
        }
        let comp = |c: usize| ScalarSpline::new(partition.clone(), points.iter().map(|p| p[c]).collect());
        Ok(Self { coords: [comp(0)?, comp(1)?, comp(2)?] })
    }

    pub fn partition(&self) -> &Partition {
        self.coords[0].partition()
    }

    pub fn length(&self) -> f64 {
        self.partition().length()
    }

    pub fn points(&self) -> Vec<V3> {
        (0..self.partition().len())
            .map(|j| V3::new(self.coords[0].values[j], self.coords[1].values[j], self.coords[2].values[j]))
            .collect()
    }

    pub fn eval(&self, t: f64) -> Result<(V3, V3, V3)> {
        let mut out = [V3::zeros(); 3];
        for c in 0..3 {
            let (v, d1, d2) = self.coords[c].eval(t)?;
            out[0][c] = v;
            out[1][c] = d1;
            out[2][c] = d2;
        }
        Ok((out[0], out[1], out[2]))
    }

    pub fn third_derivative(&self, segment: usize) -> V3 {
        V3::new(
            self.coords[0].third_derivative(segment),
            self.coords[1].third_derivative(segment),
            self.coords[2].third_derivative(segment),
        )
    }

    /// Curvature `|p' x p''| / |p'|^3` at `t`.
    pub fn curvature(&self, t: f64) -> Result<f64> {
        let (_, d1, d2) = self.eval(t)?;
        let s = d1.norm();
        if !(s > 0.0) {
            return Err(Error::Geometry(format!("vanishing p' at t = {t}")));
        }
        Ok(d1.cross(&d2).norm() / (s * s * s))
    }

    /// Samples positions and derivatives at the given parameters.
    pub fn sample(&self, params: &[f64]) -> Result<SpineSamples> {
        let mut out = SpineSamples::default();
        for &t in params {
            let (p, d1, d2) = self.eval(t)?;
            out.p.push(p);
            out.d1.push(d1);
            out.d2.push(d2);
        }
        Ok(out)
    }
}

/// Twist angle `theta : [0, L] -> R` on the spine's partition.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistSpline {
    inner: ScalarSpline,
}

impl TwistSpline {
    pub fn new(partition: Partition, values: Vec<f64>) -> Result<Self> {
        Ok(Self { inner: ScalarSpline::new(partition, values)? })
    }

    pub fn zero(partition: Partition) -> Self {
        let n = partition.len();
        Self::new(partition, vec![0.0; n]).expect("zero twist is valid")
    }

    pub fn partition(&self) -> &Partition {
        self.inner.partition()
    }

    pub fn values(&self) -> &[f64] {
        self.inner.values()
    }

    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        self.inner.eval(t)
    }
}

/// Spine positions and parameter derivatives at sample parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpineSamples {
    pub p: Vec<V3>,
    pub d1: Vec<V3>,
    pub d2: Vec<V3>,
}
