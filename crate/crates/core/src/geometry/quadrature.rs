//! Composite Simpson quadrature over the spline parameter domain.

use serde::{Deserialize, Serialize};

use super::spline::Partition;
use crate::error::{Error, Result};

/// Simpson nodes on every spline segment with shared endpoints merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpsonRule {
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
    /// Per segment, the (node index, weight) pairs of that segment's rule.
    pub segments: Vec<Vec<(usize, f64)>>,
}

impl SimpsonRule {
    /// `points` per segment, odd and at least 3.
    pub fn new(partition: &Partition, points: usize) -> Result<Self> {
        if points < 3 || points % 2 == 0 {
            return Err(Error::InvalidInput(format!("Simpson points per segment must be odd and >= 3, got {points}")));
        }
        let knots = partition.knots();
        let nseg = knots.len() - 1;
        let mut params = Vec::with_capacity(nseg * (points - 1) + 1);
        let mut weights = Vec::with_capacity(params.capacity());
        let mut segments = Vec::with_capacity(nseg);
        for j in 0..nseg {
            let (a, b) = (knots[j], knots[j + 1]);
            let h = (b - a) / (points - 1) as f64;
            let mut seg = Vec::with_capacity(points);
            for i in 0..points {
                let w = h / 3.0
                    * if i == 0 || i == points - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                let t = if i == points - 1 { b } else { a + h * i as f64 };
                let idx = if i == 0 && j > 0 {
                    params.len() - 1
                } else {
                    params.push(t);
                    weights.push(0.0);
                    params.len() - 1
                };
                weights[idx] += w;
                seg.push((idx, w));
            }
            segments.push(seg);
        }
        Ok(Self { params, weights, segments })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}
