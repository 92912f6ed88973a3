//! Geometry, checkpoint and table files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{AdaptedFrame, FrameSample, Partition, SpineSpline, TwistSpline};
use crate::material::EllipticalCrossSection;
use crate::objective::WireIterate;
use crate::optimizer::{BfgsState, IterationRecord};
use crate::V3;

/// Where an output came from: enough to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub command: String,
    pub seed: u64,
    pub version: String,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(command: &str, cfg: &RunConfig, seed: u64) -> Self {
        Self { command: command.into(), seed, version: env!("CARGO_PKG_VERSION").into(), config: cfg.clone() }
    }
}

/// Adapted frame stored at the quadrature nodes, so a file reproduces the
/// exact frame an optimization ended with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameBlock {
    pub simpson_points: usize,
    pub normals: Vec<[f64; 3]>,
    /// `n'.b` per metre of spline parameter.
    pub twist_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub length_m: f64,
    pub knot_parameters: Vec<f64>,
    pub spine_knots: Vec<[f64; 3]>,
    pub twist_knots: Vec<f64>,
    pub reference_normal: [f64; 3],
    pub wavelength_m: f64,
    pub f_opt_thz: f64,
    pub metal: String,
    pub cross_section: EllipticalCrossSection,
    pub rho_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

fn finite(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Error::Parse(format!("{name} contains non-finite value {x}"))),
        None => Ok(()),
    }
}

impl GeometryFile {
    pub fn from_json(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.knot_parameters.len();
        if n < 2 || self.spine_knots.len() != n || self.twist_knots.len() != n {
            return Err(Error::Parse(format!(
                "knot arrays disagree: {} parameters, {} spine knots, {} twist knots",
                n,
                self.spine_knots.len(),
                self.twist_knots.len()
            )));
        }
        finite("knot_parameters", &self.knot_parameters)?;
        finite("twist_knots", &self.twist_knots)?;
        finite("spine_knots", &self.spine_knots.concat())?;
        finite("reference_normal", &self.reference_normal)?;
        for (name, v) in [
            ("length_m", self.length_m),
            ("wavelength_m", self.wavelength_m),
            ("f_opt_thz", self.f_opt_thz),
            ("rho_m", self.rho_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parse(format!("{name} must be positive, got {v}")));
            }
        }
        if self.knot_parameters[0] != 0.0 || (self.knot_parameters[n - 1] - self.length_m).abs() > 1e-12 * self.length_m
        {
            return Err(Error::Parse("knot parameters must run from 0 to length_m".into()));
        }
        Partition::new(self.knot_parameters.clone())?;
        EllipticalCrossSection::new(self.cross_section.a, self.cross_section.b)
            .map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(f) = &self.frame {
            if f.normals.len() != f.twist_rates.len() || f.simpson_points < 3 || f.simpson_points % 2 == 0 {
                return Err(Error::Parse("malformed frame block".into()));
            }
            if f.normals.len() != (n - 1) * (f.simpson_points - 1) + 1 {
                return Err(Error::Parse("frame block does not match the knot count".into()));
            }
            finite("frame normals", &f.normals.concat())?;
            finite("frame twist rates", &f.twist_rates)?;
        }
        Ok(())
    }

    pub fn knots(&self) -> usize {
        self.knot_parameters.len()
    }

    /// Spine points and parameters in wavelengths, and twist knots.
    pub fn design_lambda(&self) -> (Vec<f64>, Vec<V3>, Vec<f64>) {
        let l = self.wavelength_m;
        let params = self.knot_parameters.iter().map(|t| t / l).collect();
        let pts = self.spine_knots.iter().map(|p| V3::new(p[0], p[1], p[2]) / l).collect();
        (params, pts, self.twist_knots.clone())
    }

    pub fn splines_lambda(&self) -> Result<(SpineSpline, TwistSpline)> {
        let (params, pts, tw) = self.design_lambda();
        let part = Partition::new(params)?;
        Ok((SpineSpline::new(part.clone(), &pts)?, TwistSpline::new(part, tw)?))
    }

    /// Stored frame in wavelength units at the given nodes, if present.
    pub fn frame_lambda(
        &self,
        spine: &SpineSpline,
        params: &[f64],
        simpson_points: usize,
    ) -> Result<Option<AdaptedFrame>> {
        let Some(block) = &self.frame else { return Ok(None) };
        if block.simpson_points != simpson_points || block.normals.len() != params.len() {
            return Ok(None);
        }
        let mut samples = Vec::with_capacity(params.len());
        for (i, &t) in params.iter().enumerate() {
            let (_, d1, d2) = spine.eval(t)?;
            let s = d1.norm();
            let tan = d1 / s;
            let dt = (d2 - tan.dot(&d2) * tan) / s;
            let raw = V3::from(block.normals[i]);
            let n = raw - raw.dot(&tan) * tan;
            if !(n.norm() > 0.5) {
                return Err(Error::Parse(format!("stored normal {i} is not normal to the spine")));
            }
            let n = n.normalize();
            samples.push(FrameSample {
                t: tan,
                n,
                b: tan.cross(&n),
                dt,
                twist_rate: block.twist_rates[i] * self.wavelength_m,
            });
        }
        Ok(Some(AdaptedFrame { params: params.to_vec(), samples, twisted: true }))
    }
}

/// Frame block of an adapted frame given in wavelength units.
pub fn frame_block(frame: &AdaptedFrame, simpson_points: usize, wavelength_m: f64) -> FrameBlock {
    FrameBlock {
        simpson_points,
        normals: frame.samples.iter().map(|s| [s.n.x, s.n.y, s.n.z]).collect(),
        twist_rates: frame.samples.iter().map(|s| s.twist_rate / wavelength_m).collect(),
    }
}

/// Resumable optimizer state with the configuration it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub provenance: Provenance,
    pub nmax: usize,
    pub rho_lambda: f64,
    pub state: BfgsState<WireIterate>,
}

impl Checkpoint {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let n = c.state.x.len();
        if n == 0 || n % 4 != 0 || c.state.grad.len() != n || c.state.h.nrows() != n || c.state.h.ncols() != n {
            return Err(Error::Parse("checkpoint dimensions disagree".into()));
        }
        if c.state.aux.x.len() != n || c.state.aux.frame.params.len() != c.state.aux.frame.samples.len() {
            return Err(Error::Parse("checkpoint frame disagrees with the iterate".into()));
        }
        finite("checkpoint iterate", &c.state.x)?;
        Ok(c)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string(self).expect("checkpoint serializes"))?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}

pub fn write_history(path: &Path, history: &[IterationRecord], extra_names: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["iteration", "phi", "step_norm", "backtracks", "hessian_updated"];
    header.extend_from_slice(extra_names);
    w.write_record(&header).map_err(csv_err)?;
    for r in history {
        let mut row = vec![
            r.iteration.to_string(),
            format!("{:e}", r.phi),
            format!("{:e}", r.step_norm),
            r.backtracks.to_string(),
            r.updated.to_string(),
        ];
        row.extend(r.extra.iter().map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(f)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> GeometryFile {
        GeometryFile {
            length_m: 3.0e-7,
            knot_parameters: vec![0.0, 1.0e-7, 2.0e-7, 3.0e-7],
            spine_knots: vec![[0.0, 0.0, -1.5e-7], [1e-9, 0.0, -0.5e-7], [0.0, 2e-9, 0.5e-7], [0.0, 0.0, 1.5e-7]],
            twist_knots: vec![0.0, 0.1, -0.2, 0.3],
            reference_normal: [1.0, 0.0, 0.0],
            wavelength_m: 6.0e-7,
            f_opt_thz: 500.0,
            metal: "silver".into(),
            cross_section: EllipticalCrossSection::from_aspect(16.05).unwrap(),
            rho_m: 1e-8,
            frame: None,
            provenance: None,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let mut g = sample();
        g.twist_knots[1] = 0.1 + 1e-17;
        g.provenance = Some(Provenance::new("optimize", &RunConfig::default(), 7));
        let text = g.to_json();
        let back = GeometryFile::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_malformed() {
        let mut g = sample();
        g.twist_knots.pop();
        assert!(GeometryFile::from_json(&g.to_json()).is_err());
        let mut g = sample();
        g.knot_parameters[2] = 0.5e-7;
        assert!(GeometryFile::from_json(&g.to_json()).is_err());
        let mut g = sample();
        g.rho_m = -1.0;
        assert!(GeometryFile::from_json(&g.to_json()).is_err());
        assert!(GeometryFile::from_json("{}").is_err());
        assert!(GeometryFile::from_json("[1, 2").is_err());
    }
}
