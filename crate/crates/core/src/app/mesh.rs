//! Triangulated tube surface of a wire, written as plain ASCII.

use std::io::Write;
use std::path::Path;

use super::io::GeometryFile;
use crate::error::{Error, Result};
use crate::geometry::{apply_twist, build_rmf, min_nonadjacent_distance};
use crate::V3;

/// Frame refinement between consecutive rings.
const FRAME_REFINE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    /// Vertices in metres.
    pub vertices: Vec<V3>,
    pub triangles: Vec<[usize; 3]>,
    /// Ring count and vertices per ring; rings come first in `vertices`.
    pub rings: usize,
    pub ring_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub rings: usize,
    pub ring_size: usize,
    pub cap: bool,
    /// Overrides the file's thickness, in metres.
    pub rho_m: Option<f64>,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self { rings: 200, ring_size: 24, cap: false, rho_m: None }
    }
}

impl Mesh {
    pub fn ring(&self, i: usize) -> &[V3] {
        &self.vertices[i * self.ring_size..(i + 1) * self.ring_size]
    }

    pub fn write_ascii<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z)?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_ascii(f)?;
        Ok(())
    }
}

/// Sweeps the scaled ellipse along the adapted frame. Returns the mesh and
/// any accuracy or self-contact warnings.
pub fn export_geometry(g: &GeometryFile, opts: &MeshOptions) -> Result<(Mesh, Vec<String>)> {
    if opts.rings < 2 || opts.ring_size < 3 {
        return Err(Error::Config("mesh needs at least 2 rings of 3 vertices".into()));
    }
    let rho_m = opts.rho_m.unwrap_or(g.rho_m);
    if !(rho_m > 0.0 && rho_m.is_finite()) {
        return Err(Error::Config(format!("thickness must be positive, got {rho_m}")));
    }
    let lam = g.wavelength_m;
    let rho = rho_m / lam;
    let (spine, twist) = g.splines_lambda()?;
    let len = spine.length();
    let fine = (opts.rings - 1) * FRAME_REFINE + 1;
    let params: Vec<f64> = (0..fine).map(|i| len * i as f64 / (fine - 1) as f64).collect();
    let frame = apply_twist(&build_rmf(&spine, &params, &V3::from(g.reference_normal))?, &twist)?;
    let samples = spine.sample(&params)?;

    let mut warnings = Vec::new();
    // Thickness of the equal-area round wire.
    let k_rho = std::f64::consts::TAU * rho * (g.cross_section.a * g.cross_section.b).sqrt();
    if k_rho > 0.1 {
        warnings.push(format!(
            "k rho sqrt(ab) = {k_rho:.3} exceeds 0.1; the thin-wire model is inaccurate at this thickness"
        ));
    }
    let half_width = rho * g.cross_section.a.max(g.cross_section.b);
    let speeds: Vec<f64> = samples.d1.iter().map(|d| d.norm()).collect();
    let kappa = (0..fine).map(|i| spine.curvature(params[i])).collect::<Result<Vec<_>>>()?;
    let kmax = kappa.iter().cloned().fold(0.0, f64::max);
    let contact = min_nonadjacent_distance(&params, &samples.p, &speeds, std::f64::consts::PI * half_width);
    if kmax * half_width >= 1.0 || contact <= 2.0 * half_width {
        warnings.push(format!(
            "tube self-intersects: half-width {half_width:.3e}, max curvature {kmax:.3e}, closest approach {contact:.3e} (wavelengths)"
        ));
    }

    let m = opts.ring_size;
    let mut vertices = Vec::with_capacity(opts.rings * m + 2);
    for r in 0..opts.rings {
        let i = r * FRAME_REFINE;
        let s = &frame.samples[i];
        for j in 0..m {
            let th = std::f64::consts::TAU * j as f64 / m as f64;
            let off = g.cross_section.a * th.cos() * s.n + g.cross_section.b * th.sin() * s.b;
            vertices.push((samples.p[i] + rho * off) * lam);
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * opts.rings);
    for r in 0..opts.rings - 1 {
        for j in 0..m {
            let a = r * m + j;
            let b = r * m + (j + 1) % m;
            let c = a + m;
            let d = b + m;
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    if opts.cap {
        for (r, p, flip) in [(0, samples.p[0], true), (opts.rings - 1, samples.p[fine - 1], false)] {
            let centre = vertices.len();
            vertices.push(p * lam);
            for j in 0..m {
                let a = r * m + j;
                let b = r * m + (j + 1) % m;
                triangles.push(if flip { [centre, b, a] } else { [centre, a, b] });
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok((Mesh { vertices, triangles, rings: opts.rings, ring_size: m }, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::EllipticalCrossSection;
    use std::collections::HashMap;

    fn straight(twist_end: f64, rho_m: f64) -> GeometryFile {
        let lam = 6e-7;
        let n = 6;
        GeometryFile {
            length_m: 0.5 * lam,
            knot_parameters: (0..n).map(|i| 0.5 * lam * i as f64 / (n - 1) as f64).collect(),
            spine_knots: (0..n).map(|i| [0.0, 0.0, 0.5 * lam * i as f64 / (n - 1) as f64]).collect(),
            twist_knots: (0..n).map(|i| twist_end * i as f64 / (n - 1) as f64).collect(),
            reference_normal: [1.0, 0.0, 0.0],
            wavelength_m: lam,
            f_opt_thz: 500.0,
            metal: "silver".into(),
            cross_section: EllipticalCrossSection::from_aspect(4.0).unwrap(),
            rho_m,
            frame: None,
            provenance: None,
        }
    }

    #[test]
    fn straight_wire_is_an_elliptical_cylinder() {
        let g = straight(0.0, 1e-9);
        let (mesh, warnings) =
            export_geometry(&g, &MeshOptions { rings: 20, ring_size: 16, ..Default::default() }).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        let (a, b) = (g.cross_section.a * g.rho_m, g.cross_section.b * g.rho_m);
        for v in &mesh.vertices {
            let e = (v.x / a).powi(2) + (v.y / b).powi(2) - 1.0;
            assert!(e.abs() < 1e-9, "{e}");
        }
    }

    #[test]
    fn quarter_twist_rotates_end_ring() {
        let g = straight(std::f64::consts::FRAC_PI_2, 1e-9);
        let (mesh, _) = export_geometry(&g, &MeshOptions { rings: 30, ring_size: 8, ..Default::default() }).unwrap();
        let first = mesh.ring(0)[0];
        let last = mesh.ring(29)[0];
        // The major-axis vertex starts along the reference normal and ends along the binormal.
        assert!(first.y.abs() < 1e-20 && first.x > 0.0);
        let expect = V3::new(0.0, g.cross_section.a * g.rho_m, last.z);
        assert!((last - expect).norm() < 1e-9 * g.rho_m, "{last:?}");
    }

    #[test]
    fn open_tube_is_watertight_except_ends() {
        let g = straight(0.3, 1e-9);
        for cap in [false, true] {
            let (mesh, _) = export_geometry(&g, &MeshOptions { rings: 5, ring_size: 7, cap, rho_m: None }).unwrap();
            let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
            for t in &mesh.triangles {
                for k in 0..3 {
                    let (u, v) = (t[k], t[(k + 1) % 3]);
                    *edges.entry((u.min(v), u.max(v))).or_default() += 1;
                }
            }
            let boundary = edges.values().filter(|c| **c == 1).count();
            assert!(edges.values().all(|c| *c <= 2));
            assert_eq!(boundary, if cap { 0 } else { 14 });
        }
    }

    #[test]
    fn thick_wire_warns() {
        let g = straight(0.0, 1e-9);
        let (_, w) =
            export_geometry(&g, &MeshOptions { rho_m: Some(0.05 * g.wavelength_m), ..Default::default() }).unwrap();
        assert!(w.iter().any(|m| m.contains("k rho")));
        let (_, w) =
            export_geometry(&g, &MeshOptions { rho_m: Some(0.02 * g.wavelength_m), ..Default::default() }).unwrap();
        assert!(w.is_empty(), "{w:?}");
        assert!(!w.iter().any(|m| m.contains("self-intersects")));
        let mut arc = g.clone();
        let n = arc.knots();
        let r = 0.1 * arc.wavelength_m;
        arc.spine_knots = (0..n)
            .map(|i| {
                let a = 1.8 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
                [r * a.cos(), r * a.sin(), 0.0]
            })
            .collect();
        arc.reference_normal = [0.0, 0.0, 1.0];
        let (_, w) =
            export_geometry(&arc, &MeshOptions { rho_m: Some(0.04 * arc.wavelength_m), ..Default::default() }).unwrap();
        assert!(w.iter().any(|m| m.contains("self-intersects")), "{w:?}");
        let mut bad = g.clone();
        bad.rho_m = 1e-9;
        assert!(export_geometry(&bad, &MeshOptions { rho_m: Some(-1.0), ..Default::default() }).is_err());
    }
}
