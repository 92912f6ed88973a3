//! Permittivity data, the elliptical cross-section tensor and the 3x3
//! polarization tensor field along the wire.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FrameSample;
use crate::{C64, EPS0, V3};

const BUILTIN_CSV: &str = include_str!("../data/permittivity.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermittivityRow {
    pub f_thz: f64,
    pub eps: C64,
}

/// Tabulated relative permittivity of one metal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermittivityTable {
    pub metal: String,
    rows: Vec<PermittivityRow>,
}

impl PermittivityTable {
    pub fn new(metal: &str, rows: Vec<PermittivityRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Parse(format!("no rows for metal '{metal}'")));
        }
        for r in &rows {
            if !r.f_thz.is_finite() || !r.eps.re.is_finite() || !r.eps.im.is_finite() {
                return Err(Error::Parse(format!("non-finite entry for {metal}")));
            }
            if !(r.eps.re < 0.0 && r.eps.im > 0.0) {
                return Err(Error::Parse(format!(
                    "{metal} at {} THz needs Re eps < 0 and Im eps > 0, got {}",
                    r.f_thz, r.eps
                )));
            }
        }
        if rows.windows(2).any(|w| w[1].f_thz <= w[0].f_thz) {
            return Err(Error::Parse(format!("frequencies for {metal} not strictly increasing")));
        }
        Ok(Self { metal: metal.to_string(), rows })
    }

    pub fn rows(&self) -> &[PermittivityRow] {
        &self.rows
    }

    pub fn range(&self) -> (f64, f64) {
        (self.rows[0].f_thz, self.rows[self.rows.len() - 1].f_thz)
    }

    /// Exact row value at tabulated frequencies, linear in Re and Im between.
    pub fn lookup(&self, f_thz: f64) -> Result<C64> {
        let (lo, hi) = self.range();
        if !(f_thz >= lo && f_thz <= hi) {
            return Err(Error::FrequencyOutOfRange { metal: self.metal.clone(), f_thz, lo, hi });
        }
        let i = self.rows.partition_point(|r| r.f_thz < f_thz);
        if self.rows[i].f_thz == f_thz {
            return Ok(self.rows[i].eps);
        }
        let (a, b) = (&self.rows[i - 1], &self.rows[i]);
        let w = (f_thz - a.f_thz) / (b.f_thz - a.f_thz);
        Ok(C64::new(a.eps.re + w * (b.eps.re - a.eps.re), a.eps.im + w * (b.eps.im - a.eps.im)))
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    metal: String,
    #[serde(rename = "f_THz")]
    f_thz: f64,
    re_eps: f64,
    im_eps: f64,
}

/// Permittivity tables keyed by lower-case metal tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialDb {
    tables: BTreeMap<String, PermittivityTable>,
}

impl Default for MaterialDb {
    fn default() -> Self {
        Self::from_csv_str(BUILTIN_CSV).expect("built-in permittivity table is valid")
    }
}

impl MaterialDb {
    /// Parses CSV with header `metal,f_THz,re_eps,im_eps`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let expected = ["metal", "f_THz", "re_eps", "im_eps"];
        if headers.len() != expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Parse(format!(
                "expected header metal,f_THz,re_eps,im_eps, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut grouped: BTreeMap<String, Vec<PermittivityRow>> = BTreeMap::new();
        for rec in rdr.deserialize::<CsvRow>() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            grouped
                .entry(rec.metal.to_lowercase())
                .or_default()
                .push(PermittivityRow { f_thz: rec.f_thz, eps: C64::new(rec.re_eps, rec.im_eps) });
        }
        if grouped.is_empty() {
            return Err(Error::Parse("permittivity file has no rows".into()));
        }
        let mut tables = BTreeMap::new();
        for (metal, rows) in grouped {
            let t = PermittivityTable::new(&metal, rows)?;
            tables.insert(metal, t);
        }
        Ok(Self { tables })
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::from_csv_reader(s.as_bytes())
    }

    pub fn from_csv_file(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn table(&self, metal: &str) -> Result<&PermittivityTable> {
        self.tables.get(&metal.to_lowercase()).ok_or_else(|| Error::UnknownMetal(metal.to_string()))
    }

    pub fn metals(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(|s| s.as_str())
    }

    pub fn lookup(&self, metal: &str, f_thz: f64) -> Result<C64> {
        self.table(metal)?.lookup(f_thz)
    }
}

/// Permittivity from the built-in table.
pub fn lookup_permittivity(metal: &str, f_thz: f64) -> Result<C64> {
    MaterialDb::default().lookup(metal, f_thz)
}

/// Ellipse with semi-axes `a <= b` inside the unit disc; `a` lies along the normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticalCrossSection {
    pub a: f64,
    pub b: f64,
}

impl EllipticalCrossSection {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a <= b && b < 1.0) {
            return Err(Error::CrossSection(format!("need 0 < a <= b < 1, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b })
    }

    /// `b = 0.99`, `a = 0.99 / aspect` for an aspect ratio `b/a >= 1`.
    pub fn from_aspect(aspect: f64) -> Result<Self> {
        if !(aspect >= 1.0) || !aspect.is_finite() {
            return Err(Error::CrossSection(format!("aspect ratio must be >= 1, got {aspect}")));
        }
        Self::new(0.99 / aspect, 0.99)
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.a * self.b
    }

    pub fn aspect(&self) -> f64 {
        self.b / self.a
    }
}

/// Diagonal 2x2 cross-section tensor `m^e` for relative permittivity `eps`.
pub fn cross_section_tensor(cs: &EllipticalCrossSection, eps: C64) -> Result<Matrix2<C64>> {
    let (a, b) = (C64::from(cs.a), C64::from(cs.b));
    let d1 = a + eps * b;
    let d2 = b + eps * a;
    if d1.norm() == 0.0 || d2.norm() == 0.0 {
        return Err(Error::SingularTensor(format!("vanishing denominator for eps = {eps}")));
    }
    Ok(Matrix2::new((a + b) / d1, C64::from(0.0), C64::from(0.0), (a + b) / d2))
}

fn frame_matrix(s: &FrameSample) -> Matrix3<f64> {
    Matrix3::from_columns(&[s.t, s.n, s.b])
}

fn embed(m: &Matrix2<C64>) -> Matrix3<C64> {
    let z = C64::from(0.0);
    Matrix3::new(C64::from(1.0), z, z, z, m[(0, 0)], m[(0, 1)], z, m[(1, 0)], m[(1, 1)])
}

/// `V diag(1, m) V^T` for an orthonormal `V = [t|n|b]`.
pub fn polarization_tensor(v: &Matrix3<f64>, m: &Matrix2<C64>) -> Result<Matrix3<C64>> {
    let defect = (v.transpose() * v - Matrix3::identity()).abs().max();
    if !(defect <= 1e-10) {
        return Err(Error::InvalidInput(format!("frame matrix not orthonormal (defect {defect:e})")));
    }
    let vc = v.map(C64::from);
    Ok(vc * embed(m) * vc.transpose())
}

/// Polarization tensor at a frame sample.
pub fn polarization_at(s: &FrameSample, m: &Matrix2<C64>) -> Matrix3<C64> {
    let vc = frame_matrix(s).map(C64::from);
    vc * embed(m) * vc.transpose()
}

/// Derivative of the frame matrix for spine direction `h'` and twist `phi`
/// at a sample with speed `|p'|`.
pub fn frame_matrix_derivative(s: &FrameSample, dh: &V3, speed: f64, phi: f64) -> Matrix3<f64> {
    let hn = dh.dot(&s.n) / speed;
    let hb = dh.dot(&s.b) / speed;
    Matrix3::from_columns(&[hn * s.n + hb * s.b, -hn * s.t + phi * s.b, -hb * s.t - phi * s.n])
}

/// `V' M V^T + V M V'^T` for spine direction `h'` and twist increment `phi`.
pub fn polarization_tensor_derivative(
    s: &FrameSample,
    dh: &V3,
    speed: f64,
    phi: f64,
    m: &Matrix2<C64>,
) -> Matrix3<C64> {
    let v = frame_matrix(s).map(C64::from);
    let dv = frame_matrix_derivative(s, dh, speed, phi).map(C64::from);
    let me = embed(m);
    let a = dv * me * v.transpose();
    a + a.transpose()
}

/// `V' M V^T + V M V'^T` for a given frame matrix derivative `dv`.
pub fn polarization_tensor_derivative_from(s: &FrameSample, dv: &Matrix3<f64>, m: &Matrix2<C64>) -> Matrix3<C64> {
    let v = frame_matrix(s).map(C64::from);
    let a = dv.map(C64::from) * embed(m) * v.transpose();
    a + a.transpose()
}

/// Frequency where `Re eps(f) = -b/a`, bisected to 0.1 THz on the interpolated table.
pub fn plasmonic_resonance(cs: &EllipticalCrossSection, table: &PermittivityTable) -> Option<f64> {
    let target = -cs.aspect();
    let g = |f: f64| table.lookup(f).map(|e| e.re - target).ok();
    let rows = table.rows();
    for w in rows.windows(2) {
        let (mut lo, mut hi) = (w[0].f_thz, w[1].f_thz);
        let (glo, ghi) = (g(lo)?, g(hi)?);
        if glo == 0.0 {
            return Some(lo);
        }
        if glo * ghi > 0.0 {
            continue;
        }
        if ghi == 0.0 {
            return Some(hi);
        }
        let sign_lo = glo.signum();
        while hi - lo > 0.1 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid)?;
            if gm == 0.0 {
                return Some(mid);
            }
            if gm.signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Some(0.5 * (lo + hi));
    }
    None
}

/// Aspect ratio `b/a = -Re eps(f)` that places the resonance at `f`.
pub fn resonant_aspect(table: &PermittivityTable, f_thz: f64) -> Result<f64> {
    let re = table.lookup(f_thz)?.re;
    if !(re < -1.0) {
        return Err(Error::CrossSection(format!("Re eps = {re} at {f_thz} THz admits no resonant ellipse")));
    }
    Ok(-re)
}

/// Rotation angle used by the real-part bound, in (0, pi/2).
pub fn bound_angle(eps_r: C64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let polar = |z: C64| {
        let a = z.arg();
        if a < 0.0 {
            a + two_pi
        } else {
            a
        }
    };
    let em = eps_r * EPS0;
    let alpha = polar(em.conj());
    let beta = polar((em - EPS0).conj());
    1.5 * std::f64::consts::PI - 0.5 * (alpha + beta)
}

/// Quantities entering the bounds on the polarization tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub gamma: f64,
    /// `Re(e^{i gamma} eps0) > 0`, `Re(e^{i gamma} conj eps_m) > 0`,
    /// `Re(e^{i gamma} conj(eps_m - eps0)) < 0`.
    pub sign_conditions: [bool; 3],
    /// Smallest `xi.Re(c M)xi / Re(c) - 1` over the samples, `c = e^{i gamma} conj(eps_m - eps0)`.
    pub real_margin: f64,
    /// Largest `xi.Im(d M)xi / Im(d) - 1` over the samples, `d = conj(eps_m - eps0)`.
    pub imag_excess: f64,
}

/// Evaluates both bounds for a tensor `m3` over unit directions `xis`.
pub fn check_bounds(eps_r: C64, m3: &Matrix3<C64>, xis: &[V3]) -> BoundReport {
    let gamma = bound_angle(eps_r);
    let rot = C64::from_polar(1.0, gamma);
    let em = eps_r * EPS0;
    let d = (em - EPS0).conj();
    let c = rot * d;
    let sign_conditions = [(rot * EPS0).re > 0.0, (rot * em.conj()).re > 0.0, c.re < 0.0];
    let mut real_margin = f64::INFINITY;
    let mut imag_excess = f64::NEG_INFINITY;
    for xi in xis {
        let xc = xi.map(C64::from);
        let q = xc.dot(&(m3 * xc));
        real_margin = real_margin.min((c * q).re / c.re - xi.norm_squared());
        imag_excess = imag_excess.max((d * q).im / d.im - xi.norm_squared());
    }
    BoundReport { gamma, sign_conditions, real_margin, imag_excess }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, SymmetricEigen};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn table_rows_and_interpolation() {
        let db = MaterialDb::default();
        assert_eq!(db.lookup("silver", 400.0).unwrap(), C64::new(-26.94, 0.32));
        assert_eq!(db.lookup("gold", 700.0).unwrap(), C64::new(-1.69, 5.66));
        assert!(close(db.lookup("Silver", 425.0).unwrap(), C64::new(-23.755, 0.38), 1e-12));
        assert!(matches!(db.lookup("silver", 299.0), Err(Error::FrequencyOutOfRange { .. })));
        assert!(matches!(db.lookup("copper", 400.0), Err(Error::UnknownMetal(_))));
    }

    #[test]
    fn csv_validation() {
        assert!(MaterialDb::from_csv_str("metal,f,re,im\nsilver,1,-1,1\n").is_err());
        assert!(MaterialDb::from_csv_str("metal,f_THz,re_eps,im_eps\nsilver,1,1,1\n").is_err());
        assert!(MaterialDb::from_csv_str("metal,f_THz,re_eps,im_eps\nx,2,-1,1\nx,1,-1,1\n").is_err());
        let db = MaterialDb::from_csv_str("metal,f_THz,re_eps,im_eps\nx,1,-2,1\nx,3,-4,3\n").unwrap();
        assert!(close(db.lookup("x", 2.0).unwrap(), C64::new(-3.0, 2.0), 1e-15));
    }

    #[test]
    fn cross_section_special_cases() {
        let eps = C64::new(-16.05, 0.44);
        let cs = EllipticalCrossSection::new(0.5, 0.5).unwrap();
        let m = cross_section_tensor(&cs, eps).unwrap();
        let iso = C64::from(2.0) / (C64::from(1.0) + eps);
        assert!(close(m[(0, 0)], iso, 1e-15) && close(m[(1, 1)], iso, 1e-15));
        let cs = EllipticalCrossSection::from_aspect(3.0).unwrap();
        let m = cross_section_tensor(&cs, C64::from(1.0)).unwrap();
        assert!(close(m[(0, 0)], C64::from(1.0), 1e-15) && close(m[(1, 1)], C64::from(1.0), 1e-15));
        assert!(EllipticalCrossSection::new(0.6, 0.5).is_err());
        assert!(EllipticalCrossSection::new(0.5, 1.0).is_err());
    }

    #[test]
    fn near_resonant_entry_is_large() {
        let cs = EllipticalCrossSection::from_aspect(26.94).unwrap();
        let m = cross_section_tensor(&cs, C64::new(-26.94, 0.32)).unwrap();
        // With a < b it is the binormal entry whose denominator b + eps a nearly vanishes.
        let d = cs.b + C64::new(-26.94, 0.32) * cs.a;
        assert!((d - C64::new(0.0, 0.32 * cs.a)).norm() < 1e-12);
        assert!(m[(1, 1)].norm() > 10.0);
        assert!(m[(0, 0)].norm() < 1.0);
    }

    fn sample_from(v: &Matrix3<f64>) -> FrameSample {
        FrameSample {
            t: v.column(0).into(),
            n: v.column(1).into(),
            b: v.column(2).into(),
            dt: V3::zeros(),
            twist_rate: 0.0,
        }
    }

    #[test]
    fn polarization_tensor_properties() {
        let eps = C64::new(-16.05, 0.44);
        let cs = EllipticalCrossSection::from_aspect(16.05).unwrap();
        let m = cross_section_tensor(&cs, eps).unwrap();
        let id = polarization_tensor(&Matrix3::<f64>::identity(), &cross_section_tensor(&cs, C64::from(1.0)).unwrap())
            .unwrap();
        assert!((id - Matrix3::<C64>::identity()).norm() < 1e-15);
        for k in 0..10 {
            let r = Rotation3::from_euler_angles(0.3 * k as f64, 1.1 - 0.2 * k as f64, 0.7 * k as f64);
            let v = *r.matrix();
            let mt = polarization_tensor(&v, &m).unwrap();
            let t = v.column(0).map(C64::from);
            assert!((mt * t - t).norm() < 1e-12);
            assert!((mt - mt.transpose()).norm() < 1e-12);
            let im = mt.map(|z| z.im);
            let eig = SymmetricEigen::new(0.5 * (im + im.transpose()));
            assert!(eig.eigenvalues.max() <= 1e-12);
        }
        let round = EllipticalCrossSection::new(0.4, 0.4).unwrap();
        let mr = cross_section_tensor(&round, eps).unwrap();
        let v = *Rotation3::from_euler_angles(0.2, 0.5, -0.4).matrix();
        let t = V3::from(v.column(0));
        let expect = (t * t.transpose()).map(C64::from)
            + (Matrix3::identity() - t * t.transpose()).map(C64::from) * (C64::from(2.0) / (C64::from(1.0) + eps));
        assert!((polarization_tensor(&v, &mr).unwrap() - expect).norm() < 1e-14);
        assert!(polarization_tensor(&(v * 1.01), &m).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference_of_rotated_frame() {
        let eps = C64::new(-9.78, 0.31);
        let m = cross_section_tensor(&EllipticalCrossSection::from_aspect(9.78).unwrap(), eps).unwrap();
        let v = *Rotation3::from_euler_angles(0.4, -0.8, 1.3).matrix();
        let s = sample_from(&v);
        let speed = 1.7;
        let dh = V3::new(0.3, -0.2, 0.5);
        let phi = 0.6;
        let exact = polarization_tensor_derivative(&s, &dh, speed, phi, &m);
        // Perturbed frame: tangent of p' + tau h', transported by the same rotation.
        let frame_at = |tau: f64| {
            let p = s.t * speed + tau * dh;
            let tn = p.normalize();
            let ds = crate::geometry::transport_sample(&s, &tn, &V3::zeros(), tau * phi, 0.0, 1e-6).unwrap();
            polarization_at(&ds, &m)
        };
        let tau = 1e-6;
        let fd = (frame_at(tau) - frame_at(-tau)) / C64::from(2.0 * tau);
        assert!((fd - exact).norm() <= 1e-6 * exact.norm());
        assert!((exact - exact.transpose()).norm() < 1e-12);
        assert!(polarization_tensor_derivative(&s, &V3::zeros(), speed, 0.0, &m).norm() == 0.0);
    }

    #[test]
    fn resonances() {
        let db = MaterialDb::default();
        let silver = db.table("silver").unwrap();
        let gold = db.table("gold").unwrap();
        let r = |ratio: f64, t: &PermittivityTable| {
            plasmonic_resonance(&EllipticalCrossSection::from_aspect(ratio).unwrap(), t).unwrap()
        };
        assert!((r(26.94, silver) - 400.0).abs() <= 0.1);
        assert!((r(2.54, gold) - 600.0).abs() <= 0.1);
        let f = r(12.5, silver);
        let exact = 550.0 + 50.0 * (12.62 - 12.5) / (12.62 - 9.78);
        assert!(f > 550.0 && f < 600.0);
        assert!((f - exact).abs() <= 0.1);
        assert!(plasmonic_resonance(&EllipticalCrossSection::from_aspect(60.0).unwrap(), silver).is_none());
    }

    #[test]
    fn bound_angle_sign_conditions() {
        let db = MaterialDb::default();
        for metal in ["silver", "gold"] {
            for row in db.table(metal).unwrap().rows() {
                let g = bound_angle(row.eps);
                assert!(g > 0.0 && g < std::f64::consts::FRAC_PI_2);
                let rep = check_bounds(row.eps, &Matrix3::<f64>::identity().map(C64::from), &[V3::x()]);
                assert_eq!(rep.sign_conditions, [true; 3], "{metal} {}", row.f_thz);
            }
        }
    }
}
