//! Run configuration: flat keys with unit suffixes, read from TOML or JSON,
//! with `key=value` overrides and named presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::DesignMode;

/// Lowest and highest frequency a scan may cover.
pub const SCAN_LIMITS_THZ: (f64, f64) = (300.0, 800.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSpine {
    /// Straight segment along z, centred at the origin.
    #[default]
    Straight,
    /// Helix around z; radius and height from the config or sampled.
    Helix,
    /// Spine and twist read from `init_geometry`.
    Geometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub metal: String,
    pub f_opt_thz: f64,
    /// `b/a`; the resonant ratio `-Re eps(f_opt)` when absent.
    pub aspect: Option<f64>,
    pub length_lambda: f64,
    pub knots: usize,
    pub simpson_points: usize,
    /// Truncation degree; `ceil(kR) + 1` of the initial geometry when absent.
    pub nmax: Option<usize>,
    pub nmax_floor: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// `k rho sqrt(ab)`.
    pub rho_rule: f64,
    pub seed: u64,
    pub mode: DesignMode,
    pub init: InitialSpine,
    pub init_geometry: Option<PathBuf>,
    pub helix_turns: f64,
    pub helix_radius_lambda: Option<f64>,
    pub helix_height_lambda: Option<f64>,
    pub helix_radius_max_lambda: f64,
    pub helix_height_max_lambda: f64,
    pub twist_amplitude_rad: f64,
    /// Amplitude of the random knot displacement added to the initial spine.
    pub spine_perturbation_lambda: f64,
    pub max_iter: usize,
    pub checkpoint_every: usize,
    pub scan_start_thz: f64,
    pub scan_stop_thz: f64,
    pub scan_step_thz: f64,
    pub multistart_count: usize,
    pub workers: Option<usize>,
    /// Input geometry for `scan` and `export`.
    pub geometry: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Vertices per cross-section ring.
    pub mesh_ring: usize,
    /// Rings along the spine.
    pub mesh_rings: usize,
    pub mesh_cap: bool,
    pub permittivity_csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            metal: "silver".into(),
            f_opt_thz: 500.0,
            aspect: None,
            length_lambda: 0.5,
            knots: 10,
            simpson_points: 11,
            nmax: None,
            nmax_floor: 1,
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 5e-5,
            rho_rule: 0.05,
            seed: 0,
            mode: DesignMode::Full,
            init: InitialSpine::Straight,
            init_geometry: None,
            helix_turns: 4.0,
            helix_radius_lambda: None,
            helix_height_lambda: None,
            helix_radius_max_lambda: 0.5,
            helix_height_max_lambda: 2.0 / 3.0,
            twist_amplitude_rad: 0.1,
            spine_perturbation_lambda: 0.0,
            max_iter: 500,
            checkpoint_every: 10,
            scan_start_thz: SCAN_LIMITS_THZ.0,
            scan_stop_thz: SCAN_LIMITS_THZ.1,
            scan_step_thz: 5.0,
            multistart_count: 20,
            workers: None,
            geometry: None,
            output_dir: PathBuf::from("out"),
            mesh_ring: 24,
            mesh_rings: 200,
            mesh_cap: false,
            permittivity_csv: None,
        }
    }
}

/// Named starting points for the three reference studies.
pub const PRESETS: [&str; 3] = ["twist-only", "spine-only", "helix-campaign"];

impl RunConfig {
    pub fn alpha(&self) -> [f64; 3] {
        [self.alpha1, self.alpha2, self.alpha3]
    }

    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        Ok(match name {
            "twist-only" => Self {
                mode: DesignMode::TwistOnly,
                alpha1: 0.0,
                alpha2: 0.0,
                alpha3: 5e-5,
                knots: 10,
                simpson_points: 11,
                init: InitialSpine::Straight,
                ..base
            },
            "spine-only" => Self {
                mode: DesignMode::SpineOnly,
                alpha1: 5.0,
                alpha2: 8e-3,
                alpha3: 0.0,
                knots: 20,
                simpson_points: 11,
                length_lambda: 1.5,
                nmax: Some(5),
                twist_amplitude_rad: 0.0,
                spine_perturbation_lambda: 0.01,
                init: InitialSpine::Straight,
                ..base
            },
            "helix-campaign" => Self {
                mode: DesignMode::Full,
                alpha1: 5.0,
                alpha2: 8e-3,
                alpha3: 1e-6,
                knots: 40,
                simpson_points: 21,
                nmax: Some(5),
                aspect: Some(7.14),
                init: InitialSpine::Helix,
                multistart_count: 20,
                ..base
            },
            other => {
                return Err(Error::Config(format!("unknown preset '{other}' (known: {})", PRESETS.join(", "))));
            }
        })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim_start().starts_with('{') {
            Self::from_json_str(s)
        } else {
            Self::from_toml_str(s)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies the keys present in a TOML or JSON document on top of `self`.
    pub fn merge_str(&self, s: &str) -> Result<Self> {
        let doc: serde_json::Value = if s.trim_start().starts_with('{') {
            serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?
        };
        let serde_json::Value::Object(doc) = doc else {
            return Err(Error::Config("configuration must be a table of keys".into()));
        };
        let mut value = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        let map = value.as_object_mut().expect("config serializes to an object");
        for (k, v) in doc {
            if !map.contains_key(&k) {
                return Err(Error::Config(format!("unknown config key '{k}'")));
            }
            map.insert(k, v);
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies `key=value` overrides on top of `self`. Values parse as JSON
    /// when possible and as plain strings otherwise.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut value = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        let map = value.as_object_mut().expect("config serializes to an object");
        for item in overrides {
            let item = item.as_ref();
            let (k, v) =
                item.split_once('=').ok_or_else(|| Error::Config(format!("override '{item}' is not key=value")))?;
            let k = k.trim();
            if !map.contains_key(k) {
                return Err(Error::Config(format!("unknown config key '{k}'")));
            }
            let v = v.trim();
            let parsed = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
            map.insert(k.to_string(), parsed);
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f_opt_thz", self.f_opt_thz),
            ("length_lambda", self.length_lambda),
            ("rho_rule", self.rho_rule),
            ("helix_turns", self.helix_turns),
            ("scan_step_thz", self.scan_step_thz),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        for (k, v) in [("alpha1", self.alpha1), ("alpha2", self.alpha2), ("alpha3", self.alpha3)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{k} must be nonnegative, got {v}")));
            }
        }
        if let Some(a) = self.aspect {
            if !(a >= 1.0) || !a.is_finite() {
                return Err(Error::Config(format!("aspect must be >= 1, got {a}")));
            }
        }
        if self.knots < 4 {
            return Err(Error::Config(format!("need at least 4 knots, got {}", self.knots)));
        }
        if self.simpson_points < 3 || self.simpson_points % 2 == 0 {
            return Err(Error::Config(format!("simpson_points must be odd and >= 3, got {}", self.simpson_points)));
        }
        if self.nmax == Some(0) {
            return Err(Error::Config("nmax must be at least 1".into()));
        }
        if !(self.twist_amplitude_rad >= 0.0) || !(self.spine_perturbation_lambda >= 0.0) {
            return Err(Error::Config("random perturbation amplitudes must be nonnegative".into()));
        }
        for (k, v) in [
            ("helix_radius_max_lambda", self.helix_radius_max_lambda),
            ("helix_height_max_lambda", self.helix_height_max_lambda),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{k} must be positive")));
            }
        }
        if self.multistart_count == 0 {
            return Err(Error::Config("multistart_count must be at least 1".into()));
        }
        if self.mesh_ring < 3 || self.mesh_rings < 2 {
            return Err(Error::Config("mesh needs mesh_ring >= 3 and mesh_rings >= 2".into()));
        }
        if self.init == InitialSpine::Geometry && self.init_geometry.is_none() {
            return Err(Error::Config("init = geometry needs init_geometry".into()));
        }
        self.scan_grid().map(|_| ())
    }

    /// Scan frequencies, checked to lie in the supported band and to be
    /// evenly divided by the step.
    pub fn scan_grid(&self) -> Result<Vec<f64>> {
        let (lo, hi, step) = (self.scan_start_thz, self.scan_stop_thz, self.scan_step_thz);
        if !(lo >= SCAN_LIMITS_THZ.0 && hi <= SCAN_LIMITS_THZ.1 && lo <= hi) {
            return Err(Error::Config(format!(
                "scan range [{lo}, {hi}] THz must lie within [{}, {}]",
                SCAN_LIMITS_THZ.0, SCAN_LIMITS_THZ.1
            )));
        }
        let count = (hi - lo) / step;
        if (count - count.round()).abs() > 1e-9 * count.max(1.0) {
            return Err(Error::Config(format!("scan step {step} does not divide [{lo}, {hi}]")));
        }
        let m = count.round() as usize;
        Ok((0..=m).map(|i| lo + step * i as f64).collect())
    }
}
