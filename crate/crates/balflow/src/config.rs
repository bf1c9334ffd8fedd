//! Experiment configuration: TOML in, canonical TOML out.

use std::path::{Path, PathBuf};

use balflow_core::balancing::BalancingControls;
use balflow_core::kahler_flow::PdeControls;
use balflow_core::quantization::TkControls;
use balflow_core::{DensityField, Geometry, GeometryKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub geometry: GeometrySpec,
    pub omega: OmegaSpec,
    /// Bundle powers; ignored by `calabi` unless the endgame is enabled.
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub tk: TkSpec,
    #[serde(default)]
    pub balancing: BalancingSpec,
    #[serde(default)]
    pub pde: PdeSpec,
    #[serde(default)]
    pub asymptotics: AsymptoticsSpec,
    #[serde(default)]
    pub quantization: QuantizationSpec,
    #[serde(default)]
    pub calabi: CalabiSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeometrySpec {
    Sphere { n_theta: usize, n_phi: usize },
    Torus { n_x: usize, n_y: usize },
}

/// Parametric volume forms, normalized to unit mass at load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OmegaSpec {
    /// Sphere: `1 + a cos θ`.
    OnePlusCos { a: f64 },
    /// Sphere: `exp(a cos θ)`.
    ExpCos { a: f64 },
    /// Torus: `exp(a sin x + b cos y)`.
    ExpSinCos { a: f64, b: f64 },
    /// Torus: `c0 + Σ (c cos(px + qy) + s sin(px + qy))`.
    Trig { c0: f64, terms: Vec<TrigTerm> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub p: i32,
    pub q: i32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TkSpec {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Size of the seeded perturbation of the second `T_k` start.
    pub start_perturbation: f64,
}

impl Default for TkSpec {
    fn default() -> Self {
        let c = TkControls::default();
        Self { tolerance: c.tolerance, max_iterations: c.max_iterations, start_perturbation: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalancingSpec {
    pub dt: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub dt_growth: f64,
    pub growth_tolerance: f64,
    pub tolerance: f64,
    pub t_end: f64,
    pub max_steps: usize,
}

impl Default for BalancingSpec {
    fn default() -> Self {
        let c = BalancingControls::default();
        Self {
            dt: c.dt,
            dt_max: c.dt_max,
            dt_min: c.dt_min,
            dt_growth: c.dt_growth,
            growth_tolerance: c.growth_tolerance,
            tolerance: 1e-13,
            t_end: 1e3,
            max_steps: c.max_steps,
        }
    }
}

impl BalancingSpec {
    pub fn controls(&self, snapshot_times: Vec<f64>) -> BalancingControls {
        BalancingControls {
            dt: self.dt,
            dt_max: self.dt_max,
            dt_min: self.dt_min,
            growth_tolerance: self.growth_tolerance,
            dt_growth: self.dt_growth,
            tolerance: self.tolerance,
            max_steps: self.max_steps,
            snapshot_times,
        }
    }
}

/// Unset fields fall back to [`PdeControls::for_geometry`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub safety: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl PdeSpec {
    pub fn controls(&self, kind: GeometryKind, snapshot_times: Vec<f64>) -> PdeControls {
        let d = PdeControls::for_geometry(kind);
        PdeControls {
            t_max: self.t_max.unwrap_or(d.t_max),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            safety: self.safety.unwrap_or(d.safety),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            snapshot_times,
            monitor_tolerance: d.monitor_tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsSpec {
    /// Amplitude of the fixed non-round potential used for the Bergman
    /// density sweep.
    pub metric_perturbation: f64,
}

impl Default for AsymptoticsSpec {
    fn default() -> Self {
        Self { metric_perturbation: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizationSpec {
    pub sample_times: Vec<f64>,
    /// Half-width of the centred time difference used for the potential
    /// rate comparison.
    pub derivative_step: f64,
}

impl Default for QuantizationSpec {
    fn default() -> Self {
        Self { sample_times: vec![0.3], derivative_step: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalabiSpec {
    /// Also compute balanced metrics for every `k` and compare their
    /// densities with Ω (sphere only).
    pub endgame: bool,
}

fn invalid(key: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { key: key.to_string(), message: message.into() }
}

impl ExperimentConfig {
    /// Parses and validates; errors name the offending key.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let de = toml::Deserializer::new(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let message = e.into_inner().message().trim().to_string();
            HarnessError::Config { key, message }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical serialization: every field present, fixed order.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Self::to_canonical`], hex encoded.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_canonical().as_bytes()))
    }

    pub fn geometry(&self) -> Result<Geometry, HarnessError> {
        let g = match self.geometry {
            GeometrySpec::Sphere { n_theta, n_phi } => Geometry::sphere(n_theta, n_phi),
            GeometrySpec::Torus { n_x, n_y } => Geometry::torus(n_x, n_y),
        };
        g.map_err(|e| invalid("geometry", e.to_string()))
    }

    /// Ω as a unit-mass density on `geom`.
    pub fn omega_density(&self, geom: &Geometry) -> Result<DensityField, HarnessError> {
        let kind = geom.kind();
        let values = match (&self.omega, kind) {
            (OmegaSpec::OnePlusCos { a }, GeometryKind::Sphere) => geom.sample(|x, _| 1.0 + a * x),
            (OmegaSpec::ExpCos { a }, GeometryKind::Sphere) => geom.sample(|x, _| (a * x).exp()),
            (OmegaSpec::ExpSinCos { a, b }, GeometryKind::Torus) => geom.sample(|x, y| (a * x.sin() + b * y.cos()).exp()),
            (OmegaSpec::Trig { c0, terms }, GeometryKind::Torus) => geom.sample(|x, y| {
                terms.iter().fold(*c0, |acc, t| {
                    let arg = t.p as f64 * x + t.q as f64 * y;
                    acc + t.cos * arg.cos() + t.sin * arg.sin()
                })
            }),
            (_, kind) => return Err(invalid("omega.family", format!("family is not defined on the {kind:?} geometry"))),
        };
        geom.normalized_volume_density(values).map_err(|e| invalid("omega", e.to_string()))
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let geom = self.geometry()?;
        self.omega_density(&geom)?;
        for (i, &k) in self.k.iter().enumerate() {
            if k == 0 || k > balflow_core::geometry::MAX_K {
                return Err(invalid(&format!("k[{i}]"), format!("{k} is outside 1..={}", balflow_core::geometry::MAX_K)));
            }
        }
        let positive = [
            ("tk.tolerance", self.tk.tolerance),
            ("balancing.dt", self.balancing.dt),
            ("balancing.dt_max", self.balancing.dt_max),
            ("balancing.dt_min", self.balancing.dt_min),
            ("balancing.t_end", self.balancing.t_end),
            ("quantization.derivative_step", self.quantization.derivative_step),
        ];
        for (key, v) in positive {
            if !(v > 0.0) {
                return Err(invalid(key, format!("{v} must be positive")));
            }
        }
        if !(self.balancing.dt_growth >= 1.0) {
            return Err(invalid("balancing.dt_growth", "must be at least 1"));
        }
        if !(self.balancing.growth_tolerance >= 0.0) {
            return Err(invalid("balancing.growth_tolerance", "must be nonnegative"));
        }
        if !(self.tk.start_perturbation >= 0.0) {
            return Err(invalid("tk.start_perturbation", "must be nonnegative"));
        }
        for (key, v) in [("pde.tolerance", self.pde.tolerance), ("pde.t_max", self.pde.t_max)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(invalid(key, format!("{v} must be positive")));
                }
            }
        }
        if let Some(s) = self.pde.safety {
            if !(s > 0.0 && s <= 1.0) {
                return Err(invalid("pde.safety", format!("{s} is outside (0, 1]")));
            }
        }
        let step = self.quantization.derivative_step;
        for (i, &t) in self.quantization.sample_times.iter().enumerate() {
            if !(t > step) {
                return Err(invalid(&format!("quantization.sample_times[{i}]"), format!("{t} must exceed derivative_step {step}")));
            }
        }
        if self.calabi.endgame && geom.kind() != GeometryKind::Sphere {
            return Err(invalid("calabi.endgame", "balanced metrics need the sphere geometry"));
        }
        Ok(())
    }

    /// Commands that work with holomorphic sections need the sphere and a
    /// nonempty `k` list.
    pub fn require_sections(&self) -> Result<(), HarnessError> {
        if !matches!(self.geometry, GeometrySpec::Sphere { .. }) {
            return Err(invalid("geometry.kind", "this command needs the sphere geometry"));
        }
        if self.k.is_empty() {
            return Err(invalid("k", "at least one bundle power is required"));
        }
        Ok(())
    }
}
