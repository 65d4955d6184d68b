//! Run configuration: one JSON document, written in canonical form
//! (sorted keys, two-space indent, LF, trailing newline).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use cyclecert_core::certify::CertifyConfig;
use cyclecert_core::dynamics::DynamicsConfig;
use cyclecert_core::model::{PlanarSystem, Point, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CycleSettings {
    pub bracket: Option<[f64; 2]>,
    /// Upper end of the displacement scan; the window's inscribed radius if unset.
    pub scan_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitSettings {
    pub window: Window,
    pub a0_grid: usize,
    pub orbit_seeds: Vec<Point>,
    pub orbit_t_max: f64,
    /// Samples per orbit, uniform in time.
    pub orbit_samples: usize,
    pub rays: usize,
    pub size_px: u32,
}

impl Default for PortraitSettings {
    fn default() -> Self {
        Self {
            window: Window::square(3.0),
            a0_grid: 257,
            orbit_seeds: vec![
                [0.05, 0.0],
                [-0.05, 0.0],
                [2.9, 2.9],
                [-2.9, -2.9],
                [2.9, -2.9],
                [-2.9, 2.9],
                [0.0, 2.5],
                [0.0, -2.5],
            ],
            orbit_t_max: 100.0,
            orbit_samples: 2000,
            rays: 720,
            size_px: 640,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformSettings {
    pub nx: usize,
    pub v: Vec<f64>,
}

impl Default for TransformSettings {
    fn default() -> Self {
        Self {
            nx: 101,
            v: vec![-1.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub phi: String,
    pub g: String,
    pub params: BTreeMap<String, f64>,
    pub window: Window,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub certify: CertifyConfig,
    pub dynamics: DynamicsConfig,
    pub cycle: CycleSettings,
    pub portrait: PortraitSettings,
    pub transform: TransformSettings,
    pub sweep: SweepSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            phi: String::new(),
            g: "x".into(),
            params: BTreeMap::new(),
            window: Window::default(),
            output_dir: PathBuf::from("out"),
            seed: 1,
            certify: CertifyConfig::default(),
            dynamics: DynamicsConfig::default(),
            cycle: CycleSettings::default(),
            portrait: PortraitSettings::default(),
            transform: TransformSettings::default(),
            sweep: SweepSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text)
    }

    /// Canonical JSON text.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.phi.trim().is_empty() {
            bail!("phi is required");
        }
        if !(self.window.x_max > 0.0 && self.window.y_max > 0.0) {
            bail!("window extents must be positive");
        }
        Ok(())
    }

    pub fn system(&self) -> cyclecert_core::Result<PlanarSystem> {
        PlanarSystem::from_strings(&self.phi, &self.g, &self.params, self.window)
    }

    /// Dynamics settings with the scan range resolved against the window.
    pub fn dynamics(&self) -> DynamicsConfig {
        DynamicsConfig {
            scan_max: self.cycle.scan_max.unwrap_or(self.window.inscribed_radius()),
            ..self.dynamics
        }
    }
}

/// Sorted-key, pretty JSON with a trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json's Map is ordered by key unless `preserve_order` is enabled
    let v = serde_json::to_value(value).expect("config values are representable as JSON");
    let mut s = serde_json::to_string_pretty(&v).expect("JSON value serializes");
    s.push('\n');
    s
}
