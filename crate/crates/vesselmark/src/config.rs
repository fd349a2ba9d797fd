//! Run configuration: one flat TOML table. Unknown keys are rejected so a
//! typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vesselmark_core::filters::{Connectivity, RegionGrowParams, VesselnessParams};
use vesselmark_core::sphere::GrowConfig;

use crate::error::{Error, Result};

/// The shipped defaults, also installed as `config/default.toml`.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub f_int: f64,
    pub iterations: usize,
    pub init_radius_vox: f64,
    pub target_spacing_mm: f64,
    pub window_lo_hu: f64,
    pub window_hi_hu: f64,
    pub gradient_sigma_vox: f64,
    pub patch_side_mm: f64,
    pub max_radius_vox: f64,
    pub max_center_drift_mm: f64,
    pub settle_window: usize,
    pub settle_tolerance_vox: f64,

    pub vesselness_scales_mm: Vec<f64>,
    pub vesselness_alpha: f64,
    pub vesselness_beta: f64,
    /// Absent means "derive from the image".
    pub vesselness_c: Option<f64>,
    pub vesselness_bright_on_dark: bool,

    pub region_threshold: f64,
    pub region_connectivity: u32,
    pub region_max_voxels: usize,

    pub phantom_seed: u64,
    pub phantom_count: usize,
    pub phantom_patch_mm: f64,
    pub phantom_spacing_mm: f64,

    pub fill_stomach_hu: f64,
    pub fill_small_intestine_hu: f64,
    pub fill_duodenum_hu: f64,
    pub fill_colon_hu: f64,

    /// Default output directory, relative to the config file.
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GrowConfig::default();
        let v = VesselnessParams::default();
        let r = RegionGrowParams::default();
        Self {
            lambda1: g.lambda1,
            lambda2: g.lambda2,
            f_int: g.f_int,
            iterations: g.iterations,
            init_radius_vox: g.init_radius,
            target_spacing_mm: g.target_spacing,
            window_lo_hu: g.window.0,
            window_hi_hu: g.window.1,
            gradient_sigma_vox: g.sigma,
            patch_side_mm: g.patch_side_mm,
            max_radius_vox: g.max_radius,
            max_center_drift_mm: g.max_center_drift,
            settle_window: g.settle_window,
            settle_tolerance_vox: g.settle_tolerance,
            vesselness_scales_mm: v.scales_mm,
            vesselness_alpha: v.alpha,
            vesselness_beta: v.beta,
            vesselness_c: v.c,
            vesselness_bright_on_dark: v.bright_on_dark,
            region_threshold: r.threshold,
            region_connectivity: r.connectivity.count(),
            region_max_voxels: r.max_voxels,
            phantom_seed: 1,
            phantom_count: 50,
            phantom_patch_mm: vesselmark_core::phantom::PHANTOM_PATCH_MM,
            phantom_spacing_mm: vesselmark_core::phantom::PHANTOM_SPACING_MM,
            fill_stomach_hu: 0.0,
            fill_small_intestine_hu: 20.0,
            fill_duodenum_hu: 40.0,
            fill_colon_hu: 60.0,
            output_dir: PathBuf::from("vesselmark-out"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; `output_dir` is resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_dir = dir.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn grow(&self) -> GrowConfig {
        GrowConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            f_int: self.f_int,
            iterations: self.iterations,
            init_radius: self.init_radius_vox,
            target_spacing: self.target_spacing_mm,
            window: (self.window_lo_hu, self.window_hi_hu),
            sigma: self.gradient_sigma_vox,
            patch_side_mm: self.patch_side_mm,
            max_radius: self.max_radius_vox,
            max_center_drift: self.max_center_drift_mm,
            settle_window: self.settle_window,
            settle_tolerance: self.settle_tolerance_vox,
        }
    }

    pub fn vesselness(&self) -> VesselnessParams {
        VesselnessParams {
            scales_mm: self.vesselness_scales_mm.clone(),
            alpha: self.vesselness_alpha,
            beta: self.vesselness_beta,
            c: self.vesselness_c,
            bright_on_dark: self.vesselness_bright_on_dark,
        }
    }

    pub fn region_grow(&self) -> RegionGrowParams {
        RegionGrowParams {
            threshold: self.region_threshold,
            connectivity: Connectivity::from_count(self.region_connectivity).unwrap_or(Connectivity::Full26),
            max_voxels: self.region_max_voxels,
        }
    }

    /// Organ fills in overwrite order; later entries win overlaps.
    pub fn organ_fills(&self) -> [(&'static str, f64); 4] {
        [
            ("stomach", self.fill_stomach_hu),
            ("small_intestine", self.fill_small_intestine_hu),
            ("duodenum", self.fill_duodenum_hu),
            ("colon", self.fill_colon_hu),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: vesselmark_core::Error| Error::Config(e.to_string());
        self.grow().validate().map_err(wrap)?;
        self.vesselness().validate().map_err(wrap)?;
        if Connectivity::from_count(self.region_connectivity).is_none() {
            return Err(Error::Config(format!(
                "region_connectivity must be 6 or 26, got {}",
                self.region_connectivity
            )));
        }
        if !self.region_threshold.is_finite() || self.region_max_voxels == 0 {
            return Err(Error::Config("region_threshold must be finite and region_max_voxels positive".into()));
        }
        if self.phantom_count == 0 {
            return Err(Error::Config("phantom_count must be at least 1".into()));
        }
        for (name, v) in [("phantom_patch_mm", self.phantom_patch_mm), ("phantom_spacing_mm", self.phantom_spacing_mm)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if let Some((name, _)) = self.organ_fills().iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("fill value for {name} must be finite")));
        }
        Ok(())
    }
}
