use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::{Error, Intrinsics, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// Absolute bound in millimetres.
    Mm,
    /// Fraction of the lattice box diagonal.
    FractionOfDiagonal,
}

/// Per-component bound on the raw corner offsets before canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationBound {
    pub mode: BoundMode,
    pub value: f64,
}

impl Default for DeformationBound {
    fn default() -> Self {
        Self {
            mode: BoundMode::FractionOfDiagonal,
            value: 0.05,
        }
    }
}

impl DeformationBound {
    pub fn resolve_mm(&self, diagonal: f64) -> f64 {
        match self.mode {
            BoundMode::Mm => self.value,
            BoundMode::FractionOfDiagonal => self.value * diagonal,
        }
    }
}

/// Closed ranges `[lo, hi]` in millimetres, camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationRange {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSampling {
    /// Haar-uniform over SO(3).
    #[default]
    Uniform,
}

/// Synthetic dataset recipe.
///
/// Camera placement is a stand-in: translations are uniform per axis inside
/// `translation_range` and rotations uniform over SO(3), redrawn until the
/// whole object projects inside the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatagenConfig {
    pub base_mesh: PathBuf,
    #[serde(default)]
    pub deformation_bound: DeformationBound,
    pub translation_range: TranslationRange,
    #[serde(default)]
    pub rotation_sampling: RotationSampling,
    pub intrinsics: Intrinsics,
    #[serde(default = "default_keypoint_count")]
    pub keypoint_count: usize,
    /// Number of scenes, each with its own deformation.
    pub samples: usize,
    /// Poses rendered per scene; records = `samples * views_per_sample`.
    #[serde(default = "default_views")]
    pub views_per_sample: usize,
    pub global_seed: u64,
    #[serde(default)]
    pub pixel_noise_sigma: f64,
    /// Side of the square network crop, px.
    #[serde(default = "default_crop_size")]
    pub crop_size: f64,
}

fn default_keypoint_count() -> usize {
    64
}

fn default_views() -> usize {
    1
}

fn default_crop_size() -> f64 {
    224.0
}

impl DatagenConfig {
    pub fn record_count(&self) -> usize {
        self.samples * self.views_per_sample
    }

    /// Checks everything that does not need the mesh.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidValue(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.views_per_sample == 0 {
            return bad("views_per_sample must be at least 1".into());
        }
        if !(self.deformation_bound.value > 0.0) || !self.deformation_bound.value.is_finite() {
            return bad(format!(
                "deformation_bound must be positive, got {}",
                self.deformation_bound.value
            ));
        }
        for (axis, [lo, hi]) in [
            ("x", self.translation_range.x),
            ("y", self.translation_range.y),
            ("z", self.translation_range.z),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("translation_range.{axis} must be [lo, hi] with lo <= hi"));
            }
        }
        if !(self.translation_range.z[0] > 0.0) {
            return bad("translation_range.z must lie in front of the camera".into());
        }
        if self.keypoint_count == 0 {
            return bad("keypoint_count must be at least 1".into());
        }
        if !(self.pixel_noise_sigma >= 0.0) || !self.pixel_noise_sigma.is_finite() {
            return bad("pixel_noise_sigma must be non-negative".into());
        }
        if !(self.crop_size > 0.0) {
            return bad("crop_size must be positive".into());
        }
        self.intrinsics.validate()
    }
}
