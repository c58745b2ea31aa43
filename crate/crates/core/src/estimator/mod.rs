//! Pose and deformation recovery from 2D keypoints.
//!
//! [`total_loss`] evaluates the three-term training objective against a
//! ground-truth sample. Inference has no ground truth for the rotation or
//! the offsets, so [`fit`] minimizes the reprojection term alone over the
//! 33 parameters `(r6d, t, delta)` with an analytic Jacobian.

mod fit;
mod model;
mod params;

pub use fit::{fit, fit_multistart, initial_guess, FitConfig, FitReport, MIN_KEYPOINTS};
pub use model::KeypointModel;
pub use params::{FitParams, LossWeights, PARAM_COUNT};

use nalgebra::{DMatrix, DVector};

use crate::datagen::AnnotatedSample;
use crate::{LatticeBox, Result, TriMesh};

pub fn reprojection_residuals(
    params: &FitParams,
    sample: &AnnotatedSample,
    base: &TriMesh<f64>,
    lattice: &LatticeBox<f64>,
) -> Result<DVector<f64>> {
    KeypointModel::new(sample, base, lattice)?.residuals(params)
}

/// `2K x 33` derivative of [`reprojection_residuals`].
pub fn jacobian(
    params: &FitParams,
    sample: &AnnotatedSample,
    base: &TriMesh<f64>,
    lattice: &LatticeBox<f64>,
) -> Result<DMatrix<f64>> {
    KeypointModel::new(sample, base, lattice)?.jacobian(params)
}

/// `lambda_r |r6d - r6d_gt|^2 + lambda_d |delta - delta_gt|^2 + lambda_p * mean_k |uv_k - uv_gt_k|^2`.
///
/// The rotation term compares raw 6D encodings, the deformation term the
/// 24 offsets, and the projection term averages squared pixel distances
/// over keypoints in full-image coordinates.
pub fn total_loss(
    pred: &FitParams,
    gt: &AnnotatedSample,
    base: &TriMesh<f64>,
    lattice: &LatticeBox<f64>,
    weights: &LossWeights,
) -> Result<f64> {
    weights.validate()?;
    let gt_r6d = gt.rot6d().to_array();
    let rot: f64 = pred
        .r6d
        .to_array()
        .iter()
        .zip(gt_r6d)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let def = pred.delta.sub(&gt.delta).to_flat().iter().map(|v| v * v).sum::<f64>();
    let r = reprojection_residuals(pred, gt, base, lattice)?;
    let k = gt.keypoints_2d.len();
    let proj = if k == 0 { 0.0 } else { r.norm_squared() / k as f64 };
    Ok(weights.lambda_r * rot + weights.lambda_d * def + weights.lambda_p * proj)
}
