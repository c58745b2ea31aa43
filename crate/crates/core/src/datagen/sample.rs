use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::matrix_to_rot6d;
use crate::serde_fmt::{offsets24, points2, rotation_rows, vec3};
use crate::{CornerOffsets, Crop, Error, Intrinsics, Result, RigidTransform, Rot6D, RotationMatrix, TriMesh};

/// One annotated view: ground-truth `{R, t, delta}` and the projected keypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedSample {
    pub sample_id: u64,
    /// Scene index; views of one scene share `delta`.
    pub scene: u64,
    /// Seed derived from the global seed and `sample_id`.
    pub seed: u64,
    /// Object to camera, serialized as nine row-major floats.
    #[serde(with = "rotation_rows")]
    pub rotation: RotationMatrix<f64>,
    #[serde(with = "vec3")]
    pub translation: Vector3<f64>,
    /// Canonicalized corner offsets (mm), 24 floats.
    #[serde(with = "offsets24")]
    pub delta: CornerOffsets<f64>,
    pub keypoint_indices: Vec<usize>,
    /// Full-image pixel coordinates.
    #[serde(with = "points2")]
    pub keypoints_2d: Vec<Vector2<f64>>,
    pub intrinsics: Intrinsics,
    pub crop: Crop,
}

impl AnnotatedSample {
    pub fn pose(&self) -> RigidTransform<f64> {
        RigidTransform::new(self.rotation, self.translation)
    }

    pub fn rot6d(&self) -> Rot6D<f64> {
        matrix_to_rot6d(&self.rotation)
    }

    pub fn keypoints_in_crop(&self) -> Vec<Vector2<f64>> {
        crate::camera::full_to_crop(&self.crop, &self.keypoints_2d)
    }

    /// Checks that keypoint indices and counts are consistent with `mesh`.
    pub fn check_against(&self, mesh: &TriMesh<f64>) -> Result<()> {
        if self.keypoint_indices.len() != self.keypoints_2d.len() {
            return Err(Error::LengthMismatch {
                left: self.keypoint_indices.len(),
                right: self.keypoints_2d.len(),
            });
        }
        if let Some(&bad) = self.keypoint_indices.iter().find(|&&i| i >= mesh.len()) {
            return Err(Error::InvalidValue(format!(
                "sample {}: keypoint index {bad} out of range for a mesh with {} vertices",
                self.sample_id,
                mesh.len()
            )));
        }
        Ok(())
    }
}
