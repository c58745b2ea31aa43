use nalgebra::{DMatrix, DVector, Matrix3, Vector2, Vector3};

use super::{FitParams, PARAM_COUNT};
use crate::camera::{projection_jacobian, MIN_DEPTH};
use crate::datagen::AnnotatedSample;
use crate::lattice::LatticeEmbedding;
use crate::{Error, Intrinsics, LatticeBox, Result, Rot6D, RotationMatrix, TriMesh};

/// `d e_i / d a_j` indexed `[i][j]`.
type ColumnDerivatives = [[Matrix3<f64>; 2]; 3];

/// Rotation from a 6D encoding together with `d e_i / d a_j`
/// (`[i][j]`, columns `e_i` of the matrix, inputs `a1`, `a2`).
pub(crate) fn rot6d_with_derivatives(r: &Rot6D<f64>) -> Result<(RotationMatrix<f64>, ColumnDerivatives)> {
    let rotation = r.to_matrix()?;
    let m = rotation.matrix();
    let (e1, e2): (Vector3<f64>, Vector3<f64>) = (m.column(0).into(), m.column(1).into());
    let eye = Matrix3::identity();

    let p1 = (eye - e1 * e1.transpose()) / r.a1.norm();
    let b2 = r.a2 - e1 * e1.dot(&r.a2);
    let p2 = (eye - e2 * e2.transpose()) / b2.norm();
    // b2 = a2 - (e1 . a2) e1
    let db2_de1 = -(e1 * r.a2.transpose() + eye * e1.dot(&r.a2));
    let db2_da2 = eye - e1 * e1.transpose();

    let de1 = [p1, Matrix3::zeros()];
    let de2 = [p2 * db2_de1 * p1, p2 * db2_da2];
    // e3 = e1 x e2
    let de3 = [0, 1].map(|j| -e2.cross_matrix() * de1[j] + e1.cross_matrix() * de2[j]);
    Ok((rotation, [de1, de2, de3]))
}

/// Keypoints of one sample embedded in the base lattice, with their observations.
#[derive(Debug, Clone)]
pub struct KeypointModel {
    intrinsics: Intrinsics,
    embedding: LatticeEmbedding<f64>,
    observed: Vec<Vector2<f64>>,
}

impl KeypointModel {
    pub fn new(sample: &AnnotatedSample, base: &TriMesh<f64>, lattice: &LatticeBox<f64>) -> Result<Self> {
        sample.check_against(base)?;
        sample.intrinsics.validate()?;
        let points: Vec<Vector3<f64>> = sample.keypoint_indices.iter().map(|&i| base.vertices()[i]).collect();
        Ok(Self {
            intrinsics: sample.intrinsics,
            embedding: LatticeEmbedding::new(&points, lattice),
            observed: sample.keypoints_2d.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.intrinsics
    }

    /// Undeformed keypoint positions in the object frame.
    pub fn base_points(&self) -> &[Vector3<f64>] {
        self.embedding.points()
    }

    pub fn observed(&self) -> &[Vector2<f64>] {
        &self.observed
    }

    /// Deformed keypoints in the object frame.
    pub fn deformed(&self, params: &FitParams) -> Vec<Vector3<f64>> {
        self.embedding.deform(&params.delta)
    }

    fn camera_points(&self, params: &FitParams, rotation: &RotationMatrix<f64>) -> Result<Vec<Vector3<f64>>> {
        let cam: Vec<Vector3<f64>> = self
            .deformed(params)
            .iter()
            .map(|p| rotation * p + params.translation)
            .collect();
        let behind: Vec<usize> = (0..cam.len()).filter(|&i| !(cam[i].z > MIN_DEPTH)).collect();
        if behind.is_empty() {
            Ok(cam)
        } else {
            Err(Error::BehindCamera { indices: behind })
        }
    }

    /// `(u_pred - u_obs, v_pred - v_obs)` stacked per keypoint.
    pub fn residuals(&self, params: &FitParams) -> Result<DVector<f64>> {
        let rotation = params.rotation()?;
        let cam = self.camera_points(params, &rotation)?;
        let mut r = DVector::zeros(2 * self.len());
        for (i, (q, obs)) in cam.iter().zip(&self.observed).enumerate() {
            let d = self.intrinsics.project(q) - obs;
            r[2 * i] = d.x;
            r[2 * i + 1] = d.y;
        }
        Ok(r)
    }

    /// Derivative of [`residuals`](Self::residuals) with respect to the 33
    /// parameters in [`FitParams::to_vector`] order.
    pub fn jacobian(&self, params: &FitParams) -> Result<DMatrix<f64>> {
        let (rotation, de) = rot6d_with_derivatives(&params.r6d)?;
        let cam = self.camera_points(params, &rotation)?;
        let deformed = self.deformed(params);
        let mut j = DMatrix::zeros(2 * self.len(), PARAM_COUNT);
        for (i, (q, x)) in cam.iter().zip(&deformed).enumerate() {
            let dpix = projection_jacobian(&self.intrinsics, q);
            let row = 2 * i;
            for a in 0..2 {
                let dq = de[0][a] * x.x + de[1][a] * x.y + de[2][a] * x.z;
                j.view_mut((row, 3 * a), (2, 3)).copy_from(&(dpix * dq));
            }
            j.view_mut((row, 6), (2, 3)).copy_from(&dpix);
            let dpix_r = dpix * rotation.matrix();
            for (c, w) in self.embedding.weights()[i].iter().enumerate() {
                j.view_mut((row, 9 + 3 * c), (2, 3)).copy_from(&(dpix_r * *w));
            }
        }
        Ok(j)
    }
}
