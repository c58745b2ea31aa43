use nalgebra::{DMatrix, DVector, Matrix2x3, Matrix3, Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::pinhole::MIN_DEPTH;
use super::{epnp, Intrinsics};
use crate::optim::{levenberg_marquardt, LeastSquares, LmConfig, LmReport, Termination};
use crate::{Error, Result, RigidTransform, RotationMatrix};

pub const MIN_POINTS_FULL: usize = 6;
pub const MIN_POINTS_FIXED_ROTATION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PnpMode {
    Full,
    TranslationOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PnpSolution {
    /// Object frame to camera frame.
    pub transform: RigidTransform<f64>,
    pub rms_px: f64,
    pub mode: PnpMode,
    pub iterations: usize,
}

/// Pose from 3D-2D correspondences under a pinhole camera.
///
/// Without `fixed_rotation`: EPnP initialization followed by
/// Levenberg-Marquardt on the pixel reprojection error (needs at least six
/// non-coplanar points). With `fixed_rotation`: only the translation is
/// estimated, by linear least squares then the same refinement (at least
/// three points).
pub fn solve_pnp(
    k: &Intrinsics<f64>,
    points_obj: &[Vector3<f64>],
    points_img: &[Vector2<f64>],
    fixed_rotation: Option<&RotationMatrix<f64>>,
) -> Result<PnpSolution> {
    k.validate()?;
    if points_obj.len() != points_img.len() {
        return Err(Error::LengthMismatch {
            left: points_obj.len(),
            right: points_img.len(),
        });
    }
    let n = points_obj.len();
    let needed = if fixed_rotation.is_some() {
        MIN_POINTS_FIXED_ROTATION
    } else {
        MIN_POINTS_FULL
    };
    if n < needed {
        return Err(Error::InsufficientPoints { needed, got: n });
    }
    let normalized: Vec<Vector2<f64>> = points_img.iter().map(|uv| k.normalize(uv)).collect();
    let config = LmConfig {
        max_iterations: 100,
        relative_cost_tol: 1e-14,
        gradient_tol: 1e-12,
        ..LmConfig::default()
    };

    let (transform, report, residual) = match fixed_rotation {
        Some(rotation) => {
            let t0 = linear_translation(rotation, points_obj, &normalized)?;
            let problem = TranslationProblem {
                k,
                rotated: points_obj.iter().map(|p| rotation * p).collect(),
                observed: points_img,
            };
            let (t, report) = levenberg_marquardt(&problem, t0, &config)?;
            let residual = problem.residuals(&t)?;
            (RigidTransform::new(*rotation, t), report, residual)
        }
        None => {
            let init = epnp(points_obj, &normalized)?;
            let problem = PoseProblem {
                k,
                points: points_obj,
                observed: points_img,
            };
            let (pose, report) = levenberg_marquardt(&problem, init, &config)?;
            let residual = problem.residuals(&pose)?;
            (pose, report, residual)
        }
    };
    if report.termination == Termination::MaxIterations {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
        });
    }
    Ok(PnpSolution {
        transform,
        rms_px: (residual.norm_squared() / n as f64).sqrt(),
        mode: if fixed_rotation.is_some() {
            PnpMode::TranslationOnly
        } else {
            PnpMode::Full
        },
        iterations: report.iterations,
    })
}

/// Levenberg-Marquardt refinement of a full pose from a starting estimate.
pub(crate) fn refine_pose(
    k: &Intrinsics<f64>,
    points_obj: &[Vector3<f64>],
    points_img: &[Vector2<f64>],
    init: RigidTransform<f64>,
    config: &LmConfig,
) -> Result<(RigidTransform<f64>, LmReport)> {
    let problem = PoseProblem {
        k,
        points: points_obj,
        observed: points_img,
    };
    levenberg_marquardt(&problem, init, config)
}

/// `t_x - x t_z = x (R p)_z - (R p)_x` and likewise for `y`.
fn linear_translation(
    rotation: &RotationMatrix<f64>,
    points_obj: &[Vector3<f64>],
    normalized: &[Vector2<f64>],
) -> Result<Vector3<f64>> {
    let n = points_obj.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, 3);
    let mut b = DVector::<f64>::zeros(2 * n);
    for (i, (p, uv)) in points_obj.iter().zip(normalized).enumerate() {
        let q = rotation * p;
        a[(2 * i, 0)] = 1.0;
        a[(2 * i, 2)] = -uv.x;
        b[2 * i] = uv.x * q.z - q.x;
        a[(2 * i + 1, 1)] = 1.0;
        a[(2 * i + 1, 2)] = -uv.y;
        b[2 * i + 1] = uv.y * q.z - q.y;
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    if !(sv.min() > 1e-12 * sv.max()) {
        return Err(Error::DegenerateConfiguration(
            "translation is not determined by these correspondences".into(),
        ));
    }
    let t = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?;
    Ok(Vector3::new(t[0], t[1], t[2]))
}

/// Derivative of the pixel projection with respect to the camera-frame point.
#[inline]
pub(crate) fn projection_jacobian(k: &Intrinsics<f64>, q: &Vector3<f64>) -> Matrix2x3<f64> {
    let iz = 1.0 / q.z;
    Matrix2x3::new(
        k.fx * iz,
        0.0,
        -k.fx * q.x * iz * iz,
        0.0,
        k.fy * iz,
        -k.fy * q.y * iz * iz,
    )
}

fn check_depth(q: &Vector3<f64>, index: usize) -> Result<()> {
    if q.z > MIN_DEPTH {
        Ok(())
    } else {
        Err(Error::BehindCamera { indices: vec![index] })
    }
}

struct PoseProblem<'a> {
    k: &'a Intrinsics<f64>,
    points: &'a [Vector3<f64>],
    observed: &'a [Vector2<f64>],
}

impl LeastSquares for PoseProblem<'_> {
    type State = RigidTransform<f64>;

    fn residuals(&self, pose: &Self::State) -> Result<DVector<f64>> {
        let mut r = DVector::zeros(2 * self.points.len());
        for (i, (p, obs)) in self.points.iter().zip(self.observed).enumerate() {
            let q = pose.apply_point(p);
            check_depth(&q, i)?;
            let uv = self.k.project(&q) - obs;
            r[2 * i] = uv.x;
            r[2 * i + 1] = uv.y;
        }
        Ok(r)
    }

    /// Step: `(w, dt)` with `R <- exp(w) R`, `t <- t + dt`.
    fn jacobian(&self, pose: &Self::State) -> Result<DMatrix<f64>> {
        let mut j = DMatrix::zeros(2 * self.points.len(), 6);
        for (i, p) in self.points.iter().enumerate() {
            let rp = pose.rotation * p;
            let q = rp + pose.translation;
            check_depth(&q, i)?;
            let dq = projection_jacobian(self.k, &q);
            let drot = dq * (-rp.cross_matrix());
            j.view_mut((2 * i, 0), (2, 3)).copy_from(&drot);
            j.view_mut((2 * i, 3), (2, 3)).copy_from(&dq);
        }
        Ok(j)
    }

    fn retract(&self, pose: &Self::State, step: &DVector<f64>) -> Self::State {
        let w = Vector3::new(step[0], step[1], step[2]);
        let rotation = Rotation3::new(w) * pose.rotation;
        // Re-orthonormalize to keep drift out of long refinements.
        let rotation = Rotation3::from_matrix_unchecked(orthonormalize(rotation.matrix()));
        RigidTransform::new(rotation, pose.translation + Vector3::new(step[3], step[4], step[5]))
    }
}

fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let e1 = m.column(0).normalize();
    let c2 = m.column(1);
    let e2 = (c2 - e1 * e1.dot(&c2)).normalize();
    Matrix3::from_columns(&[e1, e2, e1.cross(&e2)])
}

struct TranslationProblem<'a> {
    k: &'a Intrinsics<f64>,
    rotated: Vec<Vector3<f64>>,
    observed: &'a [Vector2<f64>],
}

impl LeastSquares for TranslationProblem<'_> {
    type State = Vector3<f64>;

    fn residuals(&self, t: &Vector3<f64>) -> Result<DVector<f64>> {
        let mut r = DVector::zeros(2 * self.rotated.len());
        for (i, (rp, obs)) in self.rotated.iter().zip(self.observed).enumerate() {
            let q = rp + t;
            check_depth(&q, i)?;
            let uv = self.k.project(&q) - obs;
            r[2 * i] = uv.x;
            r[2 * i + 1] = uv.y;
        }
        Ok(r)
    }

    fn jacobian(&self, t: &Vector3<f64>) -> Result<DMatrix<f64>> {
        let mut j = DMatrix::zeros(2 * self.rotated.len(), 3);
        for (i, rp) in self.rotated.iter().enumerate() {
            let q = rp + t;
            check_depth(&q, i)?;
            j.view_mut((2 * i, 0), (2, 3))
                .copy_from(&projection_jacobian(self.k, &q));
        }
        Ok(j)
    }

    fn retract(&self, t: &Vector3<f64>, step: &DVector<f64>) -> Vector3<f64> {
        t + Vector3::new(step[0], step[1], step[2])
    }
}
