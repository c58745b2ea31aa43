use nalgebra::{Rotation3, Vector3};

use super::RotationMatrix;
use crate::Scalar;

/// Rotation followed by translation: `p -> R p + t` (millimetres).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform<T: Scalar> {
    pub rotation: RotationMatrix<T>,
    pub translation: Vector3<T>,
}

impl<T: Scalar> RigidTransform<T> {
    pub fn new(rotation: RotationMatrix<T>, translation: Vector3<T>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self::new(Rotation3::identity(), translation)
    }

    pub fn from_rotation(rotation: RotationMatrix<T>) -> Self {
        Self::new(rotation, Vector3::zeros())
    }

    #[inline]
    pub fn apply_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p + self.translation
    }

    pub fn apply(&self, points: &[Vector3<T>]) -> Vec<Vector3<T>> {
        points.iter().map(|p| self.apply_point(p)).collect()
    }

    /// `self` after `other`: `p -> self(other(p))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.inverse();
        Self::new(rt, -(rt * self.translation))
    }

    /// Rotation angle of the rotational part in radians.
    pub fn angle(&self) -> T {
        super::rotation_log(&self.rotation).norm()
    }
}

impl<T: Scalar> Default for RigidTransform<T> {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn apply_transform<T: Scalar>(tf: &RigidTransform<T>, points: &[Vector3<T>]) -> Vec<Vector3<T>> {
    tf.apply(points)
}

pub fn compose<T: Scalar>(a: &RigidTransform<T>, b: &RigidTransform<T>) -> RigidTransform<T> {
    a.compose(b)
}
