use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::{Error, Result, Scalar};

/// Explicit 3x3 rotation matrix. Rotations are stored this way everywhere;
/// [`Rot6D`] only appears at the estimator and serialization boundaries.
pub type RotationMatrix<T> = Rotation3<T>;

const DEGENERATE_NORM: f64 = 1e-12;
const ORTHONORMAL_TOL: f64 = 1e-9;

/// Continuous 6D rotation encoding: two unconstrained 3-vectors that
/// Gram-Schmidt maps onto the first two columns of a rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot6D<T: Scalar> {
    pub a1: Vector3<T>,
    pub a2: Vector3<T>,
}

impl<T: Scalar> Rot6D<T> {
    pub fn new(a1: Vector3<T>, a2: Vector3<T>) -> Self {
        Self { a1, a2 }
    }

    /// `[a1.x, a1.y, a1.z, a2.x, a2.y, a2.z]`
    pub fn to_array(&self) -> [T; 6] {
        [self.a1.x, self.a1.y, self.a1.z, self.a2.x, self.a2.y, self.a2.z]
    }

    pub fn from_slice(v: &[T]) -> Result<Self> {
        if v.len() != 6 {
            return Err(Error::InvalidValue(format!(
                "6D rotation needs 6 values, got {}",
                v.len()
            )));
        }
        Ok(Self::new(
            Vector3::new(v[0], v[1], v[2]),
            Vector3::new(v[3], v[4], v[5]),
        ))
    }

    pub fn to_matrix(&self) -> Result<RotationMatrix<T>> {
        rot6d_to_matrix(self)
    }
}

/// Gram-Schmidt orthonormalization of a 6D encoding into a rotation matrix.
///
/// `e1 = a1/|a1|`, `e2 = normalize(a2 - (e1.a2) e1)`, `e3 = e1 x e2`.
pub fn rot6d_to_matrix<T: Scalar>(r: &Rot6D<T>) -> Result<RotationMatrix<T>> {
    let tiny = T::lit(DEGENERATE_NORM);
    let n1 = r.a1.norm();
    if !(n1 >= tiny) {
        return Err(Error::DegenerateInput(format!("6D rotation: |a1| = {:e}", n1.as_f64())));
    }
    let e1 = r.a1 / n1;
    let b2 = r.a2 - e1 * e1.dot(&r.a2);
    let n2 = b2.norm();
    if !(n2 >= tiny) {
        return Err(Error::DegenerateInput(format!(
            "6D rotation: a2 parallel to a1 (residual {:e})",
            n2.as_f64()
        )));
    }
    let e2 = b2 / n2;
    let e3 = e1.cross(&e2);
    Ok(Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[e1, e2, e3])))
}

/// First two columns of `m`.
pub fn matrix_to_rot6d<T: Scalar>(m: &RotationMatrix<T>) -> Rot6D<T> {
    let m = m.matrix();
    Rot6D::new(m.column(0).into_owned(), m.column(1).into_owned())
}

/// Geodesic angle between two rotations in degrees,
/// `acos((trace(a^T b) - 1) / 2)` with the argument clamped to `[-1, 1]`.
pub fn rotation_geodesic_deg<T: Scalar>(a: &RotationMatrix<T>, b: &RotationMatrix<T>) -> T {
    let rel = a.matrix().transpose() * b.matrix();
    let c = (rel.trace() - T::one()) * T::lit(0.5);
    let c = c.clamp(-T::one(), T::one());
    c.acos() * T::lit(180.0) / T::pi()
}

/// Rotation vector (axis times angle, radians) of `r`.
///
/// Uses `atan2` on the skew-symmetric part, which stays accurate for angles
/// near zero where `acos` of the trace loses half the significant digits.
pub fn rotation_log<T: Scalar>(r: &RotationMatrix<T>) -> Vector3<T> {
    let m = r.matrix();
    let half = T::lit(0.5);
    let s = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * half;
    let sin = s.norm();
    let cos = (m.trace() - T::one()) * half;
    let angle = sin.atan2(cos);
    if sin > T::lit(1e-6) || cos > T::zero() {
        if sin == T::zero() {
            return Vector3::zeros();
        }
        // angle / sin -> 1 as the angle -> 0.
        let ratio = if angle < T::lit(1e-4) {
            T::one() + angle * angle / T::lit(6.0)
        } else {
            angle / sin
        };
        s * ratio
    } else {
        // Near pi the skew part vanishes; R + I ~ 2 a a^T gives the axis.
        let sym = m + Matrix3::identity();
        let col = (0..3)
            .max_by(|&a, &b| {
                sym[(a, a)]
                    .partial_cmp(&sym[(b, b)])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let mut axis = sym.column(col).into_owned();
        let n = axis.norm();
        if n == T::zero() {
            return Vector3::zeros();
        }
        axis /= n;
        if axis.dot(&s) < T::zero() {
            axis = -axis;
        }
        axis * angle
    }
}

/// Validates a raw matrix as a rotation (orthonormal, det = +1 within 1e-9).
pub fn rotation_from_matrix<T: Scalar>(m: Matrix3<T>) -> Result<RotationMatrix<T>> {
    let tol = T::lit(ORTHONORMAL_TOL);
    let gram = m.transpose() * m - Matrix3::identity();
    let worst = gram.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if !(worst < tol) {
        return Err(Error::InvalidValue(format!(
            "matrix is not orthonormal (max |M^T M - I| = {:e})",
            worst.as_f64()
        )));
    }
    let det = m.determinant();
    if !((det - T::one()).abs() < tol) {
        return Err(Error::InvalidValue(format!(
            "rotation determinant is {} (expected +1)",
            det.as_f64()
        )));
    }
    Ok(Rotation3::from_matrix_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    fn max_abs(m: Matrix3<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn canonical_axes_map_to_identity() {
        for (a1, a2) in [
            (v(1., 0., 0.), v(0., 1., 0.)),
            (v(2., 0., 0.), v(0., 3., 0.)),
            (v(1., 0., 0.), v(1., 1., 0.)),
        ] {
            let r = rot6d_to_matrix(&Rot6D::new(a1, a2)).unwrap();
            assert!(max_abs(r.matrix() - Matrix3::identity()) < 1e-15);
        }
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(matches!(
            rot6d_to_matrix(&Rot6D::new(v(0., 0., 0.), v(0., 1., 0.))),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            rot6d_to_matrix(&Rot6D::new(v(1., 2., 3.), v(2., 4., 6.))),
            Err(Error::DegenerateInput(_))
        ));
        assert!(rot6d_to_matrix(&Rot6D::new(v(f64::NAN, 0., 0.), v(0., 1., 0.))).is_err());
    }

    #[test]
    fn column_extraction() {
        let id = Rotation3::<f64>::identity();
        let r6 = matrix_to_rot6d(&id);
        assert_eq!(r6.a1, v(1., 0., 0.));
        assert_eq!(r6.a2, v(0., 1., 0.));

        let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        let r6 = matrix_to_rot6d(&rz);
        assert!((r6.a1 - v(0., 1., 0.)).amax() < 1e-15);
        assert!((r6.a2 - v(-1., 0., 0.)).amax() < 1e-15);
    }

    #[test]
    fn geodesic_known_angles() {
        let id = Rotation3::<f64>::identity();
        let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        assert_eq!(rotation_geodesic_deg(&id, &id), 0.0);
        assert!((rotation_geodesic_deg(&id, &rz) - 90.0).abs() < 1e-12);
        let flip = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(v(1., 2., -0.5)), std::f64::consts::PI);
        assert!((rotation_geodesic_deg(&id, &flip) - 180.0).abs() < 1e-6);
    }

    #[test]
    fn log_is_accurate_near_identity_and_pi() {
        for angle in [0.0, 1e-12, 3e-9, 1e-5, 0.3, 2.0, std::f64::consts::PI - 1e-9] {
            let axis = nalgebra::Unit::new_normalize(v(0.2, -0.9, 0.4));
            let r = Rotation3::from_axis_angle(&axis, angle);
            let w = rotation_log(&r);
            assert!(
                (w - axis.into_inner() * angle).amax() < 1e-9 * angle.max(1e-3),
                "{angle}: {w:?}"
            );
        }
    }

    #[test]
    fn rejects_non_rotations() {
        assert!(rotation_from_matrix(Matrix3::<f64>::identity() * 2.0).is_err());
        assert!(rotation_from_matrix(Matrix3::<f64>::from_diagonal(&v(1., 1., -1.))).is_err());
        assert!(rotation_from_matrix(Matrix3::<f64>::identity()).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let r = rot6d_to_matrix(&Rot6D::new(
            Vector3::new(1.0f32, 0.2, 0.0),
            Vector3::new(0.0f32, 1.0, 0.3),
        ))
        .unwrap();
        let gram = r.matrix().transpose() * r.matrix() - Matrix3::identity();
        assert!(gram.amax() < 1e-6);
    }
}
