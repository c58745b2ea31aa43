use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::{Error, Result, RigidTransform, RotationMatrix, Scalar};

/// Least-squares similarity `dst ~ s R src + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmeyamaResult<T: Scalar> {
    pub scale: T,
    pub rotation: RotationMatrix<T>,
    pub translation: Vector3<T>,
    pub rms_residual: T,
}

impl<T: Scalar> UmeyamaResult<T> {
    /// Rigid part, ignoring scale.
    pub fn rigid(&self) -> RigidTransform<T> {
        RigidTransform::new(self.rotation, self.translation)
    }

    pub fn apply_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p * self.scale + self.translation
    }
}

const RANK_TOL: f64 = 1e-12;

/// Umeyama's closed-form similarity between corresponded point sets, with
/// the reflection fix so `det(R) = +1`. With `fix_scale`, `s = 1` exactly
/// and `(R, t)` is optimal under that constraint.
pub fn umeyama<T: Scalar>(src: &[Vector3<T>], dst: &[Vector3<T>], fix_scale: bool) -> Result<UmeyamaResult<T>> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch {
            left: src.len(),
            right: dst.len(),
        });
    }
    let n = src.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: n });
    }
    let inv_n = T::one() / T::lit(n as f64);
    let mu_s = src.iter().fold(Vector3::zeros(), |a, p| a + p) * inv_n;
    let mu_d = dst.iter().fold(Vector3::zeros(), |a, p| a + p) * inv_n;

    let mut cov = Matrix3::zeros();
    let mut var_s = T::zero();
    let mut src_scatter = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        let sc = s - mu_s;
        let dc = d - mu_d;
        cov += dc * sc.transpose();
        src_scatter += sc * sc.transpose();
        var_s += sc.norm_squared();
    }
    cov *= inv_n;
    var_s *= inv_n;

    let scatter_sv = src_scatter.singular_values();
    let (smax, smid) = top_two(&scatter_sv);
    if !(smax > T::zero()) || smid <= T::lit(RANK_TOL) * smax {
        return Err(Error::DegenerateConfiguration(
            "source points are collinear or coincident".into(),
        ));
    }

    let svd = cov.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(Error::DegenerateConfiguration(
                "SVD of the cross-covariance failed".into(),
            ))
        }
    };
    let (cmax, cmid) = top_two(&svd.singular_values);
    if !(cmax > T::zero()) || cmid <= T::lit(RANK_TOL) * cmax {
        return Err(Error::DegenerateConfiguration(
            "cross-covariance has rank below two".into(),
        ));
    }

    let mut sign = Vector3::from_element(T::one());
    if u.determinant() * v_t.determinant() < T::zero() {
        // Flip the axis paired with the smallest singular value.
        let smallest = (0..3)
            .min_by(|&a, &b| {
                svd.singular_values[a]
                    .partial_cmp(&svd.singular_values[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(2);
        sign[smallest] = -T::one();
    }
    let r = u * Matrix3::from_diagonal(&sign) * v_t;
    let scale = if fix_scale {
        T::one()
    } else {
        svd.singular_values.component_mul(&sign).sum() / var_s
    };
    let rotation = Rotation3::from_matrix_unchecked(r);
    let translation = mu_d - rotation * mu_s * scale;

    let sq: T = src
        .iter()
        .zip(dst)
        .map(|(s, d)| (rotation * s * scale + translation - d).norm_squared())
        .fold(T::zero(), |a, b| a + b);
    Ok(UmeyamaResult {
        scale,
        rotation,
        translation,
        rms_residual: (sq * inv_n).sqrt(),
    })
}

fn top_two<T: Scalar>(v: &Vector3<T>) -> (T, T) {
    let mut s = [v[0], v[1], v[2]];
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    (s[0], s[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(seed: u64, n: usize) -> Vec<Vector3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-50.0..50.0),
                    rng.random_range(-30.0..30.0),
                    rng.random_range(-20.0..20.0),
                )
            })
            .collect()
    }

    #[test]
    fn identity_and_translation() {
        let src = cloud(1, 20);
        let r = umeyama(&src, &src, true).unwrap();
        assert_eq!(r.scale, 1.0);
        assert!((r.rotation.matrix() - Matrix3::identity()).amax() < 1e-12);
        assert!(r.translation.amax() < 1e-12);
        assert!(r.rms_residual < 1e-12);

        let shift = Vector3::new(1.0, 2.0, 3.0);
        let dst: Vec<_> = src.iter().map(|p| p + shift).collect();
        let r = umeyama(&src, &dst, true).unwrap();
        assert!((r.translation - shift).amax() < 1e-12);
        assert!(r.rms_residual < 1e-12);
    }

    #[test]
    fn recovers_quarter_turn() {
        let src = cloud(2, 50);
        let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
        let dst: Vec<_> = src.iter().map(|p| rz * p).collect();
        let r = umeyama(&src, &dst, true).unwrap();
        assert!((r.rotation.matrix() - rz.matrix()).amax() < 1e-9);
        assert!(r.translation.amax() < 1e-9);
    }

    #[test]
    fn estimates_scale_when_free() {
        let src = cloud(3, 30);
        let rot = Rotation3::from_euler_angles(0.1, 0.7, -0.4);
        let dst: Vec<_> = src
            .iter()
            .map(|p| rot * p * 2.5 + Vector3::new(3.0, -1.0, 0.5))
            .collect();
        let r = umeyama(&src, &dst, false).unwrap();
        assert!((r.scale - 2.5).abs() < 1e-12);
        let fixed = umeyama(&src, &dst, true).unwrap();
        assert_eq!(fixed.scale, 1.0);
        assert!((fixed.rotation.matrix() - rot.matrix()).amax() < 1e-9);
    }

    #[test]
    fn reflection_is_not_returned() {
        let src = cloud(4, 30);
        let dst: Vec<_> = src.iter().map(|p| Vector3::new(p.x, p.y, -p.z)).collect();
        let r = umeyama(&src, &dst, true).unwrap();
        assert!((r.rotation.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let src = cloud(5, 10);
        assert!(matches!(
            umeyama(&src, &src[..9], true),
            Err(Error::LengthMismatch { .. })
        ));
        let line: Vec<_> = (0..10).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            umeyama(&line, &line, true),
            Err(Error::DegenerateConfiguration(_))
        ));
        assert!(umeyama(&src[..2], &src[..2], true).is_err());
    }
}
