use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Depth below which a point counts as behind the camera.
pub(crate) const MIN_DEPTH: f64 = 1e-9;

/// Ideal pinhole intrinsics in pixels; no distortion, `fx` and `fy` independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsics<T: Scalar> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: T,
    pub height: T,
}

impl<T: Scalar> Intrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: T, height: T) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let ok =
            self.fx > z && self.fy > z && self.cx > z && self.cx < self.width && self.cy > z && self.cy < self.height;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidValue(format!(
                "intrinsics need fx, fy > 0, 0 < cx < width, 0 < cy < height; got {self:?}"
            )))
        }
    }

    /// `u = fx x / z + cx`, `v = fy y / z + cy`. Caller guarantees `z > 0`.
    #[inline]
    pub fn project(&self, p: &Vector3<T>) -> Vector2<T> {
        Vector2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Pixel to normalized image-plane coordinates.
    #[inline]
    pub fn normalize(&self, uv: &Vector2<T>) -> Vector2<T> {
        Vector2::new((uv.x - self.cx) / self.fx, (uv.y - self.cy) / self.fy)
    }

    /// Inside `[0, width] x [0, height]`.
    pub fn contains(&self, uv: &Vector2<T>) -> bool {
        uv.x >= T::zero() && uv.x <= self.width && uv.y >= T::zero() && uv.y <= self.height
    }
}

/// Projects camera-frame points; every point needs `z > 1e-9`.
pub fn project_points<T: Scalar>(k: &Intrinsics<T>, points_cam: &[Vector3<T>]) -> Result<Vec<Vector2<T>>> {
    let min_depth = T::lit(MIN_DEPTH);
    let behind: Vec<usize> = points_cam
        .iter()
        .enumerate()
        .filter(|(_, p)| !(p.z > min_depth))
        .map(|(i, _)| i)
        .collect();
    if !behind.is_empty() {
        return Err(Error::BehindCamera { indices: behind });
    }
    Ok(points_cam.iter().map(|p| k.project(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> Intrinsics<f64> {
        Intrinsics::new(500.0, 500.0, 320.0, 240.0, 640.0, 480.0).unwrap()
    }

    #[test]
    fn projection_examples() {
        let uv = project_points(&k(), &[Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 1.0)]).unwrap();
        assert_eq!(uv[0], Vector2::new(320.0, 240.0));
        assert_eq!(uv[1], Vector2::new(820.0, 240.0));
    }

    #[test]
    fn behind_camera_lists_indices() {
        let pts = [
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.0, 0.0, -1.0),
            Vector3::new(0.0, 0.0, 0.0),
        ];
        match project_points(&k(), &pts) {
            Err(Error::BehindCamera { indices }) => assert_eq!(indices, vec![1, 2]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_intrinsics() {
        assert!(Intrinsics::new(0.0, 500.0, 320.0, 240.0, 640.0, 480.0).is_err());
        assert!(Intrinsics::new(500.0, 500.0, 700.0, 240.0, 640.0, 480.0).is_err());
    }

    #[test]
    fn json_schema() {
        let k: Intrinsics<f64> =
            serde_json::from_str(r#"{"fx": 600, "fy": 610.5, "cx": 320, "cy": 240, "width": 640, "height": 480}"#)
                .unwrap();
        assert_eq!(k.fy, 610.5);
        assert!(serde_json::from_str::<Intrinsics<f64>>(r#"{"fx": 1}"#).is_err());
    }
}
