use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Crop-and-resize bookkeeping: `crop = (full - (x_min, y_min)) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropTransform<T: Scalar> {
    pub x_min: T,
    pub y_min: T,
    pub scale: T,
}

impl<T: Scalar> CropTransform<T> {
    pub fn new(x_min: T, y_min: T, scale: T) -> Result<Self> {
        if !(scale > T::zero()) {
            return Err(Error::InvalidValue(format!(
                "crop scale must be positive, got {}",
                scale.as_f64()
            )));
        }
        Ok(Self { x_min, y_min, scale })
    }

    pub fn identity() -> Self {
        Self {
            x_min: T::zero(),
            y_min: T::zero(),
            scale: T::one(),
        }
    }

    /// Square crop around a pixel box, padded by `margin` (fraction of the
    /// longer side) and resized to `output_size` pixels.
    pub fn around_box(lo: &Vector2<T>, hi: &Vector2<T>, margin: T, output_size: T) -> Result<Self> {
        let side = (hi.x - lo.x).max(hi.y - lo.y) * (T::one() + margin + margin);
        if !(side > T::zero()) {
            return Err(Error::InvalidValue("crop box has zero size".into()));
        }
        let half = side * T::lit(0.5);
        let cx = (lo.x + hi.x) * T::lit(0.5);
        let cy = (lo.y + hi.y) * T::lit(0.5);
        Self::new(cx - half, cy - half, output_size / side)
    }

    #[inline]
    pub fn to_crop(&self, p: &Vector2<T>) -> Vector2<T> {
        Vector2::new((p.x - self.x_min) * self.scale, (p.y - self.y_min) * self.scale)
    }

    #[inline]
    pub fn to_full(&self, p: &Vector2<T>) -> Vector2<T> {
        Vector2::new(p.x / self.scale + self.x_min, p.y / self.scale + self.y_min)
    }
}

pub fn full_to_crop<T: Scalar>(c: &CropTransform<T>, pts: &[Vector2<T>]) -> Vec<Vector2<T>> {
    pts.iter().map(|p| c.to_crop(p)).collect()
}

pub fn crop_to_full<T: Scalar>(c: &CropTransform<T>, pts: &[Vector2<T>]) -> Vec<Vector2<T>> {
    pts.iter().map(|p| c.to_full(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn crop_examples() {
        let c = CropTransform::new(300.0, 200.0, 2.0).unwrap();
        assert_eq!(
            full_to_crop(&c, &[Vector2::new(320.0, 240.0)]),
            vec![Vector2::new(40.0, 80.0)]
        );
        assert_eq!(
            crop_to_full(&c, &[Vector2::new(40.0, 80.0)]),
            vec![Vector2::new(320.0, 240.0)]
        );
        let p = vec![Vector2::new(12.5, -3.0)];
        assert_eq!(full_to_crop(&CropTransform::identity(), &p), p);
        assert!(CropTransform::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn box_crop_has_margin() {
        let c = CropTransform::around_box(
            &Vector2::<f64>::new(100.0, 100.0),
            &Vector2::new(200.0, 150.0),
            0.1,
            224.0,
        )
        .unwrap();
        let lo = c.to_crop(&Vector2::new(100.0, 100.0));
        let hi = c.to_crop(&Vector2::new(200.0, 150.0));
        assert!((lo.x - 224.0 * 0.1 / 1.2).abs() < 1e-9);
        assert!((hi.x - 224.0 * 1.1 / 1.2).abs() < 1e-9);
        assert!(lo.y > 0.0 && hi.y < 224.0);
    }

    proptest! {
        #[test]
        fn round_trip(x in -1e3f64..1e3, y in -1e3f64..1e3, s in 0.05f64..20.0,
                      u in -2e3f64..2e3, v in -2e3f64..2e3) {
            let c = CropTransform::new(x, y, s).unwrap();
            let p = Vector2::new(u, v);
            let back = c.to_full(&c.to_crop(&p));
            prop_assert!((back - p).amax() <= 1e-12 * (1.0 + p.amax()));
        }
    }
}
