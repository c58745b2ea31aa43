//! Flat-array JSON encodings for nalgebra types.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geometry::rotation_from_matrix;
use crate::{CornerOffsets, RotationMatrix};

pub(crate) mod vec3 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Vector3<f64>, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector3<f64>, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        Ok(Vector3::new(x, y, z))
    }
}

pub(crate) mod points2 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vector2<f64>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|p| [p.x, p.y]))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector2<f64>>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[u, v]| Vector2::new(u, v)).collect())
    }
}

/// Nine floats, row-major.
pub(crate) mod rotation_rows {
    use super::*;

    pub fn serialize<S: Serializer>(r: &RotationMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let m = r.matrix();
        s.collect_seq((0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RotationMatrix<f64>, D::Error> {
        let v = <[f64; 9]>::deserialize(d)?;
        rotation_from_matrix(Matrix3::from_row_slice(&v)).map_err(D::Error::custom)
    }
}

/// Twenty-four floats in corner order.
pub(crate) mod offsets24 {
    use super::*;

    pub fn serialize<S: Serializer>(o: &CornerOffsets<f64>, s: S) -> Result<S::Ok, S::Error> {
        o.to_flat().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CornerOffsets<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        CornerOffsets::from_flat(&v).map_err(D::Error::custom)
    }
}
