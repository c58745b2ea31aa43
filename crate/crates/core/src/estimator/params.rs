use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::matrix_to_rot6d;
use crate::serde_fmt::{offsets24, vec3};
use crate::{CornerOffsets, Error, Result, RigidTransform, Rot6D, RotationMatrix};

/// Number of scalars in [`FitParams`]: 6 rotation, 3 translation, 24 offsets.
pub const PARAM_COUNT: usize = 33;

/// Pose and deformation being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParams {
    #[serde(with = "rot6d_flat")]
    pub r6d: Rot6D<f64>,
    #[serde(with = "vec3")]
    pub translation: Vector3<f64>,
    #[serde(with = "offsets24")]
    pub delta: CornerOffsets<f64>,
}

impl FitParams {
    pub fn new(rotation: &RotationMatrix<f64>, translation: Vector3<f64>, delta: CornerOffsets<f64>) -> Self {
        Self {
            r6d: matrix_to_rot6d(rotation),
            translation,
            delta,
        }
    }

    pub fn rotation(&self) -> Result<RotationMatrix<f64>> {
        self.r6d.to_matrix()
    }

    pub fn pose(&self) -> Result<RigidTransform<f64>> {
        Ok(RigidTransform::new(self.rotation()?, self.translation))
    }

    /// `[a1, a2, t, delta]`.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            PARAM_COUNT,
            self.r6d
                .to_array()
                .into_iter()
                .chain(self.translation.iter().copied())
                .chain(self.delta.to_flat()),
        )
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != PARAM_COUNT {
            return Err(Error::LengthMismatch {
                left: v.len(),
                right: PARAM_COUNT,
            });
        }
        Ok(Self {
            r6d: Rot6D::from_slice(&v[..6])?,
            translation: Vector3::new(v[6], v[7], v[8]),
            delta: CornerOffsets::from_flat(&v[9..])?,
        })
    }
}

mod rot6d_flat {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::Rot6D;

    pub fn serialize<S: Serializer>(r: &Rot6D<f64>, s: S) -> Result<S::Ok, S::Error> {
        r.to_array().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rot6D<f64>, D::Error> {
        let v = <[f64; 6]>::deserialize(d)?;
        Rot6D::from_slice(&v).map_err(D::Error::custom)
    }
}

/// Weights of the rotation, deformation and projection terms of the training loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_r: f64,
    pub lambda_d: f64,
    pub lambda_p: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_r: 1.0,
            lambda_d: 1.0,
            lambda_p: 1.0,
        }
    }
}

impl LossWeights {
    pub fn new(lambda_r: f64, lambda_d: f64, lambda_p: f64) -> Result<Self> {
        let w = Self {
            lambda_r,
            lambda_d,
            lambda_p,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_r, self.lambda_d, self.lambda_p];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidValue(
                "loss weights must be finite and non-negative".into(),
            ));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidValue("loss weights must not all be zero".into()));
        }
        Ok(())
    }
}
