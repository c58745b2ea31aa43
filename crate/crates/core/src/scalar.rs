//! Scalar abstraction for the geometric kernels.
//!
//! Rotations, lattice deformation, alignment, projection and the Chamfer
//! metric are written against [`Scalar`] so they run in `f32` or `f64`.
//! The estimator, data generation and all file formats are `f64` only.

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Floating point type usable by the geometry kernels: `f32` or `f64`.
pub trait Scalar: RealField + Copy + FromPrimitive + Default {
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion to `f64`, used for bucketing and reporting.
    fn as_f64(self) -> f64 {
        nalgebra::try_convert(self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the underlying representation.
    fn eps() -> Self {
        Self::default_epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
