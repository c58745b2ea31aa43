//! Geometry toolkit for deformable category-level 6D pose.
//!
//! The crate covers the full generate, project, recover and score loop:
//!
//! * [`lattice`]: cubic B-spline free-form deformation from eight box-corner offsets.
//! * [`alignment`]: Umeyama similarity estimation, deformation canonicalization and ICP.
//! * [`camera`]: pinhole projection, crop bookkeeping and PnP (EPnP + Levenberg-Marquardt).
//! * [`datagen`]: deterministic synthetic annotations `{R, t, delta}` with projected keypoints.
//! * [`estimator`]: the training objective and a least-squares recovery of pose and deformation.
//! * [`evaluation`]: Chamfer, rotation, translation and deformation errors.
//!
//! Geometric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which everything with a file
//! format or a tight tolerance uses.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod camera;
pub mod datagen;
mod error;
pub mod estimator;
pub mod evaluation;
pub mod geometry;
pub mod jsonl;
pub mod lattice;
pub mod optim;
pub mod pipeline;
mod scalar;
mod serde_fmt;
pub mod shapes;

pub use error::{Error, Result};
pub use geometry::{RigidTransform, Rot6D, RotationMatrix, TriMesh};
pub use lattice::{CornerOffsets, LatticeBox, NormalizedCoord};
pub use scalar::Scalar;

/// Version of the toolkit.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Rotation = RotationMatrix<f64>;
pub type Rot6 = Rot6D<f64>;
pub type Transform = RigidTransform<f64>;
pub type Mesh = TriMesh<f64>;
pub type Offsets = CornerOffsets<f64>;
pub type Lattice = LatticeBox<f64>;
pub type Intrinsics = camera::Intrinsics<f64>;
pub type Crop = camera::CropTransform<f64>;
