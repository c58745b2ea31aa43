//! Rotations, rigid transforms and triangle meshes shared by every other module.

mod mesh;
pub mod obj;
mod rotation;
mod transform;

pub use mesh::TriMesh;
pub use rotation::{
    matrix_to_rot6d, rot6d_to_matrix, rotation_from_matrix, rotation_geodesic_deg, rotation_log, Rot6D, RotationMatrix,
};
pub use transform::{apply_transform, compose, RigidTransform};
