//! Cubic B-spline free-form deformation driven by the eight corner offsets
//! of an object's tight bounding box.
//!
//! A vertex is mapped to normalized box coordinates `(u, v, w)`, the eight
//! corner offsets are replicated onto a clamped 4x4x4 control grid, and the
//! displacement is the tensor-product sum of the uniform cubic B-spline
//! basis over that grid.
//!
//! Because the grid replicates each corner over a 2x2x2 block, the 64-term
//! sum collapses to eight effective weights per vertex (see
//! [`corner_weights`]); the deformation is linear in the offsets.

mod basis;
mod deform;
mod offsets;

pub use basis::{bspline_weights, collapsed_weights};
pub use deform::{
    corner_weights, deform_mesh, deform_points, displacement_at, extend_grid, ExtendedGrid, LatticeEmbedding,
};
pub(crate) use offsets::sample_offsets_with;
pub use offsets::{sample_random_offsets, CornerOffsets, LatticeBox, NormalizedCoord};
