use nalgebra::Vector3;

use super::basis::{bspline_weights, collapsed_weights};
use super::{CornerOffsets, LatticeBox, NormalizedCoord};
use crate::{Result, Scalar, TriMesh};

/// Control values on the clamped 4x4x4 grid, indexed `[m][n][q]`.
pub type ExtendedGrid<T> = [[[Vector3<T>; 4]; 4]; 4];

#[inline]
fn clamp_index(m: usize) -> usize {
    m.saturating_sub(1).min(1)
}

/// Clamped extension: grid cell `(m, n, q)` takes the offset of corner
/// `(clamp(m-1), clamp(n-1), clamp(q-1))`, so each corner fills a 2x2x2 block.
pub fn extend_grid<T: Scalar>(offsets: &CornerOffsets<T>) -> ExtendedGrid<T> {
    std::array::from_fn(|m| {
        std::array::from_fn(|n| std::array::from_fn(|q| *offsets.get(clamp_index(m), clamp_index(n), clamp_index(q))))
    })
}

/// Tensor-product displacement
/// `sum_{i,j,k} W_i(u) W_j(v) W_k(w) C_{ijk}` over the extended grid,
/// evaluated separately for the x, y and z components.
pub fn displacement_at<T: Scalar>(offsets: &CornerOffsets<T>, coord: &NormalizedCoord<T>) -> Vector3<T> {
    let grid = extend_grid(offsets);
    let wu = bspline_weights(coord.u);
    let wv = bspline_weights(coord.v);
    let ww = bspline_weights(coord.w);
    let mut d = Vector3::zeros();
    for axis in 0..3 {
        let mut acc = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    acc += wu[i] * wv[j] * ww[k] * grid[i][j][k][axis];
                }
            }
        }
        d[axis] = acc;
    }
    d
}

/// Effective weight of each of the eight corners at `coord`; the
/// displacement equals `sum_c weights[c] * offsets[c]`. Weights are
/// non-negative and sum to one.
pub fn corner_weights<T: Scalar>(coord: &NormalizedCoord<T>) -> [T; 8] {
    let a = collapsed_weights(coord.u);
    let b = collapsed_weights(coord.v);
    let c = collapsed_weights(coord.w);
    std::array::from_fn(|n| {
        let (i, j, k) = CornerOffsets::<T>::ijk(n);
        a[i] * b[j] * c[k]
    })
}

#[inline]
pub(crate) fn weighted_offset<T: Scalar>(weights: &[T; 8], offsets: &CornerOffsets<T>) -> Vector3<T> {
    weights
        .iter()
        .zip(offsets.corners())
        .fold(Vector3::zeros(), |acc, (w, c)| acc + c * *w)
}

/// Displaces each point by the lattice deformation at its normalized coordinate.
pub fn deform_points<T: Scalar>(
    points: &[Vector3<T>],
    lattice: &LatticeBox<T>,
    offsets: &CornerOffsets<T>,
) -> Vec<Vector3<T>> {
    if offsets.is_zero() {
        return points.to_vec();
    }
    points
        .iter()
        .map(|p| p + weighted_offset(&corner_weights(&lattice.normalize(p)), offsets))
        .collect()
}

/// Points embedded in a lattice with their corner weights precomputed, so
/// repeated deformation with different offsets costs one 8-term sum per point.
#[derive(Debug, Clone)]
pub struct LatticeEmbedding<T: Scalar> {
    points: Vec<Vector3<T>>,
    weights: Vec<[T; 8]>,
}

impl<T: Scalar> LatticeEmbedding<T> {
    pub fn new(points: &[Vector3<T>], lattice: &LatticeBox<T>) -> Self {
        Self {
            points: points.to_vec(),
            weights: points.iter().map(|p| corner_weights(&lattice.normalize(p))).collect(),
        }
    }

    pub fn points(&self) -> &[Vector3<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[[T; 8]] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn deform(&self, offsets: &CornerOffsets<T>) -> Vec<Vector3<T>> {
        if offsets.is_zero() {
            return self.points.clone();
        }
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p + weighted_offset(w, offsets))
            .collect()
    }
}

/// `p' = p + delta(u, v, w)` for every vertex; faces are kept.
pub fn deform_mesh<T: Scalar>(
    mesh: &TriMesh<T>,
    lattice: &LatticeBox<T>,
    offsets: &CornerOffsets<T>,
) -> Result<TriMesh<T>> {
    mesh.with_vertices(deform_points(mesh.vertices(), lattice, offsets))
}
