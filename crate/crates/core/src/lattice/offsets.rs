use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, Scalar, TriMesh};

/// Axis-aligned lattice box in object coordinates, strictly positive extent
/// on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeBox<T: Scalar> {
    min: Vector3<T>,
    max: Vector3<T>,
}

impl<T: Scalar> LatticeBox<T> {
    pub fn new(min: Vector3<T>, max: Vector3<T>) -> Result<Self> {
        for axis in 0..3 {
            if !(max[axis] > min[axis]) {
                return Err(Error::InvalidValue(format!(
                    "lattice box axis {axis}: max {} must exceed min {}",
                    max[axis].as_f64(),
                    min[axis].as_f64()
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Tight box around every vertex of `mesh`.
    pub fn around(mesh: &TriMesh<T>) -> Result<Self> {
        let (lo, hi) = mesh
            .bounds()
            .ok_or_else(|| Error::InvalidMesh("mesh has no vertices".into()))?;
        Self::new(lo, hi)
    }

    pub fn min(&self) -> &Vector3<T> {
        &self.min
    }

    pub fn max(&self) -> &Vector3<T> {
        &self.max
    }

    pub fn extent(&self) -> Vector3<T> {
        self.max - self.min
    }

    pub fn diagonal(&self) -> T {
        self.extent().norm()
    }

    /// Corner `(i, j, k)` with `0` selecting `min` and `1` selecting `max`.
    pub fn corner(&self, i: usize, j: usize, k: usize) -> Vector3<T> {
        let pick = |bit: usize, axis: usize| {
            if bit == 0 {
                self.min[axis]
            } else {
                self.max[axis]
            }
        };
        Vector3::new(pick(i, 0), pick(j, 1), pick(k, 2))
    }

    /// All eight corners in lexicographic `(i, j, k)` order, `i` slowest.
    pub fn corners(&self) -> [Vector3<T>; 8] {
        std::array::from_fn(|c| {
            let (i, j, k) = CornerOffsets::<T>::ijk(c);
            self.corner(i, j, k)
        })
    }

    /// Fractional position of `p` along each axis, clamped to `[0, 1]`.
    pub fn normalize(&self, p: &Vector3<T>) -> NormalizedCoord<T> {
        let e = self.extent();
        let f = |axis: usize| ((p[axis] - self.min[axis]) / e[axis]).clamp(T::zero(), T::one());
        NormalizedCoord {
            u: f(0),
            v: f(1),
            w: f(2),
        }
    }
}

/// Fractional distance along x, y, z within the lattice box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedCoord<T: Scalar> {
    pub u: T,
    pub v: T,
    pub w: T,
}

impl<T: Scalar> NormalizedCoord<T> {
    pub fn new(u: T, v: T, w: T) -> Self {
        Self { u, v, w }
    }
}

/// The 24-parameter deformation: one 3D offset per box corner, stored in
/// corner-lexicographic order (`i` slowest, then `j`, then `k`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerOffsets<T: Scalar>(pub [Vector3<T>; 8]);

impl<T: Scalar> CornerOffsets<T> {
    pub const LEN: usize = 24;

    pub fn zeros() -> Self {
        Self([Vector3::zeros(); 8])
    }

    pub fn uniform(c: Vector3<T>) -> Self {
        Self([c; 8])
    }

    #[inline]
    pub fn index(i: usize, j: usize, k: usize) -> usize {
        4 * i + 2 * j + k
    }

    #[inline]
    pub fn ijk(index: usize) -> (usize, usize, usize) {
        (index >> 2 & 1, index >> 1 & 1, index & 1)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Vector3<T> {
        &self.0[Self::index(i, j, k)]
    }

    pub fn get_mut(&mut self, i: usize, j: usize, k: usize) -> &mut Vector3<T> {
        &mut self.0[Self::index(i, j, k)]
    }

    pub fn corners(&self) -> &[Vector3<T>; 8] {
        &self.0
    }

    /// Flat 24-vector: corners in lexicographic order, `x, y, z` within each.
    pub fn to_flat(&self) -> [T; 24] {
        std::array::from_fn(|n| self.0[n / 3][n % 3])
    }

    pub fn from_flat(values: &[T]) -> Result<Self> {
        if values.len() != Self::LEN {
            return Err(Error::OffsetCount(values.len()));
        }
        Ok(Self(std::array::from_fn(|c| {
            Vector3::new(values[3 * c], values[3 * c + 1], values[3 * c + 2])
        })))
    }

    /// Largest absolute component over all corners.
    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.iter().all(|v| *v == T::zero()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|c| c * s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(std::array::from_fn(|c| self.0[c] + other.0[c]))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(std::array::from_fn(|c| self.0[c] - other.0[c]))
    }

    pub fn mean(&self) -> Vector3<T> {
        self.0.iter().fold(Vector3::zeros(), |a, c| a + c) / T::lit(8.0)
    }
}

impl<T: Scalar> Default for CornerOffsets<T> {
    fn default() -> Self {
        Self::zeros()
    }
}

/// 24 i.i.d. draws, uniform in `[-bound, bound]`, from a ChaCha8 stream
/// seeded with `seed`. Identical across runs and platforms.
pub fn sample_random_offsets<T: Scalar>(bound: T, seed: u64) -> Result<CornerOffsets<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_offsets_with(bound, &mut rng)
}

pub(crate) fn sample_offsets_with<T: Scalar, R: Rng + ?Sized>(bound: T, rng: &mut R) -> Result<CornerOffsets<T>> {
    let b = bound.as_f64();
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidValue(format!(
            "deformation bound must be positive, got {b}"
        )));
    }
    let flat: Vec<T> = (0..24)
        .map(|_| T::lit(rng.random_range(-b..=b)).clamp(-bound, bound))
        .collect();
    CornerOffsets::from_flat(&flat)
}
