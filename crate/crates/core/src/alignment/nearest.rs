//! Exact nearest-neighbour queries. Brute force below
//! [`BRUTE_FORCE_LIMIT`] points, a uniform grid above. Ties go to the
//! lowest index in both paths.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::Scalar;

pub const BRUTE_FORCE_LIMIT: usize = 10_000;
const PARALLEL_QUERY_MIN: usize = 2048;

#[derive(Debug, Clone)]
pub struct NearestNeighbors<'a, T: Scalar> {
    points: &'a [Vector3<T>],
    grid: Option<Grid>,
}

#[derive(Debug, Clone)]
struct Grid {
    origin: [f64; 3],
    cell: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl Grid {
    fn build<T: Scalar>(points: &[Vector3<T>]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                let v = p[a].as_f64();
                lo[a] = lo[a].min(v);
                hi[a] = hi[a].max(v);
            }
        }
        let ext: Vec<f64> = (0..3).map(|a| (hi[a] - lo[a]).max(0.0)).collect();
        let largest = ext.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        // Aim for a handful of points per occupied cell, capping the cell count.
        let target_cells = (points.len() as f64 / 4.0).max(1.0);
        let volume: f64 = ext.iter().map(|e| e.max(largest * 1e-3)).product();
        let cell = (volume / target_cells).cbrt().max(largest / 512.0);
        let dims = [0, 1, 2].map(|a| ((ext[a] / cell).floor() as usize + 1).min(512));

        let ncells = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; ncells + 1];
        let keys: Vec<usize> = points
            .iter()
            .map(|p| {
                let c = Self::cell_of(&lo, cell, &dims, p);
                c[0] * dims[1] * dims[2] + c[1] * dims[2] + c[2]
            })
            .collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut members = vec![0usize; points.len()];
        for (idx, &k) in keys.iter().enumerate() {
            members[fill[k]] = idx;
            fill[k] += 1;
        }
        Self {
            origin: lo,
            cell,
            dims,
            starts: counts,
            members,
        }
    }

    fn cell_of<T: Scalar>(origin: &[f64; 3], cell: f64, dims: &[usize; 3], p: &Vector3<T>) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let f = ((p[a].as_f64() - origin[a]) / cell).floor();
            if f.is_nan() || f < 0.0 {
                0
            } else {
                (f as usize).min(dims[a] - 1)
            }
        })
    }

    fn query<T: Scalar>(&self, points: &[Vector3<T>], q: &Vector3<T>) -> (usize, T) {
        let c = Self::cell_of(&self.origin, self.cell, &self.dims, q);
        let max_r = *self.dims.iter().max().unwrap_or(&1);
        let mut best: Option<(T, usize)> = None;
        for r in 0..=max_r {
            let lo = [0, 1, 2].map(|a| c[a].saturating_sub(r));
            let hi = [0, 1, 2].map(|a| (c[a] + r).min(self.dims[a] - 1));
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        let shell = [x.abs_diff(c[0]), y.abs_diff(c[1]), z.abs_diff(c[2])]
                            .into_iter()
                            .max()
                            .unwrap_or(0);
                        if shell != r {
                            continue;
                        }
                        let key = x * self.dims[1] * self.dims[2] + y * self.dims[2] + z;
                        for &idx in &self.members[self.starts[key]..self.starts[key + 1]] {
                            let d = (points[idx] - q).norm_squared();
                            let better = match best {
                                None => true,
                                Some((bd, bi)) => d < bd || (d == bd && idx < bi),
                            };
                            if better {
                                best = Some((d, idx));
                            }
                        }
                    }
                }
            }
            if let Some((bd, _)) = best {
                // Unvisited shells lie at least r whole cells away.
                let reach = r as f64 * self.cell;
                if bd.as_f64() < reach * reach {
                    break;
                }
            }
        }
        let (d, i) = best.expect("grid holds at least one point");
        (i, d)
    }
}

impl<'a, T: Scalar> NearestNeighbors<'a, T> {
    /// Panics if `points` is empty; callers validate non-emptiness first.
    pub fn new(points: &'a [Vector3<T>]) -> Self {
        assert!(!points.is_empty(), "nearest-neighbour index over an empty set");
        let grid = (points.len() > BRUTE_FORCE_LIMIT).then(|| Grid::build(points));
        Self { points, grid }
    }

    pub fn brute_force(points: &'a [Vector3<T>]) -> Self {
        assert!(!points.is_empty(), "nearest-neighbour index over an empty set");
        Self { points, grid: None }
    }

    pub fn with_grid(points: &'a [Vector3<T>]) -> Self {
        assert!(!points.is_empty(), "nearest-neighbour index over an empty set");
        Self {
            points,
            grid: Some(Grid::build(points)),
        }
    }

    pub fn points(&self) -> &'a [Vector3<T>] {
        self.points
    }

    /// Index of the closest point and the squared distance to it.
    pub fn nearest(&self, q: &Vector3<T>) -> (usize, T) {
        match &self.grid {
            Some(g) => g.query(self.points, q),
            None => {
                let mut best = (0usize, (self.points[0] - q).norm_squared());
                for (i, p) in self.points.iter().enumerate().skip(1) {
                    let d = (p - q).norm_squared();
                    if d < best.1 {
                        best = (i, d);
                    }
                }
                best
            }
        }
    }

    /// Nearest neighbour of each query, in query order.
    pub fn nearest_all(&self, queries: &[Vector3<T>]) -> Vec<(usize, T)> {
        if queries.len() >= PARALLEL_QUERY_MIN {
            queries.par_iter().map(|q| self.nearest(q)).collect()
        } else {
            queries.iter().map(|q| self.nearest(q)).collect()
        }
    }
}
