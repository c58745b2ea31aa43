use nalgebra::Vector3;

use crate::{Error, Result, Scalar};

/// Triangle mesh in millimetres. Every face index is below the vertex count.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh<T: Scalar> {
    vertices: Vec<Vector3<T>>,
    faces: Vec<[usize; 3]>,
}

impl<T: Scalar> TriMesh<T> {
    pub fn new(vertices: Vec<Vector3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some((fi, face)) = faces.iter().enumerate().find(|(_, f)| f.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidMesh(format!(
                "face {fi} {face:?} references a vertex beyond {n}"
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        Ok(Self { vertices, faces })
    }

    /// Point cloud without connectivity.
    pub fn from_points(vertices: Vec<Vector3<T>>) -> Result<Self> {
        Self::new(vertices, Vec::new())
    }

    pub fn vertices(&self) -> &[Vector3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Same connectivity with replaced vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vector3<T>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                left: self.vertices.len(),
                right: vertices.len(),
            });
        }
        Ok(Self {
            vertices,
            faces: self.faces.clone(),
        })
    }

    pub fn require_non_empty(&self) -> Result<()> {
        if self.vertices.is_empty() {
            Err(Error::InvalidMesh("mesh has no vertices".into()))
        } else {
            Ok(())
        }
    }

    pub fn centroid(&self) -> Vector3<T> {
        let sum = self.vertices.iter().fold(Vector3::zeros(), |acc, p| acc + p);
        sum / T::lit(self.vertices.len().max(1) as f64)
    }

    /// Component-wise (min, max) over all vertices.
    pub fn bounds(&self) -> Option<(Vector3<T>, Vector3<T>)> {
        let first = *self.vertices.first()?;
        Some(
            self.vertices
                .iter()
                .fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))),
        )
    }
}
