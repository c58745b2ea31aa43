use nalgebra::{Matrix6, Rotation3, Vector3, Vector6};

use super::umeyama;
use crate::geometry::rotation_log;
use crate::lattice::LatticeEmbedding;
use crate::{CornerOffsets, LatticeBox, Result, RigidTransform, Scalar, TriMesh};

/// Corrections applied after the initial Umeyama estimate.
const MAX_CORRECTIONS: usize = 5;
const ROTATION_TOL: f64 = 1e-12;
const TRANSLATION_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-6;

/// Deformation with its rigid component removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Canonicalized<T: Scalar> {
    pub offsets: CornerOffsets<T>,
    /// Rigid motion absorbed from the original offsets:
    /// `deform(original) ~ removed(deform(offsets))`.
    pub removed: RigidTransform<T>,
    /// Number of correction steps taken (0 when the input was already canonical).
    pub corrections: usize,
    /// Rotation angle (rad) of the Umeyama fit between base and re-deformed mesh.
    pub residual_angle: T,
    /// Translation norm (mm) of that fit.
    pub residual_translation: T,
}

/// Moves each control target through the inverse of `tf`:
/// `R^T (corner + offset - t) - corner`.
pub fn conjugate_offsets<T: Scalar>(
    lattice: &LatticeBox<T>,
    offsets: &CornerOffsets<T>,
    tf: &RigidTransform<T>,
) -> CornerOffsets<T> {
    let inv = tf.rotation.inverse();
    let corners = lattice.corners();
    CornerOffsets(std::array::from_fn(|c| {
        inv * (corners[c] + offsets.0[c] - tf.translation) - corners[c]
    }))
}

struct Problem<'a, T: Scalar> {
    embedding: LatticeEmbedding<T>,
    lattice: &'a LatticeBox<T>,
    offsets: &'a CornerOffsets<T>,
}

impl<T: Scalar> Problem<'_, T> {
    /// Rigid motion (as rotation vector and translation) that Umeyama finds
    /// between the base points and the points deformed by `candidate`.
    fn residual(&self, candidate: &CornerOffsets<T>) -> Result<(Vector6<T>, RigidTransform<T>)> {
        let deformed = self.embedding.deform(candidate);
        let fit = umeyama(self.embedding.points(), &deformed, true)?;
        let w = rotation_log(&fit.rotation);
        let t = fit.translation;
        Ok((Vector6::new(w.x, w.y, w.z, t.x, t.y, t.z), fit.rigid()))
    }

    fn candidate(&self, removed: &RigidTransform<T>) -> CornerOffsets<T> {
        conjugate_offsets(self.lattice, self.offsets, removed)
    }

    fn residual_at(&self, removed: &RigidTransform<T>) -> Result<Vector6<T>> {
        Ok(self.residual(&self.candidate(removed))?.0)
    }
}

fn twist<T: Scalar>(x: &Vector6<T>) -> RigidTransform<T> {
    RigidTransform::new(
        Rotation3::new(Vector3::new(x[0], x[1], x[2])),
        Vector3::new(x[3], x[4], x[5]),
    )
}

fn converged<T: Scalar>(r: &Vector6<T>) -> bool {
    let rot = Vector3::new(r[0], r[1], r[2]).norm();
    let trans = Vector3::new(r[3], r[4], r[5]).norm();
    rot < T::lit(ROTATION_TOL) && trans < T::lit(TRANSLATION_TOL)
}

/// Removes the rigid motion that a lattice perturbation introduces.
///
/// Umeyama (fixed scale) between the base vertices and the deformed
/// vertices gives `(R, t)`; the corner offsets are then conjugated,
/// `R^T (corner + offset - t) - corner`. The lattice cannot represent a
/// rotation exactly, so the conjugating transform is refined by Newton
/// steps on the residual Umeyama motion (finite-difference Jacobian), at
/// most five corrections in total. The best candidate seen is returned.
pub fn canonicalize_deformation<T: Scalar>(
    mesh: &TriMesh<T>,
    lattice: &LatticeBox<T>,
    offsets: &CornerOffsets<T>,
) -> Result<Canonicalized<T>> {
    mesh.require_non_empty()?;
    let problem = Problem {
        embedding: LatticeEmbedding::new(mesh.vertices(), lattice),
        lattice,
        offsets,
    };

    let (r0, first) = problem.residual(offsets)?;
    let mut best = Canonicalized {
        offsets: *offsets,
        removed: RigidTransform::identity(),
        corrections: 0,
        residual_angle: Vector3::new(r0[0], r0[1], r0[2]).norm(),
        residual_translation: Vector3::new(r0[3], r0[4], r0[5]).norm(),
    };
    if converged(&r0) {
        return Ok(best);
    }
    let mut best_norm = r0.norm();

    // Literal correction by the initial estimate, then Newton refinement.
    let mut removed = first;
    for step in 1..=MAX_CORRECTIONS {
        let candidate = problem.candidate(&removed);
        let (r, _) = problem.residual(&candidate)?;
        let norm = r.norm();
        if norm < best_norm {
            best_norm = norm;
            best = Canonicalized {
                offsets: candidate,
                removed,
                corrections: step,
                residual_angle: Vector3::new(r[0], r[1], r[2]).norm(),
                residual_translation: Vector3::new(r[3], r[4], r[5]).norm(),
            };
        }
        if converged(&r) || step == MAX_CORRECTIONS {
            break;
        }

        let h = T::lit(FD_STEP);
        let mut jac = Matrix6::zeros();
        for col in 0..6 {
            let mut e = Vector6::zeros();
            e[col] = h;
            let plus = problem.residual_at(&removed.compose(&twist(&e)))?;
            let minus = problem.residual_at(&removed.compose(&twist(&(-e))))?;
            jac.set_column(col, &((plus - minus) / (h + h)));
        }
        let delta = match jac.lu().solve(&(-r)) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            // Fall back to the literal correction by the residual motion.
            _ => {
                let (_, fit) = problem.residual(&candidate)?;
                removed = removed.compose(&fit);
                continue;
            }
        };
        removed = removed.compose(&twist(&delta));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{deform_mesh, sample_random_offsets};
    use crate::shapes;

    fn banana() -> (TriMesh<f64>, LatticeBox<f64>) {
        let m = shapes::banana(24, 12);
        let b = LatticeBox::around(&m).unwrap();
        (m, b)
    }

    #[test]
    fn zero_offsets_are_already_canonical() {
        let (m, b) = banana();
        let c = canonicalize_deformation(&m, &b, &CornerOffsets::zeros()).unwrap();
        assert_eq!(c.offsets, CornerOffsets::zeros());
        assert_eq!(c.removed, RigidTransform::identity());
        assert_eq!(c.corrections, 0);
    }

    #[test]
    fn uniform_offsets_become_translation() {
        let (m, b) = banana();
        let shift = Vector3::new(2.0, -1.0, 0.5);
        let c = canonicalize_deformation(&m, &b, &CornerOffsets::uniform(shift)).unwrap();
        assert!(c.offsets.max_abs() < 1e-9, "{:?}", c.offsets);
        assert!((c.removed.translation - shift).amax() < 1e-9);
        assert!(c.removed.angle() < 1e-9);
    }

    #[test]
    fn random_offsets_lose_rigid_component() {
        let (m, b) = banana();
        let bound = 0.05 * b.diagonal();
        for seed in 0..10 {
            let off = sample_random_offsets(bound, seed).unwrap();
            let c = canonicalize_deformation(&m, &b, &off).unwrap();
            let re = deform_mesh(&m, &b, &c.offsets).unwrap();
            let fit = umeyama(m.vertices(), re.vertices(), true).unwrap();
            assert!(fit.rigid().angle() < 1e-6, "seed {seed}: {}", fit.rigid().angle());
            assert!(fit.translation.norm() < 1e-6);

            let again = canonicalize_deformation(&m, &b, &c.offsets).unwrap();
            assert!(again.offsets.sub(&c.offsets).max_abs() < 1e-9);
        }
    }
}
