//! EPnP: closed-form camera pose from n >= 4 non-coplanar correspondences.
//!
//! Object points are written as barycentric combinations of four control
//! points; their camera-frame positions lie in the null space of a 2n x 12
//! system. The null-space coefficients are recovered for 1, 2 and 3 kernel
//! vectors from the control-point distance constraints, refined by
//! Gauss-Newton, and the candidate with the lowest reprojection error wins.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector, SymmetricEigen, Vector2, Vector3};

use crate::alignment::umeyama;
use crate::{Error, Result, RigidTransform};

type Mat6x10 = SMatrix<f64, 6, 10>;
type Vec4 = SVector<f64, 4>;

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
const COPLANAR_TOL: f64 = 1e-10;

/// Camera pose from object points and *normalized* image coordinates
/// (`(u - cx) / fx`, `(v - cy) / fy`).
pub fn epnp(points_obj: &[Vector3<f64>], normalized: &[Vector2<f64>]) -> Result<RigidTransform<f64>> {
    let n = points_obj.len();
    if normalized.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: normalized.len(),
        });
    }
    if n < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: n });
    }

    let centroid = points_obj.iter().fold(Vector3::zeros(), |a, p| a + p) / n as f64;
    let mut cov = Matrix3::zeros();
    for p in points_obj {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n as f64;
    let eig = SymmetricEigen::new(cov);
    let largest = eig.eigenvalues.amax();
    if !(largest > 0.0) || eig.eigenvalues.min() <= COPLANAR_TOL * largest {
        return Err(Error::DegenerateConfiguration(
            "object points are coplanar or collinear".into(),
        ));
    }
    let mut ctrl_w = [centroid; 4];
    for i in 0..3 {
        ctrl_w[i + 1] = centroid + eig.eigenvectors.column(i) * eig.eigenvalues[i].sqrt();
    }
    let basis = Matrix3::from_columns(&[ctrl_w[1] - ctrl_w[0], ctrl_w[2] - ctrl_w[0], ctrl_w[3] - ctrl_w[0]]);
    let basis_inv = basis
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("control points are not independent".into()))?;
    let alphas: Vec<[f64; 4]> = points_obj
        .iter()
        .map(|p| {
            let b = basis_inv * (p - ctrl_w[0]);
            [1.0 - b.x - b.y - b.z, b.x, b.y, b.z]
        })
        .collect();

    let mut m = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, (a, uv)) in alphas.iter().zip(normalized).enumerate() {
        for j in 0..4 {
            m[(2 * i, 3 * j)] = a[j];
            m[(2 * i, 3 * j + 2)] = -a[j] * uv.x;
            m[(2 * i + 1, 3 * j + 1)] = a[j];
            m[(2 * i + 1, 3 * j + 2)] = -a[j] * uv.y;
        }
    }
    let mtm = m.tr_mul(&m);
    let eig = SymmetricEigen::new(mtm);
    let mut order: Vec<usize> = (0..12).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // kernel[k] is the eigenvector with the k-th smallest eigenvalue.
    let kernel: Vec<DVector<f64>> = order[..4]
        .iter()
        .map(|&c| eig.eigenvectors.column(c).into_owned())
        .collect();

    let rho = SVector::<f64, 6>::from_iterator(PAIRS.iter().map(|&(a, b)| (ctrl_w[a] - ctrl_w[b]).norm_squared()));
    let l = build_l(&kernel);

    let candidates = [betas_one(&l, &rho), betas_two(&l, &rho), betas_three(&l, &rho)];
    let mut best: Option<(f64, RigidTransform<f64>)> = None;
    for betas in candidates.into_iter().flatten() {
        let betas = gauss_newton(&l, &rho, betas);
        let Some(pose) = pose_from_betas(&kernel, &betas, &alphas, points_obj) else {
            continue;
        };
        let err = reprojection_error(&pose, points_obj, normalized);
        if err.is_finite() && best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, pose));
        }
    }
    best.map(|(_, pose)| pose)
        .ok_or_else(|| Error::DegenerateConfiguration("EPnP found no valid pose candidate".into()))
}

fn control_vector(v: &DVector<f64>, c: usize) -> Vector3<f64> {
    Vector3::new(v[3 * c], v[3 * c + 1], v[3 * c + 2])
}

/// Rows: control-point pairs. Columns: products `b11 b12 b22 b13 b23 b33 b14 b24 b34 b44`.
fn build_l(kernel: &[DVector<f64>]) -> Mat6x10 {
    let mut l = Mat6x10::zeros();
    for (row, &(a, b)) in PAIRS.iter().enumerate() {
        let d: Vec<Vector3<f64>> = kernel
            .iter()
            .map(|v| control_vector(v, a) - control_vector(v, b))
            .collect();
        let vals = [
            d[0].dot(&d[0]),
            2.0 * d[0].dot(&d[1]),
            d[1].dot(&d[1]),
            2.0 * d[0].dot(&d[2]),
            2.0 * d[1].dot(&d[2]),
            d[2].dot(&d[2]),
            2.0 * d[0].dot(&d[3]),
            2.0 * d[1].dot(&d[3]),
            2.0 * d[2].dot(&d[3]),
            d[3].dot(&d[3]),
        ];
        for (col, v) in vals.into_iter().enumerate() {
            l[(row, col)] = v;
        }
    }
    l
}

fn solve_columns(l: &Mat6x10, rho: &SVector<f64, 6>, cols: &[usize]) -> Option<DVector<f64>> {
    let sub = DMatrix::from_fn(6, cols.len(), |r, c| l[(r, cols[c])]);
    let rhs = DVector::from_iterator(6, rho.iter().copied());
    sub.svd(true, true).solve(&rhs, 1e-12).ok()
}

fn betas_one(l: &Mat6x10, rho: &SVector<f64, 6>) -> Option<Vec4> {
    let x = solve_columns(l, rho, &[0, 1, 3, 6])?;
    let b1 = x[0].abs().sqrt();
    if b1 == 0.0 {
        return None;
    }
    let s = if x[0] < 0.0 { -1.0 } else { 1.0 };
    Some(Vec4::new(b1, s * x[1] / b1, s * x[2] / b1, s * x[3] / b1))
}

fn betas_two(l: &Mat6x10, rho: &SVector<f64, 6>) -> Option<Vec4> {
    let x = solve_columns(l, rho, &[0, 1, 2])?;
    let (b11, b12, b22) = (x[0], x[1], x[2]);
    let sign = if b11 < 0.0 { -1.0 } else { 1.0 };
    let b1 = (sign * b11).max(0.0).sqrt();
    let mut b2 = (sign * b22).max(0.0).sqrt();
    if b12 * sign < 0.0 {
        b2 = -b2;
    }
    Some(Vec4::new(b1, b2, 0.0, 0.0))
}

fn betas_three(l: &Mat6x10, rho: &SVector<f64, 6>) -> Option<Vec4> {
    let x = solve_columns(l, rho, &[0, 1, 2, 3, 4])?;
    let (b11, b12, b22, b13) = (x[0], x[1], x[2], x[3]);
    let sign = if b11 < 0.0 { -1.0 } else { 1.0 };
    let b1 = (sign * b11).max(0.0).sqrt();
    let mut b2 = (sign * b22).max(0.0).sqrt();
    if b12 * sign < 0.0 {
        b2 = -b2;
    }
    let b3 = if b1 > 0.0 { sign * b13 / b1 } else { 0.0 };
    Some(Vec4::new(b1, b2, b3, 0.0))
}

fn beta_products(b: &Vec4) -> SVector<f64, 10> {
    SVector::<f64, 10>::from([
        b[0] * b[0],
        b[0] * b[1],
        b[1] * b[1],
        b[0] * b[2],
        b[1] * b[2],
        b[2] * b[2],
        b[0] * b[3],
        b[1] * b[3],
        b[2] * b[3],
        b[3] * b[3],
    ])
}

/// Minimizes `|L products(beta) - rho|^2` over the four betas.
fn gauss_newton(l: &Mat6x10, rho: &SVector<f64, 6>, mut b: Vec4) -> Vec4 {
    for _ in 0..10 {
        let r = l * beta_products(&b) - rho;
        let mut jac = SMatrix::<f64, 6, 4>::zeros();
        for row in 0..6 {
            let c = |k: usize| l[(row, k)];
            jac[(row, 0)] = 2.0 * c(0) * b[0] + c(1) * b[1] + c(3) * b[2] + c(6) * b[3];
            jac[(row, 1)] = c(1) * b[0] + 2.0 * c(2) * b[1] + c(4) * b[2] + c(7) * b[3];
            jac[(row, 2)] = c(3) * b[0] + c(4) * b[1] + 2.0 * c(5) * b[2] + c(8) * b[3];
            jac[(row, 3)] = c(6) * b[0] + c(7) * b[1] + c(8) * b[2] + 2.0 * c(9) * b[3];
        }
        let Ok(step) = jac.svd(true, true).solve(&r, 1e-14) else {
            break;
        };
        b -= step;
        if step.amax() < 1e-15 * (1.0 + b.amax()) {
            break;
        }
    }
    b
}

fn pose_from_betas(
    kernel: &[DVector<f64>],
    betas: &Vec4,
    alphas: &[[f64; 4]],
    points_obj: &[Vector3<f64>],
) -> Option<RigidTransform<f64>> {
    let mut ctrl_c = [Vector3::zeros(); 4];
    for (c, cc) in ctrl_c.iter_mut().enumerate() {
        for (k, v) in kernel.iter().enumerate() {
            *cc += control_vector(v, c) * betas[k];
        }
    }
    let mut pts_c: Vec<Vector3<f64>> = alphas
        .iter()
        .map(|a| (0..4).fold(Vector3::zeros(), |acc, j| acc + ctrl_c[j] * a[j]))
        .collect();
    let mean_z: f64 = pts_c.iter().map(|p| p.z).sum::<f64>() / pts_c.len() as f64;
    if mean_z < 0.0 {
        for p in &mut pts_c {
            *p = -*p;
        }
    }
    umeyama(points_obj, &pts_c, true).ok().map(|u| u.rigid())
}

fn reprojection_error(pose: &RigidTransform<f64>, points_obj: &[Vector3<f64>], normalized: &[Vector2<f64>]) -> f64 {
    points_obj
        .iter()
        .zip(normalized)
        .map(|(p, uv)| {
            let q = pose.apply_point(p);
            if q.z <= 0.0 {
                return f64::INFINITY;
            }
            (Vector2::new(q.x / q.z, q.y / q.z) - uv).norm_squared()
        })
        .sum::<f64>()
}
