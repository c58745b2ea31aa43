//! Benchmark metrics: Chamfer distance, rotation and translation error,
//! deformation error after rigid alignment, and mean/median aggregation.
//!
//! Chamfer uses linear (not squared) Euclidean distances, averaged
//! symmetrically: `0.5 * (mean_a min_b |a-b| + mean_b min_a |a-b|)`.

use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::alignment::{icp_align, umeyama, IcpParams, NearestNeighbors};
use crate::{Error, Result, RigidTransform, Scalar, TriMesh};

fn directed_mean<T: Scalar>(from: &[Vector3<T>], to: &[Vector3<T>]) -> T {
    let index = NearestNeighbors::new(to);
    let sum = index
        .nearest_all(from)
        .into_iter()
        .fold(T::zero(), |acc, (_, d2)| acc + d2.sqrt());
    sum / T::lit(from.len() as f64)
}

/// Symmetric mean nearest-neighbour distance between two point sets (mm).
pub fn chamfer_distance<T: Scalar>(a: &[Vector3<T>], b: &[Vector3<T>]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok((directed_mean(a, b) + directed_mean(b, a)) * T::lit(0.5))
}

pub fn translation_error<T: Scalar>(pred: &Vector3<T>, gt: &Vector3<T>) -> T {
    (pred - gt).norm()
}

/// ICP settings used to strip rigid motion before measuring deformation.
pub const DEFORMATION_ICP: IcpParams = IcpParams {
    max_iterations: 100,
    convergence_mm: 1e-10,
};

/// Chamfer distance between `pred` and `gt` after removing the rigid motion
/// between them. Meshes need not share vertex correspondence; when they
/// have equal vertex counts the alignment starts from fixed-scale Umeyama
/// on index-matched vertices, otherwise from centroid alignment, and ICP
/// refines it.
pub fn deformation_error<T: Scalar>(pred: &TriMesh<T>, gt: &TriMesh<T>) -> Result<T> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let init = if pred.len() == gt.len() {
        umeyama(pred.vertices(), gt.vertices(), true)
            .map(|u| u.rigid())
            .unwrap_or_else(|_| RigidTransform::from_translation(gt.centroid() - pred.centroid()))
    } else {
        RigidTransform::from_translation(gt.centroid() - pred.centroid())
    };
    let icp = icp_align(pred.vertices(), gt.vertices(), &DEFORMATION_ICP, &init)?;
    chamfer_distance(&icp.transform.apply(pred.vertices()), gt.vertices())
}

/// Per-sample errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub chamfer_mm: f64,
    pub rot_deg: f64,
    pub trans_mm: f64,
    pub deform_mm: f64,
}

/// Aggregate over a sample set, one field per benchmark column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub chamfer_mm: f64,
    pub rot_mean_deg: f64,
    pub rot_median_deg: f64,
    pub trans_mean_mm: f64,
    pub trans_median_mm: f64,
    pub deform_mm: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Exact median; the midpoint of the two central values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Means for Chamfer and deformation, mean and median for rotation and translation.
pub fn aggregate(samples: &[MetricSample]) -> Result<MetricReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let col = |f: fn(&MetricSample) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    let rot = col(|s| s.rot_deg);
    let trans = col(|s| s.trans_mm);
    Ok(MetricReport {
        chamfer_mm: mean(&col(|s| s.chamfer_mm)),
        rot_mean_deg: mean(&rot),
        rot_median_deg: median(&rot),
        trans_mean_mm: mean(&trans),
        trans_median_mm: median(&trans),
        deform_mm: mean(&col(|s| s.deform_mm)),
    })
}

/// Text table with the benchmark's column layout.
pub fn format_table(method: &str, report: &MetricReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>12} {:>10} {:>10} {:>12} {:>12} {:>13}",
        "Method", "Chamfer (mm)", "Rot. Mean", "Rot. Med.", "Trans. Mean", "Trans. Med.", "Deform. (mm)"
    );
    let _ = writeln!(
        out,
        "{:<16} {:>12.3} {:>10.3} {:>10.3} {:>12.3} {:>12.3} {:>13.3}",
        method,
        report.chamfer_mm,
        report.rot_mean_deg,
        report.rot_median_deg,
        report.trans_mean_mm,
        report.trans_median_mm,
        report.deform_mm
    );
    out
}
