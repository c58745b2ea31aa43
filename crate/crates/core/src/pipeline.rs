//! Dataset-level fitting and evaluation, and the predictions file format.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{AnnotatedSample, Dataset, DATASET_SCHEMA};
use crate::estimator::{fit_multistart, FitConfig, FitParams, FitReport};
use crate::evaluation::{
    aggregate, chamfer_distance, deformation_error, translation_error, MetricReport, MetricSample,
};
use crate::geometry::rotation_geodesic_deg;
use crate::jsonl::{read_jsonl, write_jsonl_file};
use crate::lattice::LatticeEmbedding;
use crate::{Error, LatticeBox, Result, TriMesh};

pub const PREDICTIONS_SCHEMA: &str = "lattice-pose-fit/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionsHeader {
    pub schema: String,
    pub toolkit_version: String,
    pub dataset_schema: String,
    pub starts: usize,
    pub seed: u64,
    pub fit: FitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub sample_id: u64,
    pub params: FitParams,
    /// Absent when the prediction was not produced by a fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<FitReport>,
}

/// Fits every sample; results stay in dataset order.
pub fn fit_dataset(
    samples: &[AnnotatedSample],
    mesh: &TriMesh<f64>,
    lattice: &LatticeBox<f64>,
    starts: usize,
    seed: u64,
    cfg: &FitConfig,
) -> Vec<Result<Prediction>> {
    samples
        .par_iter()
        .map(|s| {
            let (params, report) = fit_multistart(s, mesh, lattice, starts, seed, cfg)?;
            Ok(Prediction {
                sample_id: s.sample_id,
                params,
                report: Some(report),
            })
        })
        .collect()
}

pub fn write_predictions(path: impl AsRef<Path>, header: &PredictionsHeader, preds: &[Prediction]) -> Result<()> {
    write_jsonl_file(path, header, preds)
}

/// Reads a predictions file, or a dataset file whose ground truth is then
/// taken as the prediction.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path)?;
    let schema = text
        .lines()
        .next()
        .and_then(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .and_then(|v| v.get("schema").and_then(|s| s.as_str()).map(str::to_owned));
    let body = text.as_bytes();
    match schema.as_deref() {
        Some(DATASET_SCHEMA) => {
            let (_, samples): (serde_json::Value, Vec<AnnotatedSample>) = read_jsonl(body, DATASET_SCHEMA)?;
            Ok(samples
                .iter()
                .map(|s| Prediction {
                    sample_id: s.sample_id,
                    params: FitParams::new(&s.rotation, s.translation, s.delta),
                    report: None,
                })
                .collect())
        }
        _ => {
            let (_, preds): (PredictionsHeader, Vec<Prediction>) = read_jsonl(body, PREDICTIONS_SCHEMA)?;
            Ok(preds)
        }
    }
}

/// Metrics of one prediction against its ground truth. Chamfer compares the
/// posed deformed meshes in the camera frame; the deformation error compares
/// the deformed meshes after removing their rigid offset.
pub fn evaluate_sample(
    pred: &FitParams,
    gt: &AnnotatedSample,
    mesh: &TriMesh<f64>,
    lattice: &LatticeBox<f64>,
) -> Result<MetricSample> {
    let embedding = LatticeEmbedding::new(mesh.vertices(), lattice);
    let pred_pose = pred.pose()?;
    let pred_mesh = mesh.with_vertices(embedding.deform(&pred.delta))?;
    let gt_mesh = mesh.with_vertices(embedding.deform(&gt.delta))?;
    Ok(MetricSample {
        chamfer_mm: chamfer_distance(
            &pred_pose.apply(pred_mesh.vertices()),
            &gt.pose().apply(gt_mesh.vertices()),
        )?,
        rot_deg: rotation_geodesic_deg(&pred_pose.rotation, &gt.rotation),
        trans_mm: translation_error(&pred_pose.translation, &gt.translation),
        deform_mm: deformation_error(&pred_mesh, &gt_mesh)?,
    })
}

/// Joins predictions to ground truth by `sample_id` (exact match required)
/// and returns per-sample metrics in dataset order with their aggregate.
pub fn evaluate(
    preds: &[Prediction],
    gt: &Dataset,
    mesh: &TriMesh<f64>,
) -> Result<(Vec<(u64, MetricSample)>, MetricReport)> {
    let lattice = gt.header.check_mesh(mesh)?;
    let by_id: BTreeMap<u64, &Prediction> = preds.iter().map(|p| (p.sample_id, p)).collect();
    let missing: Vec<u64> = gt
        .samples
        .iter()
        .map(|s| s.sample_id)
        .filter(|id| !by_id.contains_key(id))
        .collect();
    let known: std::collections::BTreeSet<u64> = gt.samples.iter().map(|s| s.sample_id).collect();
    let unexpected: Vec<u64> = by_id.keys().copied().filter(|id| !known.contains(id)).collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(Error::IdMismatch { missing, unexpected });
    }
    let per_sample = gt
        .samples
        .par_iter()
        .map(|s| {
            Ok((
                s.sample_id,
                evaluate_sample(&by_id[&s.sample_id].params, s, mesh, &lattice)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(&per_sample.iter().map(|(_, m)| *m).collect::<Vec<_>>())?;
    Ok((per_sample, report))
}
