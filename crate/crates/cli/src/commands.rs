use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use latticepose::camera::{solve_pnp, PnpMode};
use latticepose::datagen::{read_dataset, write_generated, DatagenConfig, Generator};
use latticepose::estimator::FitConfig;
use latticepose::evaluation::{format_table, median};
use latticepose::geometry::obj::{read_obj, write_obj};
use latticepose::geometry::rotation_from_matrix;
use latticepose::lattice::deform_mesh;
use latticepose::pipeline::{
    evaluate, fit_dataset, read_predictions, write_predictions, PredictionsHeader, PREDICTIONS_SCHEMA,
};
use latticepose::{Intrinsics, Lattice, Mat3, Offsets, Vec2, Vec3};

use crate::settings::{load, read_json, relative_to, require};
use crate::Failure;

#[derive(Debug, Args)]
pub struct DeformArgs {
    /// Input OBJ mesh.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// JSON with 24 offsets: a bare array or `{"offsets": [...]}`.
    #[arg(long)]
    offsets: Option<PathBuf>,
    /// Output OBJ mesh.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON settings with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeformSettings {
    mesh: Option<PathBuf>,
    offsets: Option<PathBuf>,
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OffsetsFile {
    Bare(Vec<f64>),
    Keyed { offsets: Vec<f64> },
}

pub fn deform(args: DeformArgs) -> Result<(), Failure> {
    let s: DeformSettings = load(args.config.as_deref())?;
    let mesh_path = require(args.mesh, s.mesh, "mesh")?;
    let offsets_path = require(args.offsets, s.offsets, "offsets")?;
    let out = require(args.out, s.out, "out")?;

    let mesh = read_obj(&mesh_path)?;
    let values = match read_json::<OffsetsFile>(&offsets_path, "offsets file")? {
        OffsetsFile::Bare(v) | OffsetsFile::Keyed { offsets: v } => v,
    };
    let offsets = Offsets::from_flat(&values)?;
    let lattice = Lattice::around(&mesh)?;
    let deformed = deform_mesh(&mesh, &lattice, &offsets)?;
    let max_disp = mesh
        .vertices()
        .iter()
        .zip(deformed.vertices())
        .map(|(a, b)| (b - a).norm())
        .fold(0.0, f64::max);
    write_obj(&out, &deformed)?;
    let (lo, hi) = (lattice.min(), lattice.max());
    println!(
        "box min [{}, {}, {}] max [{}, {}, {}]",
        lo.x, lo.y, lo.z, hi.x, hi.y, hi.z
    );
    println!("max displacement {max_disp:.6} mm");
    println!("wrote {} ({} vertices)", out.display(), deformed.len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Dataset configuration JSON; `base_mesh` is relative to this file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override `samples`.
    #[arg(long)]
    samples: Option<usize>,
    /// Override `global_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `pixel_noise_sigma`.
    #[arg(long)]
    noise: Option<f64>,
}

pub fn generate(args: GenArgs) -> Result<(), Failure> {
    let mut cfg: DatagenConfig = read_json(&args.config, "dataset config")?;
    cfg.base_mesh = relative_to(&args.config, &cfg.base_mesh);
    if let Some(n) = args.samples {
        cfg.samples = n;
    }
    if let Some(seed) = args.seed {
        cfg.global_seed = seed;
    }
    if let Some(sigma) = args.noise {
        cfg.pixel_noise_sigma = sigma;
    }
    let generator = Generator::new(&cfg)?;
    let n = write_generated(&generator, &args.out)?;
    println!(
        "generated {n} records ({} scenes, global seed {}) -> {}",
        cfg.samples,
        cfg.global_seed,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset JSONL.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Base OBJ mesh the dataset was generated from.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Predictions JSONL.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initializations per sample (default 8).
    #[arg(long)]
    starts: Option<usize>,
    /// Seed for the random initializations (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the samples that succeed and exit 0 even if some fail.
    #[arg(long)]
    continue_on_error: bool,
    /// JSON settings with the flag keys plus an optional `fit` block; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitSettings {
    data: Option<PathBuf>,
    mesh: Option<PathBuf>,
    out: Option<PathBuf>,
    starts: Option<usize>,
    seed: Option<u64>,
    continue_on_error: Option<bool>,
    fit: Option<FitConfig>,
}

pub fn fit(args: FitArgs) -> Result<(), Failure> {
    let s: FitSettings = load(args.config.as_deref())?;
    let data = require(args.data, s.data, "data")?;
    let mesh_path = require(args.mesh, s.mesh, "mesh")?;
    let out = require(args.out, s.out, "out")?;
    let starts = args.starts.or(s.starts).unwrap_or(8);
    let seed = args.seed.or(s.seed).unwrap_or(0);
    let continue_on_error = args.continue_on_error || s.continue_on_error.unwrap_or(false);
    if starts == 0 {
        return Err(Failure::input("--starts must be at least 1"));
    }

    let dataset = read_dataset(&data)?;
    let mesh = read_obj(&mesh_path)?;
    let lattice = dataset.header.check_mesh(&mesh)?;
    let cfg = s.fit.unwrap_or_else(|| {
        let bound = dataset.header.config.deformation_bound.resolve_mm(lattice.diagonal());
        FitConfig::for_deformation_bound(bound)
    });
    cfg.validate()?;

    let results = fit_dataset(&dataset.samples, &mesh, &lattice, starts, seed, &cfg);
    let mut preds = Vec::with_capacity(results.len());
    let mut failures = 0;
    for (sample, r) in dataset.samples.iter().zip(results) {
        match r {
            Ok(p) => preds.push(p),
            Err(e) => {
                failures += 1;
                eprintln!("sample {}: {e}", sample.sample_id);
            }
        }
    }
    if failures > 0 && !continue_on_error {
        return Err(Failure::runtime(format!(
            "{failures} of {} samples failed (use --continue-on-error to keep the rest)",
            dataset.samples.len()
        )));
    }
    let header = PredictionsHeader {
        schema: PREDICTIONS_SCHEMA.into(),
        toolkit_version: latticepose::VERSION.into(),
        dataset_schema: dataset.header.schema.clone(),
        starts,
        seed,
        fit: cfg,
    };
    write_predictions(&out, &header, &preds)?;
    let rms: Vec<f64> = preds
        .iter()
        .filter_map(|p| p.report.as_ref())
        .map(|r| r.rms_px)
        .collect();
    let median_rms = if rms.is_empty() { f64::NAN } else { median(&rms) };
    println!(
        "fitted {}/{} samples, median RMS {median_rms:.3e} px -> {}",
        preds.len(),
        dataset.samples.len(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions JSONL (a dataset file is accepted and scored as its own prediction).
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Ground-truth dataset JSONL.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Metric report JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base mesh; defaults to the path recorded in the dataset header.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// JSON settings with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalSettings {
    pred: Option<PathBuf>,
    gt: Option<PathBuf>,
    out: Option<PathBuf>,
    mesh: Option<PathBuf>,
}

pub fn eval(args: EvalArgs) -> Result<(), Failure> {
    let s: EvalSettings = load(args.config.as_deref())?;
    let pred = require(args.pred, s.pred, "pred")?;
    let gt = require(args.gt, s.gt, "gt")?;
    let out = require(args.out, s.out, "out")?;

    let dataset = read_dataset(&gt)?;
    let preds = read_predictions(&pred)?;
    let mesh_path = args
        .mesh
        .or(s.mesh)
        .unwrap_or_else(|| dataset.header.config.base_mesh.clone());
    let mesh = read_obj(&mesh_path)?;
    let (_, report) = evaluate(&preds, &dataset, &mesh)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::runtime(e.to_string()))?;
    std::fs::write(&out, json + "\n").map_err(|e| Failure::input(format!("cannot write {}: {e}", out.display())))?;
    print!("{}", format_table("lattice-fit", &report));
    Ok(())
}

#[derive(Debug, Args)]
pub struct PnpArgs {
    /// JSON array of [x, y, z] object points (mm).
    #[arg(long)]
    points3d: Option<PathBuf>,
    /// JSON array of [u, v] pixel observations.
    #[arg(long)]
    points2d: Option<PathBuf>,
    /// JSON intrinsics {fx, fy, cx, cy, width, height}.
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    /// JSON array of 9 row-major floats; solves for translation only.
    #[arg(long)]
    rotation: Option<PathBuf>,
    /// JSON settings with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PnpSettings {
    points3d: Option<PathBuf>,
    points2d: Option<PathBuf>,
    intrinsics: Option<PathBuf>,
    rotation: Option<PathBuf>,
}

#[derive(Serialize)]
struct PnpOutput {
    rotation: [f64; 9],
    translation: [f64; 3],
    rms_px: f64,
    mode: PnpMode,
    iterations: usize,
}

pub fn pnp(args: PnpArgs) -> Result<(), Failure> {
    let s: PnpSettings = load(args.config.as_deref())?;
    let p3 = require(args.points3d, s.points3d, "points3d")?;
    let p2 = require(args.points2d, s.points2d, "points2d")?;
    let k_path = require(args.intrinsics, s.intrinsics, "intrinsics")?;

    let obj: Vec<Vec3> = read_json::<Vec<[f64; 3]>>(&p3, "3D points")?
        .into_iter()
        .map(|[x, y, z]| Vec3::new(x, y, z))
        .collect();
    let img: Vec<Vec2> = read_json::<Vec<[f64; 2]>>(&p2, "2D points")?
        .into_iter()
        .map(|[u, v]| Vec2::new(u, v))
        .collect();
    let k: Intrinsics = read_json(&k_path, "intrinsics")?;
    let rotation = match args.rotation.or(s.rotation) {
        Some(path) => {
            let m: [f64; 9] = read_json(&path, "rotation")?;
            Some(rotation_from_matrix(Mat3::from_row_slice(&m))?)
        }
        None => None,
    };
    let sol = solve_pnp(&k, &obj, &img, rotation.as_ref())?;
    let m = sol.transform.rotation.matrix();
    let t = sol.transform.translation;
    let out = PnpOutput {
        rotation: std::array::from_fn(|i| m[(i / 3, i % 3)]),
        translation: [t.x, t.y, t.z],
        rms_px: sol.rms_px,
        mode: sol.mode,
        iterations: sol.iterations,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).map_err(|e| Failure::runtime(e.to_string()))?
    );
    Ok(())
}
