use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnnotatedSample, DatagenConfig};
use crate::alignment::canonicalize_deformation;
use crate::camera::CropTransform;
use crate::geometry::obj::read_obj;
use crate::jsonl::{read_jsonl_file, write_jsonl_file};
use crate::lattice::{sample_offsets_with, LatticeEmbedding};
use crate::serde_fmt::vec3;
use crate::{CornerOffsets, Error, LatticeBox, Result, RotationMatrix, TriMesh};

pub const DATASET_SCHEMA: &str = "lattice-pose/v1";

/// Pose draws per record before giving up.
pub const MAX_POSE_ATTEMPTS: usize = 100;

/// Crop padding on each side, as a fraction of the longer box side.
pub const CROP_MARGIN: f64 = 0.1;

const STREAM_DEFORMATION: u64 = 0;
const STREAM_POSE: u64 = 1;
const STREAM_NOISE: u64 = 2;

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .into_iter()
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// 64-bit FNV-1a over the little-endian bytes of `global_seed` then `index`.
pub fn stable_seed(global_seed: u64, index: u64) -> u64 {
    fnv1a(global_seed.to_le_bytes().into_iter().chain(index.to_le_bytes()))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-uniform rotation from three uniform variates (Shoemake's subgroup method).
pub fn uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix<f64> {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

/// Greedy farthest-point subsample. Starts at the vertex farthest from the
/// centroid; ties go to the lowest index.
pub fn farthest_point_indices(points: &[Vector3<f64>], count: usize) -> Result<Vec<usize>> {
    if count > points.len() {
        return Err(Error::InvalidValue(format!(
            "keypoint_count {count} exceeds the {} mesh vertices",
            points.len()
        )));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let argmax = |d: &[f64]| {
        d.iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |(bi, bd), (i, &v)| if v > bd { (i, v) } else { (bi, bd) },
            )
            .0
    };
    let mut dist: Vec<f64> = points.iter().map(|p| (p - centroid).norm_squared()).collect();
    let mut chosen = vec![argmax(&dist)];
    dist.iter_mut().for_each(|d| *d = f64::INFINITY);
    while chosen.len() < count {
        let last = points[*chosen.last().unwrap()];
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min((p - last).norm_squared());
        }
        chosen.push(argmax(&dist));
    }
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub schema: String,
    pub toolkit_version: String,
    pub config: DatagenConfig,
    #[serde(with = "vec3")]
    pub lattice_min: Vector3<f64>,
    #[serde(with = "vec3")]
    pub lattice_max: Vector3<f64>,
    pub vertex_count: usize,
    pub records: usize,
}

impl DatasetHeader {
    pub fn lattice(&self) -> Result<LatticeBox<f64>> {
        LatticeBox::new(self.lattice_min, self.lattice_max)
    }

    /// Fails unless `mesh` is the mesh the dataset was generated from
    /// (same vertex count and bounding box).
    pub fn check_mesh(&self, mesh: &TriMesh<f64>) -> Result<LatticeBox<f64>> {
        let lattice = LatticeBox::around(mesh)?;
        let matches = mesh.len() == self.vertex_count
            && (lattice.min() - self.lattice_min).amax() <= 1e-9 * (1.0 + lattice.diagonal())
            && (lattice.max() - self.lattice_max).amax() <= 1e-9 * (1.0 + lattice.diagonal());
        if !matches {
            return Err(Error::SchemaMismatch(format!(
                "mesh ({} vertices) does not match the dataset base mesh ({} vertices)",
                mesh.len(),
                self.vertex_count
            )));
        }
        Ok(lattice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<AnnotatedSample>,
}

/// Prepared generator: the base mesh, its lattice and keypoint selection.
#[derive(Debug, Clone)]
pub struct Generator {
    config: DatagenConfig,
    mesh: TriMesh<f64>,
    lattice: LatticeBox<f64>,
    embedding: LatticeEmbedding<f64>,
    keypoints: Vec<usize>,
    bound_mm: f64,
}

impl Generator {
    /// Loads `config.base_mesh` and prepares the generator.
    pub fn new(config: &DatagenConfig) -> Result<Self> {
        config.validate()?;
        let mesh = read_obj(&config.base_mesh)?;
        Self::with_mesh(config, mesh)
    }

    pub fn with_mesh(config: &DatagenConfig, mesh: TriMesh<f64>) -> Result<Self> {
        config.validate()?;
        mesh.require_non_empty()?;
        let lattice = LatticeBox::around(&mesh)?;
        let keypoints = farthest_point_indices(mesh.vertices(), config.keypoint_count)?;
        Ok(Self {
            embedding: LatticeEmbedding::new(mesh.vertices(), &lattice),
            bound_mm: config.deformation_bound.resolve_mm(lattice.diagonal()),
            config: config.clone(),
            mesh,
            lattice,
            keypoints,
        })
    }

    pub fn config(&self) -> &DatagenConfig {
        &self.config
    }

    pub fn mesh(&self) -> &TriMesh<f64> {
        &self.mesh
    }

    pub fn lattice(&self) -> &LatticeBox<f64> {
        &self.lattice
    }

    pub fn keypoint_indices(&self) -> &[usize] {
        &self.keypoints
    }

    pub fn bound_mm(&self) -> f64 {
        self.bound_mm
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            schema: DATASET_SCHEMA.into(),
            toolkit_version: crate::VERSION.into(),
            config: self.config.clone(),
            lattice_min: *self.lattice.min(),
            lattice_max: *self.lattice.max(),
            vertex_count: self.mesh.len(),
            records: self.config.record_count(),
        }
    }

    /// Canonicalized offsets for one scene.
    pub fn scene_deformation(&self, scene: u64) -> Result<CornerOffsets<f64>> {
        let mut rng = rng_for(stable_seed(self.config.global_seed, scene), STREAM_DEFORMATION);
        let raw = sample_offsets_with(self.bound_mm, &mut rng)?;
        Ok(canonicalize_deformation(&self.mesh, &self.lattice, &raw)?.offsets)
    }

    pub fn sample(&self, index: u64) -> Result<AnnotatedSample> {
        let scene = index / self.config.views_per_sample as u64;
        let delta = self.scene_deformation(scene)?;
        self.view(index, &delta)
    }

    fn view(&self, index: u64, delta: &CornerOffsets<f64>) -> Result<AnnotatedSample> {
        let cfg = &self.config;
        let seed = stable_seed(cfg.global_seed, index);
        let mut pose_rng = rng_for(seed, STREAM_POSE);
        let mut noise_rng = rng_for(seed, STREAM_NOISE);
        let noise = Normal::new(0.0, cfg.pixel_noise_sigma).map_err(|e| Error::InvalidValue(e.to_string()))?;
        let deformed = self.embedding.deform(delta);
        let k = &cfg.intrinsics;
        let range = &cfg.translation_range;

        for _ in 0..MAX_POSE_ATTEMPTS {
            let rotation = uniform_rotation(&mut pose_rng);
            let translation = Vector3::new(
                pose_rng.random_range(range.x[0]..=range.x[1]),
                pose_rng.random_range(range.y[0]..=range.y[1]),
                pose_rng.random_range(range.z[0]..=range.z[1]),
            );

            let mut projected = Vec::with_capacity(deformed.len());
            let mut visible = true;
            for p in &deformed {
                let q = rotation * p + translation;
                let uv = k.project(&q);
                if q.z <= crate::camera::MIN_DEPTH || !k.contains(&uv) {
                    visible = false;
                    break;
                }
                projected.push(uv);
            }
            if !visible {
                continue;
            }

            let mut keypoints_2d: Vec<Vector2<f64>> = self.keypoints.iter().map(|&i| projected[i]).collect();
            if cfg.pixel_noise_sigma > 0.0 {
                for uv in &mut keypoints_2d {
                    uv.x += noise.sample(&mut noise_rng);
                    uv.y += noise.sample(&mut noise_rng);
                }
                if !keypoints_2d.iter().all(|uv| k.contains(uv)) {
                    continue;
                }
            }

            let (lo, hi) = projected.iter().fold(
                (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY)),
                |(lo, hi), p| (lo.inf(p), hi.sup(p)),
            );
            let crop = CropTransform::around_box(&lo, &hi, CROP_MARGIN, cfg.crop_size)?;

            return Ok(AnnotatedSample {
                sample_id: index,
                scene: index / cfg.views_per_sample as u64,
                seed,
                rotation,
                translation,
                delta: *delta,
                keypoint_indices: self.keypoints.clone(),
                keypoints_2d,
                intrinsics: *k,
                crop,
            });
        }
        Err(Error::Unplaceable {
            index,
            attempts: MAX_POSE_ATTEMPTS,
        })
    }

    /// All records in index order. Scenes are generated in parallel; the
    /// deformation is computed once per scene.
    pub fn generate_all(&self) -> Result<Vec<AnnotatedSample>> {
        let views = self.config.views_per_sample as u64;
        let per_scene: Vec<Result<Vec<AnnotatedSample>>> = (0..self.config.samples as u64)
            .into_par_iter()
            .map(|scene| {
                let delta = self.scene_deformation(scene)?;
                (scene * views..(scene + 1) * views)
                    .map(|index| self.view(index, &delta))
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(self.config.record_count());
        for scene in per_scene {
            out.extend(scene?);
        }
        Ok(out)
    }
}

/// One record, loading the base mesh from the configuration.
pub fn generate_sample(config: &DatagenConfig, index: u64) -> Result<AnnotatedSample> {
    Generator::new(config)?.sample(index)
}

/// Generates every record of `config` and writes the JSONL dataset.
/// Returns the number of records written.
pub fn write_dataset(config: &DatagenConfig, path: impl AsRef<Path>) -> Result<usize> {
    let generator = Generator::new(config)?;
    write_generated(&generator, path)
}

pub fn write_generated(generator: &Generator, path: impl AsRef<Path>) -> Result<usize> {
    let samples = generator.generate_all()?;
    write_jsonl_file(path, &generator.header(), &samples)?;
    Ok(samples.len())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let (header, samples) = read_jsonl_file(path, DATASET_SCHEMA)?;
    Ok(Dataset { header, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a_reference_vectors() {
        assert_eq!(fnv1a(*b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(*b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a(*b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn stable_seed_hashes_both_words() {
        let mut bytes = 7u64.to_le_bytes().to_vec();
        bytes.extend(3u64.to_le_bytes());
        assert_eq!(stable_seed(7, 3), fnv1a(bytes));
        assert_ne!(stable_seed(7, 3), stable_seed(3, 7));
    }
}
