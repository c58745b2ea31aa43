//! Synthetic annotation generator.
//!
//! Each scene draws bounded random corner offsets, strips their rigid
//! component, and each view of the scene draws a camera pose that keeps
//! the whole deformed object inside the image. Keypoints are a farthest-point
//! subset of the base mesh vertices projected through the ground-truth
//! deformation and pose. Every random draw derives from
//! `stable_seed(global_seed, index)`, so output is independent of thread
//! scheduling and platform.

mod config;
mod generate;
mod sample;

pub use config::{BoundMode, DatagenConfig, DeformationBound, RotationSampling, TranslationRange};
pub use generate::{
    farthest_point_indices, generate_sample, read_dataset, stable_seed, uniform_rotation, write_dataset,
    write_generated, Dataset, DatasetHeader, Generator, CROP_MARGIN, DATASET_SCHEMA, MAX_POSE_ATTEMPTS,
};
pub use sample::AnnotatedSample;
