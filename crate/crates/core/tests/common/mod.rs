#![allow(dead_code)]

use latticepose::datagen::{DatagenConfig, DeformationBound, Generator, TranslationRange};
use latticepose::{shapes, Intrinsics, Mesh};

pub fn banana() -> Mesh {
    shapes::banana(24, 16)
}

pub fn intrinsics() -> Intrinsics {
    Intrinsics::new(600.0, 600.0, 320.0, 240.0, 640.0, 480.0).unwrap()
}

pub fn config(samples: usize, seed: u64, noise: f64) -> DatagenConfig {
    DatagenConfig {
        base_mesh: "banana.obj".into(),
        deformation_bound: DeformationBound::default(),
        translation_range: TranslationRange {
            x: [-60.0, 60.0],
            y: [-40.0, 40.0],
            z: [550.0, 900.0],
        },
        rotation_sampling: Default::default(),
        intrinsics: intrinsics(),
        keypoint_count: 64,
        samples,
        views_per_sample: 1,
        global_seed: seed,
        pixel_noise_sigma: noise,
        crop_size: 224.0,
    }
}

pub fn generator(samples: usize, seed: u64, noise: f64) -> Generator {
    Generator::with_mesh(&config(samples, seed, noise), banana()).unwrap()
}
