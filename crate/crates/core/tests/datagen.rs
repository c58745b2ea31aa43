mod common;

use latticepose::alignment::umeyama;
use latticepose::camera::project_points;
use latticepose::datagen::{
    farthest_point_indices, read_dataset, uniform_rotation, write_generated, BoundMode, DeformationBound, Generator,
    DATASET_SCHEMA,
};
use latticepose::geometry::obj::write_obj;
use latticepose::lattice::LatticeEmbedding;
use latticepose::{Error, Vec3};
use nalgebra::{Quaternion, UnitQuaternion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn same_config_and_index_give_identical_samples() {
    let g = common::generator(5, 11, 0.0);
    let a = serde_json::to_string(&g.sample(3).unwrap()).unwrap();
    let b = serde_json::to_string(&common::generator(5, 11, 0.0).sample(3).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(g.generate_all().unwrap()[3], g.sample(3).unwrap());
}

#[test]
fn stored_annotations_reproject_exactly() {
    let g = common::generator(20, 5, 0.0);
    for s in g.generate_all().unwrap() {
        let kp: Vec<Vec3> = s.keypoint_indices.iter().map(|&i| g.mesh().vertices()[i]).collect();
        let deformed = LatticeEmbedding::new(&kp, g.lattice()).deform(&s.delta);
        let cam = s.pose().apply(&deformed);
        let uv = project_points(&s.intrinsics, &cam).unwrap();
        for (a, b) in uv.iter().zip(&s.keypoints_2d) {
            assert!((a - b).norm() < 1e-9);
            assert!(s.intrinsics.contains(b));
        }
    }
}

#[test]
fn stored_deltas_are_canonical() {
    let g = common::generator(30, 9, 0.0);
    let base = g.mesh().vertices();
    for s in g.generate_all().unwrap() {
        assert!(s.delta.max_abs() > 0.0);
        let deformed = LatticeEmbedding::new(base, g.lattice()).deform(&s.delta);
        let fit = umeyama(base, &deformed, true).unwrap();
        assert!(fit.rigid().angle() < 1e-6, "sample {}", s.sample_id);
        assert!(fit.translation.norm() < 1e-6, "sample {}", s.sample_id);
    }
}

#[test]
fn vanishing_bound_gives_rigid_samples() {
    let mut cfg = common::config(4, 2, 0.0);
    cfg.deformation_bound = DeformationBound {
        mode: BoundMode::Mm,
        value: 1e-12,
    };
    let g = Generator::with_mesh(&cfg, common::banana()).unwrap();
    for s in g.generate_all().unwrap() {
        assert!(s.delta.max_abs() < 1e-11);
    }
}

#[test]
fn translations_respect_ranges() {
    let cfg = common::config(200, 4, 0.0);
    let g = Generator::with_mesh(&cfg, common::banana()).unwrap();
    let r = cfg.translation_range;
    for s in g.generate_all().unwrap() {
        for (v, [lo, hi]) in [(s.translation.x, r.x), (s.translation.y, r.y), (s.translation.z, r.z)] {
            assert!(lo <= v && v <= hi);
        }
    }
}

#[test]
fn rotation_sampler_is_uniform() {
    // Mean geodesic angle between independent Haar rotations is pi/2 + 2/pi rad.
    let expected = (std::f64::consts::FRAC_PI_2 + 2.0 / std::f64::consts::PI).to_degrees();
    assert!((expected - 126.5).abs() < 0.05);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs = 10_000;
    let mean = (0..pairs)
        .map(|_| {
            let a = uniform_rotation(&mut rng);
            let b = uniform_rotation(&mut rng);
            a.angle_to(&b).to_degrees()
        })
        .sum::<f64>()
        / pairs as f64;
    assert!((mean - 126.5).abs() < 3.0, "{mean}");

    // Brute-force reference: normalized Gaussian quaternions.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut gauss = || {
        let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        UnitQuaternion::from_quaternion(Quaternion::new(v[0], v[1], v[2], v[3]))
    };
    let reference = (0..pairs).map(|_| gauss().angle_to(&gauss()).to_degrees()).sum::<f64>() / pairs as f64;
    assert!((mean - reference).abs() < 3.0, "{mean} vs {reference}");
}

#[test]
fn farthest_point_sampling() {
    let mesh = common::banana();
    let idx = farthest_point_indices(mesh.vertices(), 64).unwrap();
    assert_eq!(idx.len(), 64);
    let mut sorted = idx.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 64);
    assert!(farthest_point_indices(mesh.vertices(), mesh.len() + 1).is_err());
    assert_eq!(farthest_point_indices(mesh.vertices(), 64).unwrap(), idx);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = common::config(0, 1, 0.0);
    assert!(matches!(
        Generator::with_mesh(&cfg, common::banana()),
        Err(Error::InvalidValue(_))
    ));
    cfg.samples = 1;
    cfg.keypoint_count = 10_000;
    assert!(matches!(
        Generator::with_mesh(&cfg, common::banana()),
        Err(Error::InvalidValue(_))
    ));
}

#[test]
fn impossible_placement_is_unplaceable() {
    let mut cfg = common::config(1, 1, 0.0);
    cfg.translation_range.z = [1.0, 2.0];
    let g = Generator::with_mesh(&cfg, common::banana()).unwrap();
    assert!(matches!(
        g.sample(0),
        Err(Error::Unplaceable {
            index: 0,
            attempts: 100
        })
    ));
}

#[test]
fn views_share_a_deformation() {
    let mut cfg = common::config(3, 8, 0.0);
    cfg.views_per_sample = 3;
    let g = Generator::with_mesh(&cfg, common::banana()).unwrap();
    let all = g.generate_all().unwrap();
    assert_eq!(all.len(), 9);
    for (i, s) in all.iter().enumerate() {
        assert_eq!(s.sample_id, i as u64);
        assert_eq!(s.scene, i as u64 / 3);
        assert_eq!(s.delta, all[3 * (i / 3)].delta);
    }
    assert_ne!(all[0].rotation, all[1].rotation);
}

#[test]
fn noise_perturbs_keypoints() {
    let clean = common::generator(1, 3, 0.0).sample(0).unwrap();
    let noisy = common::generator(1, 3, 0.5).sample(0).unwrap();
    assert_eq!(clean.rotation, noisy.rotation);
    let rms = (clean
        .keypoints_2d
        .iter()
        .zip(&noisy.keypoints_2d)
        .map(|(a, b)| (a - b).norm_squared())
        .sum::<f64>()
        / 64.0)
        .sqrt();
    assert!(rms > 0.3 && rms < 1.2, "{rms}");
}

#[test]
fn dataset_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let g = common::generator(6, 21, 0.5);
    let path = dir.path().join("data.jsonl");
    assert_eq!(write_generated(&g, &path).unwrap(), 6);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().next().unwrap().contains(DATASET_SCHEMA));

    let ds = read_dataset(&path).unwrap();
    assert_eq!(ds.header, g.header());
    assert_eq!(ds.samples, g.generate_all().unwrap());
    let bits = |s: &latticepose::datagen::AnnotatedSample| {
        s.delta
            .to_flat()
            .iter()
            .chain(s.translation.iter())
            .map(|v| v.to_bits())
            .collect::<Vec<_>>()
    };
    for (a, b) in ds.samples.iter().zip(g.generate_all().unwrap().iter()) {
        assert_eq!(bits(a), bits(b));
    }
    ds.header.check_mesh(g.mesh()).unwrap();
    assert!(ds.header.check_mesh(&latticepose::shapes::banana(10, 8)).is_err());

    let headless = dir.path().join("headless.jsonl");
    std::fs::write(&headless, text.lines().skip(1).collect::<Vec<_>>().join("\n")).unwrap();
    assert!(matches!(read_dataset(&headless), Err(Error::SchemaMismatch(_))));

    let broken = dir.path().join("broken.jsonl");
    let mut lines: Vec<&str> = text.lines().collect();
    lines[3] = "{\"sample_id\": 2";
    std::fs::write(&broken, lines.join("\n")).unwrap();
    assert!(matches!(read_dataset(&broken), Err(Error::Parse { line: 4, .. })));
}

#[test]
fn write_dataset_loads_the_mesh_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("banana.obj");
    write_obj(&mesh_path, &common::banana()).unwrap();
    let mut cfg = common::config(3, 1, 0.0);
    cfg.base_mesh = mesh_path.clone();
    let out = dir.path().join("a.jsonl");
    assert_eq!(latticepose::datagen::write_dataset(&cfg, &out).unwrap(), 3);
    let out2 = dir.path().join("b.jsonl");
    latticepose::datagen::write_dataset(&cfg, &out2).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&out2).unwrap());

    cfg.base_mesh = dir.path().join("missing.obj");
    assert!(matches!(
        latticepose::datagen::generate_sample(&cfg, 0),
        Err(Error::MeshLoad { .. })
    ));
}
