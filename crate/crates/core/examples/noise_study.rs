//! Monte-Carlo study of pose recovery under pixel noise on the synthetic banana.
//!
//! Usage: cargo run --release -p latticepose --example noise_study -- [samples] [sigma] [starts]

use latticepose::datagen::{DatagenConfig, DeformationBound, Generator, TranslationRange};
use latticepose::estimator::{fit_multistart, FitConfig};
use latticepose::evaluation::{chamfer_distance, median, translation_error};
use latticepose::geometry::rotation_geodesic_deg;
use latticepose::lattice::deform_points;
use latticepose::{shapes, Intrinsics};

fn main() -> latticepose::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let samples: usize = args.first().map_or(50, |a| a.parse().expect("samples"));
    let sigma: f64 = args.get(1).map_or(0.5, |a| a.parse().expect("sigma"));
    let starts: usize = args.get(2).map_or(8, |a| a.parse().expect("starts"));

    let config = DatagenConfig {
        base_mesh: "banana.obj".into(),
        deformation_bound: DeformationBound::default(),
        translation_range: TranslationRange {
            x: [-60.0, 60.0],
            y: [-40.0, 40.0],
            z: [550.0, 900.0],
        },
        rotation_sampling: Default::default(),
        intrinsics: Intrinsics::new(600.0, 600.0, 320.0, 240.0, 640.0, 480.0)?,
        keypoint_count: 64,
        samples,
        views_per_sample: 1,
        global_seed: 2024,
        pixel_noise_sigma: sigma,
        crop_size: 224.0,
    };
    let generator = Generator::with_mesh(&config, shapes::banana(24, 16))?;
    let (mut rot, mut trans, mut depth, mut rms, mut cham) = (vec![], vec![], vec![], vec![], vec![]);
    for s in generator.generate_all()? {
        let (p, report) = fit_multistart(
            &s,
            generator.mesh(),
            generator.lattice(),
            starts,
            0,
            &FitConfig::for_deformation_bound(generator.bound_mm()),
        )?;
        let pose = p.pose()?;
        rot.push(rotation_geodesic_deg(&pose.rotation, &s.rotation));
        trans.push(translation_error(&pose.translation, &s.translation));
        depth.push((pose.translation.z - s.translation.z).abs());
        rms.push(report.rms_px);
        let pred = pose.apply(&deform_points(
            generator.mesh().vertices(),
            generator.lattice(),
            &p.delta,
        ));
        let gt = s.pose().apply(&deform_points(
            generator.mesh().vertices(),
            generator.lattice(),
            &s.delta,
        ));
        cham.push(chamfer_distance(&pred, &gt)?);
    }
    let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    println!("samples {samples}  sigma {sigma} px  starts {starts}");
    println!("rotation    median {:.4} deg  max {:.4}", median(&rot), max(&rot));
    println!("translation median {:.4} mm   max {:.4}", median(&trans), max(&trans));
    println!("depth       median {:.4} mm   max {:.4}", median(&depth), max(&depth));
    println!("rms         median {:.3e} px  max {:.3e}", median(&rms), max(&rms));
    println!("chamfer     median {:.4} mm   max {:.4}", median(&cham), max(&cham));
    Ok(())
}
