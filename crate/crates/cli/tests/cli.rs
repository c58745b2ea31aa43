use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latticepose"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn latticepose")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, content: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, content).unwrap();
        p
    }

    /// Dataset config pointing at the shipped banana, with overrides.
    fn config(&self, name: &str, overrides: Value) -> PathBuf {
        let mut cfg: Value =
            serde_json::from_str(&std::fs::read_to_string(data_dir().join("gen_config.json")).unwrap()).unwrap();
        cfg["base_mesh"] = json!(data_dir().join("banana.obj"));
        for (k, v) in overrides.as_object().unwrap() {
            cfg[k] = v.clone();
        }
        self.write(name, &cfg.to_string())
    }

    fn gen(&self, samples: usize, noise: f64) -> PathBuf {
        let cfg = self.config("gen.json", json!({"samples": samples, "pixel_noise_sigma": noise}));
        let out = self.path("data.jsonl");
        let o = run(&["gen", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    }
}

fn mesh() -> PathBuf {
    data_dir().join("banana.obj")
}

fn obj_vertices(path: &Path) -> Vec<[f64; 3]> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|t| t.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

fn read_report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn version_names_toolkit_and_schemas() {
    let o = run(&["--version"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
    assert!(out.contains("lattice-pose/v1") && out.contains("lattice-pose-fit/v1"));
}

#[test]
fn unknown_flags_are_usage_errors() {
    assert_eq!(code(&run(&["deform", "--bogus", "1"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn deform_zero_offsets_is_identity() {
    let f = Fixture::new();
    let off = f.write("zero.json", &serde_json::to_string(&vec![0.0; 24]).unwrap());
    let out = f.path("out.obj");
    let o = run(&["deform", "--mesh", s(&mesh()), "--offsets", s(&off), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(obj_vertices(&out), obj_vertices(&mesh()));
    assert!(stdout(&o).contains("max displacement 0.000000 mm"));
}

#[test]
fn deform_uniform_offsets_translate() {
    let f = Fixture::new();
    let c = [3.0, -2.0, 0.5];
    let flat: Vec<f64> = (0..8).flat_map(|_| c).collect();
    let off = f.write("uniform.json", &json!({ "offsets": flat }).to_string());
    let out = f.path("out.obj");
    let o = run(&["deform", "--mesh", s(&mesh()), "--offsets", s(&off), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for (a, b) in obj_vertices(&mesh()).iter().zip(obj_vertices(&out)) {
        for i in 0..3 {
            assert!((b[i] - a[i] - c[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn deform_rejects_wrong_offset_count() {
    let f = Fixture::new();
    let off = f.write("bad.json", &serde_json::to_string(&vec![0.0; 23]).unwrap());
    let o = run(&[
        "deform",
        "--mesh",
        s(&mesh()),
        "--offsets",
        s(&off),
        "--out",
        s(&f.path("o.obj")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("23"), "{}", stderr(&o));
}

#[test]
fn settings_file_merges_under_flags() {
    let f = Fixture::new();
    let zero = f.write("zero.json", &serde_json::to_string(&vec![0.0; 24]).unwrap());
    let flat: Vec<f64> = (0..24).map(|_| 1.0).collect();
    let ones = f.write("ones.json", &serde_json::to_string(&flat).unwrap());
    let settings = f.write(
        "settings.json",
        &json!({"mesh": mesh(), "offsets": ones, "out": f.path("from_settings.obj")}).to_string(),
    );
    let out = f.path("from_flag.obj");
    let o = run(&[
        "deform",
        "--config",
        s(&settings),
        "--offsets",
        s(&zero),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(obj_vertices(&out), obj_vertices(&mesh()));
    assert!(!f.path("from_settings.obj").exists());

    let bad = f.write("bad.json", &json!({"mesh": mesh(), "colour": "red"}).to_string());
    assert_eq!(code(&run(&["deform", "--config", s(&bad)])), 2);
}

#[test]
fn gen_is_deterministic_and_sized() {
    let f = Fixture::new();
    let cfg = f.config("gen.json", json!({"samples": 10}));
    let (a, b) = (f.path("a.jsonl"), f.path("b.jsonl"));
    for out in [&a, &b] {
        let o = run(&["gen", "--config", s(&cfg), "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("10 records"));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 11);
}

#[test]
fn gen_rejects_zero_samples() {
    let f = Fixture::new();
    let cfg = f.config("gen.json", json!({"samples": 0}));
    let o = run(&["gen", "--config", s(&cfg), "--out", s(&f.path("x.jsonl"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("samples"));
}

#[test]
fn gen_reports_unplaceable_as_runtime_failure() {
    let f = Fixture::new();
    let cfg = f.config(
        "gen.json",
        json!({"samples": 1, "translation_range": {"x": [0.0, 0.0], "y": [0.0, 0.0], "z": [1.0, 2.0]}}),
    );
    assert_eq!(
        code(&run(&["gen", "--config", s(&cfg), "--out", s(&f.path("x.jsonl"))])),
        3
    );
}

#[test]
fn fit_then_eval_round_trip() {
    let f = Fixture::new();
    let data = f.gen(20, 0.0);
    let preds = f.path("preds.jsonl");
    let start = std::time::Instant::now();
    let o = run(&["fit", "--data", s(&data), "--mesh", s(&mesh()), "--out", s(&preds)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = stdout(&o);
    let rms: f64 = summary
        .split("median RMS ")
        .nth(1)
        .and_then(|r| r.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(rms < 1e-4, "{summary}");

    let report = f.path("report.json");
    let o = run(&["eval", "--pred", s(&preds), "--gt", s(&data), "--out", s(&report)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("Chamfer (mm)"));
    assert!(start.elapsed().as_secs() < 60);
    let r = read_report(&report);
    assert!(r["rot_median_deg"].as_f64().unwrap() < 0.01);
    assert!(r["chamfer_mm"].as_f64().unwrap() < 0.1);
}

#[test]
fn fit_is_deterministic() {
    let f = Fixture::new();
    let data = f.gen(4, 0.5);
    let (a, b) = (f.path("a.jsonl"), f.path("b.jsonl"));
    for out in [&a, &b] {
        let o = run(&[
            "fit",
            "--data",
            s(&data),
            "--mesh",
            s(&mesh()),
            "--out",
            s(out),
            "--starts",
            "1",
            "--seed",
            "3",
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn fit_input_and_sample_errors() {
    let f = Fixture::new();
    let data = f.gen(2, 0.0);
    let o = run(&[
        "fit",
        "--data",
        s(&data),
        "--mesh",
        s(&f.path("missing.obj")),
        "--out",
        s(&f.path("p.jsonl")),
    ]);
    assert_eq!(code(&o), 2);

    let cfg = f.config("few.json", json!({"samples": 2, "keypoint_count": 10}));
    let few = f.path("few.jsonl");
    assert_eq!(code(&run(&["gen", "--config", s(&cfg), "--out", s(&few)])), 0);
    let out = f.path("p.jsonl");
    let o = run(&["fit", "--data", s(&few), "--mesh", s(&mesh()), "--out", s(&out)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("insufficient keypoints"));
    assert!(!out.exists());
    let o = run(&[
        "fit",
        "--data",
        s(&few),
        "--mesh",
        s(&mesh()),
        "--out",
        s(&out),
        "--continue-on-error",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1);
}

#[test]
fn eval_of_ground_truth_is_zero() {
    let f = Fixture::new();
    let data = f.gen(5, 0.0);
    let report = f.path("r.json");
    let o = run(&["eval", "--pred", s(&data), "--gt", s(&data), "--out", s(&report)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_report(&report);
    for (k, v) in r.as_object().unwrap() {
        assert!(v.as_f64().unwrap() < 1e-6, "{k}");
    }
}

#[test]
fn eval_reports_injected_translation_error() {
    let f = Fixture::new();
    let data = f.gen(1, 0.0);
    let text = std::fs::read_to_string(&data).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut rec: Value = serde_json::from_str(&lines[1]).unwrap();
    rec["translation"][0] = json!(rec["translation"][0].as_f64().unwrap() + 10.0);
    lines[1] = rec.to_string();
    let pred = f.write("pred.jsonl", &(lines.join("\n") + "\n"));
    let report = f.path("r.json");
    let o = run(&["eval", "--pred", s(&pred), "--gt", s(&data), "--out", s(&report)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_report(&report);
    assert!((r["trans_mean_mm"].as_f64().unwrap() - 10.0).abs() < 1e-9);
    assert!((r["trans_median_mm"].as_f64().unwrap() - 10.0).abs() < 1e-9);
    assert_eq!(r["rot_mean_deg"].as_f64().unwrap(), 0.0);
}

#[test]
fn eval_rejects_disjoint_ids() {
    let f = Fixture::new();
    let data = f.gen(2, 0.0);
    let text = std::fs::read_to_string(&data).unwrap();
    let shifted: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                return l.to_owned();
            }
            let mut v: Value = serde_json::from_str(l).unwrap();
            v["sample_id"] = json!(v["sample_id"].as_u64().unwrap() + 100);
            v.to_string()
        })
        .collect();
    let pred = f.write("pred.jsonl", &shifted.join("\n"));
    let o = run(&[
        "eval",
        "--pred",
        s(&pred),
        "--gt",
        s(&data),
        "--out",
        s(&f.path("r.json")),
    ]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("[0, 1]") && err.contains("[100, 101]"), "{err}");
}

fn pnp_fixture(f: &Fixture, n: usize) -> (PathBuf, PathBuf, PathBuf, [f64; 9], [f64; 3]) {
    let (fx, fy, cx, cy) = (600.0, 620.0, 320.0, 240.0);
    let (c, s_) = (0.3f64.cos(), 0.3f64.sin());
    let r = [c, 0.0, s_, 0.0, 1.0, 0.0, -s_, 0.0, c];
    let t = [12.0, -7.0, 650.0];
    let mut p3 = vec![];
    let mut p2 = vec![];
    for i in 0..n {
        let x = [
            ((i * 37) % 17) as f64 * 6.0 - 48.0,
            ((i * 11) % 13) as f64 * 5.0 - 30.0,
            ((i * 7) % 11) as f64 * 4.0 - 20.0,
        ];
        let q: Vec<f64> = (0..3)
            .map(|k| r[3 * k] * x[0] + r[3 * k + 1] * x[1] + r[3 * k + 2] * x[2] + t[k])
            .collect();
        p3.push(x.to_vec());
        p2.push(vec![fx * q[0] / q[2] + cx, fy * q[1] / q[2] + cy]);
    }
    let k = json!({"fx": fx, "fy": fy, "cx": cx, "cy": cy, "width": 640.0, "height": 480.0});
    (
        f.write("p3.json", &json!(p3).to_string()),
        f.write("p2.json", &json!(p2).to_string()),
        f.write("k.json", &k.to_string()),
        r,
        t,
    )
}

#[test]
fn pnp_recovers_forward_projected_pose() {
    let f = Fixture::new();
    let (p3, p2, k, r, t) = pnp_fixture(&f, 20);
    let o = run(&["pnp", "--points3d", s(&p3), "--points2d", s(&p2), "--intrinsics", s(&k)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mode"], "full");
    assert!(v["rms_px"].as_f64().unwrap() < 1e-6);
    for i in 0..9 {
        assert!((v["rotation"][i].as_f64().unwrap() - r[i]).abs() < 1e-6);
    }
    for i in 0..3 {
        assert!((v["translation"][i].as_f64().unwrap() - t[i]).abs() < 1e-4);
    }
}

#[test]
fn pnp_point_count_and_rotation_modes() {
    let f = Fixture::new();
    let (p3, p2, k, r, t) = pnp_fixture(&f, 3);
    let o = run(&["pnp", "--points3d", s(&p3), "--points2d", s(&p2), "--intrinsics", s(&k)]);
    assert_eq!(code(&o), 2);

    let rot = f.write("r.json", &json!(r).to_string());
    let o = run(&[
        "pnp",
        "--points3d",
        s(&p3),
        "--points2d",
        s(&p2),
        "--intrinsics",
        s(&k),
        "--rotation",
        s(&rot),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mode"], "translation_only");
    for i in 0..3 {
        assert!((v["translation"][i].as_f64().unwrap() - t[i]).abs() < 1e-6 * 650.0);
    }
}
