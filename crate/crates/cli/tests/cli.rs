use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::Matrix3;
use manip_core::drawer::{write_detection_frame, DetectionFrame};
use manip_core::geometry::{angle_between, yaw_rotation, Pose, Vec3};
use manip_core::grasp::{format_grasp_batch, GraspBatch, GraspCandidate};
use manip_core::scene::save_scene;
use manip_core::sim::{generate_scene, oracle_detector, render_depth, NoiseModel, SceneSpec, SimConfig, SyntheticScene};
use serde_json::Value;
use tempfile::TempDir;

fn manip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manip")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
    scene: SyntheticScene,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write_json(&self, name: &str, v: &impl serde::Serialize) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
        p
    }

    fn write_batch(&self, name: &str, batch: &GraspBatch) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, format_grasp_batch(batch)).unwrap();
        p
    }
}

fn tabletop() -> Fixture {
    let dir = TempDir::new().unwrap();
    let scene = generate_scene(&SceneSpec::tabletop(), 5).unwrap();
    save_scene(&scene.cloud, &dir.path().join("scene.ply"), &dir.path().join("instances.json")).unwrap();
    let f = Fixture { dir, scene };
    f.write_json("mug.json", &f.scene.label_embedding("mug"));
    f.write_json("teapot.json", &f.scene.label_embedding("teapot"));
    f
}

fn grasp(center: Vec3, yaw: f64, pitch: f64, score: f64) -> GraspCandidate {
    let approach = Vec3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), -pitch.sin());
    let closing = Vec3::new(-yaw.sin(), yaw.cos(), 0.0);
    let rotation = Matrix3::from_columns(&[approach, closing, approach.cross(&closing)]);
    GraspCandidate {
        pose: Pose::new(rotation, center).unwrap(),
        width: 0.08,
        score,
        source_rotation: 0,
    }
}

/// Two detector runs: the identity run and one rotated a quarter turn about
/// the object centroid, whose candidates are expressed in the rotated frame.
fn mug_batches(f: &Fixture) -> Vec<PathBuf> {
    let mug = f.scene.object("mug").unwrap();
    let top = mug.feasible_grasp_center();
    let centroid = f.scene.cloud.centroid(mug.id).unwrap();
    let world = [
        grasp(top, 0.0, 1.2, 0.9),
        grasp(top, 1.0, 0.9, 0.8),
        grasp(top, 2.5, 0.7, 0.85),
        grasp(top + Vec3::new(0.2, 0.0, 0.0), 0.0, 1.0, 0.99),
        grasp(top, -2.0, 1.0, -0.3),
    ];
    let first = GraspBatch {
        rotation: yaw_rotation(0.0),
        candidates: world[..3].to_vec(),
    };
    let r = yaw_rotation(std::f64::consts::FRAC_PI_2);
    let second = GraspBatch {
        rotation: r,
        candidates: world[3..]
            .iter()
            .map(|g| GraspCandidate {
                pose: Pose::new(r * g.pose.rotation, r * (g.pose.translation - centroid) + centroid).unwrap(),
                ..*g
            })
            .collect(),
    };
    vec![f.write_batch("b0.json", &first), f.write_batch("b1.json", &second)]
}

fn plan_args<'a>(f: &'a Fixture, embedding: &'a str, grasps: &'a [PathBuf]) -> Vec<String> {
    let mut args: Vec<String> = vec![
        "plan-grasp".into(),
        "--scene".into(),
        s(&f.path("scene.ply")).into(),
        "--instances".into(),
        s(&f.path("instances.json")).into(),
        "--embedding".into(),
        s(&f.path(embedding)).into(),
        "--grasps".into(),
    ];
    args.extend(grasps.iter().map(|p| s(p).to_string()));
    args
}

fn run_owned(args: &[String]) -> Output {
    manip(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn vec3(v: &Value) -> Vec3 {
    Vec3::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap(), v[2].as_f64().unwrap())
}

#[test]
fn help_lists_exit_codes() {
    let o = manip(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for line in ["0  success", "2  scene has no instance embeddings", "3  localization", "4  no grasp", "5  no valid body"] {
        assert!(text.contains(line), "{line}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&manip(&["plan-grasp"])), 1);
    assert_eq!(code(&manip(&["teleport"])), 1);
}

#[test]
fn query_ranks_the_labeled_instance_first() {
    let f = tabletop();
    let out = f.path("q");
    let o = manip(&[
        "query",
        "--scene",
        s(&f.path("scene.ply")),
        "--instances",
        s(&f.path("instances.json")),
        "--embedding",
        s(&f.path("mug.json")),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(&out.join("query.json"));
    assert_eq!(r["results"][0]["label"], "mug");
    assert_eq!(r["results"][0]["similarity"], 1.0);
    assert_eq!(r["results"][1]["similarity"], 0.0);
    assert_eq!(r["config"]["optimizer"]["lambda_body"], 0.01);
    assert_eq!(r["config"]["nav"]["lambda_item"], 0.5);
}

#[test]
fn query_without_embeddings_exits_two() {
    let f = tabletop();
    let mut inst = read_json(&f.path("instances.json"));
    for i in inst["instances"].as_array_mut().unwrap() {
        i["embedding"] = Value::Null;
    }
    let bare = f.write_json("bare.json", &inst);
    let o = manip(&[
        "query",
        "--scene",
        s(&f.path("scene.ply")),
        "--instances",
        s(&bare),
        "--embedding",
        s(&f.path("mug.json")),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn missing_files_exit_one() {
    let o = manip(&[
        "query",
        "--scene",
        "/nonexistent/scene.ply",
        "--instances",
        "/nonexistent/i.json",
        "--embedding",
        "/nonexistent/e.json",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("/nonexistent/scene.ply"));
}

/// Recomputes the joint score over every reported (grasp, valid body) pair
/// and returns the argmax.
fn oracle_argmax(report: &Value, target: Vec3) -> (usize, usize) {
    let cfg = &report["config"]["optimizer"];
    let (lb, la, t) = (
        cfg["lambda_body"].as_f64().unwrap(),
        cfg["lambda_align"].as_f64().unwrap(),
        cfg["temperature"].as_f64().unwrap(),
    );
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (gi, g) in report["grasps"].as_array().unwrap().iter().enumerate() {
        let m = g["pose"]["rotation"].as_array().unwrap();
        let approach = Vec3::new(m[0].as_f64().unwrap(), m[3].as_f64().unwrap(), m[6].as_f64().unwrap());
        for (bi, b) in report["bodies"].as_array().unwrap().iter().enumerate() {
            if b["valid"] != true {
                continue;
            }
            let p = &b["position"];
            let cam = Vec3::new(p[0].as_f64().unwrap(), p[1].as_f64().unwrap(), b["camera_z"].as_f64().unwrap());
            let ray = (target - cam).normalize();
            let score = g["score"].as_f64().unwrap()
                + lb * b["s_body"].as_f64().unwrap()
                + la * (t * ray.dot(&approach.normalize())).tanh();
            if score > best.0 {
                best = (score, gi, bi);
            }
        }
    }
    (best.1, best.2)
}

#[test]
fn plan_grasp_matches_oracle() {
    let f = tabletop();
    let batches = mug_batches(&f);
    let mut args = plan_args(&f, "mug.json", &batches);
    args.extend(["--out".to_string(), s(&f.path("plan")).to_string()]);
    let o = run_owned(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&f.path("plan/plan.json"));
    assert_eq!(report["status"], "ok");
    assert_eq!(report["grasps_in"], 5);
    // the displaced and the negative candidate are dropped
    let grasps = report["grasps"].as_array().unwrap();
    assert_eq!(grasps.len(), 3);
    let top = f.scene.object("mug").unwrap().feasible_grasp_center();
    for g in grasps {
        let t = vec3(&g["pose"]["translation"]);
        assert!((t - top).norm() < 1e-9);
    }
    let target = vec3(&report["target"]["centroid"]);
    let (gi, bi) = oracle_argmax(&report, target);
    assert_eq!(report["selection"]["grasp_index"], gi);
    assert_eq!(report["selection"]["body_index"], bi);
    assert_eq!(report["selected_body"], report["bodies"][bi]);
    assert_eq!(report["bodies"][bi]["valid"], true);

    let first = std::fs::read(f.path("plan/plan.json")).unwrap();
    assert_eq!(code(&run_owned(&args)), 0);
    assert_eq!(first, std::fs::read(f.path("plan/plan.json")).unwrap());
}

#[test]
fn plan_grasp_stage_exit_codes() {
    let f = tabletop();
    let batches = mug_batches(&f);
    let o = run_owned(&plan_args(&f, "teapot.json", &batches));
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["status"], "localization-failed");

    let empty = f.write_batch(
        "empty.json",
        &GraspBatch {
            rotation: yaw_rotation(0.0),
            candidates: vec![],
        },
    );
    let o = run_owned(&plan_args(&f, "mug.json", &[empty]));
    assert_eq!(code(&o), 4, "{}", stderr(&o));

    // no ring fits inside the room
    let cfg = f.write_json("far.json", &serde_json::json!({"nav": {"radii": [10.0]}}));
    let mut args = plan_args(&f, "mug.json", &batches);
    args.extend(["--config".to_string(), s(&cfg).to_string()]);
    let o = run_owned(&args);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["status"], "no-valid-body");
    assert_eq!(report["config"]["nav"]["radii"][0], 10.0);
}

#[test]
fn unknown_config_keys_exit_one() {
    let f = tabletop();
    let cfg = f.write_json("bad.json", &serde_json::json!({"optimiser": {}}));
    let batches = mug_batches(&f);
    let mut args = plan_args(&f, "mug.json", &batches);
    args.extend(["--config".to_string(), s(&cfg).to_string()]);
    let o = run_owned(&args);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("optimiser"));
}

fn drawer_fixture(noise: NoiseModel) -> (TempDir, Vec3, PathBuf) {
    let mut spec = SceneSpec::cabinet();
    spec.cabinets[0].rows = 1;
    spec.cabinets[0].cols = 1;
    spec.cabinets[0].size = [0.5, 0.45, 0.4];
    let scene = generate_scene(&spec, 6).unwrap();
    let k = SimConfig::default().intrinsics;
    let drawer = &scene.cabinets[0].drawers[0];
    let eye = drawer.handle_center + drawer.axis * 1.0 + Vec3::new(0.0, 0.0, 0.3);
    let pose = Pose::look_at(eye, drawer.handle_center).unwrap();
    let frame = DetectionFrame {
        intrinsics: k,
        cam_pose: pose,
        detections: oracle_detector(&scene, &k, &pose, &noise, 1),
        depth: render_depth(&scene, &k, &pose, &noise, 1),
    };
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("frame.json");
    write_detection_frame(&path, &frame, "frame.depth").unwrap();
    (dir, drawer.axis, path)
}

#[test]
fn single_noiseless_frame_gives_one_target() {
    let (dir, axis, frame) = drawer_fixture(NoiseModel::none());
    let out = dir.path().join("out");
    let o = manip(&["match-drawers", "--frames", s(&frame), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(&out.join("drawers.json"));
    let targets = r["targets"].as_array().unwrap();
    assert_eq!(targets.len(), 1);
    let got = vec3(&targets[0]["target"]["axis"]);
    assert!(angle_between(&got, &axis).to_degrees() < 1.0);
    assert!(targets[0]["pull"].is_object());
    assert_eq!(r["frames"][0]["pairs"], 1);
}

#[test]
fn zero_detections_give_empty_targets() {
    let (dir, _, frame) = drawer_fixture(NoiseModel {
        detection_dropout: 1.0,
        ..NoiseModel::none()
    });
    let o = manip(&["match-drawers", "--frames", s(&frame)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["targets"].as_array().unwrap().len(), 0);
    drop(dir);
}

#[test]
fn truncated_depth_exits_one() {
    let (dir, _, frame) = drawer_fixture(NoiseModel::none());
    let depth = dir.path().join("frame.depth");
    let bytes = std::fs::read(&depth).unwrap();
    std::fs::write(&depth, &bytes[..bytes.len() - 4]).unwrap();
    let o = manip(&["match-drawers", "--frames", s(&frame)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("frame.depth"), "{}", stderr(&o));
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    let run = || {
        let o = manip(&["simulate", "--preset", "cabinet", "--episodes", "1", "--seed", "17", "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (
            std::fs::read(out.join("summary.json")).unwrap(),
            std::fs::read(out.join("reports.jsonl")).unwrap(),
        )
    };
    let a = run();
    assert_eq!(a, run());
    let summary: Value = serde_json::from_slice(&a.0).unwrap();
    assert_eq!(summary["summary"]["task"], "search");
    assert_eq!(summary["config"]["seed"], 17);
    assert_eq!(String::from_utf8(a.1).unwrap().lines().count(), 1);
}

#[test]
fn simulate_grasp_batch_accounts_for_every_episode() {
    let o = manip(&["simulate", "--preset", "tabletop", "--episodes", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let sm = &r["summary"];
    let failures: u64 = ["localization", "detection", "navigation", "manipulation"]
        .iter()
        .map(|k| sm["failures"][k].as_u64().unwrap())
        .sum();
    assert_eq!(failures + sm["successes"].as_u64().unwrap(), 6);
}

#[test]
fn invalid_spec_names_the_field() {
    let dir = TempDir::new().unwrap();
    let mut spec = serde_json::to_value(SceneSpec::tabletop()).unwrap();
    spec["objects"][1]["table"] = 3.into();
    let path = dir.path().join("spec.json");
    std::fs::write(&path, spec.to_string()).unwrap();
    let o = manip(&["simulate", "--scene", s(&path)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("objects[1].table"), "{}", stderr(&o));

    std::fs::write(&path, r#"{"tables": [], "objectz": []}"#).unwrap();
    let o = manip(&["simulate", "--scene", s(&path)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("objectz"), "{}", stderr(&o));
}
