use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use manip_core::drawer::{
    fuse_views, match_handles_to_drawers, observe_frame, plan_pull, read_detection_frame, DrawerTarget,
    PullPlan,
};
use manip_core::geometry::Vec3;
use manip_core::grasp::{filter_grasps, merge_rotation_sweeps, read_grasp_batch, top_k, GraspBatch, GraspCandidate};
use manip_core::nav::{sample_positions, validate_candidates, BodyCandidate};
use manip_core::optimizer::{select_best, JointSelection};
use manip_core::scene::{load_scene, InstanceId, PointCloudScene, SceneError};
use manip_core::seed::{derive_seed, stream};
use manip_core::sim::{read_scene_spec, run_batch, BatchSummary, SceneSpec, TaskKind};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

/// Writes `report` to `<output_dir>/<name>` or, without an output
/// directory, to stdout.
fn emit<T: Serialize>(cfg: &RunConfig, name: &str, report: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(input)?;
    match &cfg.output_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
            let path = dir.join(name);
            std::fs::write(&path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn read_embedding(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load(scene: &Path, instances: &Path) -> Result<PointCloudScene, CliError> {
    load_scene(scene, instances).map_err(input)
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedInstance {
    pub instance_id: InstanceId,
    pub label: String,
    pub similarity: f64,
    pub centroid: Vec3,
}

fn rank(scene: &PointCloudScene, embedding: &[f64]) -> Result<Vec<RankedInstance>, CliError> {
    let results = scene.query_instance(embedding).map_err(|e| match e {
        SceneError::NoEmbeddings => CliError::NoEmbeddings,
        e => input(e),
    })?;
    Ok(results
        .into_iter()
        .map(|r| RankedInstance {
            instance_id: r.instance_id,
            label: scene.instance(r.instance_id).map(|i| i.label.clone()).unwrap_or_default(),
            similarity: r.similarity,
            centroid: r.centroid,
        })
        .collect())
}

#[derive(Serialize)]
struct QueryReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    results: Vec<RankedInstance>,
}

pub fn query(cfg: &RunConfig, scene: &Path, instances: &Path, embedding: &Path) -> Result<(), CliError> {
    let scene = load(scene, instances)?;
    let embedding = read_embedding(embedding)?;
    let results = rank(&scene, &embedding)?;
    emit(
        cfg,
        "query.json",
        &QueryReport {
            command: "query",
            config: cfg,
            results,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanStatus {
    Ok,
    LocalizationFailed,
    NoGrasps,
    NoValidBody,
}

#[derive(Serialize)]
struct PlanReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    status: PlanStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    target: Option<RankedInstance>,
    /// Candidates read from the grasp files.
    grasps_in: usize,
    /// Merged world-frame candidates that survived filtering.
    grasps: Vec<GraspCandidate>,
    bodies: Vec<BodyCandidate>,
    selection: Option<JointSelection>,
    selected_grasp: Option<GraspCandidate>,
    selected_body: Option<BodyCandidate>,
}

pub fn plan_grasp(
    cfg: &RunConfig,
    scene: &Path,
    instances: &Path,
    embedding: &Path,
    grasp_files: &[PathBuf],
) -> Result<(), CliError> {
    cfg.nav.validate().map_err(input)?;
    let scene = load(scene, instances)?;
    let embedding = read_embedding(embedding)?;
    let batches: Vec<GraspBatch> = grasp_files
        .iter()
        .enumerate()
        .map(|(i, p)| read_grasp_batch(p, i).map_err(input))
        .collect::<Result<_, _>>()?;

    let mut report = PlanReport {
        command: "plan-grasp",
        config: cfg,
        status: PlanStatus::Ok,
        reason: None,
        target: None,
        grasps_in: batches.iter().map(|b| b.candidates.len()).sum(),
        grasps: Vec::new(),
        bodies: Vec::new(),
        selection: None,
        selected_grasp: None,
        selected_body: None,
    };
    let fail = |mut report: PlanReport, status, reason: String| {
        report.status = status;
        report.reason = Some(reason.clone());
        emit(cfg, "plan.json", &report)?;
        Err(match status {
            PlanStatus::LocalizationFailed => CliError::Localization(reason),
            PlanStatus::NoGrasps => CliError::GraspFilter(reason),
            _ => CliError::Navigation(reason),
        })
    };

    let ranked = rank(&scene, &embedding)?;
    let Some(top) = ranked.into_iter().next() else {
        return fail(report, PlanStatus::LocalizationFailed, "no instance carries an embedding".into());
    };
    let min_sim = cfg.sim.min_similarity;
    if top.similarity < min_sim {
        let reason = format!("best similarity {:.4} below {min_sim}", top.similarity);
        report.target = Some(top);
        return fail(report, PlanStatus::LocalizationFailed, reason);
    }
    let id = top.instance_id;
    let centroid = top.centroid;
    report.target = Some(top);

    let (object, _) = scene.isolate_object(id, cfg.grasp.isolate_padding).map_err(input)?;
    let kept: Vec<GraspBatch> = batches
        .iter()
        .map(|b| GraspBatch {
            rotation: b.rotation,
            candidates: top_k(&b.candidates, cfg.grasp.top_k),
        })
        .collect();
    let merged = merge_rotation_sweeps(&kept, &centroid).map_err(input)?;
    report.grasps = filter_grasps(&merged, &object, cfg.grasp.on_object_tol).map_err(input)?;
    if report.grasps.is_empty() {
        let reason = format!("none of {} candidates passed the filter", merged.len());
        return fail(report, PlanStatus::NoGrasps, reason);
    }

    let candidates = sample_positions(&centroid, &cfg.nav).map_err(input)?;
    report.bodies = validate_candidates(&candidates, &scene, id, &cfg.nav).map_err(input)?;
    if !report.bodies.iter().any(|b| b.valid) {
        let reason = format!("all {} body candidates rejected", report.bodies.len());
        return fail(report, PlanStatus::NoValidBody, reason);
    }

    let selection = select_best(&report.grasps, &report.bodies, &centroid, &cfg.optimizer).map_err(input)?;
    report.selected_grasp = Some(report.grasps[selection.grasp_index]);
    report.selected_body = Some(report.bodies[selection.body_index]);
    report.selection = Some(selection);
    emit(cfg, "plan.json", &report)
}

#[derive(Serialize)]
struct FrameSummary {
    path: PathBuf,
    detections: usize,
    pairs: usize,
    observations: usize,
}

#[derive(Serialize)]
struct PlannedTarget {
    target: DrawerTarget,
    pull: Option<PullPlan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pull_error: Option<String>,
}

#[derive(Serialize)]
struct DrawerReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    frames: Vec<FrameSummary>,
    targets: Vec<PlannedTarget>,
}

pub fn match_drawers(cfg: &RunConfig, frames: &[PathBuf]) -> Result<(), CliError> {
    let d = &cfg.drawer;
    let mut summaries = Vec::with_capacity(frames.len());
    let mut observations = Vec::new();
    for (i, path) in frames.iter().enumerate() {
        let frame = read_detection_frame(path).map_err(input)?;
        let pairs = match_handles_to_drawers(&frame.handles(), &frame.drawers(), d.kappa, d.ioa_min);
        let seed = derive_seed(cfg.seed, &[stream::RANSAC, i as u64]);
        let obs = observe_frame(&frame, d, seed);
        summaries.push(FrameSummary {
            path: path.clone(),
            detections: frame.detections.len(),
            pairs: pairs.len(),
            observations: obs.len(),
        });
        observations.extend(obs);
    }
    let targets = fuse_views(&observations, d.cluster_radius)
        .into_iter()
        .map(|target| match plan_pull(&target, d) {
            Ok(pull) => PlannedTarget {
                target,
                pull: Some(pull),
                pull_error: None,
            },
            Err(e) => PlannedTarget {
                target,
                pull: None,
                pull_error: Some(e.to_string()),
            },
        })
        .collect();
    emit(
        cfg,
        "drawers.json",
        &DrawerReport {
            command: "match-drawers",
            config: cfg,
            frames: summaries,
            targets,
        },
    )
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    scene_spec: &'a SceneSpec,
    summary: BatchSummary,
}

pub fn simulate(
    cfg: &RunConfig,
    spec: Option<&Path>,
    preset: Option<SceneSpec>,
    task: Option<TaskKind>,
    episodes: usize,
) -> Result<(), CliError> {
    let spec = match (spec, preset) {
        (Some(p), _) => read_scene_spec(p).map_err(input)?,
        (None, Some(s)) => s,
        (None, None) => return Err(CliError::Input("simulate needs --scene or --preset".into())),
    };
    let task = task.unwrap_or(if spec.cabinets.is_empty() {
        TaskKind::Grasp
    } else {
        TaskKind::Search
    });
    let batch = run_batch(&spec, task, episodes, cfg.seed, &cfg.pipeline()).map_err(input)?;
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        let path = dir.join("reports.jsonl");
        let file = File::create(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        for r in &batch.reports {
            serde_json::to_writer(&mut w, r).map_err(input)?;
            writeln!(w).map_err(input)?;
        }
        w.flush().map_err(input)?;
    }
    emit(
        cfg,
        "summary.json",
        &SimulateReport {
            command: "simulate",
            config: cfg,
            scene_spec: &spec,
            summary: batch.summary,
        },
    )
}
