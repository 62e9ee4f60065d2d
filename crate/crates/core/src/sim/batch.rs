use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    generate_scene, run_grasp_episode, run_search_episode, EpisodeReport, SceneSpec, SimError, Stage,
    TaskKind, Tier,
};
use crate::config::PipelineConfig;
use crate::seed::{derive_seed, stream};

/// 95% two-sided normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` at 95% confidence.
pub fn wilson_interval(successes: usize, n: usize) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    [(center - half).max(0.0), (center + half).min(1.0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageCounts {
    pub localization: usize,
    pub detection: usize,
    pub navigation: usize,
    pub manipulation: usize,
}

impl StageCounts {
    fn bump(&mut self, stage: Stage) {
        match stage {
            Stage::Localization => self.localization += 1,
            Stage::Detection => self.detection += 1,
            Stage::Navigation => self.navigation += 1,
            Stage::Manipulation => self.manipulation += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.localization + self.detection + self.navigation + self.manipulation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierSummary {
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci95: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub task: TaskKind,
    pub seed: u64,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci95: [f64; 2],
    /// Episodes ending at each stage.
    pub failures: StageCounts,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_tier: BTreeMap<Tier, TierSummary>,
}

impl BatchSummary {
    pub fn from_reports(task: TaskKind, seed: u64, reports: &[EpisodeReport]) -> Self {
        let mut failures = StageCounts::default();
        for r in reports {
            if let Some(s) = r.failed_stage {
                failures.bump(s);
            }
        }
        let successes = reports.iter().filter(|r| r.success).count();
        let mut per_tier = BTreeMap::new();
        for tier in Tier::ALL {
            let of_tier: Vec<_> = reports.iter().filter(|r| r.tier == Some(tier)).collect();
            if task == TaskKind::Grasp && !of_tier.is_empty() {
                let s = of_tier.iter().filter(|r| r.success).count();
                per_tier.insert(
                    tier,
                    TierSummary {
                        episodes: of_tier.len(),
                        successes: s,
                        success_rate: s as f64 / of_tier.len() as f64,
                        ci95: wilson_interval(s, of_tier.len()),
                    },
                );
            }
        }
        Self {
            task,
            seed,
            episodes: reports.len(),
            successes,
            success_rate: if reports.is_empty() {
                0.0
            } else {
                successes as f64 / reports.len() as f64
            },
            ci95: wilson_interval(successes, reports.len()),
            failures,
            per_tier,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub reports: Vec<EpisodeReport>,
    pub summary: BatchSummary,
}

/// Labels a grasp batch cycles through: every object of the spec, in
/// spec order.
fn grasp_queries(spec: &SceneSpec) -> Vec<String> {
    spec.objects.iter().map(|o| o.label.clone()).collect()
}

/// Runs `episodes` independent episodes. Episode `i` uses seed
/// `derive_seed(seed, [EPISODE, i])` for both its scene and its pipeline,
/// so results do not depend on scheduling. Grasp episodes cycle through the
/// spec's objects.
pub fn run_batch(
    spec: &SceneSpec,
    task: TaskKind,
    episodes: usize,
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<BatchResult, SimError> {
    spec.validate()?;
    cfg.noise.validate()?;
    let queries = grasp_queries(spec);
    match task {
        TaskKind::Grasp if queries.is_empty() => {
            return Err(SimError::InvalidSpec("objects: grasp batches need at least one object".into()))
        }
        TaskKind::Search if spec.cabinets.is_empty() => {
            return Err(SimError::InvalidSpec("cabinets: search batches need at least one cabinet".into()))
        }
        _ => {}
    }
    let reports = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let ep_seed = derive_seed(seed, &[stream::EPISODE, i as u64]);
            let scene = generate_scene(spec, ep_seed)?;
            Ok(match task {
                TaskKind::Grasp => run_grasp_episode(&scene, &queries[i % queries.len()], cfg, ep_seed),
                TaskKind::Search => run_search_episode(&scene, cfg, ep_seed),
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let summary = BatchSummary::from_reports(task, seed, &reports);
    Ok(BatchResult { reports, summary })
}

pub fn read_scene_spec(path: &Path) -> Result<SceneSpec, SimError> {
    let io = |message: String| SimError::Io {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    let spec: SceneSpec = serde_json::from_str(&text).map_err(|e| SimError::InvalidSpec(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}
