//! Synthetic scenes, an analytic depth renderer, a noisy oracle detector
//! and an episode runner for the grasping and drawer-search tasks.

mod batch;
mod episode;
mod render;
mod world;

pub use batch::{
    read_scene_spec, run_batch, wilson_interval, BatchResult, BatchSummary, StageCounts, TierSummary,
};
pub use episode::{
    run_grasp_episode, run_search_episode, EpisodeReport, GraspDetails, SearchDetails, Stage,
    StageOutcome, StageTimings, Stages, TaskKind,
};
pub use render::{oracle_detector, render_depth};
pub use world::{
    generate_scene, CabinetSpec, DensitySpec, GroundTruthCabinet, GroundTruthDrawer, GroundTruthObject,
    ObjectSpec, Placement, Primitive, SceneSpec, Shape, ShapeSpec, SyntheticScene, TableSpec, Tier,
    GRASP_DEPTH, HANDLE_SIZE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::CameraIntrinsics;
use crate::scene::SceneError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible scene: {0}")]
    Infeasible(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Additive Gaussian depth noise (m).
    pub depth_sigma: f64,
    /// Per-pixel probability of an invalid depth reading.
    pub depth_dropout: f64,
    /// Per-box probability that the detector misses it.
    pub detection_dropout: f64,
    /// Gaussian shift of box centers, per image axis (px).
    pub bbox_jitter_sigma: f64,
    pub confidence_range: [f64; 2],
    /// Gaussian error of simulated grasp-proposal centers, per axis (m).
    pub grasp_sigma: f64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            depth_sigma: 0.0,
            depth_dropout: 0.0,
            detection_dropout: 0.0,
            bbox_jitter_sigma: 0.0,
            confidence_range: [0.5, 1.0],
            grasp_sigma: 0.0,
        }
    }

    pub fn reference() -> Self {
        Self {
            depth_sigma: 0.005,
            depth_dropout: 0.1,
            detection_dropout: 0.05,
            bbox_jitter_sigma: 2.0,
            confidence_range: [0.5, 1.0],
            grasp_sigma: 0.005,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        let sigma = |v: f64| v >= 0.0 && v.is_finite();
        let [lo, hi] = self.confidence_range;
        if !(prob(self.depth_dropout) && prob(self.detection_dropout)) {
            return Err(SimError::InvalidNoise("dropout probabilities must lie in [0, 1]".into()));
        }
        if !(sigma(self.depth_sigma) && sigma(self.bbox_jitter_sigma) && sigma(self.grasp_sigma)) {
            return Err(SimError::InvalidNoise("sigmas must be finite and non-negative".into()));
        }
        if !(prob(lo) && prob(hi) && lo <= hi) {
            return Err(SimError::InvalidNoise(format!(
                "confidence_range [{lo}, {hi}] must be an ordered sub-interval of [0, 1]"
            )));
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::reference()
    }
}

/// Simulated grasp-proposal generator settings per graspability tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposalConfig {
    /// Proposals per episode for easy, medium, hard objects.
    pub counts: [usize; 3],
    /// Fraction of proposals displaced sideways off the feasible grasp.
    pub poor_fraction: [f64; 3],
    /// Fraction of proposals with a negative score.
    pub negative_fraction: [f64; 3],
    /// Sideways displacement range of poor proposals (m).
    pub poor_offset: [f64; 2],
    pub score_range: [f64; 2],
    /// Minimum approach elevation below horizontal (deg).
    pub min_elevation_deg: f64,
    pub width: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            counts: [12, 6, 2],
            poor_fraction: [0.0, 0.35, 0.6],
            negative_fraction: [0.0, 0.1, 0.3],
            poor_offset: [0.025, 0.035],
            score_range: [0.3, 1.0],
            min_elevation_deg: 30.0,
            width: 0.08,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub intrinsics: CameraIntrinsics,
    /// Localization needs at least this cosine similarity.
    pub min_similarity: f64,
    pub grasp_center_tol: f64,
    pub axis_tol_deg: f64,
    pub handle_tol: f64,
    /// Allowed footprint overlap with ground-truth geometry (m).
    pub body_collision_tol: f64,
    /// Candidate viewpoints on an arc in front of the cabinet.
    pub view_count: usize,
    pub view_span_deg: f64,
    pub view_distance: f64,
    /// Camera height above the floor for search views.
    pub view_height: f64,
    /// Viewpoints kept by farthest point sampling.
    pub selected_views: usize,
    pub closeup_distance: f64,
    /// Close-up camera height above the handle.
    pub closeup_elevation: f64,
    pub proposals: ProposalConfig,
    /// Adds wall-clock stage timings to reports (breaks byte determinism).
    pub record_timings: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics {
                fx: 140.0,
                fy: 140.0,
                cx: 79.5,
                cy: 59.5,
                width: 160,
                height: 120,
            },
            min_similarity: 0.5,
            grasp_center_tol: 0.02,
            axis_tol_deg: 5.0,
            handle_tol: 0.03,
            body_collision_tol: 0.02,
            view_count: 9,
            view_span_deg: 90.0,
            view_distance: 1.3,
            view_height: 1.0,
            selected_views: 3,
            closeup_distance: 0.6,
            closeup_elevation: 0.15,
            proposals: ProposalConfig::default(),
            record_timings: false,
        }
    }
}
