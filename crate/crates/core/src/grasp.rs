//! Grasp candidates from an external 7-DoF two-finger grasp detector.
//!
//! The detector is run several times on copies of the object rotated about
//! its centroid; each run yields a batch expressed in that rotated frame.
//! Batches are merged back into the world frame and then filtered.
//!
//! Candidate convention: `pose.translation` is the grasp center (midpoint
//! between the fingertip contacts) and the first rotation column is the
//! approach direction.

use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    check_rotation, matrix_from_row_major, yaw_rotation, GeometryError, KdTree, Pose, Vec3,
};

#[derive(Debug, Error)]
pub enum GraspError {
    #[error("batch {batch}: invalid rotation: {source}")]
    InvalidRotation {
        batch: usize,
        source: GeometryError,
    },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspCandidate {
    pub pose: Pose,
    pub width: f64,
    pub score: f64,
    pub source_rotation: usize,
}

impl GraspCandidate {
    pub fn center(&self) -> Vec3 {
        self.pose.translation
    }

    /// Unit approach direction.
    pub fn approach(&self) -> Vec3 {
        self.pose.rotation.column(0).into_owned()
    }
}

/// One detector run: the rotation applied to the object (about its
/// centroid) and the candidates found in that rotated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspBatch {
    pub rotation: Matrix3<f64>,
    pub candidates: Vec<GraspCandidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraspConfig {
    /// Number of yaw-rotated detector runs.
    pub sweep_count: usize,
    /// Candidates kept per run, by descending score.
    pub top_k: usize,
    /// Max distance from grasp center to the nearest object point.
    pub on_object_tol: f64,
    /// Environment points within this distance of the object box are
    /// passed along with the object.
    pub isolate_padding: f64,
}

impl Default for GraspConfig {
    fn default() -> Self {
        Self {
            sweep_count: 4,
            top_k: 10,
            on_object_tol: 0.02,
            isolate_padding: 0.3,
        }
    }
}

/// Yaw rotations for `count` evenly spaced detector runs.
pub fn sweep_rotations(count: usize) -> Vec<Matrix3<f64>> {
    (0..count)
        .map(|r| yaw_rotation(std::f64::consts::TAU * r as f64 / count as f64))
        .collect()
}

/// Keeps the `k` best-scoring candidates, ties by original order.
pub fn top_k(candidates: &[GraspCandidate], k: usize) -> Vec<GraspCandidate> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[b].score.total_cmp(&candidates[a].score).then(a.cmp(&b)));
    order.truncate(k);
    order.into_iter().map(|i| candidates[i]).collect()
}

/// Maps every batch back to the world frame by undoing its rotation about
/// `centroid`, tagging each candidate with its batch index.
pub fn merge_rotation_sweeps(
    batches: &[GraspBatch],
    centroid: &Vec3,
) -> Result<Vec<GraspCandidate>, GraspError> {
    let mut merged = Vec::with_capacity(batches.iter().map(|b| b.candidates.len()).sum());
    for (b, batch) in batches.iter().enumerate() {
        check_rotation(&batch.rotation)
            .map_err(|source| GraspError::InvalidRotation { batch: b, source })?;
        let undo = batch.rotation.transpose();
        for c in &batch.candidates {
            let translation = if batch.rotation == Matrix3::identity() {
                c.pose.translation
            } else {
                undo * (c.pose.translation - centroid) + centroid
            };
            merged.push(GraspCandidate {
                pose: Pose {
                    rotation: undo * c.pose.rotation,
                    translation,
                },
                source_rotation: b,
                ..*c
            });
        }
    }
    Ok(merged)
}

/// Keeps candidates with strictly positive score whose center lies within
/// `on_object_tol` of an object point. Order is preserved.
pub fn filter_grasps(
    candidates: &[GraspCandidate],
    object_points: &[Vec3],
    on_object_tol: f64,
) -> Result<Vec<GraspCandidate>, GraspError> {
    if object_points.is_empty() {
        return Err(GraspError::DegenerateInput(
            "object point cloud is empty".into(),
        ));
    }
    let tree = KdTree::from_slice(object_points);
    Ok(candidates
        .iter()
        .filter(|c| {
            c.score > 0.0
                && tree
                    .nearest(&c.center())
                    .is_some_and(|(_, d)| d <= on_object_tol)
        })
        .copied()
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateRecord {
    translation: [f64; 3],
    rotation: [f64; 9],
    width: f64,
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchRecord {
    rotation: [f64; 9],
    candidates: Vec<CandidateRecord>,
}

/// Parses a grasp batch document; `source_rotation` is set to `batch_index`.
pub fn parse_grasp_batch(
    text: &str,
    batch_index: usize,
    origin: &str,
) -> Result<GraspBatch, GraspError> {
    let parse_err = |message: String| GraspError::Parse {
        path: origin.to_string(),
        message,
    };
    let record: BatchRecord = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let rotation = matrix_from_row_major(&record.rotation).expect("9 entries");
    check_rotation(&rotation).map_err(|source| GraspError::InvalidRotation {
        batch: batch_index,
        source,
    })?;
    let candidates = record
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if !(c.width >= 0.0) || !c.score.is_finite() {
                return Err(parse_err(format!(
                    "candidate {i}: width {} / score {} invalid",
                    c.width, c.score
                )));
            }
            let pose = Pose::new(
                matrix_from_row_major(&c.rotation).expect("9 entries"),
                Vec3::from(c.translation),
            )
            .map_err(|e| parse_err(format!("candidate {i}: {e}")))?;
            Ok(GraspCandidate {
                pose,
                width: c.width,
                score: c.score,
                source_rotation: batch_index,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(GraspBatch {
        rotation,
        candidates,
    })
}

pub fn read_grasp_batch(path: &Path, batch_index: usize) -> Result<GraspBatch, GraspError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| GraspError::Parse {
        path: origin.clone(),
        message: e.to_string(),
    })?;
    parse_grasp_batch(&text, batch_index, &origin)
}

pub fn format_grasp_batch(batch: &GraspBatch) -> String {
    let record = BatchRecord {
        rotation: crate::geometry::matrix_to_row_major(&batch.rotation),
        candidates: batch
            .candidates
            .iter()
            .map(|c| CandidateRecord {
                translation: [c.pose.translation.x, c.pose.translation.y, c.pose.translation.z],
                rotation: crate::geometry::matrix_to_row_major(&c.pose.rotation),
                width: c.width,
                score: c.score,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&record).expect("batch serializes")
}
