//! Robot base placement: candidate body positions on rings around the
//! target, validity checks against the scanned scene, and the body metric
//! `s_body = d_obstacles − λ_item · d_item`.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{line_of_sight, KdTree, Vec3};
use crate::scene::{InstanceId, PointCloudScene, SceneError};

#[derive(Debug, Error)]
pub enum NavError {
    #[error("invalid nav config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    OutOfScene,
    NoLineOfSight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyCandidate {
    /// Ground-plane position.
    pub position: Vector2<f64>,
    /// Facing direction in radians.
    pub yaw: f64,
    /// World height of the body camera.
    pub camera_z: f64,
    pub ring_radius: f64,
    pub s_body: f64,
    pub d_obstacles: f64,
    pub d_item: f64,
    pub valid: bool,
    pub rejection: Option<RejectReason>,
}

impl BodyCandidate {
    pub fn camera_point(&self) -> Vec3 {
        Vec3::new(self.position.x, self.position.y, self.camera_z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    pub radii: Vec<f64>,
    pub angular_step: f64,
    pub footprint_radius: f64,
    /// Camera height above the floor.
    pub camera_height: f64,
    /// Height above the floor at which body clearance is measured.
    pub standing_height: f64,
    pub lambda_item: f64,
    pub los_clearance: f64,
    /// Obstacle points this close to the target are ignored by the
    /// line-of-sight test (the support surface under the object).
    pub los_target_exclusion: f64,
    /// Points below `floor + floor_slab` are not body obstacles.
    pub floor_slab: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            radii: vec![0.7, 0.9, 1.1],
            angular_step: TAU / 36.0,
            footprint_radius: 0.35,
            camera_height: 0.8,
            standing_height: 0.5,
            lambda_item: 0.5,
            los_clearance: 0.10,
            los_target_exclusion: 0.25,
            floor_slab: 0.02,
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<(), NavError> {
        let bad = |m: String| Err(NavError::InvalidConfig(m));
        if self.radii.is_empty() {
            return bad("radii must not be empty".into());
        }
        if self.radii[0] <= 0.0 || self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("radii {:?} must be positive ascending", self.radii));
        }
        if !(self.angular_step > 0.0 && self.angular_step <= PI) {
            return bad(format!("angular_step {} outside (0, π]", self.angular_step));
        }
        if !(self.footprint_radius >= 0.0 && self.los_clearance > 0.0) {
            return bad("footprint_radius must be >= 0 and los_clearance > 0".into());
        }
        if !(self.lambda_item >= 0.0) {
            return bad("lambda_item must be >= 0".into());
        }
        Ok(())
    }

    /// Candidates per ring, `⌈2π / angular_step⌉`.
    pub fn ring_count(&self) -> usize {
        // guards against 2π/(2π/n) evaluating to n + ε
        (TAU / self.angular_step - 1e-9).ceil() as usize
    }
}

pub fn body_score(d_obstacles: f64, d_item: f64, lambda_item: f64) -> f64 {
    d_obstacles - lambda_item * d_item
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Unvalidated candidates on concentric rings around the target's ground
/// projection, each facing the target. Ring-major order.
pub fn sample_positions(target: &Vec3, config: &NavConfig) -> Result<Vec<BodyCandidate>, NavError> {
    config.validate()?;
    let per_ring = config.ring_count();
    let mut out = Vec::with_capacity(per_ring * config.radii.len());
    for &radius in &config.radii {
        for k in 0..per_ring {
            let theta = k as f64 * config.angular_step;
            let (s, c) = theta.sin_cos();
            out.push(BodyCandidate {
                position: Vector2::new(target.x + radius * c, target.y + radius * s),
                yaw: wrap_angle(theta + PI),
                camera_z: config.camera_height,
                ring_radius: radius,
                s_body: 0.0,
                d_obstacles: 0.0,
                d_item: radius,
                valid: false,
                rejection: None,
            });
        }
    }
    Ok(out)
}

/// Marks each candidate valid or invalid and fills its score terms.
///
/// A candidate is in-scene when it lies inside the scene bounds shrunk by
/// the footprint radius and the nearest non-floor, non-target point at
/// standing height is at least a footprint radius away. It then needs a
/// clear line of sight from its camera to the target centroid.
pub fn validate_candidates(
    candidates: &[BodyCandidate],
    scene: &PointCloudScene,
    target: InstanceId,
    config: &NavConfig,
) -> Result<Vec<BodyCandidate>, NavError> {
    config.validate()?;
    let centroid = scene.centroid(target)?;
    let bounds = *scene.bounds();
    let floor = bounds.min.z;
    let occluders = KdTree::new(
        (0..scene.points().len())
            .filter(|&i| scene.owner_of(i) != Some(target))
            .map(|i| scene.points()[i])
            .collect(),
    );

    candidates
        .par_iter()
        .map(|c| {
            let mut c = *c;
            let (x, y) = (c.position.x, c.position.y);
            c.camera_z = floor + config.camera_height;
            let standing = Vec3::new(x, y, floor + config.standing_height);
            c.d_obstacles = match scene.distance_to_obstacles_above(
                &standing,
                Some(target),
                Some(config.floor_slab),
            ) {
                Ok(d) => d,
                Err(SceneError::EmptyScene) => f64::INFINITY,
                Err(e) => return Err(e.into()),
            };
            c.d_item = (c.position - Vector2::new(centroid.x, centroid.y)).norm();
            c.s_body = body_score(c.d_obstacles, c.d_item, config.lambda_item);

            let fp = config.footprint_radius;
            let inside = x >= bounds.min.x + fp
                && x <= bounds.max.x - fp
                && y >= bounds.min.y + fp
                && y <= bounds.max.y - fp;
            c.rejection = if !inside || c.d_obstacles < fp {
                Some(RejectReason::OutOfScene)
            } else if !line_of_sight(
                &c.camera_point(),
                &centroid,
                &occluders,
                config.los_clearance,
                config.los_target_exclusion,
            ) {
                Some(RejectReason::NoLineOfSight)
            } else {
                None
            };
            c.valid = c.rejection.is_none();
            Ok(c)
        })
        .collect()
}
