//! Joint grasp/body selection:
//! `s = s_grasp + λ_body · s_body + λ_align · s_align`, where
//! `s_align = tanh(T · x̂_rt · x̂_g)` rewards a grasp approach that points the
//! same way as the ray from the body camera to the target.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::grasp::GraspCandidate;
use crate::nav::BodyCandidate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("no grasp candidates")]
    NoGrasp,
    #[error("no valid body poses")]
    NoPose,
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerWeights {
    pub lambda_body: f64,
    pub lambda_align: f64,
    pub temperature: f64,
}

impl Default for OptimizerWeights {
    fn default() -> Self {
        Self {
            lambda_body: 0.01,
            lambda_align: 0.02,
            temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    pub s_grasp: f64,
    pub s_body: f64,
    pub s_align: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSelection {
    pub grasp_index: usize,
    pub body_index: usize,
    pub s: f64,
    pub components: ScoreComponents,
}

/// `tanh(T · cos∠(target − camera, approach))`.
pub fn align_score(
    body: &BodyCandidate,
    grasp: &GraspCandidate,
    target: &Vec3,
    temperature: f64,
) -> Result<f64, OptimizerError> {
    let robot_to_target = (target - body.camera_point())
        .try_normalize(0.0)
        .ok_or_else(|| OptimizerError::DegenerateGeometry("body camera coincides with target".into()))?;
    let approach = grasp
        .approach()
        .try_normalize(0.0)
        .ok_or_else(|| OptimizerError::DegenerateGeometry("zero approach axis".into()))?;
    Ok((temperature * robot_to_target.dot(&approach)).tanh())
}

pub fn joint_score(components: &ScoreComponents, weights: &OptimizerWeights) -> f64 {
    components.s_grasp + weights.lambda_body * components.s_body + weights.lambda_align * components.s_align
}

/// Exhaustive argmax of the joint score over all (grasp, valid body) pairs.
///
/// Ties go to the higher `s_grasp`, then the lower grasp index, then the
/// lower body index. Invalid bodies are skipped; indices refer to the input
/// slices.
pub fn select_best(
    grasps: &[GraspCandidate],
    bodies: &[BodyCandidate],
    target: &Vec3,
    weights: &OptimizerWeights,
) -> Result<JointSelection, OptimizerError> {
    if !(weights.temperature > 0.0) {
        return Err(OptimizerError::InvalidTemperature(weights.temperature));
    }
    if grasps.is_empty() {
        return Err(OptimizerError::NoGrasp);
    }
    let valid: Vec<usize> = (0..bodies.len()).filter(|&i| bodies[i].valid).collect();
    if valid.is_empty() {
        return Err(OptimizerError::NoPose);
    }

    let rays: Vec<Vec3> = valid
        .iter()
        .map(|&b| {
            (target - bodies[b].camera_point())
                .try_normalize(0.0)
                .ok_or_else(|| OptimizerError::DegenerateGeometry(format!("body {b} coincides with target")))
        })
        .collect::<Result<_, _>>()?;

    let mut best: Option<JointSelection> = None;
    for (gi, g) in grasps.iter().enumerate() {
        let approach = g
            .approach()
            .try_normalize(0.0)
            .ok_or_else(|| OptimizerError::DegenerateGeometry(format!("grasp {gi} has zero approach")))?;
        for (&bi, ray) in valid.iter().zip(&rays) {
            let components = ScoreComponents {
                s_grasp: g.score,
                s_body: bodies[bi].s_body,
                s_align: (weights.temperature * ray.dot(&approach)).tanh(),
            };
            let s = joint_score(&components, weights);
            let better = match &best {
                None => true,
                Some(b) => s > b.s || (s == b.s && components.s_grasp > b.components.s_grasp),
            };
            if better {
                best = Some(JointSelection {
                    grasp_index: gi,
                    body_index: bi,
                    s,
                    components,
                });
            }
        }
    }
    Ok(best.expect("non-empty cross product"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{yaw_rotation, Pose};
    use nalgebra::{Matrix3, Vector2};

    fn body(x: f64, y: f64, s_body: f64) -> BodyCandidate {
        BodyCandidate {
            position: Vector2::new(x, y),
            yaw: 0.0,
            camera_z: 0.0,
            ring_radius: 1.0,
            s_body,
            d_obstacles: s_body,
            d_item: 0.0,
            valid: true,
            rejection: None,
        }
    }

    fn grasp_along(dir: Vec3, score: f64) -> GraspCandidate {
        // rotation whose first column is `dir`
        let x = dir.normalize();
        let helper = if x.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
        let y = helper.cross(&x).normalize();
        let z = x.cross(&y);
        GraspCandidate {
            pose: Pose::new(Matrix3::from_columns(&[x, y, z]), Vec3::zeros()).unwrap(),
            width: 0.05,
            score,
            source_rotation: 0,
        }
    }

    #[test]
    fn alignment_extremes() {
        let b = body(-1.0, 0.0, 0.0);
        let t = Vec3::zeros();
        let aligned = align_score(&b, &grasp_along(Vec3::x(), 1.0), &t, 1.0).unwrap();
        assert!((aligned - 0.761594).abs() < 1e-6);
        assert_eq!(aligned, 1f64.tanh());
        let orth = align_score(&b, &grasp_along(Vec3::y(), 1.0), &t, 1.0).unwrap();
        assert!(orth.abs() < 1e-15);
        let anti = align_score(&b, &grasp_along(-Vec3::x(), 1.0), &t, 1.0).unwrap();
        assert!((anti + 0.761594).abs() < 1e-6);
        let at_target = body(0.0, 0.0, 0.0);
        assert!(align_score(&at_target, &grasp_along(Vec3::x(), 1.0), &t, 1.0).is_err());
    }

    #[test]
    fn single_pair_uses_default_weights() {
        let b = body(-1.0, 0.0, 0.8);
        let g = grasp_along(Vec3::x(), 0.6);
        let sel = select_best(&[g], &[b], &Vec3::zeros(), &OptimizerWeights::default()).unwrap();
        assert_eq!((sel.grasp_index, sel.body_index), (0, 0));
        assert_eq!(sel.s, 0.6 + 0.01 * 0.8 + 0.02 * 1f64.tanh());
    }

    #[test]
    fn ties_go_to_lower_grasp_index() {
        let b = body(-1.0, 0.0, 0.5);
        let g = grasp_along(Vec3::x(), 0.6);
        let sel = select_best(&[g, g], &[b, b], &Vec3::zeros(), &OptimizerWeights::default()).unwrap();
        assert_eq!((sel.grasp_index, sel.body_index), (0, 0));
    }

    #[test]
    fn equal_joint_score_prefers_higher_grasp_score() {
        // tanh(40) == 1.0 in f64, so both pairs score exactly 0.625
        let w = OptimizerWeights { lambda_body: 0.0, lambda_align: 0.125, temperature: 40.0 };
        let g = [grasp_along(Vec3::x(), 0.5), grasp_along(-Vec3::x(), 0.75)];
        let b = [body(-1.0, 0.0, 0.0)];
        let sel = select_best(&g, &b, &Vec3::zeros(), &w).unwrap();
        assert_eq!(sel.s, 0.625);
        assert_eq!(sel.grasp_index, 1);
    }

    #[test]
    fn error_codes_are_distinct() {
        let b = body(-1.0, 0.0, 0.5);
        let g = grasp_along(Vec3::x(), 0.5);
        let w = OptimizerWeights::default();
        assert_eq!(select_best(&[], &[b], &Vec3::zeros(), &w), Err(OptimizerError::NoGrasp));
        assert_eq!(select_best(&[g], &[], &Vec3::zeros(), &w), Err(OptimizerError::NoPose));
        let mut invalid = b;
        invalid.valid = false;
        assert_eq!(select_best(&[g], &[invalid], &Vec3::zeros(), &w), Err(OptimizerError::NoPose));
    }

    #[test]
    fn invalid_bodies_are_skipped_but_indices_kept() {
        let mut bad = body(-1.0, 0.0, 100.0);
        bad.valid = false;
        let good = body(1.0, 0.0, 0.1);
        let g = grasp_along(Vec3::x(), 0.5);
        let sel = select_best(&[g], &[bad, good], &Vec3::zeros(), &OptimizerWeights::default()).unwrap();
        assert_eq!(sel.body_index, 1);
    }

    #[test]
    fn alignment_bounded_by_tanh_t() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let t: f64 = rng.random_range(0.1..5.0);
            let b = body(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0);
            let mut g = grasp_along(Vec3::x(), 0.5);
            g.pose.rotation = yaw_rotation(rng.random_range(-3.0..3.0)) * g.pose.rotation;
            let s = align_score(&b, &g, &Vec3::new(0.0, 0.0, 0.5), t).unwrap();
            assert!(s.abs() <= t.tanh());
        }
    }
}
