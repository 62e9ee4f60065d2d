use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{NoiseModel, SyntheticScene};
use crate::drawer::{DepthImage, Detection2D, DetectionClass};
use crate::geometry::{project, BBox2D, CameraIntrinsics, Pose, Vec3};

/// Ray-casts the scene's primitives and floor from `cam_pose`, then applies
/// per-pixel dropout and Gaussian depth noise. Pixels that hit nothing, or
/// whose noisy depth is not positive, are 0.
pub fn render_depth(
    scene: &SyntheticScene,
    k: &CameraIntrinsics,
    cam_pose: &Pose,
    noise: &NoiseModel,
    seed: u64,
) -> DepthImage {
    let prims = scene.primitives();
    let origin = cam_pose.translation;
    let [rx, ry] = scene.room();
    let floor = scene.floor_z();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut depth = DepthImage::filled(k.width, k.height, 0.0);
    for v in 0..k.height {
        for u in 0..k.width {
            // camera-frame ray with unit z, so the hit parameter is the depth
            let local = Vec3::new((u as f64 - k.cx) / k.fx, (v as f64 - k.cy) / k.fy, 1.0);
            let dir = cam_pose.rotation * local;
            let mut t = prims
                .iter()
                .filter_map(|p| p.ray_hit(&origin, &dir))
                .fold(f64::INFINITY, f64::min);
            if dir.z < 0.0 {
                let tf = (floor - origin.z) / dir.z;
                let hit = origin + dir * tf;
                if tf > 0.0 && hit.x >= 0.0 && hit.y >= 0.0 && hit.x <= rx && hit.y <= ry {
                    t = t.min(tf);
                }
            }
            let drop: f64 = rng.random();
            let n: f64 = rng.sample(StandardNormal);
            if t.is_finite() && drop >= noise.depth_dropout {
                let d = t + noise.depth_sigma * n;
                if d > 0.0 {
                    depth.set(u, v, d as f32);
                }
            }
        }
    }
    depth
}

fn projected_box(corners: &[Vec3], k: &CameraIntrinsics, pose: &Pose) -> Option<BBox2D> {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for c in corners {
        let (u, v, _) = project(c, k, pose).ok()?;
        b = [b[0].min(u), b[1].min(v), b[2].max(u), b[3].max(v)];
    }
    BBox2D::new(b[0], b[1], b[2], b[3]).ok()
}

/// Stand-in detector: projects every drawer front and handle facing the
/// camera, shifts each box by Gaussian pixel jitter, clips to the image,
/// drops boxes less than half visible, applies detection dropout and draws
/// confidences uniformly from the configured range. Occlusion is ignored.
///
/// Each drawer yields its handle then its front, in scene order.
pub fn oracle_detector(
    scene: &SyntheticScene,
    k: &CameraIntrinsics,
    cam_pose: &Pose,
    noise: &NoiseModel,
    seed: u64,
) -> Vec<Detection2D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eye = cam_pose.translation;
    let [lo, hi] = noise.confidence_range;
    let mut out = Vec::new();
    for cab in &scene.cabinets {
        for d in &cab.drawers {
            let facing = d.axis.dot(&(eye - d.front.center)) > 0.0;
            for (class, prim) in [(DetectionClass::Handle, &d.handle), (DetectionClass::Drawer, &d.front)] {
                let du: f64 = rng.sample(StandardNormal);
                let dv: f64 = rng.sample(StandardNormal);
                let drop: f64 = rng.random();
                let conf = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                if !facing || drop < noise.detection_dropout {
                    continue;
                }
                let Some(full) = projected_box(&prim.corners(), k, cam_pose) else {
                    continue;
                };
                let (su, sv) = (noise.bbox_jitter_sigma * du, noise.bbox_jitter_sigma * dv);
                let shifted = BBox2D {
                    xmin: full.xmin + su,
                    ymin: full.ymin + sv,
                    xmax: full.xmax + su,
                    ymax: full.ymax + sv,
                };
                let Some(clipped) = shifted.clip_to_image(k.width, k.height) else {
                    continue;
                };
                if !(full.area() > 0.0) || clipped.area() < 0.5 * full.area() {
                    continue;
                }
                out.push(Detection2D {
                    class,
                    bbox: clipped,
                    confidence: conf,
                });
            }
        }
    }
    out
}
