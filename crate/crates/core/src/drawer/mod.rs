//! Drawer search: pair 2D handle and drawer detections, lift handles into
//! 3D, estimate each drawer's axis of motion from the drawer-front plane,
//! fuse observations across views and plan the pull.

mod frame;

pub use frame::{read_depth_file, read_detection_frame, write_detection_frame, FrameRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::solve_rectangular;
use crate::geometry::{
    backproject, ransac_plane, BBox2D, CameraIntrinsics, GeometryError, Pose, RansacParams, Vec3,
};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum DrawerError {
    #[error("handle bounding box has zero area")]
    DegenerateBBox,
    #[error("no valid depth inside handle bounding box")]
    MissingDepth,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("axis {0:?} is too close to vertical for a pull")]
    InvalidAxis([f64; 3]),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("depth file {path}: expected {expected} bytes, found {found}")]
    DepthSize {
        path: String,
        expected: usize,
        found: usize,
    },
}

impl DrawerError {
    fn from_plane_fit(e: GeometryError) -> Self {
        match e {
            GeometryError::DegenerateInput(m) => DrawerError::DegenerateInput(m),
            other => DrawerError::Geometry(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionClass {
    Handle,
    Drawer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DetectionRecord", into = "DetectionRecord")]
pub struct Detection2D {
    pub class: DetectionClass,
    pub bbox: BBox2D,
    pub confidence: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionRecord {
    class: DetectionClass,
    bbox: [f64; 4],
    confidence: f64,
}

impl TryFrom<DetectionRecord> for Detection2D {
    type Error = String;
    fn try_from(r: DetectionRecord) -> Result<Self, String> {
        let [xmin, ymin, xmax, ymax] = r.bbox;
        let bbox = BBox2D::new(xmin, ymin, xmax, ymax).map_err(|e| e.to_string())?;
        if !(0.0..=1.0).contains(&r.confidence) {
            return Err(format!("confidence {} outside [0, 1]", r.confidence));
        }
        Ok(Detection2D {
            class: r.class,
            bbox,
            confidence: r.confidence,
        })
    }
}

impl From<Detection2D> for DetectionRecord {
    fn from(d: Detection2D) -> Self {
        DetectionRecord {
            class: d.class,
            bbox: [d.bbox.xmin, d.bbox.ymin, d.bbox.xmax, d.bbox.ymax],
            confidence: d.confidence,
        }
    }
}

/// Row-major depth buffer in meters; `0` marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width as usize * height as usize);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: u32, height: u32, depth: f32) -> Self {
        Self::new(width, height, vec![depth; width as usize * height as usize])
    }

    pub fn get(&self, u: u32, v: u32) -> f32 {
        self.data[v as usize * self.width as usize + u as usize]
    }

    pub fn set(&mut self, u: u32, v: u32, depth: f32) {
        let w = self.width as usize;
        self.data[v as usize * w + u as usize] = depth;
    }

    pub fn valid(&self, u: u32, v: u32) -> Option<f64> {
        let d = self.get(u, v);
        (d > 0.0 && d.is_finite()).then_some(d as f64)
    }
}

/// One RGB-D capture with its 2D detections.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFrame {
    pub intrinsics: CameraIntrinsics,
    /// world←camera
    pub cam_pose: Pose,
    pub detections: Vec<Detection2D>,
    pub depth: DepthImage,
}

impl DetectionFrame {
    pub fn handles(&self) -> Vec<Detection2D> {
        self.of_class(DetectionClass::Handle)
    }

    pub fn drawers(&self) -> Vec<Detection2D> {
        self.of_class(DetectionClass::Drawer)
    }

    fn of_class(&self, class: DetectionClass) -> Vec<Detection2D> {
        self.detections
            .iter()
            .filter(|d| d.class == class)
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub handle_index: usize,
    pub drawer_index: usize,
    pub handle: Detection2D,
    pub drawer: Detection2D,
    pub cost: f64,
    pub ioa: f64,
}

/// Handle position and axis of motion recovered from a single view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewObservation {
    pub handle_center: Vec3,
    pub axis: Vec3,
    pub confidence: f64,
    pub inliers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawerTarget {
    pub handle_center: Vec3,
    /// Unit axis of motion, pointing out of the drawer face.
    pub axis: Vec3,
    pub supporting_views: usize,
    pub plane_inliers: usize,
    pub confidence: f64,
    pub refined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullPlan {
    pub body_pose: Pose,
    pub pull_start: Vec3,
    pub pull_end: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrawerConfig {
    /// Weight of containment against drawer confidence in the match cost.
    pub kappa: f64,
    /// Matched pairs with lower IoA are discarded.
    pub ioa_min: f64,
    pub cluster_radius: f64,
    pub gate_radius: f64,
    pub standoff: f64,
    pub pull_distance: f64,
    /// Axes closer than this to vertical cannot be pulled (degrees).
    pub max_axis_tilt_deg: f64,
    /// Floor height the pull pose is placed on.
    pub ground_z: f64,
    /// Drawer-front pixels are subsampled on a regular grid to at most this
    /// many before plane fitting.
    pub max_plane_points: usize,
    pub ransac: RansacParams,
}

impl Default for DrawerConfig {
    fn default() -> Self {
        Self {
            kappa: 10.0,
            ioa_min: 0.5,
            cluster_radius: 0.10,
            gate_radius: 0.15,
            standoff: 0.7,
            pull_distance: 0.25,
            max_axis_tilt_deg: 30.0,
            ground_z: 0.0,
            max_plane_points: 2000,
            ransac: RansacParams::default(),
        }
    }
}

/// Fraction of the handle box covered by the drawer box.
pub fn ioa(handle: &BBox2D, drawer: &BBox2D) -> Result<f64, DrawerError> {
    let area = handle.area();
    if !(area > 0.0) {
        return Err(DrawerError::DegenerateBBox);
    }
    Ok((handle.intersection_area(drawer) / area).clamp(0.0, 1.0))
}

/// `−(κ · IoA + drawer confidence)`
pub fn match_cost(ioa: f64, drawer_confidence: f64, kappa: f64) -> f64 {
    -(kappa * ioa + drawer_confidence)
}

/// Minimum-cost one-to-one pairing of handles with drawers. Zero-area
/// handles count as IoA 0. Pairs below `ioa_min` are dropped after the
/// assignment. Output is ordered by handle index.
pub fn match_handles_to_drawers(
    handles: &[Detection2D],
    drawers: &[Detection2D],
    kappa: f64,
    ioa_min: f64,
) -> Vec<MatchedPair> {
    if handles.is_empty() || drawers.is_empty() {
        return Vec::new();
    }
    let ioas: Vec<Vec<f64>> = handles
        .iter()
        .map(|h| {
            drawers
                .iter()
                .map(|d| ioa(&h.bbox, &d.bbox).unwrap_or(0.0))
                .collect()
        })
        .collect();
    let cost: Vec<Vec<f64>> = ioas
        .iter()
        .map(|row| {
            row.iter()
                .zip(drawers)
                .map(|(&a, d)| match_cost(a, d.confidence, kappa))
                .collect()
        })
        .collect();
    solve_rectangular(&cost, drawers.len())
        .into_iter()
        .enumerate()
        .filter_map(|(hi, dj)| {
            let dj = dj?;
            let a = ioas[hi][dj];
            (a >= ioa_min).then(|| MatchedPair {
                handle_index: hi,
                drawer_index: dj,
                handle: handles[hi],
                drawer: drawers[dj],
                cost: cost[hi][dj],
                ioa: a,
            })
        })
        .collect()
}

/// Integer pixels covered by `bbox`, clamped to the image.
fn pixel_range(bbox: &BBox2D, k: &CameraIntrinsics) -> Option<(u32, u32, u32, u32)> {
    let u0 = bbox.xmin.max(0.0).ceil();
    let v0 = bbox.ymin.max(0.0).ceil();
    let u1 = bbox.xmax.min(k.width as f64 - 1.0).floor();
    let v1 = bbox.ymax.min(k.height as f64 - 1.0).floor();
    (u0 <= u1 && v0 <= v1).then_some((u0 as u32, v0 as u32, u1 as u32, v1 as u32))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Backprojects the handle box center using the median valid depth inside
/// the box.
pub fn handle_center_3d(pair: &MatchedPair, frame: &DetectionFrame) -> Result<Vec3, DrawerError> {
    let k = &frame.intrinsics;
    let (u0, v0, u1, v1) = pixel_range(&pair.handle.bbox, k).ok_or(DrawerError::MissingDepth)?;
    let mut depths = Vec::new();
    for v in v0..=v1 {
        for u in u0..=u1 {
            if let Some(d) = frame.depth.valid(u, v) {
                depths.push(d);
            }
        }
    }
    if depths.is_empty() {
        return Err(DrawerError::MissingDepth);
    }
    let d = median(&mut depths);
    let (cu, cv) = pair.handle.bbox.center();
    let cu = cu.clamp(0.0, k.width as f64 - 1.0);
    let cv = cv.clamp(0.0, k.height as f64 - 1.0);
    Ok(backproject(cu, cv, d, k, &frame.cam_pose)?)
}

/// Fits the drawer-front plane from pixels inside the drawer box but outside
/// the handle box and returns its normal, oriented toward the camera, with
/// the inlier count.
pub fn estimate_axis(
    pair: &MatchedPair,
    frame: &DetectionFrame,
    config: &DrawerConfig,
    seed: u64,
) -> Result<(Vec3, usize), DrawerError> {
    let k = &frame.intrinsics;
    let (u0, v0, u1, v1) = pixel_range(&pair.drawer.bbox, k).ok_or_else(|| {
        DrawerError::DegenerateInput("drawer box does not cover any pixel".into())
    })?;
    let (w, h) = ((u1 - u0 + 1) as usize, (v1 - v0 + 1) as usize);
    let cap = config.max_plane_points.max(3);
    let mut stride = (((w * h) as f64 / cap as f64).sqrt().ceil() as usize).max(1);
    while w.div_ceil(stride) * h.div_ceil(stride) > cap {
        stride += 1;
    }
    let mut points = Vec::new();
    for v in (v0..=v1).step_by(stride) {
        for u in (u0..=u1).step_by(stride) {
            if pair.handle.bbox.contains(u as f64, v as f64) {
                continue;
            }
            if let Some(d) = frame.depth.valid(u, v) {
                points.push(backproject(u as f64, v as f64, d, k, &frame.cam_pose)?);
            }
        }
    }
    if points.len() < 3 {
        return Err(DrawerError::DegenerateInput(format!(
            "{} valid drawer-front pixels, need 3",
            points.len()
        )));
    }
    let plane = ransac_plane(&points, &config.ransac, seed).map_err(DrawerError::from_plane_fit)?;
    let anchor = handle_center_3d(pair, frame)
        .unwrap_or_else(|_| points.iter().sum::<Vec3>() / points.len() as f64);
    let to_camera = frame.cam_pose.translation - anchor;
    let axis = if plane.normal.dot(&to_camera) < 0.0 {
        -plane.normal
    } else {
        plane.normal
    };
    Ok((axis, plane.inlier_count))
}

/// Runs matching, backprojection and axis estimation on one frame. Pairs
/// whose depth or plane fit fails are skipped.
pub fn observe_frame(frame: &DetectionFrame, config: &DrawerConfig, seed: u64) -> Vec<ViewObservation> {
    let pairs = match_handles_to_drawers(
        &frame.handles(),
        &frame.drawers(),
        config.kappa,
        config.ioa_min,
    );
    pairs
        .iter()
        .enumerate()
        .filter_map(|(k, pair)| {
            let center = handle_center_3d(pair, frame).ok()?;
            let (axis, inliers) =
                estimate_axis(pair, frame, config, derive_seed(seed, &[k as u64])).ok()?;
            Some(ViewObservation {
                handle_center: center,
                axis,
                confidence: pair.handle.confidence,
                inliers,
            })
        })
        .collect()
}

fn seeding_order(a: &ViewObservation, b: &ViewObservation) -> std::cmp::Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.handle_center.x.total_cmp(&b.handle_center.x))
        .then(a.handle_center.y.total_cmp(&b.handle_center.y))
        .then(a.handle_center.z.total_cmp(&b.handle_center.z))
}

/// Greedy clustering of per-view observations. The most confident
/// unassigned observation seeds a cluster that absorbs every unassigned
/// observation within `cluster_radius` of it. Each cluster becomes a target
/// with confidence-weighted center and axis; targets are sorted by total
/// confidence, descending.
pub fn fuse_views(observations: &[ViewObservation], cluster_radius: f64) -> Vec<DrawerTarget> {
    let mut sorted = observations.to_vec();
    sorted.sort_by(seeding_order);
    let mut taken = vec![false; sorted.len()];
    let mut targets = Vec::new();
    for s in 0..sorted.len() {
        if taken[s] {
            continue;
        }
        let seed = sorted[s];
        let members: Vec<usize> = (s..sorted.len())
            .filter(|&i| {
                !taken[i] && (sorted[i].handle_center - seed.handle_center).norm() <= cluster_radius
            })
            .collect();
        let mut weight = 0.0;
        let mut center = Vec3::zeros();
        let mut axis = Vec3::zeros();
        let mut inliers = 0;
        for &i in &members {
            taken[i] = true;
            let o = &sorted[i];
            weight += o.confidence;
            center += (o.handle_center - seed.handle_center) * o.confidence;
            axis += o.axis * o.confidence;
            inliers += o.inliers;
        }
        let (center, axis) = if weight > 0.0 {
            (
                seed.handle_center + center / weight,
                axis.try_normalize(1e-12).unwrap_or(seed.axis),
            )
        } else {
            let n = members.len() as f64;
            let mean = members.iter().map(|&i| sorted[i].handle_center).sum::<Vec3>() / n;
            let axis = members
                .iter()
                .map(|&i| sorted[i].axis)
                .sum::<Vec3>()
                .try_normalize(1e-12)
                .unwrap_or(seed.axis);
            (mean, axis)
        };
        targets.push(DrawerTarget {
            handle_center: center,
            axis,
            supporting_views: members.len(),
            plane_inliers: inliers,
            confidence: weight,
            refined: false,
        });
    }
    targets.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    targets
}

/// Places the body `standoff` in front of the handle along the horizontal
/// projection of the axis, facing the drawer, and the pull segment along
/// that direction.
pub fn plan_pull(target: &DrawerTarget, config: &DrawerConfig) -> Result<PullPlan, DrawerError> {
    let a = target.axis;
    let tilt_limit = config.max_axis_tilt_deg.to_radians();
    let horizontal = Vec3::new(a.x, a.y, 0.0);
    let from_vertical = horizontal.norm().atan2(a.z.abs());
    if !(from_vertical >= tilt_limit) {
        return Err(DrawerError::InvalidAxis([a.x, a.y, a.z]));
    }
    let dir = horizontal.normalize();
    let h = target.handle_center;
    let body = Vec3::new(h.x + config.standoff * dir.x, h.y + config.standoff * dir.y, config.ground_z);
    let yaw = (-dir.y).atan2(-dir.x);
    Ok(PullPlan {
        body_pose: Pose::from_yaw(yaw, body),
        pull_start: h,
        pull_end: h + dir * config.pull_distance,
    })
}

/// Re-observes a target from a close-up frame. The close-up observation
/// nearest the initial center within `gate_radius` replaces center and axis;
/// otherwise the initial target is returned unrefined.
pub fn refine_target(
    initial: &DrawerTarget,
    close_frame: &DetectionFrame,
    config: &DrawerConfig,
    seed: u64,
) -> DrawerTarget {
    let nearest = observe_frame(close_frame, config, seed)
        .into_iter()
        .map(|o| ((o.handle_center - initial.handle_center).norm(), o))
        .filter(|(d, _)| *d <= config.gate_radius)
        .min_by(|a, b| a.0.total_cmp(&b.0));
    match nearest {
        Some((_, o)) => DrawerTarget {
            handle_center: o.handle_center,
            axis: o.axis,
            supporting_views: initial.supporting_views + 1,
            plane_inliers: o.inliers,
            confidence: initial.confidence + o.confidence,
            refined: true,
        },
        None => DrawerTarget {
            refined: false,
            ..*initial
        },
    }
}
