//! Rigid transforms, pinhole projection and the point-set primitives every
//! other module builds on.
//!
//! Conventions used throughout the crate:
//! - world frame is right-handed with `+z` up;
//! - camera frames are optical frames (`+z` forward, `+x` right, `+y` down);
//! - a camera pose maps camera coordinates into the world (world←camera).

mod kdtree;
mod ransac;
mod sampling;
mod visibility;

pub use kdtree::KdTree;
pub use ransac::{ransac_plane, RansacParams};
pub use sampling::farthest_point_sample;
pub use visibility::{line_of_sight, segment_point_distance};

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Orthonormality tolerance for rotation matrices.
pub const ROTATION_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid depth {0} (must be positive and finite)")]
    InvalidDepth(f64),
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    PixelOutOfBounds {
        u: f64,
        v: f64,
        width: u32,
        height: u32,
    },
    #[error("point is behind the camera (camera-frame z = {0})")]
    BehindCamera(f64),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no plane found: best inlier fraction {fraction:.3} below {required:.3}")]
    NoPlaneFound { fraction: f64, required: f64 },
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid bounding box: {0}")]
    InvalidBBox(String),
}

/// Returns an error unless `m` is orthonormal with determinant +1.
pub fn check_rotation(m: &Matrix3<f64>) -> Result<(), GeometryError> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(GeometryError::InvalidRotation("non-finite entry".into()));
    }
    let err = (m.transpose() * m - Matrix3::identity()).abs().max();
    if err > ROTATION_TOL {
        return Err(GeometryError::InvalidRotation(format!(
            "RᵀR deviates from identity by {err:.3e}"
        )));
    }
    let det = m.determinant();
    if (det - 1.0).abs() > ROTATION_TOL {
        return Err(GeometryError::InvalidRotation(format!(
            "determinant {det:.9} != +1"
        )));
    }
    Ok(())
}

/// Rotation about the world `+z` axis.
pub fn yaw_rotation(yaw: f64) -> Matrix3<f64> {
    let (s, c) = yaw.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn matrix_from_row_major(v: &[f64]) -> Option<Matrix3<f64>> {
    (v.len() == 9).then(|| Matrix3::from_row_slice(v))
}

pub fn matrix_to_row_major(m: &Matrix3<f64>) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 3 + c] = m[(r, c)];
        }
    }
    out
}

/// A rigid transform `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Builds a pose after validating the rotation.
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self, GeometryError> {
        check_rotation(&rotation)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidRotation(
                "non-finite translation".into(),
            ));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Planar pose: yaw about `+z` at the given position.
    pub fn from_yaw(yaw: f64, translation: Vec3) -> Self {
        Self {
            rotation: yaw_rotation(yaw),
            translation,
        }
    }

    /// Camera pose at `eye` looking at `target`, optical frame, with world
    /// `+z` as the up hint. Returns `None` when the view direction is
    /// (anti)parallel to `+z` or `eye == target`.
    pub fn look_at(eye: Vec3, target: Vec3) -> Option<Self> {
        let forward = (target - eye).try_normalize(1e-12)?;
        let right = forward.cross(&Vec3::z()).try_normalize(1e-9)?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_columns(&[right, down, forward]);
        Some(Self {
            rotation,
            translation: eye,
        })
    }

    /// Parses a row-major 4×4 homogeneous matrix.
    pub fn from_homogeneous_row_major(v: &[f64]) -> Result<Self, GeometryError> {
        if v.len() != 16 {
            return Err(GeometryError::InvalidRotation(format!(
                "expected 16 values, got {}",
                v.len()
            )));
        }
        let m = Matrix4::from_row_slice(v);
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(GeometryError::InvalidRotation(format!(
                "bottom row {bottom:?} is not [0, 0, 0, 1]"
            )));
        }
        let rotation = m.fixed_view::<3, 3>(0, 0).into_owned();
        let translation = Vec3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]);
        Self::new(rotation, translation)
    }

    pub fn to_homogeneous_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 4 + c] = self.rotation[(r, c)];
            }
            out[r * 4 + 3] = self.translation[r];
        }
        out[15] = 1.0;
        out
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Yaw of the rotation's `x` column projected onto the ground plane.
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PoseRepr {
            rotation: matrix_to_row_major(&self.rotation),
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(d)?;
        Pose::new(
            Matrix3::from_row_slice(&repr.rotation),
            Vec3::from(repr.translation),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Pinhole intrinsics in pixels. Pixel `(u, v)` addresses the image plane
/// with `u` along the width; integer coordinates are pixel centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "cx={} outside [0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "cy={} outside [0, {})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Lifts pixel `(u, v)` with camera-frame depth `depth` into the world.
pub fn backproject(
    u: f64,
    v: f64,
    depth: f64,
    intrinsics: &CameraIntrinsics,
    cam_pose: &Pose,
) -> Result<Vec3, GeometryError> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(GeometryError::InvalidDepth(depth));
    }
    if !intrinsics.contains_pixel(u, v) {
        return Err(GeometryError::PixelOutOfBounds {
            u,
            v,
            width: intrinsics.width,
            height: intrinsics.height,
        });
    }
    let local = Vec3::new(
        (u - intrinsics.cx) * depth / intrinsics.fx,
        (v - intrinsics.cy) * depth / intrinsics.fy,
        depth,
    );
    Ok(cam_pose.transform_point(&local))
}

/// Projects a world point to `(u, v, depth)`; `depth` is the camera-frame z.
/// The result may fall outside the image.
pub fn project(
    p: &Vec3,
    intrinsics: &CameraIntrinsics,
    cam_pose: &Pose,
) -> Result<(f64, f64, f64), GeometryError> {
    let local = cam_pose.inverse().transform_point(p);
    if !(local.z > 0.0) {
        return Err(GeometryError::BehindCamera(local.z));
    }
    let u = intrinsics.fx * local.x / local.z + intrinsics.cx;
    let v = intrinsics.fy * local.y / local.z + intrinsics.cy;
    Ok((u, v, local.z))
}

/// A plane `normal·p = offset` with the inlier support it was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
    pub inlier_count: usize,
}

impl Plane {
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Axis-aligned 2D box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox2D {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BBox2D {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, GeometryError> {
        let b = Self {
            xmin,
            ymin,
            xmax,
            ymax,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.xmin, self.ymin, self.xmax, self.ymax]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.xmin > self.xmax || self.ymin > self.ymax {
            return Err(GeometryError::InvalidBBox(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.xmin + self.xmax),
            0.5 * (self.ymin + self.ymax),
        )
    }

    pub fn intersection_area(&self, other: &BBox2D) -> f64 {
        let w = self.xmax.min(other.xmax) - self.xmin.max(other.xmin);
        let h = self.ymax.min(other.ymax) - self.ymin.max(other.ymin);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.xmin && u <= self.xmax && v >= self.ymin && v <= self.ymax
    }

    /// Clips to `[0, width-1] × [0, height-1]`; `None` if nothing remains.
    pub fn clip_to_image(&self, width: u32, height: u32) -> Option<BBox2D> {
        let b = BBox2D {
            xmin: self.xmin.max(0.0),
            ymin: self.ymin.max(0.0),
            xmax: self.xmax.min(width as f64 - 1.0),
            ymax: self.ymax.min(height as f64 - 1.0),
        };
        (b.xmin <= b.xmax && b.ymin <= b.ymax).then_some(b)
    }
}

/// Axis-aligned 3D bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        other.is_empty() || (self.contains(&other.min) && self.contains(&other.max))
    }

    pub fn center(&self) -> Vec3 {
        0.5 * (self.min + self.max)
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        Aabb {
            min: self.min - Vec3::repeat(margin),
            max: self.max + Vec3::repeat(margin),
        }
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let e = (self.min[i] - p[i]).max(p[i] - self.max[i]).max(0.0);
            d2 += e * e;
        }
        d2.sqrt()
    }
}

/// Angle between two vectors in radians.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 1280, 480).unwrap()
    }

    fn random_pose(rng: &mut impl Rng) -> Pose {
        let axis = Unit::new_normalize(Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0) + 1e-3,
        ));
        let rot = Rotation3::from_axis_angle(&axis, rng.random_range(-3.1..3.1));
        Pose::new(
            *rot.matrix(),
            Vec3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ),
        )
        .unwrap()
    }

    #[test]
    fn principal_ray_backprojects_onto_optical_axis() {
        let p = backproject(320.0, 240.0, 2.0, &k(), &Pose::identity()).unwrap();
        assert_eq!(p, Vec3::new(0.0, 0.0, 2.0));
    }

    #[test]
    fn unit_offset_pixel() {
        let p = backproject(820.0, 240.0, 1.0, &k(), &Pose::identity()).unwrap();
        assert_relative_eq!(p, Vec3::new(1.0, 0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn backproject_rejects_bad_depth_and_pixels() {
        let pose = Pose::identity();
        assert!(matches!(
            backproject(10.0, 10.0, 0.0, &k(), &pose),
            Err(GeometryError::InvalidDepth(_))
        ));
        assert!(matches!(
            backproject(10.0, 10.0, -1.0, &k(), &pose),
            Err(GeometryError::InvalidDepth(_))
        ));
        assert!(matches!(
            backproject(1280.0, 10.0, 1.0, &k(), &pose),
            Err(GeometryError::PixelOutOfBounds { .. })
        ));
        assert!(matches!(
            backproject(-0.5, 10.0, 1.0, &k(), &pose),
            Err(GeometryError::PixelOutOfBounds { .. })
        ));
    }

    #[test]
    fn project_principal_point() {
        let (u, v, d) = project(&Vec3::new(0.0, 0.0, 2.0), &k(), &Pose::identity()).unwrap();
        assert_eq!((u, v, d), (320.0, 240.0, 2.0));
    }

    #[test]
    fn project_rejects_points_on_or_behind_camera_plane() {
        let pose = Pose::identity();
        assert!(matches!(
            project(&Vec3::new(1.0, 0.0, 0.0), &k(), &pose),
            Err(GeometryError::BehindCamera(_))
        ));
        assert!(matches!(
            project(&Vec3::new(0.0, 0.0, -1.0), &k(), &pose),
            Err(GeometryError::BehindCamera(_))
        ));
    }

    #[test]
    fn round_trip_over_seeded_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = k();
        for _ in 0..1000 {
            let pose = random_pose(&mut rng);
            let u = rng.random_range(0.0..k.width as f64);
            let v = rng.random_range(0.0..k.height as f64);
            let d = rng.random_range(0.05..20.0);
            let p = backproject(u, v, d, &k, &pose).unwrap();
            let (u2, v2, d2) = project(&p, &k, &pose).unwrap();
            assert!((u - u2).abs() < 1e-6 && (v - v2).abs() < 1e-6, "{u} {v} {u2} {v2}");
            assert!((d - d2).abs() < 1e-9 * d.max(1.0));
        }
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 1.0, -0.1, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 4, 4).is_ok());
    }

    #[test]
    fn pose_rejects_reflections_and_skew() {
        let mut m = Matrix3::identity();
        m[(2, 2)] = -1.0;
        assert!(Pose::new(m, Vec3::zeros()).is_err());
        let mut m = Matrix3::identity();
        m[(0, 1)] = 0.01;
        assert!(Pose::new(m, Vec3::zeros()).is_err());
    }

    #[test]
    fn homogeneous_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_pose(&mut rng);
        let q = Pose::from_homogeneous_row_major(&p.to_homogeneous_row_major()).unwrap();
        assert_eq!(p, q);
        let mut bad = p.to_homogeneous_row_major();
        bad[12] = 1.0;
        assert!(Pose::from_homogeneous_row_major(&bad).is_err());
    }

    #[test]
    fn look_at_points_optical_axis_at_target() {
        let eye = Vec3::new(1.0, -2.0, 0.8);
        let target = Vec3::new(0.0, 0.0, 0.4);
        let pose = Pose::look_at(eye, target).unwrap();
        check_rotation(&pose.rotation).unwrap();
        let k = k();
        let (u, v, d) = project(&target, &k, &pose).unwrap();
        assert_relative_eq!(u, k.cx, epsilon = 1e-9);
        assert_relative_eq!(v, k.cy, epsilon = 1e-9);
        assert_relative_eq!(d, (target - eye).norm(), epsilon = 1e-12);
        // image "up" is world up
        let above = project(&(target + Vec3::z() * 0.1), &k, &pose).unwrap();
        assert!(above.1 < v);
    }

    #[test]
    fn bbox_geometry() {
        let a = BBox2D::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let b = BBox2D::new(5.0, 0.0, 20.0, 10.0).unwrap();
        assert_eq!(a.intersection_area(&b), 50.0);
        assert_eq!(a.area(), 100.0);
        assert!(BBox2D::new(1.0, 0.0, 0.0, 1.0).is_err());
        let c = BBox2D::new(-5.0, -5.0, 3.0, 3.0).unwrap();
        assert_eq!(
            c.clip_to_image(10, 10).unwrap(),
            BBox2D::new(0.0, 0.0, 3.0, 3.0).unwrap()
        );
        assert!(BBox2D::new(20.0, 20.0, 30.0, 30.0)
            .unwrap()
            .clip_to_image(10, 10)
            .is_none());
    }

    #[test]
    fn aabb_distance() {
        let b = Aabb {
            min: Vec3::zeros(),
            max: Vec3::new(1.0, 1.0, 1.0),
        };
        assert_eq!(b.distance_to(&Vec3::new(0.5, 0.5, 0.5)), 0.0);
        assert_eq!(b.distance_to(&Vec3::new(2.0, 0.5, 0.5)), 1.0);
        assert_relative_eq!(b.distance_to(&Vec3::new(2.0, 2.0, 0.5)), 2f64.sqrt());
    }

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (
            -1.0..1.0f64,
            -1.0..1.0f64,
            0.01..1.0f64,
            -3.1..3.1f64,
            prop::array::uniform3(-10.0..10.0f64),
        )
            .prop_map(|(x, y, z, angle, t)| {
                let axis = Unit::new_normalize(Vec3::new(x, y, z));
                Pose::new(
                    *Rotation3::from_axis_angle(&axis, angle).matrix(),
                    Vec3::from(t),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn composition_is_associative(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
            let l = (a * b) * c;
            let r = a * (b * c);
            prop_assert!((l.rotation - r.rotation).abs().max() < 1e-9);
            prop_assert!((l.translation - r.translation).abs().max() < 1e-9);
        }

        #[test]
        fn inverse_composes_to_identity(a in arb_pose()) {
            for id in [a * a.inverse(), a.inverse() * a] {
                prop_assert!((id.rotation - Matrix3::identity()).abs().max() < 1e-9);
                prop_assert!(id.translation.abs().max() < 1e-9);
            }
        }
    }
}
