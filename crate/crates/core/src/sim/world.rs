use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geometry::{yaw_rotation, Aabb, Vec3};
use crate::scene::{InstanceId, InstanceMask, PointCloudScene};
use crate::seed::{derive_seed, stream};

/// Grasp centers sit this far below the top face.
pub const GRASP_DEPTH: f64 = 0.01;

pub const HANDLE_SIZE: [f64; 3] = [0.025, 0.12, 0.03];
const FRONT_THICKNESS: f64 = 0.02;
const FRONT_GAP: f64 = 0.01;
const PLINTH: f64 = 0.05;
const CLUTTER_SIZE: [f64; 3] = [0.05, 0.05, 0.10];
const CLUTTER_LABEL: &str = "clutter";
const TABLE_EDGE_MARGIN: f64 = 0.05;
const PLACEMENT_GAP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Box { half: Vec3 },
    /// Vertical axis.
    Cylinder { radius: f64, half_height: f64 },
}

/// Solid resting primitive, rotated about `+z` by `yaw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub center: Vec3,
    pub yaw: f64,
    pub shape: Shape,
}

impl Primitive {
    pub fn cuboid(center: Vec3, yaw: f64, size: [f64; 3]) -> Self {
        Self {
            center,
            yaw,
            shape: Shape::Box {
                half: Vec3::new(size[0], size[1], size[2]) * 0.5,
            },
        }
    }

    pub fn cylinder(center: Vec3, radius: f64, height: f64) -> Self {
        Self {
            center,
            yaw: 0.0,
            shape: Shape::Cylinder {
                radius,
                half_height: 0.5 * height,
            },
        }
    }

    fn to_local(self, p: &Vec3) -> Vec3 {
        yaw_rotation(-self.yaw) * (p - self.center)
    }

    fn to_world(self, p: &Vec3) -> Vec3 {
        yaw_rotation(self.yaw) * p + self.center
    }

    pub fn half_height(&self) -> f64 {
        match self.shape {
            Shape::Box { half } => half.z,
            Shape::Cylinder { half_height, .. } => half_height,
        }
    }

    pub fn top_z(&self) -> f64 {
        self.center.z + self.half_height()
    }

    /// Radius of the smallest vertical cylinder about the center enclosing
    /// the footprint.
    pub fn footprint_radius(&self) -> f64 {
        match self.shape {
            Shape::Box { half } => half.x.hypot(half.y),
            Shape::Cylinder { radius, .. } => radius,
        }
    }

    /// 2D distance from `xy` to the footprint; 0 inside.
    pub fn footprint_distance(&self, xy: &Vector2<f64>) -> f64 {
        let p = self.to_local(&Vec3::new(xy.x, xy.y, self.center.z));
        match self.shape {
            Shape::Box { half } => {
                let dx = (p.x.abs() - half.x).max(0.0);
                let dy = (p.y.abs() - half.y).max(0.0);
                dx.hypot(dy)
            }
            Shape::Cylinder { radius, .. } => (p.x.hypot(p.y) - radius).max(0.0),
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let l = self.to_local(p);
        match self.shape {
            Shape::Box { half } => l.x.abs() <= half.x && l.y.abs() <= half.y && l.z.abs() <= half.z,
            Shape::Cylinder {
                radius,
                half_height,
            } => l.x.hypot(l.y) <= radius && l.z.abs() <= half_height,
        }
    }

    pub fn corners(&self) -> Vec<Vec3> {
        let (hx, hy, hz) = match self.shape {
            Shape::Box { half } => (half.x, half.y, half.z),
            Shape::Cylinder {
                radius,
                half_height,
            } => (radius, radius, half_height),
        };
        (0..8)
            .map(|i| {
                let s = |bit: usize| if i >> bit & 1 == 1 { 1.0 } else { -1.0 };
                self.to_world(&Vec3::new(s(0) * hx, s(1) * hy, s(2) * hz))
            })
            .collect()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.corners())
    }

    /// Smallest `t > 0` with `origin + t·dir` on the surface, for rays
    /// starting outside.
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let o = self.to_local(origin);
        let d = yaw_rotation(-self.yaw) * dir;
        match self.shape {
            Shape::Box { half } => {
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                for a in 0..3 {
                    if d[a].abs() < 1e-15 {
                        if o[a].abs() > half[a] {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (-half[a] - o[a]) / d[a];
                    let t2 = (half[a] - o[a]) / d[a];
                    t_near = t_near.max(t1.min(t2));
                    t_far = t_far.min(t1.max(t2));
                }
                (t_near <= t_far && t_near > 0.0).then_some(t_near)
            }
            Shape::Cylinder {
                radius,
                half_height,
            } => {
                let mut best = f64::INFINITY;
                let a = d.x * d.x + d.y * d.y;
                if a > 1e-15 {
                    let b = 2.0 * (o.x * d.x + o.y * d.y);
                    let c = o.x * o.x + o.y * o.y - radius * radius;
                    let disc = b * b - 4.0 * a * c;
                    if disc >= 0.0 {
                        let t = (-b - disc.sqrt()) / (2.0 * a);
                        if t > 0.0 && (o.z + t * d.z).abs() <= half_height {
                            best = t;
                        }
                    }
                }
                if d.z.abs() > 1e-15 {
                    for cap in [half_height, -half_height] {
                        let t = (cap - o.z) / d.z;
                        let (x, y) = (o.x + t * d.x, o.y + t * d.y);
                        if t > 0.0 && x * x + y * y <= radius * radius {
                            best = best.min(t);
                        }
                    }
                }
                best.is_finite().then_some(best)
            }
        }
    }

    /// Stratified surface samples: each face is split into a regular grid
    /// with `round(length · √density)` cells per side and one sample per
    /// cell center.
    pub fn sample_surface(&self, density: f64, skip_bottom: bool) -> Vec<Vec3> {
        let per_m = density.sqrt();
        let cells = |len: f64| ((len * per_m).round() as usize).max(1);
        let grid = |a: f64, b: f64| {
            let (na, nb) = (cells(2.0 * a), cells(2.0 * b));
            let mut out = Vec::with_capacity(na * nb);
            for i in 0..na {
                for j in 0..nb {
                    out.push((
                        -a + 2.0 * a * (i as f64 + 0.5) / na as f64,
                        -b + 2.0 * b * (j as f64 + 0.5) / nb as f64,
                    ));
                }
            }
            out
        };
        let mut local = Vec::new();
        match self.shape {
            Shape::Box { half } => {
                for s in [1.0, -1.0] {
                    for (y, z) in grid(half.y, half.z) {
                        local.push(Vec3::new(s * half.x, y, z));
                    }
                    for (x, z) in grid(half.x, half.z) {
                        local.push(Vec3::new(x, s * half.y, z));
                    }
                    if s > 0.0 || !skip_bottom {
                        for (x, y) in grid(half.x, half.y) {
                            local.push(Vec3::new(x, y, s * half.z));
                        }
                    }
                }
            }
            Shape::Cylinder {
                radius,
                half_height,
            } => {
                let around = cells(TAU * radius).max(3);
                let rows = cells(2.0 * half_height);
                for i in 0..around {
                    let phi = TAU * (i as f64 + 0.5) / around as f64;
                    for j in 0..rows {
                        let z = -half_height + 2.0 * half_height * (j as f64 + 0.5) / rows as f64;
                        local.push(Vec3::new(radius * phi.cos(), radius * phi.sin(), z));
                    }
                }
                let mut caps = vec![half_height];
                if !skip_bottom {
                    caps.push(-half_height);
                }
                let disc: Vec<(f64, f64)> = grid(radius, radius)
                    .into_iter()
                    .filter(|(x, y)| x * x + y * y <= radius * radius)
                    .collect();
                let disc = if disc.is_empty() { vec![(0.0, 0.0)] } else { disc };
                for z in caps {
                    for &(x, y) in &disc {
                        local.push(Vec3::new(x, y, z));
                    }
                }
            }
        }
        local.iter().map(|p| self.to_world(p)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Easy,
    Medium,
    Hard,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Easy, Tier::Medium, Tier::Hard];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    #[default]
    Open,
    /// Two clutter boxes are placed right next to the object.
    Cluttered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeSpec {
    Box { size: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
}

impl ShapeSpec {
    fn height(&self) -> f64 {
        match *self {
            ShapeSpec::Box { size } => size[2],
            ShapeSpec::Cylinder { height, .. } => height,
        }
    }

    fn positive(&self) -> bool {
        match *self {
            ShapeSpec::Box { size } => size.iter().all(|v| *v > 0.0),
            ShapeSpec::Cylinder { radius, height } => radius > 0.0 && height > 0.0,
        }
    }

    fn footprint_radius(&self) -> f64 {
        match *self {
            ShapeSpec::Box { size } => 0.5 * size[0].hypot(size[1]),
            ShapeSpec::Cylinder { radius, .. } => radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub center: [f64; 2],
    /// length, width, height
    pub size: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub label: String,
    pub shape: ShapeSpec,
    pub tier: Tier,
    #[serde(default)]
    pub placement: Placement,
    /// Index of the supporting table.
    #[serde(default)]
    pub table: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CabinetSpec {
    #[serde(default = "default_cabinet_label")]
    pub label: String,
    pub center: [f64; 2],
    /// Direction the drawer fronts face.
    pub yaw: f64,
    /// width, depth, height
    pub size: [f64; 3],
    pub rows: usize,
    pub cols: usize,
    /// Uniform perturbation of `yaw` in `[-yaw_jitter, yaw_jitter]`.
    #[serde(default)]
    pub yaw_jitter: f64,
}

fn default_cabinet_label() -> String {
    "cabinet".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySpec {
    /// Points per m² on object surfaces.
    pub object: f64,
    /// Tables and cabinets.
    pub structure: f64,
    pub floor: f64,
}

impl Default for DensitySpec {
    fn default() -> Self {
        Self {
            object: 10_000.0,
            structure: 2_500.0,
            floor: 400.0,
        }
    }
}

/// Scene description. Object poses on their tables, cabinet yaw jitter and
/// the item drawer are drawn from the generation seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    /// Floor extent `[0, x] × [0, y]`.
    pub room: [f64; 2],
    pub density: DensitySpec,
    pub tables: Vec<TableSpec>,
    pub objects: Vec<ObjectSpec>,
    pub cabinets: Vec<CabinetSpec>,
    pub embedding_dim: usize,
    pub max_placement_retries: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            room: [5.0, 5.0],
            density: DensitySpec::default(),
            tables: Vec::new(),
            objects: Vec::new(),
            cabinets: Vec::new(),
            embedding_dim: 32,
            max_placement_retries: 200,
        }
    }
}

impl SceneSpec {
    /// One table with an object of each graspability tier.
    pub fn tabletop() -> Self {
        Self {
            tables: vec![TableSpec {
                center: [2.5, 2.5],
                size: [1.2, 0.7, 0.5],
                yaw: 0.0,
            }],
            objects: vec![
                ObjectSpec {
                    label: "mug".into(),
                    shape: ShapeSpec::Cylinder {
                        radius: 0.04,
                        height: 0.10,
                    },
                    tier: Tier::Easy,
                    placement: Placement::Open,
                    table: 0,
                },
                ObjectSpec {
                    label: "cereal box".into(),
                    shape: ShapeSpec::Box {
                        size: [0.16, 0.06, 0.22],
                    },
                    tier: Tier::Medium,
                    placement: Placement::Open,
                    table: 0,
                },
                ObjectSpec {
                    label: "marker".into(),
                    shape: ShapeSpec::Box {
                        size: [0.14, 0.02, 0.02],
                    },
                    tier: Tier::Hard,
                    placement: Placement::Cluttered,
                    table: 0,
                },
            ],
            ..Self::default()
        }
    }

    /// A 2×2 drawer cabinet facing into the room plus a side table.
    pub fn cabinet() -> Self {
        Self {
            tables: vec![TableSpec {
                center: [1.0, 1.0],
                size: [0.8, 0.6, 0.5],
                yaw: 0.0,
            }],
            objects: vec![ObjectSpec {
                label: "mug".into(),
                shape: ShapeSpec::Cylinder {
                    radius: 0.04,
                    height: 0.10,
                },
                tier: Tier::Easy,
                placement: Placement::Open,
                table: 0,
            }],
            cabinets: vec![CabinetSpec {
                label: "cabinet".into(),
                center: [2.5, 4.5],
                yaw: -PI / 2.0,
                size: [0.8, 0.45, 0.8],
                rows: 2,
                cols: 2,
                yaw_jitter: 10f64.to_radians(),
            }],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field: String, msg: &str| Err(SimError::InvalidSpec(format!("{field}: {msg}")));
        if !(self.room[0] > 0.0 && self.room[1] > 0.0) {
            return bad("room".into(), "dimensions must be positive");
        }
        for (name, d) in [
            ("density.object", self.density.object),
            ("density.structure", self.density.structure),
            ("density.floor", self.density.floor),
        ] {
            if !(d > 0.0 && d.is_finite()) {
                return bad(name.into(), "must be positive");
            }
        }
        let in_room = |c: [f64; 2]| c[0] >= 0.0 && c[1] >= 0.0 && c[0] <= self.room[0] && c[1] <= self.room[1];
        for (i, t) in self.tables.iter().enumerate() {
            if !t.size.iter().all(|v| *v > 0.0) {
                return bad(format!("tables[{i}].size"), "must be positive");
            }
            if !in_room(t.center) {
                return bad(format!("tables[{i}].center"), "outside the room");
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.label.is_empty() || o.label == CLUTTER_LABEL {
                return bad(format!("objects[{i}].label"), "empty or reserved");
            }
            if !o.shape.positive() {
                return bad(format!("objects[{i}].shape"), "dimensions must be positive");
            }
            let Some(t) = self.tables.get(o.table) else {
                return bad(format!("objects[{i}].table"), "no such table");
            };
            let margin = o.shape.footprint_radius() + TABLE_EDGE_MARGIN;
            if 2.0 * margin >= t.size[0].min(t.size[1]) {
                return bad(format!("objects[{i}].shape"), "does not fit on its table");
            }
        }
        for (i, c) in self.cabinets.iter().enumerate() {
            if c.rows == 0 || c.cols == 0 {
                return bad(format!("cabinets[{i}].rows"), "rows and cols must be at least 1");
            }
            if !c.size.iter().all(|v| *v > 0.0) {
                return bad(format!("cabinets[{i}].size"), "must be positive");
            }
            let cell_w = c.size[0] / c.cols as f64;
            let cell_h = (c.size[2] - PLINTH) / c.rows as f64;
            if cell_w - 2.0 * FRONT_GAP < HANDLE_SIZE[1] + 0.02 || cell_h - 2.0 * FRONT_GAP < HANDLE_SIZE[2] + 0.02 {
                return bad(format!("cabinets[{i}].size"), "drawers too small for a handle");
            }
            if !in_room(c.center) {
                return bad(format!("cabinets[{i}].center"), "outside the room");
            }
            if !(c.yaw_jitter >= 0.0) {
                return bad(format!("cabinets[{i}].yaw_jitter"), "must be non-negative");
            }
        }
        let labels = self.labels();
        if labels.len() >= self.embedding_dim {
            return bad(
                "embedding_dim".into(),
                &format!("needs more than {} dimensions for the label codes", labels.len()),
            );
        }
        Ok(())
    }

    /// Distinct instance labels, sorted. Clutter is included when any
    /// object is cluttered.
    pub fn labels(&self) -> Vec<String> {
        let mut set: BTreeSet<String> = self.objects.iter().map(|o| o.label.clone()).collect();
        if self.objects.iter().any(|o| o.placement == Placement::Cluttered) {
            set.insert(CLUTTER_LABEL.into());
        }
        set.extend(self.cabinets.iter().map(|c| c.label.clone()));
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthObject {
    pub id: InstanceId,
    pub label: String,
    pub tier: Tier,
    pub placement: Placement,
    pub primitive: Primitive,
}

impl GroundTruthObject {
    /// Top-center grasp shared by every feasible approach.
    pub fn feasible_grasp_center(&self) -> Vec3 {
        let c = self.primitive.center;
        Vec3::new(c.x, c.y, self.primitive.top_z() - GRASP_DEPTH)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthDrawer {
    pub front: Primitive,
    pub handle: Primitive,
    pub handle_center: Vec3,
    /// Unit, horizontal, out of the cabinet.
    pub axis: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthCabinet {
    pub id: InstanceId,
    pub label: String,
    pub carcass: Primitive,
    pub drawers: Vec<GroundTruthDrawer>,
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub seed: u64,
    pub tables: Vec<Primitive>,
    pub objects: Vec<GroundTruthObject>,
    pub cabinets: Vec<GroundTruthCabinet>,
    /// `(cabinet, drawer)` holding the searched-for item.
    pub item: Option<(usize, usize)>,
    pub cloud: PointCloudScene,
    labels: Vec<String>,
}

impl SyntheticScene {
    pub fn floor_z(&self) -> f64 {
        0.0
    }

    pub fn room(&self) -> [f64; 2] {
        self.spec.room
    }

    /// Every solid primitive in the scene.
    pub fn primitives(&self) -> Vec<Primitive> {
        let mut out = self.tables.clone();
        out.extend(self.objects.iter().map(|o| o.primitive));
        for c in &self.cabinets {
            out.push(c.carcass);
            for d in &c.drawers {
                out.push(d.front);
                out.push(d.handle);
            }
        }
        out
    }

    /// One-hot code of `label`; labels absent from the scene get a code
    /// orthogonal to every instance.
    pub fn label_embedding(&self, label: &str) -> Vec<f64> {
        let slot = self
            .labels
            .iter()
            .position(|l| l == label)
            .unwrap_or(self.labels.len());
        let mut e = vec![0.0; self.spec.embedding_dim];
        e[slot] = 1.0;
        e
    }

    pub fn object(&self, label: &str) -> Option<&GroundTruthObject> {
        self.objects.iter().find(|o| o.label == label)
    }

    /// Minimum footprint clearance from a body position to any primitive.
    pub fn body_clearance(&self, xy: &Vector2<f64>) -> f64 {
        self.primitives()
            .iter()
            .map(|p| p.footprint_distance(xy))
            .fold(f64::INFINITY, f64::min)
    }
}

struct Builder {
    points: Vec<Vec3>,
    instances: Vec<InstanceMask>,
}

impl Builder {
    fn add(&mut self, pts: Vec<Vec3>) -> std::ops::Range<usize> {
        let start = self.points.len();
        self.points.extend(pts);
        start..self.points.len()
    }
}

fn table_primitive(t: &TableSpec) -> Primitive {
    Primitive::cuboid(
        Vec3::new(t.center[0], t.center[1], 0.5 * t.size[2]),
        t.yaw,
        t.size,
    )
}

fn object_primitive(shape: &ShapeSpec, xy: Vector2<f64>, z0: f64, yaw: f64) -> Primitive {
    let center = Vec3::new(xy.x, xy.y, z0 + 0.5 * shape.height());
    match *shape {
        ShapeSpec::Box { size } => Primitive::cuboid(center, yaw, size),
        ShapeSpec::Cylinder { radius, height } => Primitive::cylinder(center, radius, height),
    }
}

/// Random point on the table top at least `margin` from its edges.
fn table_point(rng: &mut ChaCha8Rng, table: &TableSpec, margin: f64) -> Vector2<f64> {
    let hx = 0.5 * table.size[0] - margin;
    let hy = 0.5 * table.size[1] - margin;
    let local = Vec3::new(rng.random_range(-hx..=hx), rng.random_range(-hy..=hy), 0.0);
    let w = yaw_rotation(table.yaw) * local;
    Vector2::new(table.center[0] + w.x, table.center[1] + w.y)
}

fn on_table(table: &TableSpec, xy: &Vector2<f64>, margin: f64) -> bool {
    let local = yaw_rotation(-table.yaw)
        * Vec3::new(xy.x - table.center[0], xy.y - table.center[1], 0.0);
    local.x.abs() <= 0.5 * table.size[0] - margin && local.y.abs() <= 0.5 * table.size[1] - margin
}

fn overlaps(placed: &[(Vector2<f64>, f64, usize)], xy: &Vector2<f64>, r: f64, table: usize) -> bool {
    placed
        .iter()
        .any(|(c, rc, t)| *t == table && (c - xy).norm() < r + rc + PLACEMENT_GAP)
}

struct PlannedObject {
    label: String,
    tier: Tier,
    placement: Placement,
    primitive: Primitive,
}

fn place_objects(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<Vec<PlannedObject>, SimError> {
    let mut placed: Vec<(Vector2<f64>, f64, usize)> = Vec::new();
    let mut out = Vec::new();
    for (i, o) in spec.objects.iter().enumerate() {
        let table = &spec.tables[o.table];
        let top = table.size[2];
        let r = o.shape.footprint_radius();
        let mut done = false;
        for _ in 0..spec.max_placement_retries.max(1) {
            let xy = table_point(rng, table, r + TABLE_EDGE_MARGIN);
            let yaw = rng.random_range(0.0..PI);
            if overlaps(&placed, &xy, r, o.table) {
                continue;
            }
            let mut group = vec![(xy, r)];
            let mut clutter = Vec::new();
            if o.placement == Placement::Cluttered {
                let cr = 0.5 * CLUTTER_SIZE[0].hypot(CLUTTER_SIZE[1]);
                for _ in 0..2 {
                    let dist = r + cr + rng.random_range(0.02..0.05);
                    let phi = rng.random_range(0.0..TAU);
                    let cyaw = rng.random_range(0.0..PI);
                    let cxy = xy + Vector2::new(phi.cos(), phi.sin()) * dist;
                    clutter.push((cxy, cr, cyaw));
                }
                let fits = clutter.iter().enumerate().all(|(k, (c, cr, _))| {
                    on_table(table, c, *cr + 0.01)
                        && !overlaps(&placed, c, *cr, o.table)
                        && clutter[..k].iter().all(|(d, dr, _)| (c - d).norm() >= cr + dr + PLACEMENT_GAP)
                });
                if !fits {
                    continue;
                }
            }
            out.push(PlannedObject {
                label: o.label.clone(),
                tier: o.tier,
                placement: o.placement,
                primitive: object_primitive(&o.shape, xy, top, yaw),
            });
            for (cxy, cr, cyaw) in clutter {
                out.push(PlannedObject {
                    label: CLUTTER_LABEL.into(),
                    tier: Tier::Easy,
                    placement: Placement::Open,
                    primitive: object_primitive(&ShapeSpec::Box { size: CLUTTER_SIZE }, cxy, top, cyaw),
                });
                group.push((cxy, cr));
            }
            placed.extend(group.into_iter().map(|(c, r)| (c, r, o.table)));
            done = true;
            break;
        }
        if !done {
            return Err(SimError::Infeasible(format!(
                "objects[{i}] ({}) could not be placed after {} attempts",
                o.label, spec.max_placement_retries
            )));
        }
    }
    Ok(out)
}

fn build_cabinet(spec: &CabinetSpec, yaw: f64) -> (Primitive, Vec<GroundTruthDrawer>) {
    let [w, d, h] = spec.size;
    let rot = yaw_rotation(yaw);
    let base = Vec3::new(spec.center[0], spec.center[1], 0.0);
    let carcass = Primitive::cuboid(base + Vec3::new(0.0, 0.0, 0.5 * h), yaw, [d, w, h]);
    let axis = rot * Vec3::x();
    let cell_w = w / spec.cols as f64;
    let cell_h = (h - PLINTH) / spec.rows as f64;
    let mut drawers = Vec::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let y = -0.5 * w + cell_w * (c as f64 + 0.5);
            let z = PLINTH + cell_h * (r as f64 + 0.5);
            let front_local = Vec3::new(0.5 * d + 0.5 * FRONT_THICKNESS, y, z);
            let front = Primitive::cuboid(
                base + rot * front_local,
                yaw,
                [FRONT_THICKNESS, cell_w - 2.0 * FRONT_GAP, cell_h - 2.0 * FRONT_GAP],
            );
            let handle_local = Vec3::new(0.5 * d + FRONT_THICKNESS + 0.5 * HANDLE_SIZE[0], y, z);
            let handle_center = base + rot * handle_local;
            drawers.push(GroundTruthDrawer {
                front,
                handle: Primitive::cuboid(handle_center, yaw, HANDLE_SIZE),
                handle_center,
                axis,
            });
        }
    }
    (carcass, drawers)
}

/// Builds the scene for `(spec, seed)`. Identical inputs give identical
/// scenes.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<SyntheticScene, SimError> {
    spec.validate()?;
    let labels = spec.labels();
    let code = |label: &str| {
        let mut e = vec![0.0; spec.embedding_dim];
        e[labels.iter().position(|l| l == label).expect("label registered")] = 1.0;
        e
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[stream::SCENE]));
    let planned = place_objects(spec, &mut rng)?;

    let mut b = Builder {
        points: Vec::new(),
        instances: Vec::new(),
    };
    let mut next_id: InstanceId = 1;
    let mut objects = Vec::new();
    for p in planned {
        let range = b.add(p.primitive.sample_surface(spec.density.object, true));
        b.instances.push(InstanceMask {
            id: next_id,
            label: p.label.clone(),
            confidence: 1.0,
            point_indices: range.collect(),
            embedding: Some(code(&p.label)),
        });
        objects.push(GroundTruthObject {
            id: next_id,
            label: p.label,
            tier: p.tier,
            placement: p.placement,
            primitive: p.primitive,
        });
        next_id += 1;
    }

    let mut item_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[stream::ITEM_PLACEMENT]));
    let mut cabinets = Vec::new();
    for c in &spec.cabinets {
        let jitter = if c.yaw_jitter > 0.0 {
            item_rng.random_range(-c.yaw_jitter..=c.yaw_jitter)
        } else {
            0.0
        };
        let (carcass, drawers) = build_cabinet(c, c.yaw + jitter);
        let mut pts = carcass.sample_surface(spec.density.structure, true);
        for d in &drawers {
            pts.extend(d.front.sample_surface(spec.density.structure, false));
            pts.extend(d.handle.sample_surface(spec.density.object, false));
        }
        let range = b.add(pts);
        b.instances.push(InstanceMask {
            id: next_id,
            label: c.label.clone(),
            confidence: 1.0,
            point_indices: range.collect(),
            embedding: Some(code(&c.label)),
        });
        cabinets.push(GroundTruthCabinet {
            id: next_id,
            label: c.label.clone(),
            carcass,
            drawers,
        });
        next_id += 1;
    }

    let item = (!cabinets.is_empty()).then(|| {
        let c = item_rng.random_range(0..cabinets.len());
        (c, item_rng.random_range(0..cabinets[c].drawers.len()))
    });

    let tables: Vec<Primitive> = spec.tables.iter().map(table_primitive).collect();
    for t in &tables {
        b.add(t.sample_surface(spec.density.structure, true));
    }
    let per_m = spec.density.floor.sqrt();
    let (nx, ny) = (
        ((spec.room[0] * per_m).round() as usize).max(1),
        ((spec.room[1] * per_m).round() as usize).max(1),
    );
    let mut floor_pts = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            floor_pts.push(Vec3::new(
                spec.room[0] * (i as f64 + 0.5) / nx as f64,
                spec.room[1] * (j as f64 + 0.5) / ny as f64,
                0.0,
            ));
        }
    }
    b.add(floor_pts);

    let top = b.points.iter().map(|p| p.z).fold(0.0, f64::max);
    let room_box = Aabb {
        min: Vec3::zeros(),
        max: Vec3::new(spec.room[0], spec.room[1], top),
    };
    let cloud = PointCloudScene::new(b.points, None, b.instances, spec.embedding_dim)?.with_bounds(room_box);
    Ok(SyntheticScene {
        spec: spec.clone(),
        seed,
        tables,
        objects,
        cabinets,
        item,
        cloud,
        labels,
    })
}
