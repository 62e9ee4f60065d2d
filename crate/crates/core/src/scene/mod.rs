//! Pre-scanned environment: point cloud, instance masks with optional
//! open-vocabulary embeddings, and the spatial queries the planners run
//! against it.

mod ply;

pub use ply::{format_ply, parse_ply, read_ply, write_ply, Rgb};

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, KdTree, Vec3};

pub type InstanceId = u32;

pub const DEFAULT_EMBEDDING_DIM: usize = 768;
const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("PLY line {line}: {message}")]
    Ply { line: usize, message: String },
    #[error("instances file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("instance {id}: point index {index} out of range for {len} points")]
    IndexOutOfRange { id: InstanceId, index: usize, len: usize },
    #[error("instances {first} and {second} both claim point {index}")]
    OverlappingInstances {
        first: InstanceId,
        second: InstanceId,
        index: usize,
    },
    #[error("duplicate instance id {0}")]
    DuplicateInstanceId(InstanceId),
    #[error("instance {0} has no points")]
    EmptyInstance(InstanceId),
    #[error("instance {id}: embedding has dimension {got}, expected {expected}")]
    EmbeddingDimension {
        id: InstanceId,
        expected: usize,
        got: usize,
    },
    #[error("instance {id}: embedding norm {norm} is not 1")]
    EmbeddingNotUnit { id: InstanceId, norm: f64 },
    #[error("instance {id}: confidence {value} outside [0, 1]")]
    InvalidConfidence { id: InstanceId, value: f64 },
    #[error("{colors} colors for {points} points")]
    ColorCount { colors: usize, points: usize },
    #[error("no instance carries an embedding")]
    NoEmbeddings,
    #[error("query has dimension {got}, scene embeddings have {expected}")]
    QueryDimension { expected: usize, got: usize },
    #[error("query embedding has zero or non-finite norm")]
    InvalidQuery,
    #[error("instance {0} not found")]
    InstanceNotFound(InstanceId),
    #[error("no obstacle points remain after exclusion")]
    EmptyScene,
}

impl SceneError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SceneError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One labeled instance mask, as stored in the instances file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMask {
    pub id: InstanceId,
    pub label: String,
    pub confidence: f64,
    pub point_indices: Vec<usize>,
    #[serde(default)]
    pub embedding: Option<Vec<f64>>,
}

/// On-disk layout of the instances JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstancesFile {
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    pub instances: Vec<InstanceMask>,
}

fn default_embedding_dim() -> usize {
    DEFAULT_EMBEDDING_DIM
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub instance_id: InstanceId,
    pub similarity: f64,
    pub centroid: Vec3,
}

/// Validated, immutable scene with a spatial index over all points.
#[derive(Debug, Clone)]
pub struct PointCloudScene {
    points: Vec<Vec3>,
    colors: Option<Vec<Rgb>>,
    instances: Vec<InstanceMask>,
    embedding_dim: usize,
    bounds: Aabb,
    index: KdTree,
    /// Position in `instances` owning each point.
    owner: Vec<Option<usize>>,
}

impl PointCloudScene {
    pub fn new(
        points: Vec<Vec3>,
        colors: Option<Vec<Rgb>>,
        instances: Vec<InstanceMask>,
        embedding_dim: usize,
    ) -> Result<Self, SceneError> {
        if let Some(c) = &colors {
            if c.len() != points.len() {
                return Err(SceneError::ColorCount {
                    colors: c.len(),
                    points: points.len(),
                });
            }
        }
        let mut owner: Vec<Option<usize>> = vec![None; points.len()];
        let mut ids = std::collections::BTreeSet::new();
        for (pos, inst) in instances.iter().enumerate() {
            if !ids.insert(inst.id) {
                return Err(SceneError::DuplicateInstanceId(inst.id));
            }
            if inst.point_indices.is_empty() {
                return Err(SceneError::EmptyInstance(inst.id));
            }
            if !(0.0..=1.0).contains(&inst.confidence) {
                return Err(SceneError::InvalidConfidence {
                    id: inst.id,
                    value: inst.confidence,
                });
            }
            for &index in &inst.point_indices {
                let slot = owner.get_mut(index).ok_or(SceneError::IndexOutOfRange {
                    id: inst.id,
                    index,
                    len: points.len(),
                })?;
                if let Some(prev) = *slot {
                    return Err(SceneError::OverlappingInstances {
                        first: instances[prev].id,
                        second: inst.id,
                        index,
                    });
                }
                *slot = Some(pos);
            }
            if let Some(e) = &inst.embedding {
                if e.len() != embedding_dim {
                    return Err(SceneError::EmbeddingDimension {
                        id: inst.id,
                        expected: embedding_dim,
                        got: e.len(),
                    });
                }
                let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
                    return Err(SceneError::EmbeddingNotUnit { id: inst.id, norm });
                }
            }
        }
        let bounds = Aabb::from_points(&points);
        let index = KdTree::from_slice(&points);
        Ok(Self {
            points,
            colors,
            instances,
            embedding_dim,
            bounds,
            index,
            owner,
        })
    }

    /// Enlarges the scene bounds, e.g. to the room extent when the scan does
    /// not reach the walls. Bounds never shrink below the point extent.
    pub fn with_bounds(mut self, bounds: Aabb) -> Self {
        self.bounds = self.bounds.union(&bounds);
        self
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    pub fn instances(&self) -> &[InstanceMask] {
        &self.instances
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn index(&self) -> &KdTree {
        &self.index
    }

    pub fn instance(&self, id: InstanceId) -> Option<&InstanceMask> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// Instance id owning point `index`, if any.
    pub fn owner_of(&self, index: usize) -> Option<InstanceId> {
        self.owner[index].map(|pos| self.instances[pos].id)
    }

    pub fn instance_points(&self, id: InstanceId) -> Result<Vec<Vec3>, SceneError> {
        let inst = self.instance(id).ok_or(SceneError::InstanceNotFound(id))?;
        Ok(inst.point_indices.iter().map(|&i| self.points[i]).collect())
    }

    pub fn centroid(&self, id: InstanceId) -> Result<Vec3, SceneError> {
        let pts = self.instance_points(id)?;
        Ok(pts.iter().sum::<Vec3>() / pts.len() as f64)
    }

    pub fn instance_bounds(&self, id: InstanceId) -> Result<Aabb, SceneError> {
        Ok(Aabb::from_points(&self.instance_points(id)?))
    }

    pub fn instances_file(&self) -> InstancesFile {
        InstancesFile {
            embedding_dim: self.embedding_dim,
            instances: self.instances.clone(),
        }
    }

    /// Ranks instances carrying an embedding by cosine similarity to `query`,
    /// descending, ties by ascending id.
    pub fn query_instance(&self, query: &[f64]) -> Result<Vec<QueryResult>, SceneError> {
        if !self.instances.iter().any(|i| i.embedding.is_some()) {
            return Err(SceneError::NoEmbeddings);
        }
        if query.len() != self.embedding_dim {
            return Err(SceneError::QueryDimension {
                expected: self.embedding_dim,
                got: query.len(),
            });
        }
        let qn = query.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(qn > 0.0 && qn.is_finite()) {
            return Err(SceneError::InvalidQuery);
        }
        let mut ranked = Vec::new();
        for inst in &self.instances {
            let Some(e) = &inst.embedding else { continue };
            let en = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = e.iter().zip(query).map(|(a, b)| a * b).sum();
            ranked.push(QueryResult {
                instance_id: inst.id,
                similarity: (dot / (en * qn)).clamp(-1.0, 1.0),
                centroid: self.centroid(inst.id)?,
            });
        }
        ranked.sort_by(compare_results);
        Ok(ranked)
    }

    /// Splits out an instance's points plus the other scene points within
    /// `padding` of the instance's bounding box. Both lists are in scene
    /// point order.
    pub fn isolate_object(
        &self,
        id: InstanceId,
        padding: f64,
    ) -> Result<(Vec<Vec3>, Vec<Vec3>), SceneError> {
        let inst = self.instance(id).ok_or(SceneError::InstanceNotFound(id))?;
        let mut object_idx = inst.point_indices.clone();
        object_idx.sort_unstable();
        let object: Vec<Vec3> = object_idx.iter().map(|&i| self.points[i]).collect();
        let bounds = Aabb::from_points(&object);
        let search = bounds.expanded(padding);
        let environment = self
            .index
            .within_box(&search)
            .into_iter()
            .filter(|&i| self.owner_of(i) != Some(id))
            .map(|i| self.points[i])
            .filter(|p| bounds.distance_to(p) <= padding)
            .collect();
        Ok((object, environment))
    }

    /// Distance from `p` to the nearest point not owned by `exclude`.
    pub fn distance_to_obstacles(
        &self,
        p: &Vec3,
        exclude: Option<InstanceId>,
    ) -> Result<f64, SceneError> {
        self.distance_to_obstacles_above(p, exclude, None)
    }

    /// As [`Self::distance_to_obstacles`], additionally ignoring the floor
    /// slab `z < bounds.min.z + floor_slab` when `floor_slab` is set.
    pub fn distance_to_obstacles_above(
        &self,
        p: &Vec3,
        exclude: Option<InstanceId>,
        floor_slab: Option<f64>,
    ) -> Result<f64, SceneError> {
        if let Some(id) = exclude {
            self.instance(id).ok_or(SceneError::InstanceNotFound(id))?;
        }
        let cutoff = floor_slab.map(|s| self.bounds.min.z + s);
        self.index
            .nearest_where(p, |i| {
                (exclude.is_none() || self.owner_of(i) != exclude)
                    && cutoff.is_none_or(|c| self.points[i].z >= c)
            })
            .map(|(_, d)| d)
            .ok_or(SceneError::EmptyScene)
    }
}

pub fn read_instances(path: &Path) -> Result<InstancesFile, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_instances(path: &Path, file: &InstancesFile) -> Result<(), SceneError> {
    let text = serde_json::to_string_pretty(file)?;
    std::fs::write(path, text).map_err(|e| SceneError::io(path, e))
}

/// Loads and validates a cloud + instances pair.
pub fn load_scene(cloud_path: &Path, instances_path: &Path) -> Result<PointCloudScene, SceneError> {
    let (points, colors) = read_ply(cloud_path)?;
    let file = read_instances(instances_path)?;
    PointCloudScene::new(points, colors, file.instances, file.embedding_dim)
}

/// Writes a scene as a cloud + instances pair readable by [`load_scene`].
pub fn save_scene(
    scene: &PointCloudScene,
    cloud_path: &Path,
    instances_path: &Path,
) -> Result<(), SceneError> {
    write_ply(cloud_path, scene.points(), scene.colors())?;
    write_instances(instances_path, &scene.instances_file())
}

/// Total order used by [`PointCloudScene::query_instance`].
pub fn compare_results(a: &QueryResult, b: &QueryResult) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then(a.instance_id.cmp(&b.instance_id))
}
