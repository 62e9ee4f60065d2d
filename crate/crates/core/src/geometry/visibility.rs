use super::{Aabb, KdTree, Vec3};

/// Distance from `p` to the closed segment `[a, b]`.
pub fn segment_point_distance(a: &Vec3, b: &Vec3, p: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

/// True iff no obstacle point lies within `clearance` of the segment
/// `from → to`. Points within `target_exclusion` of `to` are ignored so the
/// surface the target rests on does not occlude it. Exact over the point set.
pub fn line_of_sight(
    from: &Vec3,
    to: &Vec3,
    obstacles: &KdTree,
    clearance: f64,
    target_exclusion: f64,
) -> bool {
    if from == to || obstacles.is_empty() {
        return true;
    }
    let mut bounds = Aabb::empty();
    bounds.grow(from);
    bounds.grow(to);
    let bounds = bounds.expanded(clearance);
    obstacles.within_box(&bounds).into_iter().all(|i| {
        let p = obstacles.point(i);
        (p - to).norm() <= target_exclusion || segment_point_distance(from, to, p) > clearance
    })
}
