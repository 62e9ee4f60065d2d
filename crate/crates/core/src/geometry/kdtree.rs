use super::{Aabb, Vec3};

const LEAF_SIZE: usize = 8;

/// Static 3-d tree over a point set. Queries return indices into the point
/// slice the tree was built from.
///
/// The tree is implicit: node `[lo, hi)` splits at `mid = (lo + hi) / 2` on
/// the axis of largest spread, with `order[lo..mid]` on the low side.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<usize>,
    axes: Vec<u8>,
}

impl KdTree {
    pub fn new(points: Vec<Vec3>) -> Self {
        let n = points.len();
        let mut tree = Self {
            points,
            order: (0..n).collect(),
            axes: vec![0; n],
        };
        tree.build(0, n);
        tree
    }

    pub fn from_slice(points: &[Vec3]) -> Self {
        Self::new(points.to_vec())
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi - lo <= LEAF_SIZE {
            return;
        }
        let mut bounds = Aabb::empty();
        for &i in &self.order[lo..hi] {
            bounds.grow(&self.points[i]);
        }
        let extent = bounds.max - bounds.min;
        let axis = extent.imax();
        let mid = (lo + hi) / 2;
        let points = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            points[a][axis]
                .total_cmp(&points[b][axis])
                .then(a.cmp(&b))
        });
        self.axes[mid] = axis as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn point(&self, index: usize) -> &Vec3 {
        &self.points[index]
    }

    /// Nearest point to `query` as `(index, distance)`.
    pub fn nearest(&self, query: &Vec3) -> Option<(usize, f64)> {
        self.nearest_where(query, |_| true)
    }

    /// Nearest point among those whose index satisfies `accept`.
    pub fn nearest_where(
        &self,
        query: &Vec3,
        accept: impl Fn(usize) -> bool,
    ) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.nearest_rec(0, self.points.len(), query, &accept, &mut best);
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    fn consider(
        &self,
        i: usize,
        query: &Vec3,
        accept: &impl Fn(usize) -> bool,
        best: &mut Option<(usize, f64)>,
    ) {
        if !accept(i) {
            return;
        }
        let d2 = (self.points[i] - query).norm_squared();
        match best {
            Some((bi, bd2)) if d2 > *bd2 || (d2 == *bd2 && i > *bi) => {}
            _ => *best = Some((i, d2)),
        }
    }

    fn nearest_rec(
        &self,
        lo: usize,
        hi: usize,
        query: &Vec3,
        accept: &impl Fn(usize) -> bool,
        best: &mut Option<(usize, f64)>,
    ) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                self.consider(i, query, accept, best);
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let pivot = self.order[mid];
        let axis = self.axes[mid] as usize;
        self.consider(pivot, query, accept, best);
        let diff = query[axis] - self.points[pivot][axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_rec(near.0, near.1, query, accept, best);
        let visit_far = match best {
            Some((_, bd2)) => diff * diff <= *bd2,
            None => true,
        };
        if visit_far {
            self.nearest_rec(far.0, far.1, query, accept, best);
        }
    }

    /// Indices of points inside `bounds` (inclusive), ascending.
    pub fn within_box(&self, bounds: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        self.box_rec(0, self.points.len(), bounds, &mut out);
        out.sort_unstable();
        out
    }

    fn box_rec(&self, lo: usize, hi: usize, bounds: &Aabb, out: &mut Vec<usize>) {
        if hi - lo <= LEAF_SIZE {
            out.extend(
                self.order[lo..hi]
                    .iter()
                    .copied()
                    .filter(|&i| bounds.contains(&self.points[i])),
            );
            return;
        }
        let mid = (lo + hi) / 2;
        let pivot = self.order[mid];
        let axis = self.axes[mid] as usize;
        let split = self.points[pivot][axis];
        if bounds.contains(&self.points[pivot]) {
            out.push(pivot);
        }
        if bounds.min[axis] <= split {
            self.box_rec(lo, mid, bounds, out);
        }
        if bounds.max[axis] >= split {
            self.box_rec(mid + 1, hi, bounds, out);
        }
    }

    /// Indices of points within `radius` of `query` (inclusive), ascending.
    pub fn within_radius(&self, query: &Vec3, radius: f64) -> Vec<usize> {
        let bounds = Aabb {
            min: query - Vec3::repeat(radius),
            max: query + Vec3::repeat(radius),
        };
        let r2 = radius * radius;
        let mut out = self.within_box(&bounds);
        out.retain(|&i| (self.points[i] - query).norm_squared() <= r2);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.2..0.2),
                )
            })
            .collect()
    }

    #[test]
    fn empty_tree() {
        let t = KdTree::new(vec![]);
        assert!(t.nearest(&Vec3::zeros()).is_none());
        assert!(t.within_radius(&Vec3::zeros(), 1.0).is_empty());
    }

    #[test]
    fn nearest_matches_linear_scan() {
        let pts = cloud(2000, 1);
        let tree = KdTree::from_slice(&pts);
        let queries = cloud(300, 2);
        for q in &queries {
            let (bi, bd) = tree.nearest(q).unwrap();
            let brute = pts
                .iter()
                .map(|p| (p - q).norm())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(bd, brute);
            assert_eq!((pts[bi] - q).norm(), brute);
        }
    }

    #[test]
    fn filtered_nearest_matches_linear_scan() {
        let pts = cloud(1000, 3);
        let tree = KdTree::from_slice(&pts);
        for q in &cloud(100, 4) {
            let got = tree.nearest_where(q, |i| i % 3 != 0).unwrap().1;
            let brute = pts
                .iter()
                .enumerate()
                .filter(|(i, _)| i % 3 != 0)
                .map(|(_, p)| (p - q).norm())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(got, brute);
        }
        assert!(tree.nearest_where(&Vec3::zeros(), |_| false).is_none());
    }

    #[test]
    fn radius_and_box_queries_match_brute_force() {
        let pts = cloud(1500, 5);
        let tree = KdTree::from_slice(&pts);
        for q in &cloud(50, 6) {
            let got = tree.within_radius(q, 0.3);
            let want: Vec<usize> = (0..pts.len())
                .filter(|&i| (pts[i] - q).norm_squared() <= 0.09)
                .collect();
            assert_eq!(got, want);
            let b = Aabb {
                min: q - Vec3::new(0.2, 0.3, 0.05),
                max: q + Vec3::new(0.1, 0.2, 0.05),
            };
            let want: Vec<usize> = (0..pts.len()).filter(|&i| b.contains(&pts[i])).collect();
            assert_eq!(tree.within_box(&b), want);
        }
    }

    #[test]
    fn duplicate_points() {
        let pts = vec![Vec3::new(1.0, 1.0, 1.0); 50];
        let tree = KdTree::from_slice(&pts);
        assert_eq!(tree.within_radius(&Vec3::new(1.0, 1.0, 1.0), 0.0).len(), 50);
        assert_eq!(tree.nearest(&Vec3::zeros()).unwrap().0, 0);
    }
}
