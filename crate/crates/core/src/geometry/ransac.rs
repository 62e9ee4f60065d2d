use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Plane, Vec3};

/// RANSAC plane-fitting parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacParams {
    /// Inlier distance threshold in meters.
    pub threshold: f64,
    pub iterations: usize,
    /// Fits supported by a smaller fraction of the input are rejected.
    pub min_inlier_fraction: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            threshold: 0.005,
            iterations: 1000,
            min_inlier_fraction: 0.3,
        }
    }
}

/// Relative eigenvalue floor below which a point set counts as collinear.
const COLLINEAR_EPS: f64 = 1e-12;

/// Fits a plane with RANSAC followed by a least-squares refit on the
/// consensus set. Deterministic for a given `seed`.
///
/// The returned normal is canonicalized so its largest-magnitude component is
/// positive; callers that need an orientation must fix it themselves.
pub fn ransac_plane(
    points: &[Vec3],
    params: &RansacParams,
    seed: u64,
) -> Result<Plane, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::DegenerateInput(format!(
            "plane fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if !(params.threshold > 0.0) || params.iterations == 0 {
        return Err(GeometryError::DegenerateInput(format!(
            "invalid RANSAC parameters: threshold {} iterations {}",
            params.threshold, params.iterations
        )));
    }
    if is_collinear(points) {
        return Err(GeometryError::DegenerateInput(
            "points are collinear or coincident".into(),
        ));
    }

    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec3, f64, usize)> = None;
    for _ in 0..params.iterations {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let mut c = rng.random_range(0..n - 2);
        for taken in [a.min(b), a.max(b)] {
            if c >= taken {
                c += 1;
            }
        }
        let (pa, pb, pc) = (points[a], points[b], points[c]);
        let cross = (pb - pa).cross(&(pc - pa));
        let scale = (pb - pa).norm() * (pc - pa).norm();
        if scale == 0.0 || cross.norm() <= 1e-9 * scale {
            continue;
        }
        let normal = cross.normalize();
        let offset = normal.dot(&pa);
        let count = count_inliers(points, &normal, offset, params.threshold);
        if best.is_none_or(|(_, _, c)| count > c) {
            best = Some((normal, offset, count));
        }
    }

    let (normal, offset, count) = best.ok_or_else(|| {
        GeometryError::DegenerateInput("no non-degenerate sample drawn".into())
    })?;
    let fraction = count as f64 / n as f64;
    if fraction < params.min_inlier_fraction {
        return Err(GeometryError::NoPlaneFound {
            fraction,
            required: params.min_inlier_fraction,
        });
    }

    let inliers: Vec<Vec3> = points
        .iter()
        .filter(|p| (normal.dot(p) - offset).abs() <= params.threshold)
        .copied()
        .collect();
    let (mut normal, mut offset) = least_squares_plane(&inliers).unwrap_or((normal, offset));
    let k = normal.iamax();
    if normal[k] < 0.0 {
        normal = -normal;
        offset = -offset;
    }
    let inlier_count = count_inliers(points, &normal, offset, params.threshold);
    Ok(Plane {
        normal,
        offset,
        inlier_count,
    })
}

fn count_inliers(points: &[Vec3], normal: &Vec3, offset: f64, threshold: f64) -> usize {
    points
        .iter()
        .filter(|p| (normal.dot(p) - offset).abs() <= threshold)
        .count()
}

fn covariance(points: &[Vec3]) -> (Vec3, Matrix3<f64>) {
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    (centroid, cov / points.len() as f64)
}

fn is_collinear(points: &[Vec3]) -> bool {
    let (_, cov) = covariance(points);
    let mut ev: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[2] <= 0.0 || ev[1] <= COLLINEAR_EPS * ev[2]
}

/// Total-least-squares plane through `points`: normal is the eigenvector of
/// the smallest covariance eigenvalue.
fn least_squares_plane(points: &[Vec3]) -> Option<(Vec3, f64)> {
    if points.len() < 3 {
        return None;
    }
    let (centroid, cov) = covariance(points);
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    let normal = eig.eigenvectors.column(k).into_owned().try_normalize(1e-12)?;
    Some((normal, normal.dot(&centroid)))
}
