use super::{GeometryError, Vec3};

/// Greedy farthest point sampling. The first pick is `start_index`; each
/// following pick maximizes the Euclidean distance to the already selected
/// set, ties going to the lowest index.
pub fn farthest_point_sample(
    candidates: &[Vec3],
    k: usize,
    start_index: usize,
) -> Result<Vec<usize>, GeometryError> {
    let n = candidates.len();
    if k == 0 || k > n {
        return Err(GeometryError::OutOfRange(format!(
            "k = {k} must lie in [1, {n}]"
        )));
    }
    if start_index >= n {
        return Err(GeometryError::OutOfRange(format!(
            "start index {start_index} >= {n}"
        )));
    }

    let mut selected = vec![false; n];
    let mut min_dist = vec![f64::INFINITY; n];
    let mut picks = Vec::with_capacity(k);
    let mut current = start_index;
    loop {
        selected[current] = true;
        picks.push(current);
        if picks.len() == k {
            break;
        }
        let origin = candidates[current];
        let mut next: Option<(usize, f64)> = None;
        for (i, p) in candidates.iter().enumerate() {
            if selected[i] {
                continue;
            }
            let d = (p - origin).norm();
            if d < min_dist[i] {
                min_dist[i] = d;
            }
            if next.is_none_or(|(_, best)| min_dist[i] > best) {
                next = Some((i, min_dist[i]));
            }
        }
        // k <= n guarantees an unselected candidate remains
        current = next.expect("unselected candidate").0;
    }
    Ok(picks)
}
