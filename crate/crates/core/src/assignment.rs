//! Minimum-cost linear assignment (Hungarian method, O(n³) with potentials).

/// Cost assigned to dummy rows/columns when a rectangular matrix is padded.
/// Must exceed the magnitude of any real cost it competes with.
pub const PADDING_COST: f64 = 1e6;

/// Solves the square assignment problem, returning `row → column`.
///
/// `cost` is row-major `n × n`. Panics if the slice length is not `n * n`.
pub fn solve_square(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n×n");
    if n == 0 {
        return Vec::new();
    }
    // potentials and matching are 1-based; index 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if col_owner[j] > 0 {
            assignment[col_owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Solves a possibly rectangular `rows × cols` problem by padding with
/// [`PADDING_COST`]. Returns, per row, the assigned column or `None` when the
/// row landed on a dummy column.
pub fn solve_rectangular(cost: &[Vec<f64>], cols: usize) -> Vec<Option<usize>> {
    let rows = cost.len();
    let n = rows.max(cols);
    let mut square = vec![PADDING_COST; n * n];
    for (i, row) in cost.iter().enumerate() {
        assert_eq!(row.len(), cols, "ragged cost matrix");
        square[i * n..i * n + cols].copy_from_slice(row);
    }
    solve_square(&square, n)
        .into_iter()
        .take(rows)
        .map(|j| (j < cols).then_some(j))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn classic_example() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve_square(&cost, 3);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn empty_and_rectangular() {
        assert!(solve_square(&[], 0).is_empty());
        assert!(solve_rectangular(&[], 3).is_empty());
        let a = solve_rectangular(&[vec![], vec![]], 0);
        assert_eq!(a, vec![None, None]);
        let a = solve_rectangular(&[vec![5.0, 1.0, 9.0]], 3);
        assert_eq!(a, vec![Some(1)]);
        let a = solve_rectangular(&[vec![3.0], vec![1.0], vec![2.0]], 1);
        assert_eq!(a, vec![None, Some(0), None]);
    }

    #[test]
    fn matches_permutation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for n in 1..=6 {
            let perms = permutations(n);
            for _ in 0..40 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.random_range(-10.0..10.0)).collect();
                let a = solve_square(&cost, n);
                let mut seen = a.clone();
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
                let best = perms
                    .iter()
                    .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                assert!((total - best).abs() < 1e-9, "{total} vs {best}");
            }
        }
    }
}
