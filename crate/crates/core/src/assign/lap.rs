//! Dense square linear assignment.
//!
//! Shortest-augmenting-path Hungarian method with row and column potentials,
//! followed by a pass that picks the lexicographically smallest permutation
//! among all optimal ones. An assignment is optimal exactly when it uses only
//! edges whose reduced cost is zero under an optimal dual, so the second pass
//! only has to search perfect matchings of that tight subgraph.

use crate::model::Matrix;

/// Minimum-cost permutation of a square matrix: `(row_to_col, cost)`.
pub fn solve(cost: &Matrix) -> (Vec<usize>, f64) {
    assert!(cost.is_square(), "LAP needs a square matrix");
    let n = cost.rows();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let (mut row_to_col, u, v) = hungarian(cost);
    lexicographic_refine(cost, &mut row_to_col, &u, &v);
    let total = row_to_col.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    (row_to_col, total)
}

/// Optimal dual potentials `(u, v)`: `cost[i][j] - u[i] - v[j] >= 0`, with
/// equality on some optimal permutation.
pub fn dual_potentials(cost: &Matrix) -> (Vec<f64>, Vec<f64>) {
    assert!(cost.is_square(), "LAP needs a square matrix");
    if cost.rows() == 0 {
        return (Vec::new(), Vec::new());
    }
    let (_, u, v) = hungarian(cost);
    (u, v)
}

/// Returns the matching and the dual potentials: `cost[i][j] - u[i] - v[j]`
/// is non-negative everywhere and zero on matched pairs (up to rounding).
fn hungarian(cost: &Matrix) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = cost.rows();
    // 1-based with index 0 as the sentinel column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
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
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

fn lexicographic_refine(cost: &Matrix, row_to_col: &mut [usize], u: &[f64], v: &[f64]) {
    let n = cost.rows();
    let tight = |i: usize, j: usize| {
        let r = cost[(i, j)] - u[i] - v[j];
        r.abs() <= 1e-9 * (1.0 + cost[(i, j)].abs() + u[i].abs() + v[j].abs())
    };
    let original: Vec<usize> = row_to_col.to_vec();
    let mut col_owner = vec![0; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_owner[j] = i;
    }

    let mut visited = vec![false; n];
    for i in 0..n {
        let freed = row_to_col[i];
        for j in 0..freed {
            let r = col_owner[j];
            if r < i || !tight(i, j) {
                continue;
            }
            // Give column j to row i; row r must reach the freed column via
            // an alternating path through rows after i.
            visited.iter_mut().for_each(|b| *b = false);
            visited[j] = true;
            let mut path = Vec::new();
            if augment(r, freed, i, row_to_col, &col_owner, &tight, &mut visited, &mut path) {
                // path holds (row, new column) pairs along the alternating path.
                for &(row, col) in &path {
                    row_to_col[row] = col;
                    col_owner[col] = row;
                }
                row_to_col[i] = j;
                col_owner[j] = i;
                break;
            }
        }
    }

    let total = |perm: &[usize]| -> f64 { perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum() };
    let (before, after) = (total(&original), total(row_to_col));
    let scale = 1.0 + original.iter().enumerate().map(|(i, &j)| cost[(i, j)].abs()).sum::<f64>();
    if after > before + 1e-12 * scale {
        row_to_col.copy_from_slice(&original);
    }
}

#[allow(clippy::too_many_arguments)]
fn augment(
    row: usize,
    target: usize,
    fixed_upto: usize,
    row_to_col: &[usize],
    col_owner: &[usize],
    tight: &impl Fn(usize, usize) -> bool,
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    let n = row_to_col.len();
    for col in 0..n {
        if visited[col] || col == row_to_col[row] || !tight(row, col) {
            continue;
        }
        if col == target {
            path.push((row, col));
            return true;
        }
        let next = col_owner[col];
        if next <= fixed_upto {
            continue;
        }
        visited[col] = true;
        if augment(next, target, fixed_upto, row_to_col, col_owner, tight, visited, path) {
            path.push((row, col));
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let (perm, cost) = solve(&Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]));
        assert_eq!(perm, vec![0, 1]);
        assert_eq!(cost, 2.0);
    }

    #[test]
    fn zero_diagonal_gives_identity() {
        let m = Matrix::from_fn(5, 5, |i, j| if i == j { 0.0 } else { 1.0 + (i * 5 + j) as f64 });
        let (perm, cost) = solve(&m);
        assert_eq!(perm, vec![0, 1, 2, 3, 4]);
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn all_ties_give_identity() {
        let (perm, _) = solve(&Matrix::filled(6, 6, 3.0));
        assert_eq!(perm, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn ties_prefer_low_columns_for_early_rows() {
        // Both permutations cost 2; the identity is lexicographically smaller.
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(solve(&m).0, vec![0, 1]);
        // Row 0 can only tie on column 1 if row 1 takes column 0.
        let m = Matrix::from_rows(&[vec![5.0, 1.0, 9.0], vec![1.0, 5.0, 9.0], vec![9.0, 9.0, 0.0]]);
        assert_eq!(solve(&m), (vec![1, 0, 2], 2.0));
    }

    #[test]
    fn empty_matrix() {
        assert_eq!(solve(&Matrix::zeros(0, 0)), (vec![], 0.0));
    }
}
