//! Rectangular maximum-weight assignment (Hungarian method).

use alloc::vec;
use alloc::vec::Vec;

/// Row → column assignment maximising the total weight of a `rows × cols`
/// matrix stored row-major. Every row gets a column when `rows <= cols`,
/// otherwise every column gets a row. Returns `(row, col)` pairs sorted by row.
pub fn maximize(weights: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    assert_eq!(weights.len(), rows * cols, "weight matrix size");
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cost = |i: usize, j: usize| -> f64 {
        let w = if transpose { weights[j * cols + i] } else { weights[i * cols + j] };
        max - w
    };

    // shortest augmenting path with potentials; 1-based with column 0 as sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| {
            let (r, c) = (p[j] - 1, j - 1);
            if transpose {
                (c, r)
            } else {
                (r, c)
            }
        })
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(w: &[f64], cols: usize, a: &[(usize, usize)]) -> f64 {
        a.iter().map(|&(r, c)| w[r * cols + c]).sum()
    }

    #[test]
    fn square() {
        let w = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 3.0, 6.0, 9.0];
        let a = maximize(&w, 3, 3);
        assert_eq!(a.len(), 3);
        assert_eq!(total(&w, 3, &a), 14.0);
    }

    #[test]
    fn rectangular_both_ways() {
        let w = [0.1, 0.9, 0.5, 0.8, 0.2, 0.7];
        assert_eq!(maximize(&w, 2, 3), [(0, 1), (1, 0)]);
        let wt = [0.1, 0.8, 0.9, 0.2, 0.5, 0.7];
        assert_eq!(maximize(&wt, 3, 2), [(0, 1), (1, 0)]);
        assert!(maximize(&[], 0, 4).is_empty());
    }
}
