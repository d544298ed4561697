//! Optimal matching similarity between a reference element set and a
//! candidate element set.
//!
//! The maximum-weight injective assignment is solved exactly with the
//! Hungarian method on a zero-padded square matrix. The score is always
//! normalized by the reference cardinality `n`: missing candidate elements
//! are penalized, surplus candidate elements are ignored.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entries may overshoot `[0, 1]` by this much from floating-point weight
/// sums; they are clamped back.
const RANGE_SLACK: f64 = 1e-9;

/// Two assignment totals closer than this are treated as tied.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MatchingError {
    #[error("similarity entry ({row}, {col}) = {value} lies outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("similarity matrix expects {expected} entries, got {actual}")]
    Shape { expected: usize, actual: usize },
}

/// Reference × candidate similarity matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, MatchingError> {
        if entries.len() != rows * cols {
            return Err(MatchingError::Shape {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        let mut entries = entries;
        for (idx, value) in entries.iter_mut().enumerate() {
            if !value.is_finite() || *value < -RANGE_SLACK || *value > 1.0 + RANGE_SLACK {
                return Err(MatchingError::OutOfRange {
                    row: idx / cols.max(1),
                    col: idx % cols.max(1),
                    value: *value,
                });
            }
            *value = value.clamp(0.0, 1.0);
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_fn<F>(rows: usize, cols: usize, mut f: F) -> Result<Self, MatchingError>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::new(rows, cols, entries)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatchingError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(MatchingError::Shape {
                    expected: n * m,
                    actual: rows.iter().map(Vec::len).sum(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(n, m, entries)
    }

    /// An `n × 0` or `0 × m` matrix.
    pub fn empty(rows: usize, cols: usize) -> Self {
        assert!(rows == 0 || cols == 0, "empty matrix needs a zero dimension");
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingResult {
    pub score: f64,
    /// `(reference index, candidate index)` sorted by reference index;
    /// length `min(n, m)`.
    pub pairs: Vec<(usize, usize)>,
}

/// Optimal matching similarity with deterministic pairs.
///
/// Among equally optimal assignments the lexicographically smallest pair
/// list (sorted by reference index) is returned.
pub fn optimal_matching(matrix: &SimilarityMatrix) -> MatchingResult {
    let (n, m) = (matrix.rows, matrix.cols);
    if n == 0 {
        return MatchingResult {
            score: 1.0,
            pairs: Vec::new(),
        };
    }
    if m == 0 {
        return MatchingResult {
            score: 0.0,
            pairs: Vec::new(),
        };
    }
    let pairs = lexicographic_optimum(matrix);
    let total: f64 = pairs.iter().map(|&(i, j)| matrix.get(i, j)).sum();
    MatchingResult {
        score: (total / n as f64).clamp(0.0, 1.0),
        pairs,
    }
}

/// Score-only variant of [`optimal_matching`]; skips pair tie-breaking.
pub fn matching_score(matrix: &SimilarityMatrix) -> f64 {
    let (n, m) = (matrix.rows, matrix.cols);
    if n == 0 {
        return 1.0;
    }
    if m == 0 {
        return 0.0;
    }
    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..m).collect();
    let (total, _) = solve_subproblem(matrix, &rows, &cols);
    (total / n as f64).clamp(0.0, 1.0)
}

/// Greedy row-by-row fixing: keep the smallest column (or, when rows
/// outnumber columns, leaving the row unmatched) whose completion still
/// reaches the optimum.
fn lexicographic_optimum(matrix: &SimilarityMatrix) -> Vec<(usize, usize)> {
    let (n, m) = (matrix.rows, matrix.cols);
    let all_rows: Vec<usize> = (0..n).collect();
    let all_cols: Vec<usize> = (0..m).collect();
    let (best, assignment) = solve_subproblem(matrix, &all_rows, &all_cols);

    // The identity assignment is the smallest pair list of all.
    if is_identity(matrix, &assignment) {
        return assignment;
    }

    let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(n.min(m));
    let mut fixed_sum = 0.0;
    let mut free_cols: Vec<usize> = all_cols;
    for i in 0..n {
        let rest_rows: Vec<usize> = ((i + 1)..n).collect();
        let mut chosen = None;
        if !free_cols.is_empty() {
            for (pos, &j) in free_cols.iter().enumerate() {
                let mut rest_cols = free_cols.clone();
                rest_cols.remove(pos);
                let (rest, _) = solve_subproblem(matrix, &rest_rows, &rest_cols);
                if fixed_sum + matrix.get(i, j) + rest >= best - TIE_EPS {
                    chosen = Some(pos);
                    break;
                }
            }
        }
        match chosen {
            Some(pos) => {
                let j = free_cols.remove(pos);
                fixed_sum += matrix.get(i, j);
                fixed.push((i, j));
            }
            None => {
                // Row left unmatched; only reachable when n > m.
                debug_assert!(n > m);
            }
        }
        if free_cols.is_empty() {
            break;
        }
    }
    fixed
}

fn is_identity(matrix: &SimilarityMatrix, assignment: &[(usize, usize)]) -> bool {
    matrix.rows <= matrix.cols
        && assignment
            .iter()
            .enumerate()
            .all(|(k, &(i, j))| i == k && j == k)
}

/// Maximum total over a row/column subset, with the realizing pairs.
fn solve_subproblem(matrix: &SimilarityMatrix, rows: &[usize], cols: &[usize]) -> (f64, Vec<(usize, usize)>) {
    if rows.is_empty() || cols.is_empty() {
        return (0.0, Vec::new());
    }
    let k = rows.len().max(cols.len());
    // Minimize negated similarity; padded cells cost 0.
    let mut cost = vec![0.0; k * k];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            cost[a * k + b] = -matrix.get(i, j);
        }
    }
    let row_to_col = hungarian_min(&cost, k);
    let mut total = 0.0;
    let mut pairs = Vec::with_capacity(rows.len().min(cols.len()));
    for (a, &b) in row_to_col.iter().enumerate() {
        if a < rows.len() && b < cols.len() {
            total += matrix.get(rows[a], cols[b]);
            pairs.push((rows[a], cols[b]));
        }
    }
    pairs.sort_unstable();
    (total, pairs)
}

/// Square minimum-cost assignment via shortest augmenting paths with
/// potentials. `cost` is row-major `k × k`; returns the column of each row.
pub(crate) fn hungarian_min(cost: &[f64], k: usize) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost[(i0 - 1) * k + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
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
    let mut row_to_col = vec![0; k];
    for j in 1..=k {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}
