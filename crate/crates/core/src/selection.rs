//! The meeting matrix `A`: node `i` wakes with probability `1/n` and then
//! picks partner `j` with probability `a_ij`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{induced_graph, Digraph};

const ROW_SUM_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RowSumMode {
    /// Every row sums to one.
    #[default]
    Strict,
    /// Rows may sum to less than one; the leftover mass is an idle slot.
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionMatrix {
    n: usize,
    mode: RowSumMode,
    rows: Vec<Vec<f64>>,
    #[serde(skip)]
    cumulative: Vec<Vec<f64>>,
}

impl SelectionMatrix {
    pub fn new(rows: Vec<Vec<f64>>, mode: RowSumMode) -> Result<Self> {
        let n = rows.len();
        if n < 3 {
            return Err(Error::InvalidSelection(format!(
                "need at least three nodes, got {n}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|a| !a.is_finite() || *a < 0.0) {
                return Err(Error::InvalidSelection(format!(
                    "entry ({i}, {j}) = {} is not a nonnegative number",
                    row[j]
                )));
            }
            let sum: f64 = row.iter().sum();
            let ok = match mode {
                RowSumMode::Strict => (sum - 1.0).abs() <= ROW_SUM_TOL,
                RowSumMode::Relaxed => sum <= 1.0 + ROW_SUM_TOL,
            };
            if !ok {
                return Err(Error::InvalidSelection(format!(
                    "row {i} sums to {sum} ({mode:?} mode)"
                )));
            }
        }
        let cumulative = rows
            .iter()
            .map(|row| {
                row.iter()
                    .scan(0.0, |acc, a| {
                        *acc += a;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            n,
            mode,
            rows,
            cumulative,
        })
    }

    /// `a_ij = 1/(n-1)` for every `i != j`.
    pub fn complete_uniform(n: usize) -> Result<Self> {
        let w = 1.0 / (n as f64 - 1.0);
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { w }).collect())
            .collect();
        Self::new(rows, RowSumMode::Strict)
    }

    /// Node `i` always picks `i + 1 (mod n)`, so the induced graph is the
    /// directed cycle `1 -> 0, 2 -> 1, ..., 0 -> n-1`.
    pub fn directed_ring(n: usize) -> Result<Self> {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if j == (i + 1) % n { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(rows, RowSumMode::Strict)
    }

    /// Selection matrix whose induced graph is `g` (plus self-loops on nodes
    /// without in-arcs): row `i` is uniform over the in-neighbours of `i`.
    pub fn from_digraph(g: &Digraph) -> Result<Self> {
        let n = g.node_count();
        let mut rows = vec![vec![0.0; n]; n];
        for (j, i) in g.arcs() {
            rows[i][j] = 1.0;
        }
        for (i, row) in rows.iter_mut().enumerate() {
            let deg: f64 = row.iter().sum();
            if deg == 0.0 {
                row[i] = 1.0;
            } else {
                row.iter_mut().for_each(|a| *a /= deg);
            }
        }
        Self::new(rows, RowSumMode::Strict)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> RowSumMode {
        self.mode
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub(crate) fn cumulative_row(&self, i: usize) -> &[f64] {
        &self.cumulative[i]
    }

    pub fn transpose_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.rows[j][i]).collect())
            .collect()
    }

    /// Induced graph of `A` (the underlying interaction graph).
    pub fn graph(&self) -> Digraph {
        induced_graph(&self.rows).expect("selection matrix is square")
    }

    /// Weighted Laplacian `D - (A + A^T)` with `d_i = sum_j (a_ij + a_ji)`.
    pub fn laplacian(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            let d: f64 = (0..n).map(|j| self.rows[i][j] + self.rows[j][i]).sum();
            for j in 0..n {
                l[i][j] = -(self.rows[i][j] + self.rows[j][i]);
            }
            l[i][i] += d;
        }
        l
    }

    /// Ascending eigenvalues of the weighted Laplacian; values within the
    /// tolerance of zero are clamped to zero.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        let mut ev = symmetric_eigenvalues(&self.laplacian());
        for v in ev.iter_mut() {
            if v.abs() <= EIGEN_TOL {
                *v = 0.0;
            }
        }
        ev
    }

    /// `h_i = (1/n) sum_{j != i} (a_ij + a_ji)`: per-slot probability mass of
    /// meetings that involve node `i`.
    pub fn participation(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.rows[i][j] + self.rows[j][i])
                    .sum::<f64>()
                    / n as f64
            })
            .collect()
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let dm = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let mut ev: Vec<f64> = SymmetricEigen::new(dm).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    pub lambda2_star: f64,
    pub d_star: usize,
    pub e_star: usize,
    pub a_star: f64,
    pub theta0: u64,
    pub h: Vec<f64>,
}

impl StructuralConstants {
    pub fn of(a: &SelectionMatrix) -> Result<Self> {
        let spectrum = a.laplacian_spectrum();
        let lambda2_star = spectrum[1];
        if lambda2_star <= 0.0 {
            return Err(Error::Disconnected);
        }
        let g = a.graph();
        let gt = g.converse();
        let d_star = g.diameter()?.max(gt.diameter()?);
        let loops = (0..a.n()).filter(|&i| a.get(i, i) > 0.0).count();
        let e_star = g.arc_count() - loops;
        let a_star = (0..a.n())
            .flat_map(|i| (0..a.n()).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j))
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !a_star.is_finite() {
            return Err(Error::NoOffDiagonal);
        }
        let theta0 = (2 * d_star as u64 - 1) * (2 * e_star as u64 - 1);
        Ok(Self {
            lambda2_star,
            d_star,
            e_star,
            a_star,
            theta0,
            h: a.participation(),
        })
    }
}

pub fn structural_constants(a: &SelectionMatrix) -> Result<StructuralConstants> {
    StructuralConstants::of(a)
}
