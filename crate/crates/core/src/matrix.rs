//! Row-stochastic matrices, the ergodicity coefficients `delta` and
//! `lambda`, and the update matrices a single gossip slot can realize.
//!
//! Matrices come in two representations. Float matrices are plain `f64`.
//! Dyadic matrices share one power-of-two denominator `2^exp` and keep
//! arbitrary-precision numerators, so products of averaging matrices are
//! exact and statements such as "all rows are identical" can be certified.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::graph::{induced_graph, Digraph};
use crate::selection::SelectionMatrix;

/// Largest shared denominator exponent a dyadic matrix may carry.
pub const DYADIC_EXPONENT_CAP: u32 = 4096;

/// Absolute tolerance for row sums and equality tests in float mode.
pub const FLOAT_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq)]
enum Entries {
    Float(Vec<f64>),
    Dyadic { num: Vec<BigInt>, exp: u32 },
}

#[derive(Clone, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    entries: Entries,
}

impl std::hash::Hash for StochasticMatrix {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        match &self.entries {
            Entries::Float(v) => v.iter().for_each(|x| x.to_bits().hash(state)),
            Entries::Dyadic { num, exp } => {
                num.hash(state);
                exp.hash(state);
            }
        }
    }
}

// Entries are validated finite, so float equality is reflexive here.
impl Eq for StochasticMatrix {}

impl fmt::Debug for StochasticMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.is_dyadic() { "dyadic" } else { "float" };
        f.debug_struct("StochasticMatrix")
            .field("repr", &tag)
            .field("rows", &self.to_rows())
            .finish()
    }
}

impl StochasticMatrix {
    /// Float matrix from rows; checks squareness, nonnegativity and unit row sums.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidMatrix(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > FLOAT_TOL {
                return Err(Error::InvalidMatrix(format!("row {i} sums to {s}")));
            }
            flat.extend(row);
        }
        Ok(Self {
            n,
            entries: Entries::Float(flat),
        })
    }

    /// Dyadic matrix from integer numerators over `2^exp`, row-major.
    pub fn from_dyadic(n: usize, num: Vec<BigInt>, exp: u32) -> Result<Self> {
        if num.len() != n * n || n == 0 {
            return Err(Error::Dimension(format!("{} numerators for an {n}x{n} matrix", num.len())));
        }
        let one = BigInt::one() << exp as usize;
        for i in 0..n {
            let row = &num[i * n..(i + 1) * n];
            if row.iter().any(|x| x.sign() == num_bigint::Sign::Minus) {
                return Err(Error::InvalidMatrix(format!("row {i} has a negative entry")));
            }
            if row.iter().sum::<BigInt>() != one {
                return Err(Error::InvalidMatrix(format!("row {i} does not sum to one")));
            }
        }
        let mut m = Self {
            n,
            entries: Entries::Dyadic { num, exp },
        };
        m.normalize_dyadic();
        m.check_cap()?;
        Ok(m)
    }

    pub fn identity(n: usize, dyadic: bool) -> Self {
        if dyadic {
            let num = (0..n * n)
                .map(|k| if k / n == k % n { BigInt::one() } else { BigInt::zero() })
                .collect();
            Self {
                n,
                entries: Entries::Dyadic { num, exp: 0 },
            }
        } else {
            let flat = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
            Self {
                n,
                entries: Entries::Float(flat),
            }
        }
    }

    /// `1 beta^T`: every row equal to `beta`.
    pub fn rank_one(beta: &[f64]) -> Result<Self> {
        Self::from_rows(vec![beta.to_vec(); beta.len()])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_dyadic(&self) -> bool {
        matches!(self.entries, Entries::Dyadic { .. })
    }

    /// Shared denominator exponent of a dyadic matrix.
    pub fn dyadic_exponent(&self) -> Option<u32> {
        match &self.entries {
            Entries::Dyadic { exp, .. } => Some(*exp),
            Entries::Float(_) => None,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.entries {
            Entries::Float(v) => v[i * self.n + j],
            Entries::Dyadic { num, exp } => Dyadic::new(num[i * self.n + j].clone(), *exp).to_f64(),
        }
    }

    pub fn get_exact(&self, i: usize, j: usize) -> Option<Dyadic> {
        match &self.entries {
            Entries::Float(_) => None,
            Entries::Dyadic { num, exp } => Some(Dyadic::new(num[i * self.n + j].clone(), *exp)),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn to_float(&self) -> Self {
        match &self.entries {
            Entries::Float(_) => self.clone(),
            Entries::Dyadic { .. } => Self {
                n: self.n,
                entries: Entries::Float((0..self.n * self.n).map(|k| self.get(k / self.n, k % self.n)).collect()),
            },
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let entries = match &self.entries {
            Entries::Float(v) => Entries::Float((0..n * n).map(|k| v[(k % n) * n + k / n]).collect()),
            Entries::Dyadic { num, exp } => Entries::Dyadic {
                num: (0..n * n).map(|k| num[(k % n) * n + k / n].clone()).collect(),
                exp: *exp,
            },
        };
        Self { n, entries }
    }

    fn normalize_dyadic(&mut self) {
        if let Entries::Dyadic { num, exp } = &mut self.entries {
            let tz = num
                .iter()
                .filter(|x| !x.is_zero())
                .map(|x| x.trailing_zeros().unwrap_or(0))
                .min()
                .unwrap_or(0);
            let shift = tz.min(*exp as u64) as usize;
            if shift > 0 {
                num.iter_mut().for_each(|x| *x >>= shift);
                *exp -= shift as u32;
            }
        }
    }

    fn check_cap(&self) -> Result<()> {
        match self.dyadic_exponent() {
            Some(e) if e > DYADIC_EXPONENT_CAP => Err(Error::DyadicOverflow {
                exponent: e as u64,
                cap: DYADIC_EXPONENT_CAP,
            }),
            _ => Ok(()),
        }
    }

    /// Matrix product `self * rhs`. Dyadic only when both factors are dyadic.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        let n = self.n;
        if rhs.n != n {
            return Err(Error::Dimension(format!("cannot multiply {n}x{n} by {0}x{0}", rhs.n)));
        }
        match (&self.entries, &rhs.entries) {
            (Entries::Dyadic { num: a, exp: ea }, Entries::Dyadic { num: b, exp: eb }) => {
                let exp = *ea as u64 + *eb as u64;
                let mut num = vec![BigInt::zero(); n * n];
                for i in 0..n {
                    for k in 0..n {
                        let aik = &a[i * n + k];
                        if aik.is_zero() {
                            continue;
                        }
                        for j in 0..n {
                            let bkj = &b[k * n + j];
                            if !bkj.is_zero() {
                                num[i * n + j] += aik * bkj;
                            }
                        }
                    }
                }
                let mut m = Self {
                    n,
                    entries: Entries::Dyadic {
                        num,
                        exp: exp.min(u32::MAX as u64) as u32,
                    },
                };
                m.normalize_dyadic();
                m.check_cap()?;
                Ok(m)
            }
            _ => {
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for k in 0..n {
                        let aik = self.get(i, k);
                        if aik == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            out[i * n + j] += aik * rhs.get(k, j);
                        }
                    }
                }
                Ok(Self {
                    n,
                    entries: Entries::Float(out),
                })
            }
        }
    }

    /// Left-multiplies in place by an update matrix: `self <- U * self`.
    /// This is a row operation, much cheaper than a full product.
    pub fn apply_update_left(&mut self, u: &UpdateMatrix) -> Result<()> {
        let n = self.n;
        let (target, sources) = match u.kind {
            UpdateKind::Identity => return Ok(()),
            UpdateKind::Symmetric { i, j } => ((i, Some(j)), (i, j)),
            UpdateKind::Asymmetric { i, j } => ((i, None), (i, j)),
        };
        match &mut self.entries {
            Entries::Float(v) => {
                let (a, b) = sources;
                for c in 0..n {
                    let m = 0.5 * (v[a * n + c] + v[b * n + c]);
                    v[target.0 * n + c] = m;
                    if let Some(t2) = target.1 {
                        v[t2 * n + c] = m;
                    }
                }
            }
            Entries::Dyadic { num, exp } => {
                let (a, b) = sources;
                let mut avg = Vec::with_capacity(n);
                for c in 0..n {
                    avg.push(&num[a * n + c] + &num[b * n + c]);
                }
                // every other row is doubled to move to the denominator 2^(exp+1)
                for r in 0..n {
                    if r == target.0 || Some(r) == target.1 {
                        continue;
                    }
                    for c in 0..n {
                        num[r * n + c] <<= 1usize;
                    }
                }
                for (c, s) in avg.into_iter().enumerate() {
                    if let Some(t2) = target.1 {
                        num[t2 * n + c] = s.clone();
                    }
                    num[target.0 * n + c] = s;
                }
                *exp += 1;
                self.normalize_dyadic();
                self.check_cap()?;
            }
        }
        Ok(())
    }

    /// `delta(M) = max_j max_{a,b} |m_aj - m_bj|`.
    pub fn delta(&self) -> f64 {
        match self.delta_exact() {
            Some(d) => d.to_f64(),
            None => (0..self.n)
                .map(|j| {
                    let col = (0..self.n).map(|i| self.get(i, j));
                    let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
                    hi - lo
                })
                .fold(0.0, f64::max),
        }
    }

    pub fn delta_exact(&self) -> Option<Dyadic> {
        let Entries::Dyadic { num, exp } = &self.entries else {
            return None;
        };
        let n = self.n;
        let best = (0..n)
            .map(|j| {
                let col = (0..n).map(|i| &num[i * n + j]);
                let hi = col.clone().max().cloned().unwrap_or_default();
                let lo = col.min().cloned().unwrap_or_default();
                hi - lo
            })
            .max()
            .unwrap_or_default();
        Some(Dyadic::new(best, *exp))
    }

    /// `lambda(M) = 1 - min_{a,b} sum_j min(m_aj, m_bj)`.
    pub fn lambda(&self) -> f64 {
        match self.lambda_exact() {
            Some(l) => l.to_f64(),
            None => {
                let n = self.n;
                let mut min_overlap = f64::INFINITY;
                for a in 0..n {
                    for b in (a + 1)..n {
                        let s: f64 = (0..n).map(|j| self.get(a, j).min(self.get(b, j))).sum();
                        min_overlap = min_overlap.min(s);
                    }
                }
                if n == 1 {
                    0.0
                } else {
                    (1.0 - min_overlap).clamp(0.0, 1.0)
                }
            }
        }
    }

    pub fn lambda_exact(&self) -> Option<Dyadic> {
        let Entries::Dyadic { num, exp } = &self.entries else {
            return None;
        };
        let n = self.n;
        let one = BigInt::one() << *exp as usize;
        let mut min_overlap: Option<BigInt> = None;
        for a in 0..n {
            for b in (a + 1)..n {
                let s: BigInt = (0..n)
                    .map(|j| std::cmp::min(&num[a * n + j], &num[b * n + j]).clone())
                    .sum();
                if min_overlap.as_ref().is_none_or(|m| s < *m) {
                    min_overlap = Some(s);
                }
            }
        }
        let overlap = min_overlap.unwrap_or_else(|| one.clone());
        Some(Dyadic::new(one - overlap, *exp))
    }

    pub fn is_scrambling(&self) -> bool {
        match self.lambda_exact() {
            Some(l) => l < Dyadic::one(),
            None => self.lambda() < 1.0,
        }
    }

    /// Smallest nonzero entry, exact for dyadic matrices.
    pub fn min_positive_entry(&self) -> Option<f64> {
        (0..self.n * self.n)
            .map(|k| self.get(k / self.n, k % self.n))
            .filter(|&x| x > 0.0)
            .min_by(f64::total_cmp)
    }

    /// Whether every nonzero entry is at least `2^-k` (exact in dyadic mode).
    pub fn nonzero_entries_at_least_pow2_neg(&self, k: u32) -> bool {
        match &self.entries {
            Entries::Dyadic { num, exp } => {
                if k >= *exp {
                    return true;
                }
                let floor = BigInt::one() << (*exp - k) as usize;
                num.iter().filter(|x| !x.is_zero()).all(|x| *x >= floor)
            }
            Entries::Float(v) => {
                let floor = 2f64.powi(-(k as i32));
                v.iter().filter(|x| **x > 0.0).all(|x| *x >= floor - FLOAT_TOL)
            }
        }
    }

    /// Column sums equal one: doubly stochastic (exact in dyadic mode).
    pub fn is_doubly_stochastic(&self) -> bool {
        let n = self.n;
        match &self.entries {
            Entries::Dyadic { num, exp } => {
                let one = BigInt::one() << *exp as usize;
                (0..n).all(|j| (0..n).map(|i| &num[i * n + j]).sum::<BigInt>() == one)
            }
            Entries::Float(_) => (0..n).all(|j| ((0..n).map(|i| self.get(i, j)).sum::<f64>() - 1.0).abs() <= FLOAT_TOL),
        }
    }

    pub fn induced_graph(&self) -> Digraph {
        induced_graph(&self.to_rows()).expect("square by construction")
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..self.n * self.n)
            .map(|k| (self.get(k / self.n, k % self.n) - other.get(k / self.n, k % self.n)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.entries {
            Entries::Dyadic { .. } => *self == self.transpose(),
            Entries::Float(_) => self.max_abs_diff(&self.transpose()) <= FLOAT_TOL,
        }
    }

    /// Numerators as `u64` if the matrix is dyadic and they fit; used as a
    /// compact hash key during enumeration.
    pub fn dyadic_key(&self) -> Option<(u32, Vec<u64>)> {
        match &self.entries {
            Entries::Dyadic { num, exp } => num.iter().map(|x| x.to_u64()).collect::<Option<Vec<_>>>().map(|v| (*exp, v)),
            Entries::Float(_) => None,
        }
    }
}

/// Result of the finite-consensus test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConsensusCheck {
    /// All rows identical.
    pub consensus: bool,
    /// Whether the verdict is exact (dyadic input) or used the float tolerance.
    pub exact: bool,
}

/// Whether `M = 1 beta^T`, i.e. every row is identical.
pub fn is_finite_consensus(m: &StochasticMatrix) -> ConsensusCheck {
    match m.delta_exact() {
        Some(d) => ConsensusCheck {
            consensus: d.is_zero(),
            exact: true,
        },
        None => {
            log::warn!("finite-consensus test on a float matrix is only accurate to {FLOAT_TOL}");
            ConsensusCheck {
                consensus: m.delta() <= FLOAT_TOL,
                exact: false,
            }
        }
    }
}

pub fn delta_coefficient(m: &StochasticMatrix) -> f64 {
    m.delta()
}

pub fn lambda_coefficient(m: &StochasticMatrix) -> f64 {
    m.lambda()
}

/// Product of matrices given in time order: returns `M_k ... M_1` for the
/// list `[M_1, ..., M_k]`.
pub fn product_chain(ms: &[StochasticMatrix]) -> Result<StochasticMatrix> {
    let Some(first) = ms.first() else {
        return Err(Error::Dimension("empty product chain".into()));
    };
    let mut acc = first.clone();
    for m in &ms[1..] {
        acc = m.mul(&acc)?;
    }
    Ok(acc)
}

/// Which pairwise averaging happened in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UpdateKind {
    Identity,
    /// Both `i` and `j` move to their midpoint; stored with `i < j`.
    Symmetric { i: usize, j: usize },
    /// Only `i` moves, to the midpoint of `x_i` and `x_j`.
    Asymmetric { i: usize, j: usize },
}

impl Serialize for UpdateKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let t = match *self {
            UpdateKind::Identity => ("identity", 0, 0),
            UpdateKind::Symmetric { i, j } => ("symmetric", i, j),
            UpdateKind::Asymmetric { i, j } => ("asymmetric", i, j),
        };
        t.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UpdateKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (kind, i, j): (String, usize, usize) = Deserialize::deserialize(d)?;
        match kind.as_str() {
            "identity" => Ok(UpdateKind::Identity),
            "symmetric" => Ok(UpdateKind::Symmetric { i: i.min(j), j: i.max(j) }),
            "asymmetric" => Ok(UpdateKind::Asymmetric { i, j }),
            other => Err(serde::de::Error::custom(format!("unknown update kind `{other}`"))),
        }
    }
}

/// A realizable slot matrix: `I`, `I - (e_i - e_j)(e_i - e_j)^T / 2` or
/// `I - e_i (e_i - e_j)^T / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UpdateMatrix {
    pub kind: UpdateKind,
    pub n: usize,
}

impl UpdateMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            kind: UpdateKind::Identity,
            n,
        }
    }

    pub fn symmetric(i: usize, j: usize, n: usize) -> Result<Self> {
        Self::checked(UpdateKind::Symmetric { i: i.min(j), j: i.max(j) }, i, j, n)
    }

    pub fn asymmetric(i: usize, j: usize, n: usize) -> Result<Self> {
        Self::checked(UpdateKind::Asymmetric { i, j }, i, j, n)
    }

    fn checked(kind: UpdateKind, i: usize, j: usize, n: usize) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidUpdate(format!("pair ({i}, {j}) repeats a node")));
        }
        if i >= n || j >= n {
            return Err(Error::InvalidUpdate(format!("pair ({i}, {j}) outside 0..{n}")));
        }
        Ok(Self { kind, n })
    }

    pub fn is_identity(&self) -> bool {
        self.kind == UpdateKind::Identity
    }

    /// Exact dyadic expansion.
    pub fn expand(&self) -> StochasticMatrix {
        let mut m = StochasticMatrix::identity(self.n, true);
        m.apply_update_left(self).expect("exponent 1 is below the cap");
        m
    }
}

pub fn expand(u: &UpdateMatrix) -> StochasticMatrix {
    u.expand()
}

fn pairs_with_interaction(a: &SelectionMatrix) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n = a.n();
    (0..n)
        .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(move |&(i, j)| a.get(i, j) + a.get(j, i) > 0.0)
}

/// All symmetric averaging matrices on `n` nodes.
pub fn family_m2_star(n: usize) -> Vec<UpdateMatrix> {
    (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| UpdateMatrix::symmetric(i, j, n).expect("distinct in range"))
        .collect()
}

/// Symmetric averaging matrices on pairs that can meet under `A`.
pub fn family_m2(a: &SelectionMatrix) -> Vec<UpdateMatrix> {
    pairs_with_interaction(a)
        .map(|(i, j)| UpdateMatrix::symmetric(i, j, a.n()).expect("distinct in range"))
        .collect()
}

/// One-sided averaging matrices on pairs that can meet under `A`, both orientations.
pub fn family_m1(a: &SelectionMatrix) -> Vec<UpdateMatrix> {
    pairs_with_interaction(a)
        .flat_map(|(i, j)| [(i, j), (j, i)])
        .map(|(i, j)| UpdateMatrix::asymmetric(i, j, a.n()).expect("distinct in range"))
        .collect()
}

/// Every non-identity matrix a slot can realize under `A`.
pub fn family_m(a: &SelectionMatrix) -> Vec<UpdateMatrix> {
    let mut f = family_m1(a);
    f.extend(family_m2(a));
    f
}

/// Mean slot matrix under perfectly dependent communication with success
/// probability `p`: `I - p/(2n) (D - (A + A^T))`.
pub fn expected_update_dependent(a: &SelectionMatrix, p: f64) -> StochasticMatrix {
    let n = a.n();
    let l = a.laplacian();
    let scale = p / (2.0 * n as f64);
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    id - scale * l[i][j]
                })
                .collect()
        })
        .collect();
    StochasticMatrix {
        n,
        entries: Entries::Float(flatten(rows)),
    }
}

/// Mean slot matrix under independent communication, summed over the full
/// sample space of realized update matrices.
pub fn expected_update_independent(a: &SelectionMatrix, p_plus: f64, p_minus: f64) -> StochasticMatrix {
    let n = a.n();
    let nf = n as f64;
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    // adds prob * (U - I) for one realizable U
    let mut add = |u: UpdateKind, prob: f64| match u {
        UpdateKind::Symmetric { i, j } => {
            m[i][i] -= prob / 2.0;
            m[i][j] += prob / 2.0;
            m[j][j] -= prob / 2.0;
            m[j][i] += prob / 2.0;
        }
        UpdateKind::Asymmetric { i, j } => {
            m[i][i] -= prob / 2.0;
            m[i][j] += prob / 2.0;
        }
        UpdateKind::Identity => {}
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let asym = a.get(i, j) / nf * p_plus * (1.0 - p_minus) + a.get(j, i) / nf * p_minus * (1.0 - p_plus);
            add(UpdateKind::Asymmetric { i, j }, asym);
            if i < j {
                let sym = (a.get(i, j) + a.get(j, i)) / nf * p_plus * p_minus;
                add(UpdateKind::Symmetric { i, j }, sym);
            }
        }
    }
    StochasticMatrix {
        n,
        entries: Entries::Float(flatten(m)),
    }
}

fn flatten(rows: Vec<Vec<f64>>) -> Vec<f64> {
    rows.into_iter().flatten().collect()
}

/// Second-largest eigenvalue of a symmetric stochastic matrix.
pub fn second_eigenvalue_symmetric(m: &StochasticMatrix) -> f64 {
    let ev = crate::selection::symmetric_eigenvalues(&m.to_rows());
    ev[ev.len().saturating_sub(2)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::RowSumMode;
    use proptest::prelude::*;

    fn k3() -> SelectionMatrix {
        SelectionMatrix::complete_uniform(3).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(StochasticMatrix::identity(3, false).delta(), 1.0);
        assert_eq!(StochasticMatrix::identity(3, true).delta(), 1.0);
        let r1 = StochasticMatrix::rank_one(&[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(r1.delta(), 0.0);
        let w = UpdateMatrix::symmetric(0, 1, 3).unwrap().expand();
        assert_eq!(w.delta(), 1.0);
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(StochasticMatrix::identity(3, true).lambda(), 1.0);
        let third = StochasticMatrix::from_rows(vec![vec![1.0 / 3.0; 3]; 3]).unwrap();
        assert!(third.lambda().abs() < 1e-15);
        assert!(third.is_scrambling());
        let w = UpdateMatrix::symmetric(0, 1, 3).unwrap().expand();
        assert_eq!(w.lambda(), 1.0);
        assert!(!w.is_scrambling());
    }

    #[test]
    fn expand_examples() {
        let s = UpdateMatrix::symmetric(0, 1, 3).unwrap().expand();
        assert_eq!(s.to_rows(), vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(s.dyadic_exponent(), Some(1));
        let a = UpdateMatrix::asymmetric(0, 1, 3).unwrap().expand();
        assert_eq!(a.to_rows(), vec![vec![0.5, 0.5, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(UpdateMatrix::identity(3).expand(), StochasticMatrix::identity(3, true));
        assert!(UpdateMatrix::symmetric(1, 1, 3).is_err());
        assert!(UpdateMatrix::asymmetric(0, 3, 3).is_err());
    }

    #[test]
    fn symmetric_update_is_a_doubly_stochastic_projection() {
        for u in family_m2_star(4) {
            let w = u.expand();
            assert!(w.is_doubly_stochastic());
            assert_eq!(w.transpose(), w);
            assert_eq!(w.mul(&w).unwrap(), w);
            assert_eq!(w.transpose().mul(&w).unwrap(), w);
        }
        for u in family_m1(&k3()) {
            assert!(!u.expand().is_doubly_stochastic());
        }
    }

    #[test]
    fn product_chain_examples() {
        let s = UpdateMatrix::symmetric(0, 1, 3).unwrap().expand();
        assert_eq!(product_chain(&[s.clone(), s.clone()]).unwrap(), s);
        let id = StochasticMatrix::identity(3, true);
        assert_eq!(product_chain(&[id.clone(), id.clone(), id.clone()]).unwrap(), id);

        let chain = [
            UpdateMatrix::asymmetric(0, 1, 3).unwrap().expand(),
            UpdateMatrix::symmetric(1, 2, 3).unwrap().expand(),
        ];
        let p = product_chain(&chain).unwrap();
        assert!(p.nonzero_entries_at_least_pow2_neg(2));
        assert!(p.min_positive_entry().unwrap() >= 0.25);
        // orientation: the symmetric(1,2) step acts last, so rows 1 and 2 agree
        assert_eq!(p.to_rows()[1], p.to_rows()[2]);
        assert!(product_chain(&[]).is_err());
    }

    #[test]
    fn apply_update_left_matches_full_product() {
        let mut p = StochasticMatrix::identity(4, true);
        let mut chain = Vec::new();
        for u in [
            UpdateMatrix::asymmetric(2, 0, 4).unwrap(),
            UpdateMatrix::symmetric(1, 3, 4).unwrap(),
            UpdateMatrix::asymmetric(0, 3, 4).unwrap(),
        ] {
            p.apply_update_left(&u).unwrap();
            chain.push(u.expand());
        }
        assert_eq!(p, product_chain(&chain).unwrap());
    }

    #[test]
    fn dyadic_overflow_is_reported() {
        let u = UpdateMatrix::asymmetric(0, 1, 3).unwrap();
        let mut p = StochasticMatrix::identity(3, true);
        let mut err = None;
        for _ in 0..5000 {
            if let Err(e) = p.apply_update_left(&u) {
                err = Some(e);
                break;
            }
        }
        assert!(matches!(err, Some(Error::DyadicOverflow { .. })));
    }

    #[test]
    fn finite_consensus_checks() {
        let r1 = StochasticMatrix::rank_one(&[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(is_finite_consensus(&r1), ConsensusCheck { consensus: true, exact: false });
        let id = StochasticMatrix::identity(3, true);
        assert_eq!(is_finite_consensus(&id), ConsensusCheck { consensus: false, exact: true });
        // the even-n witness: pair up, then cross-pair
        let chain: Vec<_> = [(0, 1), (2, 3), (0, 2), (1, 3)]
            .iter()
            .map(|&(i, j)| UpdateMatrix::symmetric(i, j, 4).unwrap().expand())
            .collect();
        let p = product_chain(&chain).unwrap();
        assert!(is_finite_consensus(&p).consensus);
    }

    #[test]
    fn expected_update_dependent_examples() {
        let a = k3();
        assert!(expected_update_dependent(&a, 0.0).max_abs_diff(&StochasticMatrix::identity(3, false)) == 0.0);
        let e = expected_update_dependent(&a, 1.0);
        // I - L/6 with L = 3I - J
        for i in 0..3 {
            for j in 0..3 {
                let l = if i == j { 2.0 } else { -1.0 };
                let want = if i == j { 1.0 } else { 0.0 } - l / 6.0;
                assert!((e.get(i, j) - want).abs() < 1e-15);
            }
        }
        assert!((second_eigenvalue_symmetric(&e) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn expected_update_independent_examples() {
        let a = k3();
        let id = StochasticMatrix::identity(3, false);
        assert_eq!(expected_update_independent(&a, 0.0, 0.0).max_abs_diff(&id), 0.0);
        let dep = expected_update_dependent(&a, 1.0);
        assert!(expected_update_independent(&a, 1.0, 1.0).max_abs_diff(&dep) < 1e-15);

        let ring = SelectionMatrix::directed_ring(3).unwrap();
        let e = expected_update_independent(&ring, 1.0, 0.0);
        for row in e.to_rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(!e.is_symmetric());
        // node 0 listens to node 1 in a third of the slots
        assert!((e.get(0, 1) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(e.get(1, 0), 0.0);

        let eq = expected_update_independent(&ring, 0.4, 0.4);
        assert!(eq.is_symmetric() && eq.is_doubly_stochastic());
    }

    #[test]
    fn eigenvalue_identity_on_k3() {
        let a = k3();
        let sc = crate::selection::structural_constants(&a).unwrap();
        for p in [0.1, 0.5, 0.9, 1.0] {
            let e = expected_update_dependent(&a, p);
            let want = 1.0 - sc.lambda2_star * p / 6.0;
            assert!((second_eigenvalue_symmetric(&e) - want).abs() < 1e-9);
        }
    }

    fn arb_stochastic(n: usize) -> impl Strategy<Value = StochasticMatrix> {
        proptest::collection::vec(proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], n), n).prop_map(
            move |raw| {
                let rows = raw
                    .into_iter()
                    .enumerate()
                    .map(|(i, mut r)| {
                        let s: f64 = r.iter().sum();
                        if s == 0.0 {
                            r[i] = 1.0;
                        } else {
                            r.iter_mut().for_each(|x| *x /= s);
                            let fix: f64 = 1.0 - r.iter().sum::<f64>();
                            let k = r.iter().position(|x| *x > 0.0).unwrap();
                            r[k] += fix;
                        }
                        r
                    })
                    .collect();
                StochasticMatrix::from_rows(rows).unwrap()
            },
        )
    }

    fn arb_selection() -> impl Strategy<Value = SelectionMatrix> {
        (3usize..6).prop_flat_map(|n| {
            arb_stochastic(n).prop_map(|m| SelectionMatrix::new(m.to_rows(), RowSumMode::Relaxed).unwrap())
        })
    }

    proptest! {
        #[test]
        fn delta_bounded_by_lambda_product(chain in proptest::collection::vec(arb_stochastic(4), 1..8)) {
            let prod = product_chain(&chain).unwrap();
            let bound: f64 = chain.iter().map(|m| m.lambda()).product();
            prop_assert!(prod.delta() <= bound + 1e-12);
        }

        #[test]
        fn coefficients_in_unit_interval(m in arb_stochastic(5)) {
            prop_assert!((0.0..=1.0).contains(&m.delta()));
            prop_assert!((0.0..=1.0).contains(&m.lambda()));
        }

        #[test]
        fn dependent_eigenvalue_identity(a in arb_selection(), p in 0.0f64..=1.0) {
            let Ok(sc) = crate::selection::structural_constants(&a) else { return Ok(()); };
            let e = expected_update_dependent(&a, p);
            let want = 1.0 - sc.lambda2_star * p / (2.0 * a.n() as f64);
            let got = second_eigenvalue_symmetric(&e);
            prop_assert!(got <= want + 1e-9);
            prop_assert!((got - want).abs() < 1e-9);
        }

        #[test]
        fn independent_mean_is_stochastic(a in arb_selection(), pp in 0.0f64..=1.0, pm in 0.0f64..=1.0) {
            let e = expected_update_independent(&a, pp, pm);
            for row in e.to_rows() {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|x| *x >= -1e-15));
            }
            if pp == pm {
                prop_assert!(e.is_symmetric());
            }
        }
    }
}
