//! Samplers for one slot: who meets whom, and which link directions work.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::UpdateMatrix;
use crate::rng::RandomStream;
use crate::schedule::SchedulePair;
use crate::selection::{RowSumMode, SelectionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommModel {
    /// One coin per slot decides both directions.
    Dependent,
    /// The two directions succeed independently.
    Independent,
}

/// Outcome of the pair-selection draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selection {
    /// Node `i` woke up and picked `j`; `i == j` is a self-selection and
    /// changes nothing.
    Pair(usize, usize),
    /// Leftover row mass of a relaxed selection matrix.
    Idle,
}

/// Draws `i` uniformly, then `j` from row `i` of `A`, so
/// `P(Pair(i, j)) = a_ij / n`.
pub fn sample_pair(a: &SelectionMatrix, rng: &mut RandomStream) -> Selection {
    let n = a.n();
    let i = rng.below(n);
    let u = rng.uniform();
    let cum = a.cumulative_row(i);
    if let Some(j) = cum.iter().position(|&c| u < c) {
        return Selection::Pair(i, j);
    }
    match a.mode() {
        RowSumMode::Relaxed => Selection::Idle,
        // strict rows sum to one up to rounding; give the sliver to the last support entry
        RowSumMode::Strict => {
            let j = (0..n).rev().find(|&j| a.get(i, j) > 0.0).unwrap_or(i);
            Selection::Pair(i, j)
        }
    }
}

/// Returns `(e_plus, e_minus)`.
pub fn sample_communication(
    model: CommModel,
    p_plus: f64,
    p_minus: f64,
    rng: &mut RandomStream,
) -> Result<(bool, bool)> {
    match model {
        CommModel::Dependent => {
            if p_plus != p_minus {
                return Err(Error::ModelMismatch {
                    plus: p_plus,
                    minus: p_minus,
                });
            }
            let ok = rng.uniform() < p_plus;
            Ok((ok, ok))
        }
        CommModel::Independent => {
            let plus = rng.uniform() < p_plus;
            let minus = rng.uniform() < p_minus;
            Ok((plus, minus))
        }
    }
}

/// Update matrix realized by a selection and the two link flags: under
/// `e_plus` node `i` hears `x_j`, under `e_minus` node `j` hears `x_i`.
pub fn realized_update(sel: Selection, e_plus: bool, e_minus: bool, n: usize) -> UpdateMatrix {
    let (i, j) = match sel {
        Selection::Pair(i, j) if i != j => (i, j),
        _ => return UpdateMatrix::identity(n),
    };
    let made = match (e_plus, e_minus) {
        (true, true) => UpdateMatrix::symmetric(i, j, n),
        (true, false) => UpdateMatrix::asymmetric(i, j, n),
        (false, true) => UpdateMatrix::asymmetric(j, i, n),
        (false, false) => return UpdateMatrix::identity(n),
    };
    made.expect("sampled pair is distinct and in range")
}

/// Slots `k in [0, horizon]` at which at least one direction succeeds.
/// Only the communication coins matter here; the caller supplies that stream.
pub fn success_times(
    schedules: &SchedulePair,
    model: CommModel,
    horizon: u64,
    rng: &mut RandomStream,
) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for k in 0..=horizon {
        let (p, q) = schedules.values(k);
        let (a, b) = sample_communication(model, p, q, rng)?;
        if a || b {
            out.push(k);
        }
    }
    Ok(out)
}
