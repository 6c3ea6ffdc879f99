use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::matrix::{family_m, StochasticMatrix, UpdateKind, UpdateMatrix};
use crate::rng::{Purpose, RandomStream};
use crate::selection::{SelectionMatrix, StructuralConstants};

/// Outcome of the random-chain checks on products over the family of `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSuiteReport {
    pub chains: u64,
    pub max_length: usize,
    /// `delta(M_N...M_1) > prod lambda(M_i)`.
    pub delta_lambda_violations: u64,
    /// Union of the factors' induced graphs not contained in the product's.
    pub union_violations: u64,
    /// Some nonzero product entry below `2^-N`.
    pub floor_violations: u64,
    pub first_violation: Option<Vec<UpdateKind>>,
}

impl ChainSuiteReport {
    pub fn passed(&self) -> bool {
        self.delta_lambda_violations == 0 && self.union_violations == 0 && self.floor_violations == 0
    }
}

/// Random chains of length `1..=max_length` over every update `A` can realize,
/// multiplied exactly.
pub fn chain_suite(a: &SelectionMatrix, chains: u64, max_length: usize, seed: u64) -> Result<ChainSuiteReport> {
    let family = family_m(a);
    if family.is_empty() {
        return Err(Error::NoOffDiagonal);
    }
    let n = a.n();
    let mut report = ChainSuiteReport {
        chains,
        max_length,
        delta_lambda_violations: 0,
        union_violations: 0,
        floor_violations: 0,
        first_violation: None,
    };
    for c in 0..chains {
        let mut rng = RandomStream::new(seed, c, Purpose::Chain);
        let len = 1 + rng.below(max_length);
        let chain: Vec<UpdateMatrix> = (0..len).map(|_| family[rng.below(family.len())]).collect();
        let mut product = StochasticMatrix::identity(n, true);
        let mut lambda_prod = Dyadic::one();
        let mut union = Digraph::empty(n);
        for u in &chain {
            product.apply_update_left(u)?;
            let m = u.expand();
            lambda_prod = lambda_prod.mul(&m.lambda_exact().expect("dyadic"));
            union = union.union(&m.induced_graph())?;
        }
        let delta = product.delta_exact().expect("dyadic");
        let mut bad = false;
        if delta > lambda_prod {
            report.delta_lambda_violations += 1;
            bad = true;
        }
        if !union.is_subgraph_of(&product.induced_graph()) {
            report.union_violations += 1;
            bad = true;
        }
        if !product.nonzero_entries_at_least_pow2_neg(len as u32) {
            report.floor_violations += 1;
            bad = true;
        }
        if bad && report.first_violation.is_none() {
            report.first_violation = Some(chain.iter().map(|u| u.kind).collect());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScramblingReport {
    pub chains: u64,
    pub blocks_per_chain: usize,
    /// Products with `lambda = 1`.
    pub violations: u64,
    /// Products with `lambda > 1 - 2^-N`, `N` the number of factors.
    pub floor_violations: u64,
    pub max_lambda: f64,
    pub first_violation: Option<Vec<UpdateKind>>,
}

impl ScramblingReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.floor_violations == 0
    }
}

/// Update realizing arc `u -> v` of a target graph, i.e. making entry `(v, u)` positive.
fn cover(u: usize, v: usize, n: usize, symmetric: bool) -> UpdateMatrix {
    if symmetric {
        UpdateMatrix::symmetric(u, v, n).expect("arc joins distinct nodes")
    } else {
        UpdateMatrix::asymmetric(v, u, n).expect("arc joins distinct nodes")
    }
}

/// A random product over the family of `A` whose induced graph contains
/// `G_A` or `G_A^T`: every arc of the chosen target is realized once, in
/// random order, with random extra factors mixed in.
pub fn covering_block(a: &SelectionMatrix, rng: &mut RandomStream) -> Vec<UpdateMatrix> {
    let n = a.n();
    let family = family_m(a);
    let g = a.graph();
    let target = if rng.below(2) == 0 { g } else { g.converse() };
    let mut block: Vec<UpdateMatrix> = target
        .arcs()
        .filter(|(u, v)| u != v)
        .map(|(u, v)| cover(u, v, n, rng.below(2) == 0))
        .collect();
    let extras = rng.below(block.len() + 1);
    for _ in 0..extras {
        block.push(family[rng.below(family.len())]);
    }
    block.shuffle(rng.rng_mut());
    block
}

fn lambda_of(chain: &[UpdateMatrix], n: usize) -> Result<Dyadic> {
    let mut product = StochasticMatrix::identity(n, true);
    for u in chain {
        product.apply_update_left(u)?;
    }
    Ok(product.lambda_exact().expect("dyadic"))
}

/// Products of `2 d* - 1` covering blocks must be scrambling, with
/// `lambda <= 1 - 2^-N`.
pub fn scrambling_block_check(a: &SelectionMatrix, chains: u64, seed: u64) -> Result<ScramblingReport> {
    let g = a.graph();
    if !g.is_double_connected() {
        return Err(Error::Precondition("the interaction graph is not double connected".into()));
    }
    let sc = StructuralConstants::of(a)?;
    let blocks = 2 * sc.d_star - 1;
    let n = a.n();
    let mut report = ScramblingReport {
        chains,
        blocks_per_chain: blocks,
        violations: 0,
        floor_violations: 0,
        max_lambda: 0.0,
        first_violation: None,
    };
    for c in 0..chains {
        let mut rng = RandomStream::new(seed, c, Purpose::Chain);
        let chain: Vec<UpdateMatrix> = (0..blocks).flat_map(|_| covering_block(a, &mut rng)).collect();
        let lambda = lambda_of(&chain, n)?;
        report.max_lambda = report.max_lambda.max(lambda.to_f64());
        let floor = Dyadic::one().sub(&Dyadic::pow2_neg(chain.len() as u32));
        let mut bad = false;
        if lambda == Dyadic::one() {
            report.violations += 1;
            bad = true;
        }
        if lambda > floor {
            report.floor_violations += 1;
            bad = true;
        }
        if bad && report.first_violation.is_none() {
            report.first_violation = Some(chain.iter().map(|u| u.kind).collect());
        }
    }
    Ok(report)
}

/// Counts single covering blocks whose product is not scrambling. With fewer
/// than `2 d* - 1` blocks nothing is guaranteed, and on long cycles such
/// blocks are common.
pub fn single_block_search(a: &SelectionMatrix, samples: u64, seed: u64) -> Result<(u64, Option<Vec<UpdateKind>>)> {
    let n = a.n();
    let mut count = 0;
    let mut example = None;
    for s in 0..samples {
        let mut rng = RandomStream::new(seed, s, Purpose::Chain);
        let block = covering_block(a, &mut rng);
        if lambda_of(&block, n)? == Dyadic::one() {
            count += 1;
            example.get_or_insert_with(|| block.iter().map(|u| u.kind).collect());
        }
    }
    Ok((count, example))
}
