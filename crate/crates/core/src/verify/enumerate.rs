//! Exhaustive enumeration of products of averaging matrices.
//!
//! Every product of `d` averaging matrices has entries `m / 2^e` with
//! `e <= d`, so for the depths used here the numerators fit in a `u64` and
//! products can be deduplicated by their exact numerators.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{family_m, family_m1, family_m2_star, UpdateKind, UpdateMatrix};
use crate::selection::SelectionMatrix;

/// Deepest enumeration whose numerators are guaranteed to fit in 64 bits.
pub const MAX_DEPTH: usize = 62;

pub const DEFAULT_CEILING: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// All symmetric pairwise averages.
    M2Star,
    /// One-sided averages on every ordered pair.
    M1,
    /// One-sided and symmetric averages on every pair.
    M,
}

impl FamilyKind {
    pub fn members(self, n: usize) -> Result<Vec<FamilyMember>> {
        let honest = |v: Vec<UpdateMatrix>| v.into_iter().map(FamilyMember::honest).collect();
        Ok(match self {
            FamilyKind::M2Star => honest(family_m2_star(n)),
            FamilyKind::M1 => honest(family_m1(&SelectionMatrix::complete_uniform(n)?)),
            FamilyKind::M => honest(family_m(&SelectionMatrix::complete_uniform(n)?)),
        })
    }
}

/// A matrix of the family: what it claims to be and what it actually does.
/// The two differ only in fault-injection runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub claimed: UpdateMatrix,
    pub actual: UpdateMatrix,
}

impl FamilyMember {
    pub fn honest(u: UpdateMatrix) -> Self {
        Self { claimed: u, actual: u }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// All rows of the product are equal although the node count is odd.
    FiniteConsensus,
    /// A product of claimed symmetric averages is not doubly stochastic.
    NotDoublyStochastic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Chain in time order, as claimed update kinds.
    pub chain: Vec<UpdateKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum EnumerationStatus {
    Complete,
    Inconclusive { depth_reached: usize, distinct: usize, ceiling: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub n: usize,
    pub depth: usize,
    pub family: String,
    pub family_size: usize,
    /// Chains covered, `sum_{d=1}^{depth} |family|^d` when complete.
    pub chains_checked: u128,
    /// Distinct products per depth.
    pub distinct_per_depth: Vec<usize>,
    pub violations: Vec<Violation>,
    /// Chains whose product has identical rows, shortest first.
    pub finite_consensus_chains: Vec<Vec<UpdateKind>>,
    pub min_delta_seen: f64,
    pub status: EnumerationStatus,
}

impl EnumerationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.status == EnumerationStatus::Complete
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Product {
    exp: u32,
    num: Vec<u64>,
}

impl Product {
    fn identity(n: usize) -> Self {
        let mut num = vec![0; n * n];
        for i in 0..n {
            num[i * n + i] = 1;
        }
        Self { exp: 0, num }
    }

    /// `U * self`, then reduced to lowest common denominator.
    fn left_mul(&self, u: &UpdateMatrix, n: usize) -> Self {
        let (a, b, both) = match u.kind {
            UpdateKind::Identity => return self.clone(),
            UpdateKind::Symmetric { i, j } => (i, j, true),
            UpdateKind::Asymmetric { i, j } => (i, j, false),
        };
        let mut num: Vec<u64> = self.num.iter().map(|v| v << 1).collect();
        for c in 0..n {
            let s = self.num[a * n + c] + self.num[b * n + c];
            num[a * n + c] = s;
            if both {
                num[b * n + c] = s;
            }
        }
        let mut p = Self { exp: self.exp + 1, num };
        while p.exp > 0 && p.num.iter().all(|v| v % 2 == 0) {
            p.num.iter_mut().for_each(|v| *v >>= 1);
            p.exp -= 1;
        }
        p
    }

    /// Numerator of `delta`; zero exactly when all rows agree.
    fn delta_num(&self, n: usize) -> u64 {
        (0..n)
            .map(|c| {
                let col = (0..n).map(|r| self.num[r * n + c]);
                col.clone().max().unwrap_or(0) - col.min().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    fn delta(&self, n: usize) -> f64 {
        self.delta_num(n) as f64 / 2f64.powi(self.exp as i32)
    }

    fn doubly_stochastic(&self, n: usize) -> bool {
        let one = 1u64 << self.exp;
        (0..n).all(|c| (0..n).map(|r| self.num[r * n + c]).sum::<u64>() == one)
    }
}

#[derive(Debug, Clone)]
struct Entry {
    chains: u128,
    /// Smallest chain (as member indices, time order) reaching the product.
    representative: Vec<u16>,
}

/// Enumerates all chains of length `1..=max_depth` over `members`.
pub fn enumerate_members(
    n: usize,
    members: &[FamilyMember],
    max_depth: usize,
    family: &str,
    ceiling: usize,
) -> Result<EnumerationReport> {
    if members.is_empty() {
        return Err(Error::Precondition("empty family".into()));
    }
    if max_depth == 0 || max_depth > MAX_DEPTH {
        return Err(Error::Precondition(format!("depth must lie in 1..={MAX_DEPTH}, got {max_depth}")));
    }
    if let Some(m) = members.iter().find(|m| m.actual.n != n || m.claimed.n != n) {
        return Err(Error::Dimension(format!("member {:?} is not {n} x {n}", m.claimed)));
    }
    let claims_symmetric = members
        .iter()
        .all(|m| matches!(m.claimed.kind, UpdateKind::Symmetric { .. }));
    let lemma_applies = claims_symmetric && n % 2 == 1;
    let to_chain = |idx: &[u16]| idx.iter().map(|&k| members[k as usize].claimed.kind).collect::<Vec<_>>();

    let mut frontier: BTreeMap<Product, Entry> = BTreeMap::new();
    frontier.insert(
        Product::identity(n),
        Entry {
            chains: 1,
            representative: Vec::new(),
        },
    );
    let mut report = EnumerationReport {
        n,
        depth: max_depth,
        family: family.to_string(),
        family_size: members.len(),
        chains_checked: 0,
        distinct_per_depth: Vec::new(),
        violations: Vec::new(),
        finite_consensus_chains: Vec::new(),
        min_delta_seen: f64::INFINITY,
        status: EnumerationStatus::Complete,
    };

    for depth in 1..=max_depth {
        let current: Vec<(Product, Entry)> = frontier.into_iter().collect();
        let expanded: Vec<Vec<(Product, Entry)>> = current
            .par_iter()
            .map(|(p, e)| {
                members
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        let mut rep = e.representative.clone();
                        rep.push(k as u16);
                        (
                            p.left_mul(&m.actual, n),
                            Entry {
                                chains: e.chains,
                                representative: rep,
                            },
                        )
                    })
                    .collect()
            })
            .collect();
        let mut next: BTreeMap<Product, Entry> = BTreeMap::new();
        for (p, e) in expanded.into_iter().flatten() {
            match next.get_mut(&p) {
                Some(slot) => {
                    slot.chains += e.chains;
                    if e.representative < slot.representative {
                        slot.representative = e.representative;
                    }
                }
                None => {
                    next.insert(p, e);
                }
            }
            if next.len() > ceiling {
                report.status = EnumerationStatus::Inconclusive {
                    depth_reached: depth - 1,
                    distinct: next.len(),
                    ceiling,
                };
                return Ok(report);
            }
        }
        for (p, e) in &next {
            report.chains_checked += e.chains;
            let d = p.delta(n);
            report.min_delta_seen = report.min_delta_seen.min(d);
            if d == 0.0 {
                let chain = to_chain(&e.representative);
                if lemma_applies {
                    report.violations.push(Violation {
                        kind: ViolationKind::FiniteConsensus,
                        chain: chain.clone(),
                    });
                }
                report.finite_consensus_chains.push(chain);
            }
            if claims_symmetric && !p.doubly_stochastic(n) {
                report.violations.push(Violation {
                    kind: ViolationKind::NotDoublyStochastic,
                    chain: to_chain(&e.representative),
                });
            }
        }
        report.distinct_per_depth.push(next.len());
        frontier = next;
    }
    report.finite_consensus_chains.sort_by_key(|c| c.len());
    Ok(report)
}

/// Enumerates all chains over a standard family on the complete graph.
pub fn enumerate_products(n: usize, max_depth: usize, family: FamilyKind, ceiling: usize) -> Result<EnumerationReport> {
    let members = family.members(n)?;
    let name = match family {
        FamilyKind::M2Star => "m2_star",
        FamilyKind::M1 => "m1",
        FamilyKind::M => "m",
    };
    enumerate_members(n, &members, max_depth, name, ceiling)
}
