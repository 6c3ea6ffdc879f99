//! Directed graphs and the connectivity notions used by the gossip model.
//!
//! Nodes are `0..n`. An arc `(i, j)` points from `i` to `j`; self-loops are
//! allowed and never affect reachability.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDigraph", into = "RawDigraph")]
pub struct Digraph {
    n: usize,
    arcs: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawDigraph {
    n: usize,
    arcs: Vec<(usize, usize)>,
}

impl TryFrom<RawDigraph> for Digraph {
    type Error = Error;

    fn try_from(raw: RawDigraph) -> Result<Self> {
        Digraph::new(raw.n, raw.arcs)
    }
}

impl From<Digraph> for RawDigraph {
    fn from(g: Digraph) -> Self {
        RawDigraph {
            n: g.n,
            arcs: g.arcs.into_iter().collect(),
        }
    }
}

impl Digraph {
    /// Builds a digraph, rejecting out-of-range endpoints. Duplicate arcs
    /// collapse into one.
    pub fn new(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("a digraph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (i, j) in arcs {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!(
                    "arc ({i}, {j}) has an endpoint outside 0..{n}"
                )));
            }
            set.insert((i, j));
        }
        Ok(Self { n, arcs: set })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n: n.max(1),
            arcs: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let arcs = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        Self { n, arcs }
    }

    /// Directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn cycle(n: usize) -> Self {
        let arcs = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self { n, arcs }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.arcs.contains(&(from, to))
    }

    pub fn is_subgraph_of(&self, other: &Digraph) -> bool {
        self.n == other.n && self.arcs.is_subset(&other.arcs)
    }

    pub fn union(&self, other: &Digraph) -> Result<Digraph> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "cannot unite graphs on {} and {} nodes",
                self.n, other.n
            )));
        }
        Ok(Digraph {
            n: self.n,
            arcs: self.arcs.union(&other.arcs).copied().collect(),
        })
    }

    /// Graph with every arc reversed.
    pub fn converse(&self) -> Digraph {
        Digraph {
            n: self.n,
            arcs: self.arcs.iter().map(|&(i, j)| (j, i)).collect(),
        }
    }

    /// Arc set closed under reversal.
    pub fn bidirectionalized(&self) -> Digraph {
        Digraph {
            n: self.n,
            arcs: self.arcs.iter().flat_map(|&(i, j)| [(i, j), (j, i)]).collect(),
        }
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.arcs {
            if i != j {
                adj[i].push(j);
            }
        }
        adj
    }

    /// Breadth-first hop distances from `source`; `None` marks unreachable nodes.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        bfs(&self.successors(), source)
    }

    /// Nodes reachable from `source`, including `source` itself.
    pub fn reachable_from(&self, source: usize) -> BTreeSet<usize> {
        self.distances_from(source)
            .into_iter()
            .enumerate()
            .filter_map(|(v, d)| d.map(|_| v))
            .collect()
    }

    /// Nodes from which `target` is reachable, including `target` itself.
    pub fn ancestors_of(&self, target: usize) -> BTreeSet<usize> {
        self.converse().reachable_from(target)
    }

    /// True when the graph is connected after ignoring arc directions.
    pub fn is_weakly_connected(&self) -> bool {
        self.bidirectionalized().reachable_from(0).len() == self.n
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.reachable_from(0).len() == self.n && self.converse().reachable_from(0).len() == self.n
    }

    /// Nodes that reach every node.
    pub fn centers(&self) -> Vec<usize> {
        let adj = self.successors();
        (0..self.n)
            .filter(|&s| bfs(&adj, s).iter().all(Option::is_some))
            .collect()
    }

    /// True when some node (a center) reaches all nodes.
    pub fn is_quasi_strongly_connected(&self) -> bool {
        !self.centers().is_empty()
    }

    /// Both the graph and its converse are quasi-strongly connected.
    pub fn is_double_connected(&self) -> bool {
        self.is_quasi_strongly_connected() && self.converse().is_quasi_strongly_connected()
    }

    /// Longest shortest path over ordered pairs `i != j` with `j` reachable
    /// from `i`. Unreachable pairs are skipped.
    pub fn diameter(&self) -> Result<usize> {
        let adj = self.successors();
        let mut best: Option<usize> = None;
        for s in 0..self.n {
            for (t, d) in bfs(&adj, s).into_iter().enumerate() {
                if t != s {
                    if let Some(d) = d {
                        best = Some(best.map_or(d, |b| b.max(d)));
                    }
                }
            }
        }
        best.ok_or(Error::UndefinedDiameter)
    }

    /// Two distinct nodes whose ancestor sets are disjoint, if any. Such a
    /// pair exists exactly when the graph is not quasi-strongly connected.
    pub fn disjoint_ancestor_pair(&self) -> Option<(usize, usize)> {
        let ancestors: Vec<BTreeSet<usize>> = (0..self.n).map(|v| self.ancestors_of(v)).collect();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if ancestors[u].is_disjoint(&ancestors[v]) {
                    return Some((u, v));
                }
            }
        }
        None
    }
}

fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Induced graph of a square nonnegative matrix: arc `(j, i)` iff `m[i][j] > 0`.
pub fn induced_graph<R: AsRef<[f64]>>(rows: &[R]) -> Result<Digraph> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let mut arcs = BTreeSet::new();
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != n {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (j, &m) in row.iter().enumerate() {
            if m > 0.0 {
                arcs.insert((j, i));
            }
        }
    }
    Ok(Digraph { n, arcs })
}
