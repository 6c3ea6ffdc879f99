use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::process::CommModel;
use crate::schedule::{Schedule, SchedulePair};
use crate::selection::SelectionMatrix;
use crate::sim::{InitialState, TrialConfig};

/// Which link direction the counterexample switches off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SilentDirection {
    /// `P+ = 0`: only the `e-` direction ever works.
    Plus,
    /// `P- = 0`.
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Counterexample {
    pub config: TrialConfig,
    pub silent: SilentDirection,
    /// Closed sets of the working flow graph, started at 0 and at 1.
    pub zero_group: Vec<usize>,
    pub one_group: Vec<usize>,
}

/// Builds a configuration under which consensus fails although the
/// interaction graph may be weakly connected.
///
/// Under `e+` node `i` hears `j` exactly along arcs of `G`; under `e-`
/// information moves along the converse. If the graph carrying information
/// has two nodes with disjoint ancestor sets, those ancestor sets only ever
/// hear each other, so values 0 and 1 placed on them never move.
pub fn prop1_counterexample(g: &Digraph, horizon: u64) -> Result<Prop1Counterexample> {
    let n = g.node_count();
    let (silent, flow) = if !g.is_quasi_strongly_connected() {
        (SilentDirection::Minus, g.clone())
    } else if !g.converse().is_quasi_strongly_connected() {
        (SilentDirection::Plus, g.converse())
    } else {
        return Err(Error::NoCounterexample);
    };
    let (u, v) = flow.disjoint_ancestor_pair().expect("not quasi-strongly connected");
    let zero: Vec<usize> = flow.ancestors_of(u).into_iter().collect();
    let one: Vec<usize> = flow.ancestors_of(v).into_iter().collect();
    let mut values = vec![0.5; n];
    zero.iter().for_each(|&i| values[i] = 0.0);
    one.iter().for_each(|&i| values[i] = 1.0);
    let on = Schedule::constant(1.0)?;
    let off = Schedule::constant(0.0)?;
    let schedules = match silent {
        SilentDirection::Plus => SchedulePair::new(off, on)?,
        SilentDirection::Minus => SchedulePair::new(on, off)?,
    };
    let a = SelectionMatrix::from_digraph(g)?;
    let mut config = TrialConfig::new(a, CommModel::Independent, schedules, InitialState::Explicit { values });
    config.horizon = horizon;
    Ok(Prop1Counterexample {
        config,
        silent,
        zero_group: zero,
        one_group: one,
    })
}
