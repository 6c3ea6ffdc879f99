//! JSON reports written by the subcommands. Every report parses back into
//! its own type.

use gossiplab_core::sim::EnsembleStats;
use gossiplab_core::verify::{ChainSuiteReport, EnumerationReport, ScramblingReport};
use gossiplab_core::RowSumMode;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Which information-flow graph lacks a root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDirection {
    /// `G_A`, carried by `e+` links.
    Graph,
    /// The converse of `G_A`, carried by `e-` links.
    Converse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleConnectivityFailure {
    pub direction: FlowDirection,
    /// Two nodes with no common ancestor in that direction.
    pub unrelated_nodes: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphReport {
    pub nodes: usize,
    pub row_sum: RowSumMode,
    pub matrix: Vec<Vec<f64>>,
    /// Arcs `(j, i)` of `G_A`, self-loops excluded.
    pub arcs: Vec<(usize, usize)>,
    pub weakly_connected: bool,
    pub double_connected: bool,
    pub double_connectivity_failures: Vec<DoubleConnectivityFailure>,
    pub laplacian_spectrum: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_star: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_star: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<u64>,
    /// Why the constants above are missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants_unavailable: Option<String>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeRun {
    pub probe: String,
    pub stats: EnsembleStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationReport {
    pub config: ExperimentConfig,
    pub runs: Vec<ProbeRun>,
}

/// One row of the `T_com` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcomRow {
    pub epsilon: f64,
    /// Worst case over the probes; empty when some probe ran out of horizon.
    pub empirical: Option<u64>,
    pub horizon_exceeded: bool,
    /// Largest fraction of trials still above `epsilon` at the horizon.
    pub fraction_above_at_end: f64,
    pub bound_dependent: Option<f64>,
    pub bound_independent: Option<f64>,
    pub exceeds_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnbiasedLimit {
    pub x0: Vec<f64>,
    pub average: f64,
    /// `(mean_limit - average) / standard_error`.
    pub z_score: Option<f64>,
    pub stats: EnsembleStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreservationReport {
    pub config: ExperimentConfig,
    /// Perfectly dependent links on random dyadic states. Absent when the
    /// two directions have different schedules.
    pub dependent: Option<EnsembleStats>,
    /// Independent links on random dyadic states.
    pub independent: EnsembleStats,
    pub unbiased_limit: UnbiasedLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub status: VerifyStatus,
    pub fault_injected: bool,
    pub enumeration: EnumerationReport,
    pub chains_complete: ChainSuiteReport,
    pub chains_ring: ChainSuiteReport,
    pub scrambling_complete: ScramblingReport,
    pub scrambling_ring: ScramblingReport,
}
