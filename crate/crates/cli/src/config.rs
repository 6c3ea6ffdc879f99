//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use gossiplab_core::sim::{Arithmetic, InitialState, TrialConfig};
use gossiplab_core::verify::{FamilyKind, DEFAULT_CEILING};
use gossiplab_core::{CommModel, Digraph, RowSumMode, Schedule, SchedulePair, SelectionMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Interaction structure. With `arcs`, node `i` picks uniformly among the
/// tails of its in-arcs, and a node without in-arcs picks itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Complete {
        nodes: usize,
    },
    Ring {
        nodes: usize,
    },
    Arcs {
        nodes: usize,
        arcs: Vec<(usize, usize)>,
    },
    /// Dense row-major selection matrix.
    Matrix {
        rows: Vec<Vec<f64>>,
        #[serde(default)]
        row_sum: RowSumMode,
    },
    /// Dense row-major matrix stored in a separate JSON file, resolved
    /// relative to the config file.
    MatrixFile {
        path: PathBuf,
        #[serde(default)]
        row_sum: RowSumMode,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Explicit { values: Vec<f64> },
    /// The two 0/1 probes: one node at 1, and a half/half split.
    Extremal,
    RandomDyadic { bits: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_verify_nodes")]
    pub nodes: usize,
    #[serde(default = "default_verify_depth")]
    pub depth: usize,
    #[serde(default = "default_family")]
    pub family: FamilyKind,
    #[serde(default = "default_ceiling")]
    pub ceiling: usize,
    /// Random chains per property suite.
    #[serde(default = "default_chains")]
    pub chains: u64,
    /// Replace one symmetric member by an asymmetric one that still claims
    /// to be symmetric. Negative control.
    #[serde(default)]
    pub inject_fault: bool,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            nodes: default_verify_nodes(),
            depth: default_verify_depth(),
            family: default_family(),
            ceiling: default_ceiling(),
            chains: default_chains(),
            inject_fault: false,
        }
    }
}

fn default_verify_nodes() -> usize {
    3
}
fn default_verify_depth() -> usize {
    10
}
fn default_family() -> FamilyKind {
    FamilyKind::M2Star
}
fn default_ceiling() -> usize {
    DEFAULT_CEILING
}
fn default_chains() -> u64 {
    1000
}
fn default_trials() -> u64 {
    1000
}
fn default_horizon() -> u64 {
    10_000
}
fn default_threshold() -> f64 {
    1e-9
}
fn default_epsilons() -> Vec<f64> {
    (1..=12).map(|e| 2f64.powi(-e)).collect()
}
fn default_model() -> CommModel {
    CommModel::Dependent
}
fn default_x0() -> InitialSpec {
    InitialSpec::Extremal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    #[serde(default = "default_model")]
    pub model: CommModel,
    /// Used for both directions unless `schedule_plus`/`schedule_minus` are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_plus: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_minus: Option<Schedule>,
    #[serde(default = "default_x0")]
    pub x0: InitialSpec,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub k0: u64,
    #[serde(default = "default_threshold")]
    pub consensus_threshold: f64,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub stop_at_consensus: bool,
    #[serde(default)]
    pub audit_product: bool,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub arithmetic: Arithmetic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub verify: VerifySpec,
}

impl ExperimentConfig {
    /// Parses a config; errors carry `path:line:column`.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| {
            ConfigError(format!("{}:{}:{}: {e}", origin.display(), e.line(), e.column()))
        })?;
        if let GraphSpec::MatrixFile { path, .. } = &mut cfg.graph {
            if path.is_relative() {
                if let Some(dir) = origin.parent() {
                    *path = dir.join(&*path);
                }
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Checks that need no simulation: referenced files, counts, ranges.
    pub fn check(&self) -> Result<(), ConfigError> {
        if let GraphSpec::MatrixFile { path, .. } = &self.graph {
            if !path.is_file() {
                return Err(ConfigError(format!("graph matrix file {} does not exist", path.display())));
            }
        }
        if self.trials == 0 {
            return Err(ConfigError("trials must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(ConfigError("workers must be at least 1".into()));
        }
        if self.epsilons.is_empty() {
            return Err(ConfigError("epsilons must not be empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(ConfigError(format!("epsilon {e} outside (0, 1)")));
        }
        if self.schedule.is_some() && (self.schedule_plus.is_some() || self.schedule_minus.is_some()) {
            return Err(ConfigError("give either schedule or schedule_plus/schedule_minus, not both".into()));
        }
        if self.schedule.is_none() && (self.schedule_plus.is_none() || self.schedule_minus.is_none()) {
            return Err(ConfigError("a schedule is required: schedule, or both schedule_plus and schedule_minus".into()));
        }
        Ok(())
    }

    pub fn selection_matrix(&self) -> Result<SelectionMatrix, ConfigError> {
        let cfg_err = |e: gossiplab_core::Error| ConfigError(format!("graph: {e}"));
        match &self.graph {
            GraphSpec::Complete { nodes } => SelectionMatrix::complete_uniform(*nodes).map_err(cfg_err),
            GraphSpec::Ring { nodes } => SelectionMatrix::directed_ring(*nodes).map_err(cfg_err),
            GraphSpec::Arcs { nodes, arcs } => {
                let g = Digraph::new(*nodes, arcs.iter().copied()).map_err(cfg_err)?;
                SelectionMatrix::from_digraph(&g).map_err(cfg_err)
            }
            GraphSpec::Matrix { rows, row_sum } => SelectionMatrix::new(rows.clone(), *row_sum).map_err(cfg_err),
            GraphSpec::MatrixFile { path, row_sum } => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
                let rows: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| {
                    ConfigError(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
                })?;
                SelectionMatrix::new(rows, *row_sum).map_err(cfg_err)
            }
        }
    }

    pub fn schedules(&self) -> Result<SchedulePair, ConfigError> {
        let pair = match (&self.schedule, &self.schedule_plus, &self.schedule_minus) {
            (Some(s), _, _) => SchedulePair::same(s.clone()),
            (None, Some(p), Some(m)) => SchedulePair::new(p.clone(), m.clone()),
            _ => return Err(ConfigError("missing schedule".into())),
        };
        pair.map_err(|e| ConfigError(format!("schedule: {e}")))
    }

    /// Initial conditions to run; two probes for `extremal`.
    pub fn initial_states(&self, n: usize) -> Vec<(&'static str, InitialState)> {
        match &self.x0 {
            InitialSpec::Explicit { values } => vec![("explicit", InitialState::Explicit { values: values.clone() })],
            InitialSpec::Extremal => vec![("unit", InitialState::unit(n)), ("half_split", InitialState::half_split(n))],
            InitialSpec::RandomDyadic { bits } => vec![("random_dyadic", InitialState::RandomDyadic { bits: *bits })],
        }
    }

    /// Trial configuration for one initial condition, validated.
    pub fn trial_config(&self, a: &SelectionMatrix, x0: InitialState) -> Result<TrialConfig, ConfigError> {
        let mut cfg = TrialConfig::new(a.clone(), self.model, self.schedules()?, x0);
        cfg.k0 = self.k0;
        cfg.horizon = self.horizon;
        cfg.consensus_threshold = self.consensus_threshold;
        cfg.arithmetic = self.arithmetic;
        cfg.levels = self.epsilons.clone();
        cfg.stop_at_consensus = self.stop_at_consensus;
        cfg.audit_product = self.audit_product;
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }
}

/// Config used when a command runs without `--config`.
pub fn preset(graph: GraphSpec, schedule: Schedule) -> ExperimentConfig {
    ExperimentConfig {
        graph,
        model: CommModel::Dependent,
        schedule: Some(schedule),
        schedule_plus: None,
        schedule_minus: None,
        x0: default_x0(),
        trials: default_trials(),
        horizon: default_horizon(),
        k0: 0,
        consensus_threshold: default_threshold(),
        epsilons: default_epsilons(),
        stop_at_consensus: false,
        audit_product: false,
        master_seed: 0,
        arithmetic: Arithmetic::Float,
        workers: None,
        out: None,
        verify: VerifySpec::default(),
    }
}
