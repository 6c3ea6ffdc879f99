//! Command-line front end: config ingestion, experiment runs, report output.

pub mod config;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gossiplab_core::sim::{
    run_trials, summarize, tcom_bound_dependent, tcom_bound_independent, Arithmetic, EnsembleStats, InitialState,
    TcomPoint, TrialConfig, TrialResult,
};
use gossiplab_core::verify::{
    chain_suite, enumerate_members, scrambling_block_check, EnumerationStatus, FamilyKind,
};
use gossiplab_core::{structural_constants, CommModel, SelectionMatrix, UpdateMatrix};

use config::{ConfigError, ExperimentConfig, InitialSpec};
use report::*;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const RUNTIME: i32 = 3;
    pub const VERIFICATION: i32 = 4;
    pub const INCONCLUSIVE: i32 = 5;
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Runtime(_) => exit::RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<gossiplab_core::Error> for CliError {
    fn from(e: gossiplab_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub arithmetic: Option<Arithmetic>,
    pub trials: Option<u64>,
}

/// Resolved run settings. Worker count and output location stay out of the
/// config echoed into reports, so reports do not depend on them.
pub struct Run {
    pub config: ExperimentConfig,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

impl Run {
    pub fn new(mut config: ExperimentConfig, o: Overrides) -> Result<Self, CliError> {
        if let Some(s) = o.seed {
            config.master_seed = s;
        }
        if let Some(a) = o.arithmetic {
            config.arithmetic = a;
        }
        if let Some(t) = o.trials {
            config.trials = t;
        }
        let workers = o
            .workers
            .or(config.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let out = o.out.or(config.out.take());
        config.workers = None;
        config.check()?;
        if workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        Ok(Self { config, workers, out })
    }

    fn out_file(&self, name: &str) -> Result<Option<PathBuf>, CliError> {
        match &self.out {
            None => Ok(None),
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                Ok(Some(dir.join(name)))
            }
        }
    }

    /// Writes `text` to `name` under the output directory, or to stdout.
    fn emit(&self, name: &str, text: &str) -> Result<(), CliError> {
        match self.out_file(name)? {
            Some(path) => {
                fs::write(&path, text).map_err(|e| io_err(&path, e))?;
                log::info!("wrote {}", path.display());
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).map_err(|e| CliError::Runtime(e.to_string()))?;
            }
        }
        Ok(())
    }

    fn emit_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        self.emit(name, &text)
    }
}

pub fn analyze_graph(run: &Run) -> Result<GraphReport, CliError> {
    let a = run.config.selection_matrix()?;
    let report = graph_report(&a);
    run.emit_json("analysis.json", &report)?;
    Ok(report)
}

pub fn graph_report(a: &SelectionMatrix) -> GraphReport {
    let g = a.graph();
    let mut failures = Vec::new();
    for (direction, flow) in [(FlowDirection::Graph, g.clone()), (FlowDirection::Converse, g.converse())] {
        if let Some(pair) = flow.disjoint_ancestor_pair() {
            failures.push(DoubleConnectivityFailure {
                direction,
                unrelated_nodes: pair,
            });
        }
    }
    let mut report = GraphReport {
        nodes: a.n(),
        row_sum: a.mode(),
        matrix: a.rows().to_vec(),
        arcs: g.arcs().filter(|(u, v)| u != v).collect(),
        weakly_connected: g.is_weakly_connected(),
        double_connected: g.is_double_connected(),
        double_connectivity_failures: failures,
        laplacian_spectrum: a.laplacian_spectrum(),
        lambda2_star: None,
        d_star: None,
        e_star: None,
        a_star: None,
        theta0: None,
        constants_unavailable: None,
        h: a.participation(),
    };
    match structural_constants(a) {
        Ok(sc) => {
            report.lambda2_star = Some(sc.lambda2_star);
            report.d_star = Some(sc.d_star);
            report.e_star = Some(sc.e_star);
            report.a_star = Some(sc.a_star);
            report.theta0 = Some(sc.theta0);
        }
        Err(e) => report.constants_unavailable = Some(e.to_string()),
    }
    report
}

fn write_traces(path: &Path, runs: &[(&str, Vec<TrialResult>)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["probe", "trial", "k", "H", "h", "spread", "sum_exact"])
        .map_err(|e| io_err(path, e))?;
    for (probe, results) in runs {
        for (trial, r) in results.iter().enumerate() {
            for p in &r.spread_trace {
                let exact = match p.sum_exact {
                    Some(b) => b.to_string(),
                    None => String::new(),
                };
                w.write_record([
                    probe.to_string(),
                    trial.to_string(),
                    p.k.to_string(),
                    p.max.to_string(),
                    p.min.to_string(),
                    p.spread.to_string(),
                    exact,
                ])
                .map_err(|e| io_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

type ProbeResults = Vec<(&'static str, TrialConfig, Vec<TrialResult>)>;

fn run_probes(run: &Run, a: &SelectionMatrix) -> Result<ProbeResults, CliError> {
    let c = &run.config;
    let mut out = Vec::new();
    for (probe, x0) in c.initial_states(a.n()) {
        let cfg = c.trial_config(a, x0)?;
        log::info!("{probe}: {} trials, horizon {}", c.trials, c.horizon);
        let results = run_trials(&cfg, c.trials, c.master_seed, run.workers)?;
        out.push((probe, cfg, results));
    }
    Ok(out)
}

pub fn simulate(run: &Run) -> Result<SimulationReport, CliError> {
    let a = run.config.selection_matrix()?;
    let probes = run_probes(run, &a)?;
    let report = SimulationReport {
        config: run.config.clone(),
        runs: probes
            .iter()
            .map(|(probe, cfg, results)| ProbeRun {
                probe: probe.to_string(),
                stats: summarize(cfg, results),
            })
            .collect(),
    };
    if let Some(path) = run.out_file("traces.csv")? {
        let traces: Vec<(&str, Vec<TrialResult>)> = probes.into_iter().map(|(p, _, r)| (p, r)).collect();
        write_traces(&path, &traces)?;
    }
    run.emit_json("ensemble.json", &report)?;
    Ok(report)
}

/// Worst case over probes at each level.
fn worst_case(per_probe: &[Vec<TcomPoint>]) -> Vec<TcomPoint> {
    let mut worst = per_probe[0].clone();
    for points in &per_probe[1..] {
        for (w, p) in worst.iter_mut().zip(points) {
            w.steps = match (w.steps, p.steps) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
            w.fraction_above_at_end = w.fraction_above_at_end.max(p.fraction_above_at_end);
        }
    }
    worst
}

pub fn tcom_rows(run: &Run) -> Result<Vec<TcomRow>, CliError> {
    let c = &run.config;
    let a = run.config.selection_matrix()?;
    let probes = run_probes(run, &a)?;
    let per_probe: Vec<Vec<TcomPoint>> = probes.iter().map(|(_, cfg, r)| summarize(cfg, r).tcom).collect();
    let worst = worst_case(&per_probe);
    let schedules = c.schedules()?;
    let sc = structural_constants(&a).ok();
    let witness = match c.model {
        CommModel::Dependent => schedules.plus.classify().linear_growth_witness,
        CommModel::Independent => schedules.classify_sum().linear_growth_witness,
    };
    let mut rows = Vec::new();
    for p in worst {
        let bound = match (&sc, witness) {
            (Some(sc), Some(w)) => match c.model {
                CommModel::Dependent => tcom_bound_dependent(sc, w.p_star, w.t_star, a.n(), p.epsilon).ok(),
                CommModel::Independent => tcom_bound_independent(sc, w.p_star, w.t_star, a.n(), p.epsilon).ok(),
            },
            _ => None,
        }
        .map(|b| b.total());
        let exceeds = match (p.steps, bound) {
            (Some(s), Some(b)) => s as f64 > b,
            // unresolved within the horizon: exceeds only if the horizon already passed the bound
            (None, Some(b)) => c.horizon as f64 > b,
            _ => false,
        };
        rows.push(TcomRow {
            epsilon: p.epsilon,
            empirical: p.steps,
            horizon_exceeded: p.steps.is_none(),
            fraction_above_at_end: p.fraction_above_at_end,
            bound_dependent: bound.filter(|_| c.model == CommModel::Dependent),
            bound_independent: bound.filter(|_| c.model == CommModel::Independent),
            exceeds_bound: exceeds,
        });
    }
    Ok(rows)
}

pub fn tcom(run: &Run) -> Result<Vec<TcomRow>, CliError> {
    let rows = tcom_rows(run)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    run.emit("tcom.csv", &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    Ok(rows)
}

pub fn preserve_average(run: &Run) -> Result<PreservationReport, CliError> {
    let c = &run.config;
    let a = c.selection_matrix()?;
    let schedules = c.schedules()?;
    let random = InitialState::RandomDyadic { bits: 53 };
    let ensemble = |model: CommModel, x0: InitialState, arithmetic: Arithmetic, stop: bool| -> Result<EnsembleStats, CliError> {
        let mut cfg = TrialConfig::new(a.clone(), model, schedules.clone(), x0);
        cfg.k0 = c.k0;
        cfg.horizon = c.horizon;
        cfg.consensus_threshold = c.consensus_threshold;
        cfg.arithmetic = arithmetic;
        cfg.levels = c.epsilons.clone();
        cfg.stop_at_consensus = stop;
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let results = run_trials(&cfg, c.trials, c.master_seed, run.workers)?;
        Ok(summarize(&cfg, &results))
    };
    let dependent = if schedules.plus == schedules.minus {
        log::info!("dependent links, dyadic states");
        Some(ensemble(CommModel::Dependent, random.clone(), Arithmetic::Dyadic, false)?)
    } else {
        None
    };
    log::info!("independent links, dyadic states");
    let independent = ensemble(CommModel::Independent, random, Arithmetic::Dyadic, false)?;

    let x0 = match &c.x0 {
        InitialSpec::Explicit { values } => values.clone(),
        _ => match InitialState::unit(a.n()) {
            InitialState::Explicit { values } => values,
            InitialState::RandomDyadic { .. } => unreachable!(),
        },
    };
    let average = x0.iter().sum::<f64>() / x0.len() as f64;
    log::info!("independent links, limit of {x0:?}");
    let stats = ensemble(
        CommModel::Independent,
        InitialState::Explicit { values: x0.clone() },
        Arithmetic::Float,
        true,
    )?;
    let z_score = stats
        .mean_limit
        .filter(|m| m.standard_error > 0.0)
        .map(|m| (m.mean - average) / m.standard_error);
    let report = PreservationReport {
        config: c.clone(),
        dependent,
        independent,
        unbiased_limit: UnbiasedLimit {
            x0,
            average,
            z_score,
            stats,
        },
    };
    run.emit_json("preservation.json", &report)?;
    Ok(report)
}

pub fn verify(run: &Run) -> Result<VerifyReport, CliError> {
    let v = &run.config.verify;
    let seed = run.config.master_seed;
    let n = v.nodes;
    let mut members = v.family.members(n)?;
    if v.inject_fault {
        if v.family != FamilyKind::M2Star {
            return Err(CliError::Config("fault injection needs the m2_star family".into()));
        }
        // a one-sided average posing as a symmetric one
        members[1].actual = UpdateMatrix::asymmetric(0, n - 1, n)?;
    }
    let name = serde_json::to_value(v.family)
        .ok()
        .and_then(|s| s.as_str().map(str::to_string))
        .unwrap_or_default();
    log::info!("enumerating {name} at n = {n} to depth {}", v.depth);
    let enumeration = enumerate_members(n, &members, v.depth, &name, v.ceiling)?;
    let complete = SelectionMatrix::complete_uniform(n)?;
    let ring = SelectionMatrix::directed_ring(n)?;
    log::info!("random chain suites, {} chains each", v.chains);
    let chains_complete = chain_suite(&complete, v.chains, 12, seed)?;
    let chains_ring = chain_suite(&ring, v.chains, 12, seed.wrapping_add(1))?;
    let scrambling_complete = scrambling_block_check(&complete, v.chains, seed.wrapping_add(2))?;
    let scrambling_ring = scrambling_block_check(&ring, v.chains, seed.wrapping_add(3))?;

    let violated = !enumeration.violations.is_empty()
        || !chains_complete.passed()
        || !chains_ring.passed()
        || !scrambling_complete.passed()
        || !scrambling_ring.passed();
    let status = if violated {
        VerifyStatus::Fail
    } else if matches!(enumeration.status, EnumerationStatus::Inconclusive { .. }) {
        VerifyStatus::Inconclusive
    } else {
        VerifyStatus::Pass
    };
    let report = VerifyReport {
        status,
        fault_injected: v.inject_fault,
        enumeration,
        chains_complete,
        chains_ring,
        scrambling_complete,
        scrambling_ring,
    };
    run.emit_json("verify.json", &report)?;
    Ok(report)
}
