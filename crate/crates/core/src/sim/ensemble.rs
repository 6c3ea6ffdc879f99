use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::trial::{run_trial, TrialConfig, TrialResult};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// A binomial proportion with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub standard_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                successes,
                trials,
                estimate: 0.0,
                standard_error: 0.0,
                ci_low: 0.0,
                ci_high: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Self {
            successes,
            trials,
            estimate: p,
            standard_error: (p * (1.0 - p) / n).sqrt(),
            // the Wilson limits are exactly 0 and 1 at the extremes; avoid rounding
            ci_low: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
            ci_high: if successes == trials { 1.0 } else { (centre + half).min(1.0) },
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub count: u64,
    pub mean: f64,
    pub standard_error: f64,
}

impl MeanEstimate {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Self {
            count: xs.len() as u64,
            mean,
            standard_error: (var / n).sqrt(),
        })
    }
}

/// Empirical epsilon-computation time for one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcomPoint {
    pub epsilon: f64,
    /// `None` when the level was not reached within the horizon.
    pub steps: Option<u64>,
    /// Fraction of trials still at or above the level at the end of their run.
    pub fraction_above_at_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub trials: u64,
    pub consensus: Proportion,
    /// Mean of the limit over trials that reached consensus.
    pub mean_limit: Option<MeanEstimate>,
    pub excluded_from_mean: u64,
    /// Exact sum preservation (dyadic mode only).
    pub preservation: Option<Proportion>,
    /// Trials with at least one asymmetric update on unequal states.
    pub trials_with_asymmetric_unequal: u64,
    /// Asymmetric updates on unequal states that left the sum unchanged.
    pub asymmetric_sum_kept: u64,
    pub product_bound_violations: Option<u64>,
    pub tcom: Vec<TcomPoint>,
    pub mean_steps_run: f64,
}

/// Smallest elapsed `k` such that at most `floor(eps * N)` of the hitting
/// times exceed `k`. Since `H` never increases, a trial is at or above the
/// level at step `k` exactly when its hitting time is later than `k`.
pub fn tcom_from_hits(hits: &[Option<u64>], epsilon: f64) -> Result<u64> {
    let n = hits.len();
    if n == 0 {
        return Err(Error::Precondition("no trials".into()));
    }
    let allowed = (epsilon * n as f64).floor() as usize;
    if allowed >= n {
        return Ok(0);
    }
    let mut sorted: Vec<u64> = hits.iter().map(|h| h.unwrap_or(u64::MAX)).collect();
    sorted.sort_unstable();
    match sorted[n - allowed - 1] {
        u64::MAX => {
            let missing = hits.iter().filter(|h| h.is_none()).count();
            Err(Error::HorizonExceeded {
                fraction: missing as f64 / n as f64,
            })
        }
        k => Ok(k),
    }
}

/// Runs trials `0..trials` on a pool of `workers` threads. The output is in
/// trial order whatever the pool size.
pub fn run_trials(cfg: &TrialConfig, trials: u64, master_seed: u64, workers: usize) -> Result<Vec<TrialResult>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, master_seed, t))
            .collect()
    })
}

pub fn summarize(cfg: &TrialConfig, results: &[TrialResult]) -> EnsembleStats {
    let trials = results.len() as u64;
    let reached = results.iter().filter(|r| r.consensus_step.is_some()).count() as u64;
    let limits: Vec<f64> = results.iter().filter_map(|r| r.limit_estimate).collect();
    let preservation = results
        .iter()
        .map(|r| r.sum_history_exact)
        .collect::<Option<Vec<bool>>>()
        .map(|v| Proportion::new(v.iter().filter(|b| **b).count() as u64, trials));
    let tcom = cfg
        .levels
        .iter()
        .enumerate()
        .map(|(l, &eps)| {
            let hits: Vec<Option<u64>> = results.iter().map(|r| r.level_hits[l]).collect();
            let missing = hits.iter().filter(|h| h.is_none()).count();
            TcomPoint {
                epsilon: eps,
                steps: tcom_from_hits(&hits, eps).ok(),
                fraction_above_at_end: missing as f64 / trials.max(1) as f64,
            }
        })
        .collect();
    let violations = results
        .iter()
        .map(|r| r.product_bound_violations)
        .collect::<Option<Vec<u64>>>()
        .map(|v| v.iter().sum());
    EnsembleStats {
        trials,
        consensus: Proportion::new(reached, trials),
        mean_limit: MeanEstimate::of(&limits),
        excluded_from_mean: trials - limits.len() as u64,
        preservation,
        trials_with_asymmetric_unequal: results.iter().filter(|r| r.asymmetric_unequal > 0).count() as u64,
        asymmetric_sum_kept: results.iter().map(|r| r.asymmetric_unequal_sum_kept).sum(),
        product_bound_violations: violations,
        tcom,
        mean_steps_run: results.iter().map(|r| r.steps_run as f64).sum::<f64>() / trials.max(1) as f64,
    }
}

pub fn run_ensemble(cfg: &TrialConfig, trials: u64, master_seed: u64, workers: usize) -> Result<EnsembleStats> {
    let results = run_trials(cfg, trials, master_seed, workers)?;
    Ok(summarize(cfg, &results))
}

/// `T_com(eps)` from a fresh ensemble with `eps` as the only level.
pub fn estimate_tcom(cfg: &TrialConfig, epsilon: f64, trials: u64, master_seed: u64, workers: usize) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let mut cfg = cfg.clone();
    cfg.levels = vec![epsilon];
    let n = cfg.a.n();
    let h0_positive = match &cfg.x0 {
        super::trial::InitialState::Explicit { values } => {
            values.len() == n && values.iter().any(|v| *v != values[0])
        }
        super::trial::InitialState::RandomDyadic { .. } => true,
    };
    if !h0_positive {
        return Err(Error::Precondition("initial spread is zero".into()));
    }
    let results = run_trials(&cfg, trials, master_seed, workers)?;
    let hits: Vec<Option<u64>> = results.iter().map(|r| r.level_hits[0]).collect();
    tcom_from_hits(&hits, epsilon)
}
