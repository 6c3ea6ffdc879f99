use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::matrix::{StochasticMatrix, UpdateKind, UpdateMatrix};
use crate::process::{realized_update, sample_communication, sample_pair, CommModel};
use crate::rng::{Purpose, RandomStream};
use crate::schedule::SchedulePair;
use crate::selection::SelectionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    #[default]
    Float,
    Dyadic,
}

/// Initial condition of a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Explicit { values: Vec<f64> },
    /// Independent uniform draws `m / 2^bits`, `m < 2^bits`, fresh per trial.
    RandomDyadic { bits: u32 },
}

impl InitialState {
    /// One node at 1, the others at 0.
    pub fn unit(n: usize) -> Self {
        let mut values = vec![0.0; n];
        values[0] = 1.0;
        InitialState::Explicit { values }
    }

    /// First `floor(n/2)` nodes at 0, the rest at 1.
    pub fn half_split(n: usize) -> Self {
        let values = (0..n).map(|i| if i < n / 2 { 0.0 } else { 1.0 }).collect();
        InitialState::Explicit { values }
    }

    pub fn realize(&self, n: usize, master_seed: u64, trial: u64) -> Vec<f64> {
        match self {
            InitialState::Explicit { values } => values.clone(),
            InitialState::RandomDyadic { bits } => {
                let mut rng = RandomStream::new(master_seed, trial, Purpose::InitialState);
                let scale = 2f64.powi(-(*bits as i32));
                (0..n).map(|_| (rng.next_u64() >> (64 - bits)) as f64 * scale).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub a: SelectionMatrix,
    pub model: CommModel,
    pub schedules: SchedulePair,
    pub x0: InitialState,
    pub k0: u64,
    pub horizon: u64,
    /// Consensus is declared once `H(k) <= threshold * H(k0)`.
    pub consensus_threshold: f64,
    pub arithmetic: Arithmetic,
    /// Relative levels `eps` whose first crossing `H(k) < eps * H(k0)` is recorded.
    pub levels: Vec<f64>,
    /// End the trial once consensus is declared and every level has been crossed.
    pub stop_at_consensus: bool,
    /// Accumulate `W(k-1) ... W(k0)` and check `H(k) <= n delta(product) H(k0)`.
    pub audit_product: bool,
}

impl TrialConfig {
    pub fn new(a: SelectionMatrix, model: CommModel, schedules: SchedulePair, x0: InitialState) -> Self {
        Self {
            a,
            model,
            schedules,
            x0,
            k0: 0,
            horizon: 10_000,
            consensus_threshold: 1e-9,
            arithmetic: Arithmetic::Float,
            levels: Vec::new(),
            stop_at_consensus: false,
            audit_product: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.n();
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if let InitialState::Explicit { values } = &self.x0 {
            if values.len() != n {
                return bad(format!("x0 has {} entries for {n} nodes", values.len()));
            }
            if !values.iter().all(|v| v.is_finite()) {
                return bad("x0 entries must be finite".into());
            }
        }
        if let InitialState::RandomDyadic { bits } = self.x0 {
            if !(1..=53).contains(&bits) {
                return bad(format!("random dyadic states need 1..=53 bits, got {bits}"));
            }
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.consensus_threshold > 0.0 && self.consensus_threshold.is_finite()) {
            return bad(format!("consensus threshold {} must be positive", self.consensus_threshold));
        }
        if let Some(e) = self.levels.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("level {e} outside (0, 1)"));
        }
        self.schedules.plus.validate()?;
        self.schedules.minus.validate()?;
        if self.model == CommModel::Dependent && self.schedules.plus != self.schedules.minus {
            return bad("dependent communication needs identical P+ and P- schedules".into());
        }
        Ok(())
    }
}

/// One sample of the spread trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Absolute slot index.
    pub k: u64,
    pub max: f64,
    pub min: f64,
    pub spread: f64,
    /// Whether the exact state sum has been constant so far (dyadic mode only).
    pub sum_exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub x0: Vec<f64>,
    pub final_state: Vec<f64>,
    /// Elapsed steps until `H <= threshold * H(k0)`.
    pub consensus_step: Option<u64>,
    /// `Some` in dyadic mode: whether the sum was exactly constant at every step.
    pub sum_history_exact: Option<bool>,
    pub spread_trace: Vec<TracePoint>,
    /// Common value the states settled to, when consensus was reached.
    pub limit_estimate: Option<f64>,
    /// First elapsed step with `H < eps * H(k0)`, one entry per configured level.
    pub level_hits: Vec<Option<u64>>,
    /// Asymmetric updates applied to unequal states (dyadic mode).
    pub asymmetric_unequal: u64,
    /// Of those, how many left the exact sum unchanged. Always zero for a correct engine.
    pub asymmetric_unequal_sum_kept: u64,
    /// Realized non-identity updates by kind: `[symmetric, asymmetric]`.
    pub update_counts: [u64; 2],
    pub steps_run: u64,
    /// Steps at which `H(k) > n delta(W(k-1)...W(k0)) H(k0)`, when audited.
    pub product_bound_violations: Option<u64>,
}

/// The two independent random streams a trial consumes.
#[derive(Debug, Clone)]
pub struct SlotStreams {
    pub selection: RandomStream,
    pub communication: RandomStream,
}

impl SlotStreams {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        Self {
            selection: RandomStream::new(master_seed, trial, Purpose::Selection),
            communication: RandomStream::new(master_seed, trial, Purpose::Communication),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Float(Vec<f64>),
    Dyadic { exact: Vec<Dyadic>, approx: Vec<f64> },
}

/// Node states in either arithmetic, with the bookkeeping the update law needs.
#[derive(Debug, Clone, PartialEq)]
pub struct GossipState {
    values: Values,
    sum_exact: bool,
    asymmetric_unequal: u64,
    asymmetric_unequal_sum_kept: u64,
}

impl GossipState {
    pub fn new(x0: &[f64], arithmetic: Arithmetic) -> Result<Self> {
        let values = match arithmetic {
            Arithmetic::Float => Values::Float(x0.to_vec()),
            Arithmetic::Dyadic => {
                let exact = x0
                    .iter()
                    .map(|&v| Dyadic::from_f64(v).ok_or_else(|| Error::InvalidConfig(format!("{v} is not finite"))))
                    .collect::<Result<Vec<_>>>()?;
                Values::Dyadic {
                    exact,
                    approx: x0.to_vec(),
                }
            }
        };
        Ok(Self {
            values,
            sum_exact: true,
            asymmetric_unequal: 0,
            asymmetric_unequal_sum_kept: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.approx().len()
    }

    pub fn is_dyadic(&self) -> bool {
        matches!(self.values, Values::Dyadic { .. })
    }

    /// Float view of the states (exact in float mode, correctly rounded otherwise).
    pub fn approx(&self) -> &[f64] {
        match &self.values {
            Values::Float(v) => v,
            Values::Dyadic { approx, .. } => approx,
        }
    }

    pub fn exact(&self) -> Option<&[Dyadic]> {
        match &self.values {
            Values::Float(_) => None,
            Values::Dyadic { exact, .. } => Some(exact),
        }
    }

    pub fn exact_sum(&self) -> Option<Dyadic> {
        self.exact().map(|xs| xs.iter().fold(Dyadic::zero(), |acc, x| acc.add(x)))
    }

    /// `(max, min)` of the states.
    pub fn extremes(&self) -> (f64, f64) {
        let v = self.approx();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        (max, min)
    }

    pub fn spread(&self) -> f64 {
        let (max, min) = self.extremes();
        max - min
    }

    /// Exactly all equal. Such a state is fixed by every update.
    pub fn is_exact_consensus(&self) -> bool {
        match &self.values {
            Values::Float(v) => v.iter().all(|x| *x == v[0]),
            Values::Dyadic { exact, .. } => exact.iter().all(|x| *x == exact[0]),
        }
    }

    pub fn sum_history_exact(&self) -> Option<bool> {
        self.is_dyadic().then_some(self.sum_exact)
    }

    /// `x <- U x`.
    pub fn apply(&mut self, u: &UpdateMatrix) {
        match u.kind {
            UpdateKind::Identity => {}
            UpdateKind::Symmetric { i, j } => match &mut self.values {
                Values::Float(v) => {
                    let m = 0.5 * (v[i] + v[j]);
                    v[i] = m;
                    v[j] = m;
                }
                Values::Dyadic { exact, approx } => {
                    let before = exact[i].add(&exact[j]);
                    let m = before.half();
                    let after = m.add(&m);
                    if after != before {
                        self.sum_exact = false;
                    }
                    approx[i] = m.to_f64();
                    approx[j] = approx[i];
                    exact[i] = m.clone();
                    exact[j] = m;
                }
            },
            UpdateKind::Asymmetric { i, j } => match &mut self.values {
                Values::Float(v) => v[i] = 0.5 * (v[i] + v[j]),
                Values::Dyadic { exact, approx } => {
                    let before = exact[i].add(&exact[j]);
                    let m = before.half();
                    let after = m.add(&exact[j]);
                    let kept = after == before;
                    if !kept {
                        self.sum_exact = false;
                    }
                    if exact[i] != exact[j] {
                        self.asymmetric_unequal += 1;
                        if kept {
                            self.asymmetric_unequal_sum_kept += 1;
                        }
                    }
                    approx[i] = m.to_f64();
                    exact[i] = m;
                }
            },
        }
    }
}

/// One slot: sample a pair and the link flags, apply the realized update.
pub fn step(
    state: &mut GossipState,
    a: &SelectionMatrix,
    model: CommModel,
    p_plus: f64,
    p_minus: f64,
    streams: &mut SlotStreams,
) -> Result<UpdateMatrix> {
    let sel = sample_pair(a, &mut streams.selection);
    let u = match sel {
        crate::process::Selection::Pair(i, j) if i != j => {
            let (e_plus, e_minus) = sample_communication(model, p_plus, p_minus, &mut streams.communication)?;
            realized_update(sel, e_plus, e_minus, a.n())
        }
        _ => UpdateMatrix::identity(a.n()),
    };
    state.apply(&u);
    Ok(u)
}

struct Recorder {
    h0: f64,
    threshold: f64,
    levels: Vec<f64>,
    hits: Vec<Option<u64>>,
    consensus_step: Option<u64>,
    trace: Vec<TracePoint>,
    next_grid: u64,
}

impl Recorder {
    fn new(cfg: &TrialConfig, h0: f64) -> Self {
        Self {
            h0,
            threshold: cfg.consensus_threshold,
            levels: cfg.levels.clone(),
            hits: vec![None; cfg.levels.len()],
            consensus_step: None,
            trace: Vec::new(),
            next_grid: 0,
        }
    }

    fn observe(&mut self, elapsed: u64, k: u64, state: &GossipState) {
        let (max, min) = state.extremes();
        let spread = max - min;
        for (hit, &eps) in self.hits.iter_mut().zip(&self.levels) {
            if hit.is_none() && (self.h0 == 0.0 || spread < eps * self.h0) {
                *hit = Some(elapsed);
            }
        }
        if self.consensus_step.is_none() && spread <= self.threshold * self.h0 {
            self.consensus_step = Some(elapsed);
        }
        if elapsed == self.next_grid {
            self.push(k, max, min, state);
            self.next_grid = if elapsed == 0 { 1 } else { elapsed * 2 };
        }
    }

    fn push(&mut self, k: u64, max: f64, min: f64, state: &GossipState) {
        self.trace.push(TracePoint {
            k,
            max,
            min,
            spread: max - min,
            sum_exact: state.sum_history_exact(),
        });
    }

    fn finish(&mut self, k: u64, state: &GossipState) {
        if self.trace.last().map(|p| p.k) != Some(k) {
            let (max, min) = state.extremes();
            self.push(k, max, min, state);
        }
    }
}

/// Runs `cfg.horizon` slots starting at `k0` with the streams of `trial`.
pub fn run_trial(cfg: &TrialConfig, master_seed: u64, trial: u64) -> Result<TrialResult> {
    cfg.validate()?;
    let n = cfg.a.n();
    let x0 = cfg.x0.realize(n, master_seed, trial);
    let mut state = GossipState::new(&x0, cfg.arithmetic)?;
    let mut streams = SlotStreams::new(master_seed, trial);
    let h0 = state.spread();
    let mut rec = Recorder::new(cfg, h0);
    // float product: a dyadic one would hit the exponent cap on long trials
    let mut product = cfg.audit_product.then(|| StochasticMatrix::identity(n, false));
    let mut violations = 0u64;
    let roundoff = 1e-12 * x0.iter().fold(h0, |acc, v| acc.max(v.abs()));
    let mut counts = [0u64; 2];

    rec.observe(0, cfg.k0, &state);
    let mut elapsed = 0;
    while elapsed < cfg.horizon {
        let settled = rec.consensus_step.is_some() && rec.hits.iter().all(Option::is_some);
        if state.is_exact_consensus() || (cfg.stop_at_consensus && settled) {
            break;
        }
        let k = cfg.k0 + elapsed;
        let (p, q) = cfg.schedules.values(k);
        let u = step(&mut state, &cfg.a, cfg.model, p, q, &mut streams)?;
        match u.kind {
            UpdateKind::Symmetric { .. } => counts[0] += 1,
            UpdateKind::Asymmetric { .. } => counts[1] += 1,
            UpdateKind::Identity => {}
        }
        elapsed += 1;
        if let Some(m) = product.as_mut() {
            m.apply_update_left(&u)?;
            // both sides are float; allow for roundoff once delta itself rounds to zero
            if state.spread() > n as f64 * m.delta() * h0 + roundoff {
                violations += 1;
            }
        }
        rec.observe(elapsed, cfg.k0 + elapsed, &state);
    }
    rec.finish(cfg.k0 + elapsed, &state);

    let final_state = state.approx().to_vec();
    let limit_estimate = rec
        .consensus_step
        .map(|_| final_state.iter().sum::<f64>() / n as f64);
    Ok(TrialResult {
        x0,
        consensus_step: rec.consensus_step,
        sum_history_exact: state.sum_history_exact(),
        spread_trace: rec.trace,
        limit_estimate,
        level_hits: rec.hits,
        asymmetric_unequal: state.asymmetric_unequal,
        asymmetric_unequal_sum_kept: state.asymmetric_unequal_sum_kept,
        update_counts: counts,
        steps_run: elapsed,
        product_bound_violations: cfg.audit_product.then_some(violations),
        final_state,
    })
}

/// Applies a fixed update sequence to `x0`; returns every intermediate state.
pub fn replay(x0: &[f64], updates: &[UpdateMatrix], arithmetic: Arithmetic) -> Result<Vec<GossipState>> {
    let mut state = GossipState::new(x0, arithmetic)?;
    if let Some(u) = updates.iter().find(|u| u.n != x0.len()) {
        return Err(Error::Dimension(format!("update for {} nodes applied to {} states", u.n, x0.len())));
    }
    let mut out = vec![state.clone()];
    for u in updates {
        state.apply(u);
        out.push(state.clone());
    }
    Ok(out)
}
