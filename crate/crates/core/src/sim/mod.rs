//! Monte Carlo execution of the gossip recursion and its estimators.

mod bounds;
mod ensemble;
mod trial;

pub use bounds::{tcom_bound_dependent, tcom_bound_independent, TcomBound};
pub use ensemble::{
    estimate_tcom, run_ensemble, run_trials, summarize, tcom_from_hits, EnsembleStats, MeanEstimate, Proportion,
    TcomPoint,
};
pub use trial::{
    replay, run_trial, step, Arithmetic, GossipState, InitialState, SlotStreams, TracePoint, TrialConfig, TrialResult,
};
