use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::CommModel;
use crate::schedule::SchedulePair;
use crate::selection::SelectionMatrix;

/// Lower bounds on the probability that two nodes are never updated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StallBound {
    pub nodes: (usize, usize),
    pub h: (f64, f64),
    /// `prod_{k=k0}^{horizon} (1 - h_i P_k)` for each node.
    pub sigma_truncated: (f64, f64),
    /// `exp(-2 h_i sum_{k>horizon} P_k)`, or 0 when that estimate does not apply.
    pub tail_factor: (f64, f64),
    /// `sigma_1 sigma_2` including the tail factors.
    pub lower_bound: f64,
    /// `prod (1 - (h_1 + h_2) P_k)` floored at 0: a bound on both nodes
    /// staying silent that does not treat the two events as independent.
    pub joint_lower_bound: f64,
}

/// Probability scale at slot `k` for the chance that a node hears anyone.
fn effective(schedules: &SchedulePair, model: CommModel, k: u64) -> f64 {
    let (p, q) = schedules.values(k);
    match model {
        CommModel::Dependent => p,
        CommModel::Independent => p.max(q),
    }
}

fn tail_sum(schedules: &SchedulePair, model: CommModel, from: u64) -> f64 {
    match model {
        CommModel::Dependent => schedules.plus.tail_sum_upper(from),
        // max(P+, P-) <= P+ + P-
        CommModel::Independent => schedules.plus.tail_sum_upper(from) + schedules.minus.tail_sum_upper(from),
    }
}

/// Node `i` changes value in slot `k` with probability at most `h_i P_k`,
/// so it never changes after `k0` with probability at least
/// `prod_{k>=k0} (1 - h_i P_k)`. The tail beyond `horizon` is bounded via
/// `ln(1 - t) >= -2t` for `t <= 1/2`.
pub fn stall_probability_bound(
    a: &SelectionMatrix,
    schedules: &SchedulePair,
    model: CommModel,
    nodes: (usize, usize),
    k0: u64,
    horizon: u64,
) -> Result<StallBound> {
    let n = a.n();
    if nodes.0 >= n || nodes.1 >= n || nodes.0 == nodes.1 {
        return Err(Error::Precondition(format!("nodes {nodes:?} must be distinct in 0..{n}")));
    }
    let h = a.participation();
    let (h1, h2) = (h[nodes.0], h[nodes.1]);
    if h1 >= 1.0 || h2 >= 1.0 {
        return Err(Error::Precondition(format!(
            "participation of nodes {nodes:?} is ({h1}, {h2}); both must be below 1"
        )));
    }
    let (mut s1, mut s2, mut joint) = (1.0f64, 1.0f64, 1.0f64);
    for k in k0..=horizon {
        let p = effective(schedules, model, k);
        s1 *= 1.0 - h1 * p;
        s2 *= 1.0 - h2 * p;
        joint *= (1.0 - (h1 + h2) * p).max(0.0);
    }
    let tail = tail_sum(schedules, model, horizon + 1);
    let factor = |hi: f64| {
        // every tail term is at most the tail sum, so h * tail <= 1/2 covers them all
        if tail.is_finite() && hi * tail <= 0.5 {
            (-2.0 * hi * tail).exp()
        } else {
            0.0
        }
    };
    let (t1, t2) = (factor(h1), factor(h2));
    let tj = if tail.is_finite() && (h1 + h2) * tail <= 0.5 {
        (-2.0 * (h1 + h2) * tail).exp()
    } else {
        0.0
    };
    Ok(StallBound {
        nodes,
        h: (h1, h2),
        sigma_truncated: (s1, s2),
        tail_factor: (t1, t2),
        lower_bound: s1 * t1 * s2 * t2,
        joint_lower_bound: joint * tj,
    })
}

/// The two nodes of smallest participation, when both are below 1.
pub fn stall_nodes(a: &SelectionMatrix) -> Result<(usize, usize)> {
    let h = a.participation();
    let mut idx: Vec<usize> = (0..a.n()).collect();
    idx.sort_by(|&x, &y| h[x].total_cmp(&h[y]).then(x.cmp(&y)));
    if h[idx[1]] >= 1.0 {
        return Err(Error::Precondition("fewer than two nodes with participation below 1".into()));
    }
    let (x, y) = (idx[0].min(idx[1]), idx[0].max(idx[1]));
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Schedule;
    use std::f64::consts::PI;

    fn k3() -> SelectionMatrix {
        SelectionMatrix::complete_uniform(3).unwrap()
    }

    #[test]
    fn power_schedule_matches_euler_product() {
        // prod_{m>=1} (1 - a/m^2) = sin(pi sqrt a) / (pi sqrt a)
        let s = SchedulePair::same(Schedule::power(1.0, 2.0).unwrap()).unwrap();
        let b = stall_probability_bound(&k3(), &s, CommModel::Dependent, (0, 1), 0, 100_000).unwrap();
        let r = (2.0f64 / 3.0).sqrt();
        let sigma = (PI * r).sin() / (PI * r);
        assert!((b.sigma_truncated.0 - sigma).abs() < 1e-5);
        assert!(b.lower_bound <= sigma * sigma && b.lower_bound > sigma * sigma * (1.0 - 1e-4));
        assert!((b.h.0 - 2.0 / 3.0).abs() < 1e-15);
        // k = 0 fires with certainty and every pair touches node 0 or 1
        assert_eq!(b.joint_lower_bound, 0.0);
    }

    #[test]
    fn constant_links_drive_bound_to_zero() {
        let s = SchedulePair::same(Schedule::constant(0.2).unwrap()).unwrap();
        let b = stall_probability_bound(&k3(), &s, CommModel::Dependent, (0, 1), 0, 1000).unwrap();
        assert_eq!(b.tail_factor, (0.0, 0.0));
        assert_eq!(b.lower_bound, 0.0);
        assert!(b.sigma_truncated.0 < 1e-50);
    }

    #[test]
    fn silent_links_give_one() {
        let s = SchedulePair::same(Schedule::constant(0.0).unwrap()).unwrap();
        let b = stall_probability_bound(&k3(), &s, CommModel::Independent, (0, 2), 5, 1000).unwrap();
        assert_eq!(b.lower_bound, 1.0);
        assert_eq!(b.joint_lower_bound, 1.0);
    }

    #[test]
    fn needs_two_quiet_nodes() {
        // every meeting involves node 0, so h_0 = 1
        let rows = vec![vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        let a = SelectionMatrix::new(rows, crate::selection::RowSumMode::Strict).unwrap();
        let s = SchedulePair::same(Schedule::power(1.0, 2.0).unwrap()).unwrap();
        assert!(stall_probability_bound(&a, &s, CommModel::Dependent, (0, 1), 0, 10).is_err());
        assert_eq!(stall_nodes(&a).unwrap(), (1, 2));
        assert!(stall_probability_bound(&a, &s, CommModel::Dependent, (1, 1), 0, 10).is_err());
    }
}
