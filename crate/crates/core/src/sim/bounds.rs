use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::StructuralConstants;

/// `T_com(eps) <= slope * ln(1/eps) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcomBound {
    pub slope: f64,
    /// `slope * ln(1/eps)`.
    pub leading: f64,
    /// Explicit constant term from the proof.
    pub offset: f64,
}

impl TcomBound {
    pub fn total(&self) -> f64 {
        self.leading + self.offset
    }
}

fn check_common(p_star: f64, t_star: u64, epsilon: f64) -> Result<()> {
    if t_star == 0 {
        return Err(Error::InvalidConstants("T* must be at least 1".into()));
    }
    if !(p_star > 0.0 && p_star <= t_star as f64) {
        return Err(Error::InvalidConstants(format!("p* = {p_star} must lie in (0, T*]")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidConstants(format!("epsilon {epsilon} outside (0, 1]")));
    }
    Ok(())
}

/// Perfectly dependent links: slope `3 / ln(1 / (1 - lambda2* p* / (2 n T*)))`.
pub fn tcom_bound_dependent(
    sc: &StructuralConstants,
    p_star: f64,
    t_star: u64,
    n: usize,
    epsilon: f64,
) -> Result<TcomBound> {
    check_common(p_star, t_star, epsilon)?;
    let t = t_star as f64;
    let nf = n as f64;
    let q = sc.lambda2_star * p_star / (2.0 * nf * t);
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidConstants(format!(
            "lambda2* p* / (2 n T*) = {q} must lie in (0, 1)"
        )));
    }
    let log_inv = -(-q).ln_1p();
    let slope = 3.0 / log_inv;
    // c* = (1 - q)^T*
    let log_inv_c = t * log_inv;
    let offset = t * ((2.0 * (nf - 1.0) / nf).ln() + log_inv_c) / log_inv_c;
    Ok(TcomBound {
        slope,
        leading: slope * (1.0 / epsilon).ln(),
        offset,
    })
}

/// Independent links: slope `4 T* theta0 / p* / ln(1 / (1 - (a*/(4n))^theta0))`.
/// Here `p*` witnesses linear growth of `sum (P+ + P-)`.
pub fn tcom_bound_independent(
    sc: &StructuralConstants,
    p_star: f64,
    t_star: u64,
    n: usize,
    epsilon: f64,
) -> Result<TcomBound> {
    if !(p_star > 0.0) || t_star == 0 {
        return Err(Error::InvalidConstants(format!("need p* > 0 and T* >= 1, got ({p_star}, {t_star})")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidConstants(format!("epsilon {epsilon} outside (0, 1]")));
    }
    let t = t_star as f64;
    let theta = sc.theta0 as f64;
    let x = (sc.a_star / (4.0 * n as f64)).powf(theta);
    // ln(1/(1-x)) for tiny x without cancellation
    let log_inv_c = -(-x).ln_1p();
    if !(log_inv_c > 0.0) {
        return Err(Error::InvalidConstants(format!(
            "(a*/(4n))^theta0 = {x} underflows; the bound is not representable"
        )));
    }
    let slope = 4.0 * t * theta / p_star / log_inv_c;
    // P(H/H0 >= eps) <= (n/eps) c^(floor(k/T*) p* / (2 theta0) - 1); solve for k
    let offset = t * (2.0 * theta / p_star) * (1.0 + (n as f64).ln() / log_inv_c) + t;
    Ok(TcomBound {
        slope,
        leading: slope * (1.0 / epsilon).ln(),
        offset,
    })
}
