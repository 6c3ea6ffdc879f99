//! Deterministic link-success probability sequences `P_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant { c: f64 },
    /// `min(1, c / (k+1)^gamma)`.
    Power { c: f64, gamma: f64 },
    /// `values[k mod len]`.
    Periodic { values: Vec<f64> },
    /// `values[k]` while `k < len`, then `tail` forever.
    Explicit { values: Vec<f64>, tail: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGrowthWitness {
    pub p_star: f64,
    pub t_star: u64,
}

/// Analytic facts about `sum_k P_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleClass {
    pub divergent_sum: bool,
    /// `(p*, T*)` with `sum_{k=m}^{m+T*-1} P_k >= p*` for every `m`.
    pub linear_growth_witness: Option<LinearGrowthWitness>,
}

fn unit(x: f64) -> bool {
    x.is_finite() && (0.0..=1.0).contains(&x)
}

impl Schedule {
    pub fn constant(c: f64) -> Result<Self> {
        let s = Schedule::Constant { c };
        s.validate()?;
        Ok(s)
    }

    pub fn power(c: f64, gamma: f64) -> Result<Self> {
        let s = Schedule::Power { c, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidSchedule(what));
        match self {
            Schedule::Constant { c } if !unit(*c) => bad(format!("constant {c} outside [0, 1]")),
            Schedule::Power { c, gamma } if !(c.is_finite() && *c >= 0.0) => {
                bad(format!("power coefficient {c} must be a nonnegative number (gamma {gamma})"))
            }
            Schedule::Power { gamma, .. } if !(gamma.is_finite() && *gamma >= 0.0) => {
                bad(format!("power exponent {gamma} must be a nonnegative number"))
            }
            Schedule::Periodic { values } if values.is_empty() => bad("empty period".into()),
            Schedule::Periodic { values } | Schedule::Explicit { values, .. }
                if !values.iter().all(|v| unit(*v)) =>
            {
                bad("listed values must lie in [0, 1]".into())
            }
            Schedule::Explicit { tail, .. } if !unit(*tail) => bad(format!("tail {tail} outside [0, 1]")),
            _ => Ok(()),
        }
    }

    pub fn value(&self, k: u64) -> f64 {
        match self {
            Schedule::Constant { c } => *c,
            Schedule::Power { c, gamma } => {
                if *gamma == 0.0 {
                    c.min(1.0)
                } else {
                    (c / ((k + 1) as f64).powf(*gamma)).min(1.0)
                }
            }
            Schedule::Periodic { values } => values[(k % values.len() as u64) as usize],
            Schedule::Explicit { values, tail } => values.get(k as usize).copied().unwrap_or(*tail),
        }
    }

    pub fn classify(&self) -> ScheduleClass {
        let witness = |p_star: f64, t_star: u64| ScheduleClass {
            divergent_sum: true,
            linear_growth_witness: Some(LinearGrowthWitness { p_star, t_star }),
        };
        let summable = ScheduleClass {
            divergent_sum: false,
            linear_growth_witness: None,
        };
        match self {
            Schedule::Constant { c } if *c > 0.0 => witness(*c, 1),
            Schedule::Constant { .. } => summable,
            Schedule::Power { c, .. } if *c == 0.0 => summable,
            Schedule::Power { c, gamma } if *gamma == 0.0 => witness(c.min(1.0), 1),
            Schedule::Power { gamma, .. } if *gamma <= 1.0 => ScheduleClass {
                divergent_sum: true,
                linear_growth_witness: None,
            },
            Schedule::Power { .. } => summable,
            Schedule::Periodic { values } => {
                let s: f64 = values.iter().sum();
                if s > 0.0 {
                    witness(s, values.len() as u64)
                } else {
                    summable
                }
            }
            // any window of len+1 consecutive slots reaches the tail at least once
            Schedule::Explicit { values, tail } if *tail > 0.0 => witness(*tail, values.len() as u64 + 1),
            Schedule::Explicit { .. } => summable,
        }
    }

    /// Upper bound on `sum_{k >= from} P_k`; infinite when the sum diverges.
    pub fn tail_sum_upper(&self, from: u64) -> f64 {
        if self.classify().divergent_sum {
            return f64::INFINITY;
        }
        match self {
            Schedule::Power { c, gamma } => {
                // first term plus the integral of c x^-gamma over [from+1, inf)
                let x = (from + 1) as f64;
                c * x.powf(-gamma) + c * x.powf(1.0 - gamma) / (gamma - 1.0)
            }
            Schedule::Explicit { values, .. } => values.iter().skip(from as usize).sum(),
            _ => 0.0,
        }
    }
}

/// Success probabilities of the two link directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulePair {
    pub plus: Schedule,
    pub minus: Schedule,
}

impl SchedulePair {
    pub fn new(plus: Schedule, minus: Schedule) -> Result<Self> {
        plus.validate()?;
        minus.validate()?;
        Ok(Self { plus, minus })
    }

    pub fn same(s: Schedule) -> Result<Self> {
        Self::new(s.clone(), s)
    }

    pub fn values(&self, k: u64) -> (f64, f64) {
        (self.plus.value(k), self.minus.value(k))
    }

    /// Classification of `P_k^+ + P_k^-`. A witness for either direction
    /// is a witness for the sum; two witnesses combine over the longer window.
    pub fn classify_sum(&self) -> ScheduleClass {
        let (a, b) = (self.plus.classify(), self.minus.classify());
        let w = match (a.linear_growth_witness, b.linear_growth_witness) {
            (Some(x), Some(y)) => {
                let t = x.t_star.max(y.t_star);
                // a window of length t contains floor(t / t_x) disjoint windows of length t_x
                let px = x.p_star * (t / x.t_star) as f64;
                let py = y.p_star * (t / y.t_star) as f64;
                Some(LinearGrowthWitness {
                    p_star: px + py,
                    t_star: t,
                })
            }
            (x, y) => x.or(y),
        };
        ScheduleClass {
            divergent_sum: a.divergent_sum || b.divergent_sum,
            linear_growth_witness: w,
        }
    }
}
