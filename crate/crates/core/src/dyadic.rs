//! Exact dyadic rationals `m / 2^e`.
//!
//! Pairwise averaging maps dyadic values to dyadic values, so a gossip
//! trajectory started from dyadic (in particular, any finite `f64`) initial
//! states can be followed with no rounding at all.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Value `mantissa / 2^exp`, kept normalized: the mantissa is odd, or the
/// value is zero with `exp == 0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exp: u32,
}

impl Dyadic {
    pub fn zero() -> Self {
        Self {
            mantissa: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(v: i64) -> Self {
        Self::new(BigInt::from(v), 0)
    }

    pub fn new(mantissa: BigInt, exp: u32) -> Self {
        let mut d = Self { mantissa, exp };
        d.normalize();
        d
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Self {
            mantissa: BigInt::one(),
            exp: k,
        }
    }

    /// Exact conversion of a finite float. Returns `None` for NaN or infinity.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::zero());
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e2) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        let mut m = BigInt::from(mant);
        if negative {
            m = -m;
        }
        Some(if e2 >= 0 {
            Self::new(m << e2 as usize, 0)
        } else {
            Self::new(m, (-e2) as u32)
        })
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    /// Denominator exponent of the normalized value.
    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        let shift = tz.min(self.exp as u64);
        if shift > 0 {
            self.mantissa >>= shift as usize;
            self.exp -= shift as u32;
        }
    }

    /// Mantissa rescaled to denominator `2^exp` (`exp >= self.exp`).
    fn scaled(&self, exp: u32) -> BigInt {
        &self.mantissa << (exp - self.exp) as usize
    }

    pub fn add(&self, other: &Self) -> Self {
        let e = self.exp.max(other.exp);
        Self::new(self.scaled(e) + other.scaled(e), e)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let e = self.exp.max(other.exp);
        Self::new(self.scaled(e) - other.scaled(e), e)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.mantissa * &other.mantissa, self.exp + other.exp)
    }

    /// `(self + other) / 2`, exactly.
    pub fn midpoint(&self, other: &Self) -> Self {
        let e = self.exp.max(other.exp);
        Self::new(self.scaled(e) + other.scaled(e), e + 1)
    }

    pub fn half(&self) -> Self {
        Self::new(self.mantissa.clone(), self.exp + 1)
    }

    pub fn abs(&self) -> Self {
        Self {
            mantissa: self.mantissa.abs(),
            exp: self.exp,
        }
    }

    /// Nearest-ish float: the top 64 significant bits are kept, which is
    /// more precise than the result type.
    pub fn to_f64(&self) -> f64 {
        if self.mantissa.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits();
        let (top, dropped) = if bits > 64 {
            let drop = bits - 64;
            ((&self.mantissa >> drop as usize), drop as i64)
        } else {
            (self.mantissa.clone(), 0)
        };
        let t = top.to_f64().unwrap_or(0.0);
        ldexp(t, dropped - self.exp as i64)
    }
}

/// `x * 2^e` without the intermediate overflow of `2f64.powi(e)`.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e != 0 && x != 0.0 && x.is_finite() {
        let step = e.clamp(-1000, 1000);
        x *= 2f64.powi(step as i32);
        e -= step;
    }
    x
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mantissa.sign(), other.mantissa.sign());
        if sa != sb {
            let rank = |s: Sign| match s {
                Sign::Minus => 0,
                Sign::NoSign => 1,
                Sign::Plus => 2,
            };
            return rank(sa).cmp(&rank(sb));
        }
        if self.exp == other.exp {
            return self.mantissa.cmp(&other.mantissa);
        }
        let e = self.exp.max(other.exp);
        self.scaled(e).cmp(&other.scaled(e))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.mantissa, self.exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
