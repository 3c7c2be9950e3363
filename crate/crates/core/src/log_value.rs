//! Signed log-domain scalars.
//!
//! A [`LogValue`] stores `sign · exp(log_abs)`. Densities such as
//! `e^{-φ(r t)}` reach `e^{-700}` and below during rate sweeps, so every
//! integral in the crate accumulates in this representation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    sign: i8,
    log_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };
    pub const ONE: LogValue = LogValue {
        sign: 1,
        log_abs: 0.0,
    };

    /// Builds a value from its parts. A zero sign or a `-∞` magnitude gives
    /// [`LogValue::ZERO`].
    pub fn from_parts(sign: i8, log_abs: f64) -> Self {
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        debug_assert!(!log_abs.is_nan(), "NaN log magnitude");
        LogValue {
            sign: sign.signum(),
            log_abs,
        }
    }

    /// `exp(log_abs)` with positive sign.
    pub fn from_log(log_abs: f64) -> Self {
        Self::from_parts(1, log_abs)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue {
                sign: if x > 0.0 { 1 } else { -1 },
                log_abs: x.abs().ln(),
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_abs.exp(),
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn log_abs(self) -> f64 {
        self.log_abs
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        Self::from_parts(self.sign.abs(), self.log_abs)
    }

    /// Multiplies by an ordinary real.
    pub fn scale(self, k: f64) -> Self {
        self * LogValue::from_f64(k)
    }

    /// Sum of many values: shift by the largest magnitude, add the shifted
    /// signed terms, restore the shift.
    pub fn sum<I: IntoIterator<Item = LogValue>>(values: I) -> Self {
        let mut acc = LogSum::new();
        for v in values {
            acc.push(v);
        }
        acc.value()
    }

    /// Relative distance `|a - b| / max(|a|, |b|)`, computed without leaving
    /// the log domain. Returns 0 when both are zero.
    pub fn relative_difference(self, other: LogValue) -> f64 {
        let scale = if self.log_abs >= other.log_abs {
            self.log_abs
        } else {
            other.log_abs
        };
        if scale == f64::NEG_INFINITY {
            return 0.0;
        }
        let diff = self - other;
        if diff.is_zero() {
            0.0
        } else {
            (diff.log_abs - scale).exp()
        }
    }
}

impl Default for LogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({})", if s < 0 { "-" } else { "" }, self.log_abs),
        }
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue {
            sign: -self.sign,
            log_abs: self.log_abs,
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue::from_parts(self.sign * rhs.sign, self.log_abs + rhs.log_abs)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        assert!(!rhs.is_zero(), "LogValue division by zero");
        LogValue::from_parts(self.sign * rhs.sign, self.log_abs - rhs.log_abs)
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = match self.log_abs.partial_cmp(&rhs.log_abs) {
            Some(Ordering::Less) => (rhs, self),
            _ => (self, rhs),
        };
        let d = small.log_abs - big.log_abs;
        if big.sign == small.sign {
            LogValue::from_parts(big.sign, big.log_abs + d.exp().ln_1p())
        } else {
            // |big| - |small| = |big| (1 - e^d)
            let rest = -d.exp_m1();
            if rest <= 0.0 {
                LogValue::ZERO
            } else {
                LogValue::from_parts(big.sign, big.log_abs + rest.ln())
            }
        }
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: LogValue) -> LogValue {
        self + (-rhs)
    }
}

/// Streaming signed log-sum-exp accumulator.
///
/// Terms are stored as `acc · exp(shift)` where `shift` is the largest
/// magnitude seen so far.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    shift: f64,
    acc: f64,
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            shift: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    pub fn push(&mut self, v: LogValue) {
        if v.is_zero() {
            return;
        }
        if v.log_abs > self.shift {
            if self.shift > f64::NEG_INFINITY {
                self.acc *= (self.shift - v.log_abs).exp();
            }
            self.shift = v.log_abs;
        }
        self.acc += f64::from(v.sign) * (v.log_abs - self.shift).exp();
    }

    pub fn value(&self) -> LogValue {
        if self.acc == 0.0 {
            return LogValue::ZERO;
        }
        LogValue::from_parts(
            if self.acc > 0.0 { 1 } else { -1 },
            self.shift + self.acc.abs().ln(),
        )
    }
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_and_sign_handling() {
        assert!(LogValue::from_f64(0.0).is_zero());
        assert_eq!(LogValue::from_f64(-2.0).sign(), -1);
        assert_eq!((LogValue::from_f64(3.0) - LogValue::from_f64(3.0)), LogValue::ZERO);
        assert_eq!(LogValue::from_parts(1, f64::NEG_INFINITY), LogValue::ZERO);
    }

    #[test]
    fn sums_far_below_underflow() {
        let a = LogValue::from_log(-2000.0);
        let b = LogValue::from_log(-2000.0 + 2f64.ln());
        let s = a + b;
        assert!((s.log_abs() - (-2000.0 + 3f64.ln())).abs() < 1e-12);
        let d = a - b;
        assert_eq!(d.sign(), -1);
        assert!((d.log_abs() + 2000.0).abs() < 1e-12);
    }

    #[test]
    fn accumulator_matches_pairwise_sum() {
        let vals = [1.5, -0.25, 1e-8, -3.0, 7.0];
        let acc = LogValue::sum(vals.iter().map(|&x| LogValue::from_f64(x)));
        let direct: f64 = vals.iter().sum();
        assert!((acc.to_f64() - direct).abs() < 1e-14 * direct.abs());
    }

    proptest! {
        #[test]
        fn arithmetic_reproduces_real_arithmetic(
            a in prop_oneof![1e-200f64..1e200, -1e200f64..-1e-200],
            b in prop_oneof![1e-10f64..1e10, -1e10f64..-1e-10],
        ) {
            let la = LogValue::from_f64(a);
            let lb = LogValue::from_f64(b);
            let rel = |x: f64, y: f64| ((x - y) / y).abs();
            prop_assert!(rel(la.to_f64(), a) <= 1e-13);
            prop_assert!(rel((la * lb).to_f64(), a * b) <= 1e-13);
            prop_assert!(rel((la / lb).to_f64(), a / b) <= 1e-13);
            let s = a + b;
            if s != 0.0 && s.abs() > 1e-6 * a.abs().max(b.abs()) {
                prop_assert!(rel((la + lb).to_f64(), s) <= 1e-13 * a.abs().max(b.abs()) / s.abs());
            }
        }
    }
}
