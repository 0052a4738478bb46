use std::cmp::Ordering;
use std::fmt;

/// A nonnegative real stored as its natural logarithm.
///
/// Normalizing constants of long chains and lattices leave the double range
/// long before they become interesting (`ln C` reaches ~1e6 for a million-site
/// chain), so every constant in the crate travels in this form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    ln: f64,
    is_zero: bool,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        ln: f64::NEG_INFINITY,
        is_zero: true,
    };
    pub const ONE: LogValue = LogValue {
        ln: 0.0,
        is_zero: false,
    };

    /// Builds a value from its natural log. `-inf` is zero.
    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { ln, is_zero: false }
        }
    }

    /// Panics on negative or NaN input.
    pub fn from_f64(x: f64) -> Self {
        assert!(x >= 0.0, "LogValue::from_f64 on {x}");
        Self::from_ln(x.ln())
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    /// Natural log; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.ln
        }
    }

    pub fn log10(&self) -> f64 {
        self.ln() / std::f64::consts::LN_10
    }

    /// Plain double; overflows to `inf` for large values.
    pub fn to_f64(&self) -> f64 {
        self.ln().exp()
    }

    /// `self + other`, stable for any magnitudes.
    pub fn add(self, other: LogValue) -> LogValue {
        if self.is_zero {
            return other;
        }
        if other.is_zero {
            return self;
        }
        let (hi, lo) = if self.ln >= other.ln {
            (self.ln, other.ln)
        } else {
            (other.ln, self.ln)
        };
        LogValue::from_ln(hi + (lo - hi).exp().ln_1p())
    }

    pub fn mul(self, other: LogValue) -> LogValue {
        if self.is_zero || other.is_zero {
            return Self::ZERO;
        }
        LogValue::from_ln(self.ln + other.ln)
    }

    /// `self / other`; dividing by zero yields a numerical error upstream,
    /// here it returns `+inf` in log space.
    pub fn div(self, other: LogValue) -> LogValue {
        if self.is_zero {
            return Self::ZERO;
        }
        LogValue::from_ln(self.ln - other.ln())
    }

    pub fn powi(self, k: u64) -> LogValue {
        if k == 0 {
            return Self::ONE;
        }
        if self.is_zero {
            return Self::ZERO;
        }
        LogValue::from_ln(self.ln * k as f64)
    }

    /// Decimal mantissa in `[1, 10)` and exponent with the mantissa rounded
    /// to `digits` significant digits.
    pub fn mantissa_exponent(&self, digits: usize) -> (f64, i64) {
        if self.is_zero {
            return (0.0, 0);
        }
        let l10 = self.log10();
        let mut exponent = l10.floor();
        let mut mantissa = 10f64.powf(l10 - exponent);
        let scale = 10f64.powi(digits.saturating_sub(1) as i32);
        mantissa = (mantissa * scale).round() / scale;
        if mantissa >= 10.0 {
            mantissa /= 10.0;
            exponent += 1.0;
        }
        (mantissa, exponent as i64)
    }

    /// `m.mmmmE+k` with five significant digits.
    pub fn scientific(&self) -> String {
        if self.is_zero {
            return "0.0000E+00".to_string();
        }
        let (m, e) = self.mantissa_exponent(5);
        let sign = if e < 0 { '-' } else { '+' };
        format!("{m:.4}E{sign}{:02}", e.unsigned_abs())
    }

    /// Natural log with fifteen significant digits.
    pub fn ln_string(&self) -> String {
        if self.is_zero {
            "-inf".to_string()
        } else {
            format!("{:.14e}", self.ln)
        }
    }
}

impl Default for LogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln().partial_cmp(&other.ln())
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (ln {})", self.scientific(), self.ln_string())
    }
}

/// Streaming log-sum-exp with a running maximum.
///
/// Terms are added in call order; the accumulator only rescales when a new
/// maximum arrives, so the sum never overflows regardless of magnitude.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term <= self.max {
            self.scaled_sum += (ln_term - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - ln_term).exp() + 1.0;
            self.max = ln_term;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.scaled_sum += other.scaled_sum * (other.max - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - other.max).exp() + other.scaled_sum;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> LogValue {
        if self.max == f64::NEG_INFINITY {
            LogValue::ZERO
        } else {
            LogValue::from_ln(self.max + self.scaled_sum.ln())
        }
    }
}

/// Neumaier-compensated sum of log scales.
///
/// A chain of a million steps accumulates a scale near `10⁶`, where one ulp
/// is `10⁻¹⁰`; plain summation would drift by far more than the rounding of
/// each step.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScaleSum {
    sum: f64,
    compensation: f64,
}

impl ScaleSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// `ln Σ exp(x_i)` over a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mut acc = LogSumExp::new();
    for &x in xs {
        acc.push(x);
    }
    acc.value().ln()
}
