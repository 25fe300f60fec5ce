//! Signed log-space scalars and exact large combinatorics.
//!
//! Probabilities, amplitudes, and multiplicities in this crate routinely
//! involve factorials of a few thousand, far beyond `f64` range in linear
//! space. [`LogWeight`] stores a sign and the natural log of the magnitude,
//! merges sums with log-sum-exp, and round-trips through `f64` only when a
//! quantity is known to be representable. Factorials and binomials come from
//! exact big integers whose logs are extracted bit-exactly, so the log-space
//! layer inherits no series-approximation error for table-sized arguments.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Largest argument covered by the exact big-integer factorial table.
/// Beyond it, `ln_factorial` falls back to `statrs` log-gamma, which is
/// accurate to ~1e-13 relative and only reached by resource-guarded paths.
pub const LNFAC_TABLE_MAX: u64 = 8192;

/// log2(e), for converting natural-log quantities to bits.
const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// ln 2 split into a 33-bit head and a tail so that `n * LN2_HI` is exact
/// for the exponent ranges that occur here (n < 2^20).
const LN2_HI: f64 = 6.931_471_803_691_238_164_9e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

/// A real number stored as `sign * exp(ln_magnitude)`.
///
/// `sign == 0` encodes exact zero and `ln_magnitude` is then ignored.
/// Arithmetic never leaves log space, so products of factorials up to 10^6!
/// stay representable.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogWeight {
    sign: i8,
    ln_magnitude: f64,
}

impl LogWeight {
    pub const fn zero() -> Self {
        LogWeight { sign: 0, ln_magnitude: f64::NEG_INFINITY }
    }

    pub const fn one() -> Self {
        LogWeight { sign: 1, ln_magnitude: 0.0 }
    }

    /// Positive value given directly by its natural log.
    pub fn from_ln(ln_magnitude: f64) -> Self {
        LogWeight { sign: 1, ln_magnitude }
    }

    pub fn from_signed_ln(sign: i8, ln_magnitude: f64) -> Self {
        debug_assert!(sign == -1 || sign == 0 || sign == 1);
        if sign == 0 {
            Self::zero()
        } else {
            LogWeight { sign, ln_magnitude }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::zero()
        } else {
            LogWeight { sign: if x > 0.0 { 1 } else { -1 }, ln_magnitude: x.abs().ln() }
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Natural log of the magnitude; negative infinity for zero.
    pub fn ln_magnitude(&self) -> f64 {
        if self.sign == 0 { f64::NEG_INFINITY } else { self.ln_magnitude }
    }

    /// Base-2 log of the magnitude.
    pub fn log2_magnitude(&self) -> f64 {
        self.ln_magnitude() * LOG2_E
    }

    /// Back to linear space. Overflows to +-inf and underflows to 0 exactly
    /// as `exp` does; callers convert only quantities known to fit.
    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.ln_magnitude.exp()
        }
    }

    pub fn abs(&self) -> Self {
        LogWeight { sign: self.sign.abs(), ln_magnitude: self.ln_magnitude }
    }

    pub fn neg(&self) -> Self {
        LogWeight { sign: -self.sign, ln_magnitude: self.ln_magnitude }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.sign == 0 || other.sign == 0 {
            return Self::zero();
        }
        LogWeight {
            sign: self.sign * other.sign,
            ln_magnitude: self.ln_magnitude + other.ln_magnitude,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(other.sign != 0, "division of LogWeight by exact zero");
        if self.sign == 0 {
            return Self::zero();
        }
        LogWeight {
            sign: self.sign * other.sign,
            ln_magnitude: self.ln_magnitude - other.ln_magnitude,
        }
    }

    pub fn powi(&self, k: i64) -> Self {
        if self.sign == 0 {
            assert!(k > 0, "0 raised to a nonpositive power");
            return Self::zero();
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        LogWeight { sign, ln_magnitude: self.ln_magnitude * k as f64 }
    }

    /// Signed log-sum-exp. Opposite-sign operands of exactly equal log
    /// magnitude cancel to exact zero; other cancellations go through
    /// `ln_1p` and keep full precision relative to the larger operand.
    pub fn add(&self, other: &Self) -> Self {
        if self.sign == 0 {
            return *other;
        }
        if other.sign == 0 {
            return *self;
        }
        let (hi, lo) = if self.ln_magnitude >= other.ln_magnitude {
            (self, other)
        } else {
            (other, self)
        };
        let d = lo.ln_magnitude - hi.ln_magnitude;
        if self.sign == other.sign {
            LogWeight { sign: hi.sign, ln_magnitude: hi.ln_magnitude + d.exp().ln_1p() }
        } else if self.ln_magnitude == other.ln_magnitude {
            Self::zero()
        } else {
            LogWeight {
                sign: hi.sign,
                ln_magnitude: hi.ln_magnitude + (-d.exp()).ln_1p(),
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Compare magnitudes only.
    pub fn abs_cmp(&self, other: &Self) -> std::cmp::Ordering {
        if self.sign == 0 && other.sign == 0 {
            return std::cmp::Ordering::Equal;
        }
        self.ln_magnitude().partial_cmp(&other.ln_magnitude()).expect("NaN log magnitude")
    }
}

/// Neumaier-compensated accumulator; absorbs terms both larger and smaller
/// than the running sum without losing the low-order bits.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

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

/// Natural log of a nonzero big integer, exact to f64 rounding: the top
/// 53 bits supply the mantissa and the remaining bit count multiplies a
/// two-part ln 2.
pub fn ln_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    if bits <= 63 {
        return (x.to_u64().expect("fits in u64") as f64).ln();
    }
    let shift = bits - 63;
    let top = (x >> shift).to_u64().expect("top bits fit in u64") as f64;
    let s = shift as f64;
    top.ln() + s * LN2_HI + s * LN2_LO
}

/// Signed variant of [`ln_biguint`].
pub fn logweight_from_bigint(x: &BigInt) -> LogWeight {
    match x.sign() {
        Sign::NoSign => LogWeight::zero(),
        Sign::Plus => LogWeight::from_signed_ln(1, ln_biguint(x.magnitude())),
        Sign::Minus => LogWeight::from_signed_ln(-1, ln_biguint(x.magnitude())),
    }
}

fn lnfac_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = (LNFAC_TABLE_MAX + 1) as usize;
        let mut table = Vec::with_capacity(n);
        table.push(0.0);
        let mut acc = BigUint::from(1u32);
        for k in 1..n {
            acc *= k as u64;
            table.push(ln_biguint(&acc));
        }
        table
    })
}

/// ln(n!) — exact big-integer evaluation for n <= `LNFAC_TABLE_MAX`,
/// log-gamma beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n <= LNFAC_TABLE_MAX {
        lnfac_table()[n as usize]
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// ln C(n, k); zero outside the triangle is the caller's error.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n, "binomial index out of range: C({n}, {k})");
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// ln of the multinomial coefficient n!/(c_1! ... c_r!) with n = sum c_i.
pub fn ln_multinomial(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut s = CompensatedSum::new();
    s.add(ln_factorial(n));
    for &c in counts {
        s.add(-ln_factorial(c));
    }
    s.value()
}

/// Exact multinomial coefficient as a big integer (used where floor and
/// boundary decisions must be exact).
pub fn multinomial_biguint(counts: &[u64]) -> BigUint {
    let mut result = BigUint::from(1u32);
    let mut seen: u64 = 0;
    for &c in counts {
        for i in 1..=c {
            seen += 1;
            result = result * seen / i; // C(seen, i) prefix products divide exactly
        }
    }
    result
}

/// Convert a natural-log quantity to bits.
pub fn nats_to_bits(x_ln: f64) -> f64 {
    x_ln * LOG2_E
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ln_factorial_matches_exact_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert_abs_diff_eq!(ln_factorial(5), 120f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(ln_factorial(12), 479_001_600f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn ln_factorial_agrees_with_log_gamma_at_table_edge() {
        for n in [2000u64, 8191, 8192] {
            let exact = ln_factorial(n);
            let gamma = statrs::function::gamma::ln_gamma(n as f64 + 1.0);
            assert_abs_diff_eq!(exact, gamma, epsilon = 1e-10 * exact.abs());
        }
    }

    #[test]
    fn ln_biguint_is_bit_exact_on_powers_of_two() {
        let x = BigUint::from(1u32) << 2000;
        assert_abs_diff_eq!(
            ln_biguint(&x),
            2000.0 * std::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn logweight_addition_handles_signs_and_cancellation() {
        let a = LogWeight::from_f64(3.0);
        let b = LogWeight::from_f64(-3.0);
        assert!(a.add(&b).is_zero());

        let c = LogWeight::from_f64(5.0).add(&LogWeight::from_f64(-2.0));
        assert_abs_diff_eq!(c.to_f64(), 3.0, epsilon = 1e-15);

        let d = LogWeight::from_f64(-5.0).add(&LogWeight::from_f64(2.0));
        assert_abs_diff_eq!(d.to_f64(), -3.0, epsilon = 1e-15);
    }

    #[test]
    fn logweight_products_track_huge_factorials_without_overflow() {
        // 10^6! in linear space is far beyond f64 range; its log must stay finite.
        let big = LogWeight::from_ln(statrs::function::gamma::ln_gamma(1e6 + 1.0));
        let squared = big.mul(&big);
        assert!(squared.ln_magnitude().is_finite());
        assert!(squared.ln_magnitude() > 2.0e7);
    }

    #[test]
    fn multinomial_biguint_matches_factorial_definition() {
        // 6!/(2!2!2!) = 90, 5!/(5!) = 1, 4!/(1!3!) = 4
        assert_eq!(multinomial_biguint(&[2, 2, 2]), BigUint::from(90u32));
        assert_eq!(multinomial_biguint(&[5]), BigUint::from(1u32));
        assert_eq!(multinomial_biguint(&[1, 3]), BigUint::from(4u32));
        let ln90 = ln_multinomial(&[2, 2, 2]);
        assert_abs_diff_eq!(ln90, 90f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn compensated_sum_beats_naive_on_alternating_series() {
        let mut kahan = CompensatedSum::new();
        kahan.add(1.0);
        for _ in 0..10_000 {
            kahan.add(1e-16);
        }
        assert_abs_diff_eq!(kahan.value(), 1.0 + 1e-12, epsilon = 1e-16);
    }
}
