//! Mod-1 arithmetic with enough care to survive large integer multipliers.
//!
//! Everything downstream reduces after every addition and represents circle
//! coordinates in `[0, 1)`. The one genuinely delicate operation is
//! `frac(k * t)` for an integer `k` and a coordinate `t`: computed naively it
//! loses the low bits of the product exactly where mod-1 reduction needs
//! them. `mul_frac` recovers the residue with an FMA two-product, and
//! `binom_frac` extends that to binomial-coefficient multipliers, falling
//! back to exact dyadic integer arithmetic when the coefficient no longer
//! fits in 53 bits.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// Fractional part normalized to `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x - floor(x) can round up to exactly 1.0 for tiny negative x.
    if f >= 1.0 {
        f - 1.0
    } else {
        f
    }
}

/// Circle distance between `a` and `b`, both taken mod 1. Never exceeds 0.5.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}

/// `frac(k * t)` where `k` must be an exactly representable integer
/// (`|k| <= 2^53`). The FMA residual captures the bits the rounded product
/// drops, so the result is accurate to a few ulp independent of `|k|`.
#[inline]
pub fn mul_frac(k: f64, t: f64) -> f64 {
    debug_assert!(k == k.trunc() && k.abs() <= 9.007_199_254_740_992e15);
    let hi = k * t;
    let lo = k.mul_add(t, -hi);
    frac(frac(hi) + lo)
}

/// Binomial coefficient `C(k, i)` for any integer `k` (negative allowed, as
/// in the unipotent power formulas), exact in `i128`. `None` on overflow.
pub fn binom_i128(k: i64, i: u32) -> Option<i128> {
    let mut acc: i128 = 1;
    for t in 0..i as i128 {
        acc = acc.checked_mul(k as i128 - t)?;
        // Always divisible: a product of j consecutive integers is divisible by j!.
        acc /= t + 1;
    }
    Some(acc)
}

const F64_EXACT_INT: i128 = 1 << 53;

/// `frac(C(k, i) * t)` with the coefficient handled exactly.
///
/// Fast path: coefficient fits in 53 bits, use `mul_frac`. Cold path (huge
/// `k` at `i >= 2`): decompose `t = m * 2^-e` and reduce `C * m mod 2^e` as
/// exact integers.
pub fn binom_frac(k: i64, i: u32, t: f64) -> f64 {
    if i == 0 {
        return frac(t);
    }
    if i == 1 {
        return mul_frac(k as f64, t);
    }
    match binom_i128(k, i) {
        Some(c) if c.abs() < F64_EXACT_INT => mul_frac(c as f64, t),
        Some(c) => dyadic_frac(&BigInt::from(c), t),
        None => {
            let mut acc = BigInt::from(1);
            for s in 0..i as i64 {
                acc *= BigInt::from(k - s);
                acc /= BigInt::from(s + 1);
            }
            dyadic_frac(&acc, t)
        }
    }
}

/// Exact `frac(c * t)` for a big integer `c` and an f64 `t` in `[0, 1)`,
/// using the dyadic decomposition of `t`.
fn dyadic_frac(c: &BigInt, t: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&t));
    if t == 0.0 || c.is_zero() {
        return 0.0;
    }
    let bits = t.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let man = bits & ((1u64 << 52) - 1);
    // t = mantissa * 2^-shift
    let (mantissa, shift) = if exp_bits == 0 {
        (man, 1074u64)
    } else {
        (man | (1u64 << 52), (1074 - (exp_bits - 1)) as u64)
    };
    let mut prod = c * BigInt::from(mantissa);
    // Reduce mod 2^shift, normalizing negatives into [0, 2^shift).
    let modulus = BigInt::from(1u8) << shift;
    prod %= &modulus;
    if prod.is_negative() {
        prod += &modulus;
    }
    // Take the top 60 bits so the f64 conversion cannot overflow for huge shifts.
    let drop = shift.saturating_sub(60);
    let top = (&prod >> drop).to_f64().unwrap_or(0.0);
    let r = top * (2f64).powi(-((shift - drop) as i32));
    frac(r)
}
