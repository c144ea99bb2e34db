//! Exact-arithmetic aliases and the handful of big-number helpers the rest of
//! the crate leans on: safe rational parsing, log-scale conversion of huge
//! integers, and directed rounding into `f64`.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Int = BigInt;
pub type Rat = BigRational;

/// Parse an exact rational from `"7"` or `"3/4"` (optionally signed).
///
/// `Ratio::from_str` panics on a zero denominator, so the split is done here.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::SpecParse("empty rational literal".into()));
    }
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num_str)
        .map_err(|e| Error::SpecParse(format!("bad numerator {num_str:?}: {e}")))?;
    let den = BigInt::from_str(den_str)
        .map_err(|e| Error::SpecParse(format!("bad denominator {den_str:?}: {e}")))?;
    if den.is_zero() {
        return Err(Error::SpecParse(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(num, den))
}

/// Parse an exact integer from a decimal string.
pub fn parse_int(s: &str) -> Result<Int> {
    BigInt::from_str(s.trim()).map_err(|e| Error::SpecParse(format!("bad integer {s:?}: {e}")))
}

/// Natural log of a positive big integer, accurate to ~1 ulp even when the
/// value is far beyond `f64` range (mantissa of the top 53 bits plus the
/// binary exponent).
pub fn ln_biguint(x: &BigUint) -> f64 {
    debug_assert!(!x.is_zero());
    let bits = x.bits();
    if bits <= 53 {
        return (x.to_u64().expect("fits") as f64).ln();
    }
    let shift = bits - 53;
    let top: BigUint = x >> shift;
    let mantissa = top.to_u64().expect("53 bits fit") as f64;
    mantissa.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Natural log of a positive `BigInt`.
pub fn ln_bigint(x: &Int) -> f64 {
    debug_assert!(x.is_positive());
    ln_biguint(x.magnitude())
}

/// Natural log of a positive rational, robust against overflow of either side.
pub fn ln_rat(r: &Rat) -> f64 {
    debug_assert!(r.is_positive());
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

/// Convert a rational to `f64`, falling back to exp/ln arithmetic when the
/// direct conversion overflows.
pub fn rat_to_f64(r: &Rat) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let mag = ln_rat(&r.abs()).exp();
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Convert a rational to an `f64` that is guaranteed `>=` the exact value.
pub fn rat_to_f64_up(r: &Rat) -> f64 {
    let mut v = rat_to_f64(r);
    if !v.is_finite() {
        return f64::INFINITY;
    }
    // At most a couple of nudges: rat_to_f64 is within 1 ulp.
    for _ in 0..4 {
        match Rat::from_float(v) {
            Some(rv) if rv >= *r => return v,
            _ => v = next_up(v),
        }
    }
    v
}

fn next_up(v: f64) -> f64 {
    if v.is_nan() || v == f64::INFINITY {
        return v;
    }
    let bits = if v == 0.0 { 1 } else if v > 0.0 { v.to_bits() + 1 } else { v.to_bits() - 1 };
    f64::from_bits(bits)
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> Int {
    if k > n {
        return Int::zero();
    }
    let k = k.min(n - k);
    let mut acc = Int::one();
    for i in 0..k {
        acc = acc * Int::from(n - i) / Int::from(i + 1);
    }
    acc
}

/// Exact factorial.
pub fn factorial(n: u64) -> Int {
    let mut acc = Int::one();
    for i in 2..=n {
        acc *= Int::from(i);
    }
    acc
}

/// `r^k` for rational `r` and nonnegative integer `k`.
pub fn rat_pow(r: &Rat, k: u32) -> Rat {
    let mut acc = Rat::one();
    let mut base = r.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// Render a rational as `num/den` (or plain integer when the denominator is 1).
pub fn rat_display(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Signed big integer from `i64` without intermediate conversions.
pub fn int(v: i64) -> Int {
    Int::from(v)
}

/// Rational from an integer pair.
pub fn rat(n: i64, d: i64) -> Rat {
    assert!(d != 0, "zero denominator");
    Rat::new(Int::from(n), Int::from(d))
}

pub fn is_nonzero(r: &Rat) -> bool {
    !r.is_zero()
}

/// Sign helper used when pruning partial sums.
pub fn sign_of(x: &Int) -> Sign {
    x.sign()
}
