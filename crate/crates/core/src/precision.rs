//! Working-precision arithmetic.
//!
//! The builder compares quantities that span dozens of orders of magnitude, so
//! every decision it takes is made on [`BigFloat`] values at a configurable
//! number of mantissa bits. Bulk evaluation (curves, traces, root scans) runs
//! in `f64` with Neumaier-compensated summation instead; see [`NeumaierSum`].

use astro_float::{BigFloat, Consts, Exponent, RoundingMode, Sign};
use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION_BITS: usize = 128;
pub const MIN_PRECISION_BITS: usize = 64;

const RM: RoundingMode = RoundingMode::ToEven;

/// Threshold below which `ln(1 - delta)` is summed from its Taylor series.
const LOG1P_SERIES_THRESHOLD: f64 = 1.0 / 1024.0;

/// Arithmetic context at a fixed mantissa width.
pub struct Working {
    bits: usize,
    consts: Consts,
}

impl std::fmt::Debug for Working {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Working").field("bits", &self.bits).finish()
    }
}

impl Working {
    pub fn new(bits: usize) -> Result<Self> {
        if bits < MIN_PRECISION_BITS {
            return Err(Error::domain(format!(
                "precision_bits must be at least {MIN_PRECISION_BITS}, got {bits}"
            )));
        }
        let consts = Consts::new()
            .map_err(|e| Error::Precision(format!("cannot allocate constant cache: {e:?}")))?;
        Ok(Working { bits, consts })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn from_f64(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.bits)
    }

    pub fn from_u64(&self, v: u64) -> BigFloat {
        BigFloat::from_u64(v, self.bits)
    }

    pub fn zero(&self) -> BigFloat {
        BigFloat::from_u8(0, self.bits)
    }

    pub fn one(&self) -> BigFloat {
        BigFloat::from_u8(1, self.bits)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.bits, RM)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.bits, RM, &mut self.consts)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.bits, RM, &mut self.consts)
    }

    /// `ln(1 - delta)` for `delta` in `(0, 1)`, accurate relative to the
    /// result even when `delta` is far below the working epsilon.
    pub fn ln_one_minus(&mut self, delta: &BigFloat) -> BigFloat {
        if to_f64(delta) < LOG1P_SERIES_THRESHOLD {
            // -sum delta^n / n; each term shrinks by at least 2^10.
            let cutoff = self.bits as i64 + 8;
            let mut power = delta.clone();
            let mut acc = self.zero();
            let mut n: u64 = 1;
            loop {
                let term = self.div(&power, &self.from_u64(n));
                acc = self.add(&acc, &term);
                let (Some(te), Some(ae)) = (term.exponent(), acc.exponent()) else {
                    break;
                };
                if (ae as i64) - (te as i64) > cutoff {
                    break;
                }
                power = self.mul(&power, delta);
                n += 1;
            }
            acc.neg()
        } else {
            let guard = self.bits + 64;
            let arg = self.one().sub(delta, guard, RM);
            let mut v = arg.ln(guard, RM, &mut self.consts);
            v.set_precision(self.bits, RM).ok();
            v
        }
    }

    /// `z^alpha` given `ln z`.
    pub fn pow_from_log(&mut self, log_z: &BigFloat, alpha: u64) -> BigFloat {
        let arg = self.mul(log_z, &self.from_u64(alpha));
        self.exp(&arg)
    }

    /// Correctly rounded conversion of an exact rational.
    pub fn from_rational(&self, r: &BigRational) -> BigFloat {
        let sign = if r.is_negative() { Sign::Neg } else { Sign::Pos };
        let num = r.numer().magnitude().clone();
        let den = r.denom().magnitude().clone();
        round_quotient(&num, &den, sign, self.bits)
    }

    /// Parses a decimal such as `1.5625e-2` exactly, then rounds once to the
    /// working precision.
    pub fn parse_decimal(&self, s: &str) -> Result<BigFloat> {
        let bad = || Error::Document(format!("not a finite decimal: {s:?}"));
        let t = s.trim();
        let (neg, t) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (mantissa, exp10) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| bad())?),
            None => (t, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits: String = [int_part, frac_part].concat();
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let n = BigUint::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
        let exp10 = exp10 - frac_part.len() as i64;
        if n.is_zero() {
            return Ok(self.zero());
        }
        let scale = BigUint::from(10u8).pow(exp10.unsigned_abs() as u32);
        let (num, den) = if exp10 >= 0 {
            (n * scale, BigUint::one())
        } else {
            (n, scale)
        };
        let sign = if neg { Sign::Neg } else { Sign::Pos };
        Ok(round_quotient(&num, &den, sign, self.bits))
    }
}

fn round_quotient(num: &BigUint, den: &BigUint, sign: Sign, bits: usize) -> BigFloat {
    if num.is_zero() {
        return BigFloat::from_u8(0, bits);
    }
    let e0 = num.bits() as i64 - den.bits() as i64 - bits as i64 - 2;
    let (scaled_num, scaled_den) = if e0 < 0 {
        (num << (-e0) as usize, den.clone())
    } else {
        (num.clone(), den << e0 as usize)
    };
    let (mut q, rem) = scaled_num.div_rem(&scaled_den);
    let sticky = !rem.is_zero();
    let excess = q.bits() as i64 - bits as i64;
    let mut e = e0;
    if excess > 0 {
        let mask = (BigUint::one() << excess as usize) - BigUint::one();
        let low = &q & &mask;
        let half = BigUint::one() << (excess - 1) as usize;
        q >>= excess as usize;
        e += excess;
        let odd = q.bit(0);
        if low > half || (low == half && (sticky || odd)) {
            q += BigUint::one();
            if q.bits() as i64 > bits as i64 {
                q >>= 1;
                e += 1;
            }
        }
    }
    // Left-align the mantissa in whole words: value = 0.m * 2^(e + 64 n).
    let words = bits.div_ceil(64);
    let shift = words as i64 * 64 - q.bits() as i64;
    let q = q << shift as usize;
    let e = e - shift;
    let mut m: Vec<u64> = q.to_u64_digits();
    m.resize(words, 0);
    let mut v = BigFloat::from_words(&m, sign, (e + 64 * words as i64) as Exponent);
    v.set_precision(bits, RM).ok();
    v
}

/// Exact decimal expansion of a working-precision value, in scientific
/// notation with trailing zeros removed. Every binary fraction has a finite
/// decimal expansion, so [`Working::parse_decimal`] recovers the value
/// bit-for-bit.
pub fn exact_decimal(v: &BigFloat) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_inf() {
        return if v.is_inf_neg() { "-Inf".into() } else { "Inf".into() };
    }
    let Some((words, _, sign, exponent, _)) = v.as_raw_parts() else {
        return "NaN".into();
    };
    let m = BigUint::from_slice(
        &words
            .iter()
            .flat_map(|w| [*w as u32, (*w >> 32) as u32])
            .collect::<Vec<u32>>(),
    );
    if m.is_zero() {
        return "0".into();
    }
    let s = exponent as i64 - 64 * words.len() as i64;
    let (int, mut exp10) = if s >= 0 {
        (m << s as usize, 0i64)
    } else {
        (m * BigUint::from(5u8).pow((-s) as u32), s)
    };
    let mut digits = int.to_string();
    while digits.len() > 1 && digits.ends_with('0') {
        digits.pop();
        exp10 += 1;
    }
    let sci = exp10 + digits.len() as i64 - 1;
    let mut out = String::new();
    if matches!(sign, Sign::Neg) {
        out.push('-');
    }
    out.push_str(&digits[..1]);
    if digits.len() > 1 {
        out.push('.');
        out.push_str(&digits[1..]);
    }
    out.push_str(&format!("e{sci}"));
    out
}

/// Nearest `f64` to a working-precision value (flushes to zero or infinity
/// outside the `f64` range).
pub fn to_f64(v: &BigFloat) -> f64 {
    if v.is_nan() {
        return f64::NAN;
    }
    if v.is_inf_pos() {
        return f64::INFINITY;
    }
    if v.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let Some((words, _, sign, exponent, _)) = v.as_raw_parts() else {
        return f64::NAN;
    };
    let n = words.len();
    if n == 0 || words.iter().all(|&w| w == 0) {
        return 0.0;
    }
    let hi = words[n - 1] as f64;
    let lo = if n > 1 { words[n - 2] as f64 } else { 0.0 };
    let mantissa = hi + lo * 2f64.powi(-64);
    let magnitude = ldexp(mantissa, exponent as i64 - 64);
    match sign {
        Sign::Neg => -magnitude,
        Sign::Pos => magnitude,
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// Sign of a working-precision value: -1, 0 or +1.
pub fn signum(v: &BigFloat) -> i8 {
    if v.is_zero() {
        0
    } else if v.is_negative() {
        -1
    } else {
        1
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
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

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}
