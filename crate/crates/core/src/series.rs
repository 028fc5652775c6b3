//! Evaluation of the partial sums `P_L(z) = sum_{m <= q_L} beta_m z^{alpha_m}`.
//!
//! Probe points live extremely close to one, so every evaluation goes
//! through `ln z` (obtained as `ln_1p(-delta)`) and forms `z^alpha` as
//! `exp(alpha ln z)`. Only the `r_L` nonzero terms are visited.

use astro_float::BigFloat;

use crate::error::{Error, Result};
use crate::exponents::ExponentSpec;
use crate::precision::{signum, to_f64, NeumaierSum, Working};
use crate::sequence::{ChatterSequence, Term};

/// Relative bracket width at which root refinement stops.
pub const ROOT_RELATIVE_WIDTH: f64 = 1e-14;

/// A partial-sum value together with the sum of the absolute values of its
/// terms (the scale of the rounding error).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub abs_sum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpEvaluation {
    pub value: BigFloat,
    pub abs_sum: BigFloat,
}

pub(crate) fn sum_terms<I>(terms: I, exponents: &ExponentSpec, log_z: f64) -> Result<Evaluation>
where
    I: IntoIterator<Item = Term>,
{
    let mut value = NeumaierSum::new();
    let mut abs_sum = NeumaierSum::new();
    for t in terms {
        let alpha = exponents.alpha(t.m)?;
        let x = t.coefficient() * (alpha as f64 * log_z).exp();
        value.add(x);
        abs_sum.add(x.abs());
    }
    Ok(Evaluation {
        value: value.value(),
        abs_sum: abs_sum.value(),
    })
}

pub(crate) fn sum_terms_mp<I>(
    terms: I,
    exponents: &ExponentSpec,
    log_z: &BigFloat,
    w: &mut Working,
) -> Result<MpEvaluation>
where
    I: IntoIterator<Item = Term>,
{
    let mut value = w.zero();
    let mut abs_sum = w.zero();
    for t in terms {
        let alpha = exponents.alpha(t.m)?;
        let power = w.pow_from_log(log_z, alpha);
        let mut x = w.div(&power, &w.from_u64(t.harmonic));
        abs_sum = w.add(&abs_sum, &x);
        if t.sign < 0 {
            x = x.neg();
        }
        value = w.add(&value, &x);
    }
    Ok(MpEvaluation { value, abs_sum })
}

/// `P_level` evaluated from `ln z <= 0`. `ln z = 0` gives the polynomial's
/// value at one, `sum_m beta_m`.
pub fn eval_at_log_z(seq: &ChatterSequence, level: usize, log_z: f64) -> Result<Evaluation> {
    seq.check_level(level)?;
    if !(log_z <= 0.0) {
        return Err(Error::domain(format!("ln z = {log_z} must be <= 0")));
    }
    sum_terms(seq.terms(level), seq.exponents(), log_z)
}

/// `P_level(z)` for `z` in `[0, 1)`.
pub fn eval_partial_sum(seq: &ChatterSequence, level: usize, z: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::domain(format!("z = {z} outside [0, 1)")));
    }
    if z == 0.0 {
        seq.check_level(level)?;
        return Ok(0.0);
    }
    Ok(eval_at_log_z(seq, level, z.ln())?.value)
}

/// `P_level(1 - delta)` for `delta` in `(0, 1]`.
pub fn eval_partial_sum_at_delta(seq: &ChatterSequence, level: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta = {delta} outside (0, 1]")));
    }
    Ok(eval_at_log_z(seq, level, (-delta).ln_1p())?.value)
}

/// `P_level(1 - delta)` at working precision.
pub fn eval_partial_sum_mp(
    seq: &ChatterSequence,
    level: usize,
    delta: &BigFloat,
    w: &mut Working,
) -> Result<MpEvaluation> {
    seq.check_level(level)?;
    let d = to_f64(delta);
    if !(delta.is_positive() && d < 1.0) {
        return Err(Error::domain(format!("delta = {d:e} outside (0, 1)")));
    }
    let log_z = w.ln_one_minus(delta);
    sum_terms_mp(seq.terms(level), seq.exponents(), &log_z, w)
}

/// Upper bound for `sum_{m >= p} z^{alpha_m}`: `z^{alpha_p} / (1 - z)`.
///
/// Valid because both exponent families are strictly increasing integer
/// sequences, so `alpha_m >= alpha_p + (m - p)`.
pub fn tail_bound(z: f64, p: u64, exponents: &ExponentSpec) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::domain(format!("z = {z} outside (0, 1)")));
    }
    let alpha = exponents.alpha(p)?;
    Ok((alpha as f64 * z.ln()).exp() / (1.0 - z))
}

/// [`tail_bound`] with the point given as `delta = 1 - z`.
pub fn tail_bound_at_delta(delta: f64, p: u64, exponents: &ExponentSpec) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta = {delta} outside (0, 1)")));
    }
    let alpha = exponents.alpha(p)?;
    Ok((alpha as f64 * (-delta).ln_1p()).exp() / delta)
}

pub(crate) fn tail_bound_mp(
    log_z: &BigFloat,
    delta: &BigFloat,
    p: u64,
    exponents: &ExponentSpec,
    w: &mut Working,
) -> Result<BigFloat> {
    let alpha = exponents.alpha(p)?;
    let power = w.pow_from_log(log_z, alpha);
    Ok(w.div(&power, delta))
}

/// Result of checking the alternating sign law `sign P_L(z_k) = (-1)^{k+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignReport {
    pub level: usize,
    pub ok: bool,
    /// `P_L(z_k)` for `k = 1..=L`.
    pub values: Vec<f64>,
    pub noise_floors: Vec<f64>,
}

impl SignReport {
    pub fn expected_sign(k: usize) -> i8 {
        if k % 2 == 1 {
            1
        } else {
            -1
        }
    }
}

/// Evaluates `P_level` at every probe point `z_1..z_level` at the sequence's
/// working precision and checks that the signs alternate starting with `+`.
///
/// A value whose magnitude does not clear the noise floor
/// `2^{3 - bits} * sum |terms|` is reported as indeterminate.
pub fn verify_sign_pattern(seq: &ChatterSequence, level: usize) -> Result<SignReport> {
    seq.check_level(level)?;
    let mut w = Working::new(seq.precision_bits())?;
    let scale = 2f64.powi(3 - seq.precision_bits() as i32);
    let mut values = Vec::with_capacity(level);
    let mut noise_floors = Vec::with_capacity(level);
    let mut ok = true;
    for k in 1..=level {
        let ev = eval_partial_sum_mp(seq, level, seq.delta(k), &mut w)?;
        let value = to_f64(&ev.value);
        let floor = scale * to_f64(&ev.abs_sum);
        if !(value.abs() > floor) {
            return Err(Error::IndeterminateSign { level, k, value });
        }
        ok &= signum(&ev.value) == SignReport::expected_sign(k);
        values.push(value);
        noise_floors.push(floor);
    }
    Ok(SignReport {
        level,
        ok,
        values,
        noise_floors,
    })
}

pub(crate) fn abs_pow(x: f64, gamma: f64) -> f64 {
    if gamma.fract() == 0.0 && gamma <= i32::MAX as f64 {
        x.abs().powi(gamma as i32)
    } else {
        x.abs().powf(gamma)
    }
}

/// `sum_{m <= q_k} |beta_m|^gamma`, read off the block structure.
pub fn coefficient_power_sum(seq: &ChatterSequence, gamma: f64, k: usize) -> Result<f64> {
    seq.check_level(k)?;
    if !(gamma >= 1.0) {
        return Err(Error::domain(format!("gamma = {gamma} must be >= 1")));
    }
    Ok(seq
        .terms(k)
        .map(|t| abs_pow(t.coefficient(), gamma))
        .collect::<NeumaierSum>()
        .value())
}

/// A sign change of `P_L`, located in `delta = 1 - z` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub delta: f64,
    /// Final bracket `(delta_lo, delta_hi)` with opposite signs at its ends.
    pub bracket: (f64, f64),
    /// 0 for `(0, z_1)`, `k` for `(z_k, z_{k+1})`, `L` for `(z_L, 1)`.
    pub interval: usize,
}

impl Root {
    pub fn z(&self) -> f64 {
        1.0 - self.delta
    }

    pub fn log_z(&self) -> f64 {
        (-self.delta).ln_1p()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootScan {
    pub level: usize,
    /// Sorted by increasing `z`.
    pub roots: Vec<Root>,
    /// Always set: crossings of even multiplicity, or pairs of roots between
    /// two samples, are invisible to a sign scan.
    pub may_miss_even_crossings: bool,
}

/// Locates the sign changes of `P_level` on `(0, 1)`.
///
/// Each of the intervals `(0, z_1)`, `(z_k, z_{k+1})` for `k < level`, and
/// `(z_level, 1)` is sampled uniformly in `s = -ln(1 - z)`; every bracketed
/// sign change is refined by bisection in `delta` down to a relative width of
/// [`ROOT_RELATIVE_WIDTH`]. Beyond `z_level` the scan stops once
/// `delta * alpha_{q_level}` is below `1e-6`, where `P_level` has settled at its
/// value at one.
pub fn find_sign_changes(
    seq: &ChatterSequence,
    level: usize,
    samples_per_interval: usize,
) -> Result<RootScan> {
    seq.check_level(level)?;
    if samples_per_interval < 2 {
        return Err(Error::domain("samples_per_interval must be at least 2"));
    }
    let eval = |delta: f64| -> Result<f64> {
        Ok(sum_terms(seq.terms(level), seq.exponents(), (-delta).ln_1p())?.value)
    };

    let s_of = |k: usize| -seq.delta_f64(k).ln();
    let last_alpha = seq.exponents().alpha(seq.q(level))? as f64;
    let s_end = s_of(level).max(last_alpha.ln()) + 6.0 * std::f64::consts::LN_10;

    let mut roots = Vec::new();
    for interval in 0..=level {
        let (s_a, s_b) = match interval {
            0 => (0.0, s_of(1)),
            k if k < level => (s_of(k), s_of(k + 1)),
            _ => (s_of(level), s_end),
        };
        let n = samples_per_interval;
        let grid: Vec<f64> = if interval == 0 {
            (1..=n).map(|i| s_b * i as f64 / n as f64).collect()
        } else {
            (0..n)
                .map(|i| s_a + (s_b - s_a) * i as f64 / (n - 1) as f64)
                .collect()
        };
        let mut prev: Option<(f64, f64)> = None;
        for s in grid {
            let delta = (-s).exp();
            let v = eval(delta)?;
            if let Some((d0, v0)) = prev {
                if v0 * v < 0.0 || (v == 0.0 && v0 != 0.0) {
                    roots.push(refine(&eval, d0, v0, delta, v, interval)?);
                }
            }
            prev = Some((delta, v));
        }
    }
    roots.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    Ok(RootScan {
        level,
        roots,
        may_miss_even_crossings: true,
    })
}

fn refine<F>(eval: &F, d_a: f64, v_a: f64, d_b: f64, v_b: f64, interval: usize) -> Result<Root>
where
    F: Fn(f64) -> Result<f64>,
{
    // d_a > d_b (sampling runs towards z = 1).
    let (mut hi, mut v_hi, mut lo) = (d_a, v_a, d_b);
    if v_b == 0.0 {
        return Ok(Root {
            delta: d_b,
            bracket: (d_b, d_b),
            interval,
        });
    }
    while (hi - lo) > ROOT_RELATIVE_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = eval(mid)?;
        if v == 0.0 {
            return Ok(Root {
                delta: mid,
                bracket: (mid, mid),
                interval,
            });
        }
        if (v > 0.0) == (v_hi > 0.0) {
            hi = mid;
            v_hi = v;
        } else {
            lo = mid;
        }
    }
    Ok(Root {
        delta: 0.5 * (lo + hi),
        bracket: (lo, hi),
        interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::Block;

    fn table_prefix() -> ChatterSequence {
        let w = Working::new(128).unwrap();
        ChatterSequence::from_parts(
            ExponentSpec::Squares,
            vec![
                Block { sign: 1, p: 1, q: 1, h_start: 1, h_end: 1 },
                Block { sign: -1, p: 2, q: 5, h_start: 2, h_end: 5 },
            ],
            vec![w.from_f64(0.5), w.from_f64(0.015625)],
            128,
        )
        .unwrap()
    }

    #[test]
    fn first_level_is_identity() {
        let seq = table_prefix();
        assert_eq!(eval_partial_sum(&seq, 1, 0.5).unwrap(), 0.5);
        assert_eq!(eval_partial_sum(&seq, 2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let seq = table_prefix();
        assert!(eval_partial_sum(&seq, 1, 1.0).is_err());
        assert!(eval_partial_sum(&seq, 1, -0.1).is_err());
        assert!(eval_partial_sum(&seq, 3, 0.5).is_err());
        assert!(eval_partial_sum_at_delta(&seq, 1, 0.0).is_err());
        assert!(coefficient_power_sum(&seq, 0.5, 1).is_err());
        assert!(find_sign_changes(&seq, 2, 1).is_err());
    }

    #[test]
    fn tail_bound_examples() {
        assert_eq!(tail_bound(0.5, 1, &ExponentSpec::Squares).unwrap(), 1.0);
        assert_eq!(tail_bound(0.5, 3, &ExponentSpec::Squares).unwrap(), 2f64.powi(-8));
        assert!(tail_bound(1e-300, 2, &ExponentSpec::Squares).unwrap() < 1e-300);
        // Direct summation of the first 30 terms of sum 0.5^{m^2}.
        let tail: f64 = (1..=30).map(|m| 0.5f64.powi(m * m)).sum();
        assert!((tail - 0.564_468_5).abs() < 1e-6);
        assert!(tail_bound(0.5, 1, &ExponentSpec::Squares).unwrap() >= tail);
    }

    #[test]
    fn level_two_is_negative_at_second_probe() {
        let seq = table_prefix();
        let v = eval_partial_sum_at_delta(&seq, 2, 0.015625).unwrap();
        assert!(v < 0.0);
        let report = verify_sign_pattern(&seq, 2).unwrap();
        assert!(report.ok);
    }

    #[test]
    fn power_sum_small_cases() {
        let seq = table_prefix();
        assert_eq!(coefficient_power_sum(&seq, 1.0, 1).unwrap(), 1.0);
        let expected = 1.0 + 0.25 + 1.0 / 9.0 + 1.0 / 16.0 + 1.0 / 25.0;
        assert!((coefficient_power_sum(&seq, 2.0, 2).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn root_between_first_two_probes() {
        let seq = table_prefix();
        let scan = find_sign_changes(&seq, 2, 64).unwrap();
        assert!(scan
            .roots
            .iter()
            .any(|r| r.z() > 0.5 && r.z() < 0.984375 && r.interval == 1));
        let single = find_sign_changes(&seq, 1, 64).unwrap();
        assert!(single.roots.is_empty());
    }
}
