//! Construction of a sign-changing power series with block-harmonic
//! coefficients.
//!
//! Starting from `beta_1 = 1` at the probe point `z_1`, every iteration
//!
//! 1. skips far enough ahead (`p_{k+1}`) that the geometric tail of the series
//!    cannot flip the sign of `P(z_k)`,
//! 2. takes enough further harmonic reciprocals (`r_{k+1}`) that their plain
//!    sum beats `|sum_m beta_m|`,
//! 3. moves the probe point towards one (`z_{k+1}`) until the new block, with
//!    the opposite sign, dominates everything placed so far,
//!
//! and installs the new block. All three decisions are strict inequalities
//! and are taken at the configured working precision; the integer choices are
//! re-verified after the closed-form guesses and bumped where rounding landed
//! on the wrong side.

use astro_float::BigFloat;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exponents::ExponentSpec;
use crate::precision::{signum, to_f64, Working, DEFAULT_PRECISION_BITS};
use crate::sequence::{Block, ChatterSequence};
use crate::series::{sum_terms_mp, tail_bound_mp};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuilderConfig {
    pub precision_bits: usize,
    /// Largest `j` tried when halving `delta_k` to find `delta_{k+1}`.
    pub max_halvings: u32,
    /// Upper limit for `r_k`; the harmonic sums are checked in exact rationals.
    pub max_harmonic_index: u64,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            precision_bits: DEFAULT_PRECISION_BITS,
            max_halvings: 256,
            max_harmonic_index: 200_000,
        }
    }
}

impl BuilderConfig {
    pub fn with_precision(precision_bits: usize) -> Self {
        BuilderConfig {
            precision_bits,
            ..Self::default()
        }
    }
}

/// In-flight state of the construction after `k` completed iterations.
#[derive(Debug)]
pub struct BuilderState {
    seq: ChatterSequence,
    w: Working,
    config: BuilderConfig,
    /// `ln z_k`.
    log_z: BigFloat,
    /// `sum_{m <= q_k} beta_m z_k^{alpha_m}`.
    s_z: BigFloat,
    /// `sum_{m <= q_k} beta_m`, exact.
    s_one: BigRational,
}

/// Installs block 1 (`p_1 = q_1 = r_1 = 1`, `beta_1 = 1`) at the probe `z1`.
pub fn init_builder(z1: f64, exponents: ExponentSpec, precision_bits: usize) -> Result<BuilderState> {
    BuilderState::new(z1, exponents, BuilderConfig::with_precision(precision_bits))
}

/// Runs the construction for `iterations` blocks (`K`), i.e. `K - 1` loop passes.
pub fn run(
    z1: f64,
    exponents: ExponentSpec,
    iterations: usize,
    precision_bits: usize,
) -> Result<ChatterSequence> {
    run_with(z1, exponents, iterations, BuilderConfig::with_precision(precision_bits))
}

pub fn run_with(
    z1: f64,
    exponents: ExponentSpec,
    iterations: usize,
    config: BuilderConfig,
) -> Result<ChatterSequence> {
    if iterations == 0 {
        return Err(Error::domain("K must be at least 1"));
    }
    let mut state = BuilderState::new(z1, exponents, config)?;
    while state.k() < iterations {
        state.step()?;
    }
    Ok(state.finish())
}

fn harmonic_sum(from: u64, to: u64) -> BigRational {
    (from..=to).fold(BigRational::zero(), |acc, h| {
        acc + BigRational::new(BigInt::one(), BigInt::from(h))
    })
}

impl BuilderState {
    pub fn new(z1: f64, exponents: ExponentSpec, config: BuilderConfig) -> Result<Self> {
        if !(z1 > 0.0 && z1 < 1.0) {
            return Err(Error::domain(format!("z1 = {z1} outside (0, 1)")));
        }
        exponents.validate()?;
        let mut w = Working::new(config.precision_bits)?;
        let delta = w.sub(&w.one(), &w.from_f64(z1));
        let log_z = w.ln_one_minus(&delta);
        let seq = ChatterSequence::seed(exponents, delta, config.precision_bits);
        let s_z = sum_terms_mp(seq.terms(1), seq.exponents(), &log_z, &mut w)?.value;
        Ok(BuilderState {
            seq,
            w,
            config,
            log_z,
            s_z,
            s_one: BigRational::one(),
        })
    }

    /// Number of completed iterations.
    pub fn k(&self) -> usize {
        self.seq.k()
    }

    pub fn sequence(&self) -> &ChatterSequence {
        &self.seq
    }

    pub fn config(&self) -> &BuilderConfig {
        &self.config
    }

    /// Cached `sum_{m <= q_k} beta_m z_k^{alpha_m}`.
    pub fn s_z(&self) -> &BigFloat {
        &self.s_z
    }

    pub fn s_z_f64(&self) -> f64 {
        to_f64(&self.s_z)
    }

    /// Cached `sum_{m <= q_k} beta_m`.
    pub fn s_one(&self) -> &BigRational {
        &self.s_one
    }

    /// Both cached sums recomputed from the stored blocks.
    pub fn recompute_sums(&mut self) -> Result<(BigFloat, BigRational)> {
        let k = self.k();
        let log_z = self.w.ln_one_minus(self.seq.delta(k));
        let s_z = sum_terms_mp(self.seq.terms(k), self.seq.exponents(), &log_z, &mut self.w)?.value;
        let s_one = self.seq.blocks().iter().fold(BigRational::zero(), |acc, b| {
            let part = harmonic_sum(b.h_start, b.h_end);
            if b.sign > 0 {
                acc + part
            } else {
                acc - part
            }
        });
        Ok((s_z, s_one))
    }

    fn current(&self) -> (usize, Block) {
        let k = self.k();
        (k, *self.seq.block(k))
    }

    /// `p_{k+1}`: the first position whose geometric tail at `z_k` stays below
    /// `|P_k(z_k)|`.
    ///
    /// For squares this is the closed form
    /// `max(q_k + 1, floor(sqrt(ln(delta_k |S|) / ln z_k)) + 1)`; for other
    /// exponents the smallest admissible position is found by doubling and
    /// bisection. Either way `tail_bound(z_k, p) < |S|` is re-checked.
    pub fn select_p_next(&mut self) -> Result<u64> {
        let (k, block) = self.current();
        let abs_s = self.s_z.abs();
        if abs_s.is_zero() {
            return Err(Error::Precision(format!(
                "|P_{k}(z_{k})| vanished at {} bits",
                self.config.precision_bits
            )));
        }
        let delta = self.seq.delta(k).clone();
        let floor_p = block.q + 1;
        let p = if self.seq.exponents().is_squares() {
            let num = self.w.mul(&delta, &abs_s);
            let num = self.w.ln(&num);
            let ratio = self.w.div(&num, &self.log_z);
            let candidate = if ratio.is_positive() {
                let root = self.w.sqrt(&ratio).floor();
                to_f64(&root) as u64 + 1
            } else {
                1
            };
            let mut p = candidate.max(floor_p);
            while !self.tail_below(p, &abs_s, &delta)? {
                p += 1;
            }
            p
        } else {
            self.search_p(floor_p, &abs_s, &delta)?
        };
        Ok(p)
    }

    fn tail_below(&mut self, p: u64, abs_s: &BigFloat, delta: &BigFloat) -> Result<bool> {
        let exps = self.seq.exponents().clone();
        let bound = tail_bound_mp(&self.log_z, delta, p, &exps, &mut self.w)?;
        Ok(bound < *abs_s)
    }

    fn search_p(&mut self, floor_p: u64, abs_s: &BigFloat, delta: &BigFloat) -> Result<u64> {
        if self.tail_below(floor_p, abs_s, delta)? {
            return Ok(floor_p);
        }
        let mut bad = floor_p;
        let mut step = 1u64;
        let mut good = loop {
            let cand = floor_p
                .checked_add(step)
                .ok_or_else(|| Error::Precision("position search overflowed".into()))?;
            if self.tail_below(cand, abs_s, delta)? {
                break cand;
            }
            bad = cand;
            step = step
                .checked_mul(2)
                .ok_or_else(|| Error::Precision("position search overflowed".into()))?;
        };
        while good - bad > 1 {
            let mid = bad + (good - bad) / 2;
            if self.tail_below(mid, abs_s, delta)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        Ok(good)
    }

    /// `r_{k+1} = max(r_k + 2, floor(exp(|S_1| + ln(r_k + 1))))`, bumped until
    /// `sum_{h = r_k + 1}^{r_{k+1}} 1/h > |S_1|` holds in exact arithmetic.
    pub fn select_r_next(&mut self) -> Result<u64> {
        let (_, block) = self.current();
        let r = block.h_end;
        let abs_one = self.s_one.abs();
        let s = self.w.from_rational(&abs_one);
        let ln_r = self.w.ln(&self.w.from_u64(r + 1));
        let arg = self.w.add(&s, &ln_r);
        let guess = self.w.exp(&arg).floor();
        let guess = to_f64(&guess);
        let cap = self.config.max_harmonic_index;
        if !(guess <= cap as f64) {
            return Err(Error::HarmonicCap {
                index: guess.min(u64::MAX as f64) as u64,
                cap,
            });
        }
        let mut r_next = (guess as u64).max(r + 2);
        let mut sum = harmonic_sum(r + 1, r_next);
        while sum <= abs_one {
            r_next += 1;
            if r_next > cap {
                return Err(Error::HarmonicCap { index: r_next, cap });
            }
            sum += BigRational::new(BigInt::one(), BigInt::from(r_next));
        }
        Ok(r_next)
    }

    fn candidate_block(&self, p_next: u64, r_next: u64) -> Block {
        let (k, block) = self.current();
        Block {
            sign: if (k + 1) % 2 == 1 { 1 } else { -1 },
            p: p_next,
            q: p_next + r_next - block.h_end - 1,
            h_start: block.h_end + 1,
            h_end: r_next,
        }
    }

    /// `delta_{k+1} = delta_k 2^{-j}` for the smallest `j >= 1` at which the
    /// unsigned new block outweighs `|P_k|`:
    /// `|sum_{m <= q_k} beta_m z^{alpha_m}| < sum_{h} (1/h) z^{alpha_{h + p_{k+1} - r_k - 1}}`.
    pub fn select_z_next(&mut self, p_next: u64, r_next: u64) -> Result<BigFloat> {
        let (k, block) = self.current();
        if p_next <= block.q || r_next <= block.h_end + 1 {
            return Err(Error::Invariant(format!(
                "select_z_next called with p = {p_next}, r = {r_next} after q_{k} = {}, r_{k} = {}",
                block.q, block.h_end
            )));
        }
        let mut new_block = self.candidate_block(p_next, r_next);
        new_block.sign = 1;
        let exps = self.seq.exponents().clone();
        let two = self.w.from_u64(2);
        let mut delta = self.seq.delta(k).clone();
        for _ in 0..self.config.max_halvings {
            delta = self.w.div(&delta, &two);
            let log_z = self.w.ln_one_minus(&delta);
            let lhs = sum_terms_mp(self.seq.terms(k), &exps, &log_z, &mut self.w)?.value.abs();
            let rhs = sum_terms_mp(new_block.terms(), &exps, &log_z, &mut self.w)?.value;
            if lhs < rhs {
                return Ok(delta);
            }
        }
        Err(Error::BisectionExhausted {
            steps: self.config.max_halvings,
        })
    }

    /// Appends the zero gap and block `k + 1`, moves the probe to
    /// `delta_next`, and refreshes both cached sums from scratch.
    pub fn extend_block(&mut self, p_next: u64, r_next: u64, delta_next: BigFloat) -> Result<()> {
        let (k, _) = self.current();
        let block = self.candidate_block(p_next, r_next);
        if !(delta_next.is_positive() && delta_next < *self.seq.delta(k)) {
            return Err(Error::Invariant(format!(
                "delta_{} must lie in (0, delta_{k})",
                k + 1
            )));
        }
        self.seq.push(block, delta_next);
        let (s_z, s_one) = self.recompute_sums()?;
        self.log_z = self.w.ln_one_minus(self.seq.delta(k + 1));
        self.s_z = s_z;
        self.s_one = s_one;
        if signum(&self.s_z) != block.sign {
            return Err(Error::Invariant(format!(
                "P_{}(z_{}) has sign {} instead of {}",
                k + 1,
                k + 1,
                signum(&self.s_z),
                block.sign
            )));
        }
        Ok(())
    }

    /// One full iteration `k -> k + 1`.
    pub fn step(&mut self) -> Result<()> {
        let k = self.k();
        let inner = |state: &mut Self| -> Result<()> {
            let p = state.select_p_next()?;
            let r = state.select_r_next()?;
            let delta = state.select_z_next(p, r)?;
            state.extend_block(p, r, delta)
        };
        inner(self).map_err(|e| e.at_iteration(k))
    }

    pub fn finish(self) -> ChatterSequence {
        self.seq
    }
}
