//! Cosine-series machinery for the heat equation on `(0, 1)` with Neumann
//! boundary conditions.
//!
//! Times close to the horizon are carried as time-to-go `theta = T - t`, so
//! nothing here ever subtracts two nearly equal times.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::NeumaierSum;
use crate::sequence::ChatterSequence;
use crate::series::eval_at_log_z;

pub const PI_SQUARED: f64 = PI * PI;

/// Largest mode count [`mode_cutoff`] will hand out.
pub const MAX_MODES: u64 = 100_000;

/// `cos(n pi x)` with the argument reduced modulo `2` before scaling, so that
/// large `n` keeps full accuracy and `x = 0, 1` give exactly `+-1`.
pub fn cos_mode(n: u64, x: f64) -> f64 {
    let r = (n as f64 * x).rem_euclid(2.0);
    if r == 0.0 {
        1.0
    } else if r == 1.0 {
        -1.0
    } else {
        (PI * r).cos()
    }
}

/// One cosine mode `a_n cos(n pi x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub n: u64,
    pub a_n: f64,
}

/// `a0 + sum_n a_n cos(n pi x)` with sparse, strictly increasing `n >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineSeries {
    pub a0: f64,
    pub modes: Vec<Mode>,
    /// Largest admissible mode number; modes above it are absent by
    /// construction, not merely zero.
    pub cutoff: u64,
}

impl CosineSeries {
    pub fn new(a0: f64, modes: Vec<Mode>, cutoff: u64) -> Result<Self> {
        let s = CosineSeries { a0, modes, cutoff };
        s.validate()?;
        Ok(s)
    }

    pub fn zero() -> Self {
        CosineSeries {
            a0: 0.0,
            modes: Vec::new(),
            cutoff: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a0.is_finite() {
            return Err(Error::domain("a0 is not finite"));
        }
        let mut prev = 0;
        for m in &self.modes {
            if m.n <= prev || m.n > self.cutoff {
                return Err(Error::domain(format!(
                    "mode {} out of order or beyond cutoff {}",
                    m.n, self.cutoff
                )));
            }
            if !m.a_n.is_finite() {
                return Err(Error::domain(format!("a_{} is not finite", m.n)));
            }
            prev = m.n;
        }
        Ok(())
    }

    /// Coefficient of `cos(n pi x)`, `a0` for `n = 0`.
    pub fn coefficient(&self, n: u64) -> f64 {
        if n == 0 {
            return self.a0;
        }
        match self.modes.binary_search_by_key(&n, |m| m.n) {
            Ok(i) => self.modes[i].a_n,
            Err(_) => 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut s = NeumaierSum::new();
        s.add(self.a0);
        for m in &self.modes {
            s.add(m.a_n * cos_mode(m.n, x));
        }
        s.value()
    }

    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Samples on `points` uniformly spaced nodes of `[0, 1]`.
    pub fn sample_uniform(&self, points: usize) -> Vec<(f64, f64)> {
        uniform_grid(points)
            .into_iter()
            .map(|x| (x, self.eval(x)))
            .collect()
    }

    /// Squared `L^2(0, 1)` norm, `a0^2 + sum a_n^2 / 2`.
    pub fn norm_squared(&self) -> f64 {
        let s: NeumaierSum = self.modes.iter().map(|m| m.a_n * m.a_n).collect();
        self.a0 * self.a0 + 0.5 * s.value()
    }

    /// The heat flow applied for time `theta`: `a_n -> a_n exp(-n^2 pi^2 theta)`.
    pub fn evolved(&self, theta: f64) -> CosineSeries {
        let log_decay = -(PI_SQUARED * theta);
        CosineSeries {
            a0: self.a0,
            modes: self
                .modes
                .iter()
                .map(|m| Mode {
                    n: m.n,
                    a_n: m.a_n * ((m.n as f64 * m.n as f64) * log_decay).exp(),
                })
                .collect(),
            cutoff: self.cutoff,
        }
    }

    /// Coefficientwise difference.
    pub fn sub(&self, other: &CosineSeries) -> CosineSeries {
        let mut modes = Vec::with_capacity(self.modes.len().max(other.modes.len()));
        let (mut i, mut j) = (0, 0);
        while i < self.modes.len() || j < other.modes.len() {
            let a = self.modes.get(i);
            let b = other.modes.get(j);
            let mode = match (a, b) {
                (Some(a), Some(b)) if a.n == b.n => {
                    i += 1;
                    j += 1;
                    Mode { n: a.n, a_n: a.a_n - b.a_n }
                }
                (Some(a), Some(b)) if a.n < b.n => {
                    i += 1;
                    *a
                }
                (Some(a), None) => {
                    i += 1;
                    *a
                }
                (_, Some(b)) => {
                    j += 1;
                    Mode { n: b.n, a_n: -b.a_n }
                }
                (None, None) => unreachable!(),
            };
            modes.push(mode);
        }
        CosineSeries {
            a0: self.a0 - other.a0,
            modes,
            cutoff: self.cutoff.max(other.cutoff),
        }
    }
}

/// `points` equally spaced nodes from 0 to 1 inclusive.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// One constant piece of a bang-bang control, in time-to-go coordinates:
/// the piece covers `t` in `[T - theta_start, T - theta_end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub sign: i8,
    pub theta_start: f64,
    pub theta_end: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.theta_start - self.theta_end
    }
}

/// A control with values in `{-1, +1}`, right-continuous in `t`.
///
/// Switches are stored as time-to-go, strictly decreasing (so the
/// corresponding times increase).
#[derive(Clone, Debug, PartialEq)]
pub struct BangBangControl {
    horizon: f64,
    initial_sign: i8,
    switch_time_to_go: Vec<f64>,
}

impl BangBangControl {
    /// From switch times `t` in `(0, T)`, strictly increasing.
    pub fn new(horizon: f64, initial_sign: i8, switch_times: &[f64]) -> Result<Self> {
        let thetas = switch_times.iter().map(|t| horizon - t).collect();
        Self::from_time_to_go(horizon, initial_sign, thetas)
    }

    /// From switch time-to-go values in `(0, T)`, strictly decreasing.
    pub fn from_time_to_go(horizon: f64, initial_sign: i8, switch_time_to_go: Vec<f64>) -> Result<Self> {
        let c = BangBangControl {
            horizon,
            initial_sign,
            switch_time_to_go,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn constant(horizon: f64, sign: i8) -> Result<Self> {
        Self::from_time_to_go(horizon, sign, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Control(format!("horizon T = {} must be positive", self.horizon)));
        }
        if self.initial_sign != 1 && self.initial_sign != -1 {
            return Err(Error::Control(format!("initial sign {} is not +-1", self.initial_sign)));
        }
        let mut prev = self.horizon;
        for &theta in &self.switch_time_to_go {
            if !(theta > 0.0 && theta < prev) {
                return Err(Error::Control(format!(
                    "switch at time-to-go {theta:e} is not strictly inside (0, T) and ordered"
                )));
            }
            prev = theta;
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial_sign(&self) -> i8 {
        self.initial_sign
    }

    pub fn switch_time_to_go(&self) -> &[f64] {
        &self.switch_time_to_go
    }

    /// Switch times `t = T - theta`, increasing.
    pub fn switch_times(&self) -> Vec<f64> {
        self.switch_time_to_go.iter().map(|th| self.horizon - th).collect()
    }

    pub fn switch_count(&self) -> usize {
        self.switch_time_to_go.len()
    }

    pub fn final_sign(&self) -> i8 {
        if self.switch_count().is_multiple_of(2) {
            self.initial_sign
        } else {
            -self.initial_sign
        }
    }

    /// Value at time-to-go `theta`; at a switch the later value applies.
    pub fn value_at_time_to_go(&self, theta: f64) -> i8 {
        let passed = self.switch_time_to_go.partition_point(|&s| s >= theta);
        if passed % 2 == 0 {
            self.initial_sign
        } else {
            -self.initial_sign
        }
    }

    pub fn value_at(&self, t: f64) -> i8 {
        self.value_at_time_to_go(self.horizon - t)
    }

    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(self.switch_count() + 1);
        let mut start = self.horizon;
        let mut sign = self.initial_sign;
        for &theta in &self.switch_time_to_go {
            out.push(Segment {
                sign,
                theta_start: start,
                theta_end: theta,
            });
            start = theta;
            sign = -sign;
        }
        out.push(Segment {
            sign,
            theta_start: start,
            theta_end: 0.0,
        });
        out
    }

    /// `int_0^T u(t) dt`.
    pub fn signed_measure(&self) -> f64 {
        self.segments()
            .iter()
            .map(|s| f64::from(s.sign) * s.duration())
            .collect::<NeumaierSum>()
            .value()
    }

    pub fn to_document(&self) -> ControlDocument {
        ControlDocument {
            horizon: self.horizon,
            initial_sign: self.initial_sign,
            switch_times: self.switch_times().iter().map(|t| format!("{t:e}")).collect(),
            switch_time_to_go: self.switch_time_to_go.iter().map(|t| format!("{t:e}")).collect(),
        }
    }

    pub fn from_document(doc: &ControlDocument) -> Result<Self> {
        let thetas = doc
            .switch_time_to_go
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Document(format!("switch time-to-go {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_time_to_go(doc.horizon, doc.initial_sign, thetas)
    }
}

/// JSON form of a [`BangBangControl`]. Times are decimal strings that round
/// trip exactly; `switch_time_to_go` is authoritative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlDocument {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub initial_sign: i8,
    pub switch_times: Vec<String>,
    pub switch_time_to_go: Vec<String>,
}

/// `w_L(x) = sum_{m <= q_L} (-1)^m beta_m cos(m pi x)`.
pub fn terminal_datum_w(seq: &ChatterSequence, level: usize) -> Result<CosineSeries> {
    seq.check_level(level)?;
    let modes = seq
        .terms(level)
        .map(|t| {
            let b = t.coefficient();
            Mode {
                n: t.m,
                a_n: if t.m % 2 == 0 { b } else { -b },
            }
        })
        .collect();
    Ok(CosineSeries {
        a0: 0.0,
        modes,
        cutoff: seq.q(level),
    })
}

/// The time at which the adjoint trace equals `P_L(z_k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchingSample {
    pub k: usize,
    /// `-ln(z_k) / pi^2`.
    pub time_to_go: f64,
    pub t: f64,
    /// `t` lies in `(0, T)`.
    pub interior: bool,
}

/// `t_k = T + ln(z_k) / pi^2` for `k = 1..=level`.
pub fn switching_samples(seq: &ChatterSequence, level: usize, horizon: f64) -> Result<Vec<SwitchingSample>> {
    seq.check_level(level)?;
    if !(horizon > 0.0) {
        return Err(Error::domain(format!("T = {horizon} must be positive")));
    }
    Ok((1..=level)
        .map(|k| {
            let time_to_go = -seq.log_z_f64(k) / PI_SQUARED;
            let t = horizon - time_to_go;
            SwitchingSample {
                k,
                time_to_go,
                t,
                interior: time_to_go < horizon && t > 0.0,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    /// Bound on the neglected modes `n > N`.
    pub truncation_bound: f64,
}

/// Neumann heat kernel `1 + 2 sum_{n <= N} cos(n pi x) cos(n pi xi) e^{-n^2 pi^2 s}`.
pub fn greens_kernel(x: f64, xi: f64, s: f64, modes: u64) -> Result<KernelValue> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("kernel time s = {s} must be positive")));
    }
    let mut sum = NeumaierSum::new();
    sum.add(1.0);
    for n in 1..=modes {
        let decay = (-(n as f64 * n as f64) * PI_SQUARED * s).exp();
        if decay == 0.0 {
            break;
        }
        sum.add(2.0 * cos_mode(n, x) * cos_mode(n, xi) * decay);
    }
    let nf = modes as f64 + 1.0;
    let truncation_bound =
        2.0 * (-(nf * nf) * PI_SQUARED * s).exp() / -(-(2.0 * nf + 1.0) * PI_SQUARED * s).exp_m1();
    Ok(KernelValue {
        value: sum.value(),
        truncation_bound,
    })
}

fn require_squares(seq: &ChatterSequence) -> Result<()> {
    if seq.exponents().is_squares() {
        Ok(())
    } else {
        Err(Error::domain(
            "the heat-equation interpretation needs alpha_m = m^2",
        ))
    }
}

/// `psi(T - theta, 1) = P_L(exp(-pi^2 theta))` for `theta > 0`.
pub fn adjoint_trace_time_to_go(seq: &ChatterSequence, level: usize, theta: f64) -> Result<f64> {
    require_squares(seq)?;
    if !(theta > 0.0) {
        return Err(Error::domain(format!("time-to-go {theta:e} must be positive")));
    }
    Ok(eval_at_log_z(seq, level, -(PI_SQUARED * theta))?.value)
}

/// `psi(t, 1)` for `0 <= t < T`.
pub fn adjoint_trace(seq: &ChatterSequence, level: usize, horizon: f64, t: f64) -> Result<f64> {
    if !(0.0..horizon).contains(&t) {
        return Err(Error::domain(format!("t = {t} outside [0, {horizon})")));
    }
    adjoint_trace_time_to_go(seq, level, horizon - t)
}

/// `psi(t, x_i)` for the truncated terminal datum.
pub fn adjoint_state(seq: &ChatterSequence, level: usize, horizon: f64, t: f64, xs: &[f64]) -> Result<Vec<f64>> {
    if !(0.0..horizon).contains(&t) {
        return Err(Error::domain(format!("t = {t} outside [0, {horizon})")));
    }
    adjoint_state_time_to_go(seq, level, horizon - t, xs)
}

pub fn adjoint_state_time_to_go(seq: &ChatterSequence, level: usize, theta: f64, xs: &[f64]) -> Result<Vec<f64>> {
    require_squares(seq)?;
    if !(theta > 0.0) {
        return Err(Error::domain(format!("time-to-go {theta:e} must be positive")));
    }
    Ok(terminal_datum_w(seq, level)?.evolved(theta).eval_many(xs))
}

/// `int psi(t, 1) dt` over the times with time-to-go in `[theta_lo, theta_hi]`,
/// integrated exactly mode by mode.
pub fn adjoint_trace_integral(seq: &ChatterSequence, level: usize, theta_lo: f64, theta_hi: f64) -> Result<f64> {
    require_squares(seq)?;
    seq.check_level(level)?;
    if !(0.0 <= theta_lo && theta_lo <= theta_hi) {
        return Err(Error::domain(format!(
            "time-to-go interval [{theta_lo:e}, {theta_hi:e}] is invalid"
        )));
    }
    let width = theta_hi - theta_lo;
    let mut s = NeumaierSum::new();
    for t in seq.terms(level) {
        let lambda = (t.m as f64 * t.m as f64) * PI_SQUARED;
        let gain = (-lambda * theta_lo).exp() * -(-lambda * width).exp_m1();
        s.add(t.coefficient() * gain / lambda);
    }
    Ok(s.value())
}

/// Bound on `|d psi(t, 1) / dt|` for time-to-go at least `theta`.
pub fn adjoint_trace_slope_bound(seq: &ChatterSequence, level: usize, theta: f64) -> Result<f64> {
    require_squares(seq)?;
    seq.check_level(level)?;
    Ok(seq
        .terms(level)
        .map(|t| {
            let lambda = (t.m as f64 * t.m as f64) * PI_SQUARED;
            t.coefficient().abs() * lambda * (-lambda * theta.max(0.0)).exp()
        })
        .collect::<NeumaierSum>()
        .value())
}

/// `y(T, .)` for zero initial state and boundary flux `u` at `x = 1`,
/// integrated exactly mode by mode.
pub fn forward_terminal_state(control: &BangBangControl, modes: u64) -> CosineSeries {
    let segments = control.segments();
    let out = (1..=modes)
        .map(|n| {
            let lambda = (n as f64 * n as f64) * PI_SQUARED;
            let mut s = NeumaierSum::new();
            for seg in &segments {
                // e^{-lambda theta_end} - e^{-lambda theta_start}
                let gain = (-lambda * seg.theta_end).exp() * -(-lambda * seg.duration()).exp_m1();
                s.add(f64::from(seg.sign) * gain);
            }
            let parity = if n % 2 == 0 { 2.0 } else { -2.0 };
            Mode {
                n,
                a_n: parity * s.value() / lambda,
            }
        })
        .collect();
    CosineSeries {
        a0: control.signed_measure(),
        modes: out,
        cutoff: modes,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeCutoff {
    pub modes: u64,
    /// `4 / (pi^2 N)`, the sup-norm bound on the neglected tail.
    pub residual: f64,
    /// The cap [`MAX_MODES`] was hit before reaching the tolerance.
    pub capped: bool,
}

/// Smallest `N` with `4 / (pi^2 N) < tol / 2`, capped at [`MAX_MODES`].
pub fn mode_cutoff(tol: f64) -> Result<ModeCutoff> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance {tol} must be positive")));
    }
    let needed = (8.0 / (PI_SQUARED * tol)).floor() + 1.0;
    let (modes, capped) = if needed > MAX_MODES as f64 {
        (MAX_MODES, true)
    } else {
        (needed as u64, false)
    };
    Ok(ModeCutoff {
        modes,
        residual: 4.0 / (PI_SQUARED * modes as f64),
        capped,
    })
}
