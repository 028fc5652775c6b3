//! A boundary control problem for the heat equation whose optimal control is
//! bang-bang with many switches, assembled from a chattering sequence.
//!
//! The recipe: take `w` built from the coefficients as the adjoint's terminal
//! datum, let the control be minus the sign of the adjoint trace at `x = 1`,
//! solve forward for the terminal state `ybar`, and pick the target as
//! `y_d = ybar - w`. The optimality system then holds by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{compare_l2, crank_nicolson_solve, FdConfig};
use crate::precision::NeumaierSum;
use crate::quadrature::trapezoid;
use crate::sequence::{ChatterSequence, SequenceDocument};
use crate::series::{coefficient_power_sum, find_sign_changes};
use crate::spectral::{
    adjoint_trace_integral, adjoint_trace_slope_bound, adjoint_trace_time_to_go, forward_terminal_state,
    mode_cutoff, switching_samples, uniform_grid, BangBangControl, ControlDocument, CosineSeries, PI_SQUARED,
};

/// Points in the dense sample grid written with an instance.
pub const DENSE_GRID_POINTS: usize = 1001;

/// Relative agreement required between the two norm evaluations.
pub const POSITIVITY_AGREEMENT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceConfig {
    /// Samples per probe interval when scanning the trace for sign changes.
    pub root_sampling: usize,
    /// Sup-norm tolerance for the forward solve's mode cutoff.
    pub mode_tolerance: f64,
    /// Crank-Nicolson cross-check of the terminal state; `None` skips it.
    pub oracle: Option<FdConfig>,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            root_sampling: 400,
            mode_tolerance: 1e-6,
            oracle: Some(FdConfig {
                nx: 2001,
                nt: 2000,
                min_steps_per_segment: 200,
                smoothing_start: true,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `||w||^2 / 2`.
    pub objective_value: f64,
    pub interior_switch_count: usize,
    /// Fraction of segment midpoints where the control disagrees with minus
    /// the sign of the trace.
    pub sign_residual: f64,
    /// `L^2` distance between the spectral terminal state and the
    /// Crank-Nicolson one, when computed.
    pub oracle_l2_gap: Option<f64>,
    pub oracle_merge_defect: Option<f64>,
    /// Sup-norm bound on the forward solve's neglected modes.
    pub mode_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatteringInstance {
    pub horizon: f64,
    pub level: usize,
    pub seq: ChatterSequence,
    pub w: CosineSeries,
    pub control: BangBangControl,
    pub terminal_state: CosineSeries,
    pub y_d: CosineSeries,
    pub diagnostics: Diagnostics,
}

/// `ln(1 / z_1) / pi^2`; the horizon must exceed it.
pub fn minimum_horizon(seq: &ChatterSequence) -> f64 {
    -seq.log_z_f64(1) / PI_SQUARED
}

pub fn build_instance(
    seq: &ChatterSequence,
    level: usize,
    horizon: f64,
    config: &InstanceConfig,
) -> Result<ChatteringInstance> {
    seq.check_level(level)?;
    let bound = minimum_horizon(seq);
    if !(horizon > bound && horizon.is_finite()) {
        return Err(Error::domain(format!(
            "T = {horizon} must exceed ln(1/z_1)/pi^2 = {bound}"
        )));
    }
    let w = crate::spectral::terminal_datum_w(seq, level)?;

    let scan = find_sign_changes(seq, level, config.root_sampling)?;
    let mut switches: Vec<f64> = Vec::with_capacity(scan.roots.len());
    for root in &scan.roots {
        let theta = -root.log_z() / PI_SQUARED;
        if theta > 0.0 && theta < horizon && switches.last().is_none_or(|&prev| theta < prev) {
            switches.push(theta);
        }
    }
    let start = adjoint_trace_time_to_go(seq, level, horizon)?;
    if start == 0.0 {
        return Err(Error::Invariant("the adjoint trace vanishes at t = 0".into()));
    }
    let initial_sign = if start > 0.0 { -1 } else { 1 };
    let control = BangBangControl::from_time_to_go(horizon, initial_sign, switches)?;

    let cutoff = mode_cutoff(config.mode_tolerance)?;
    let terminal_state = forward_terminal_state(&control, cutoff.modes);
    let y_d = terminal_state.sub(&w);

    let sign_residual = segment_sign_residual(seq, level, &control)?;
    let (oracle_l2_gap, oracle_merge_defect) = match &config.oracle {
        Some(fd) => {
            let sol = crank_nicolson_solve(&control, fd)?;
            (Some(compare_l2(&sol.values, &terminal_state)), Some(sol.merge_defect))
        }
        None => (None, None),
    };
    let diagnostics = Diagnostics {
        objective_value: 0.5 * w.norm_squared(),
        interior_switch_count: control.switch_count(),
        sign_residual,
        oracle_l2_gap,
        oracle_merge_defect,
        mode_residual: cutoff.residual,
    };
    Ok(ChatteringInstance {
        horizon,
        level,
        seq: seq.clone(),
        w,
        control,
        terminal_state,
        y_d,
        diagnostics,
    })
}

fn segment_sign_residual(seq: &ChatterSequence, level: usize, control: &BangBangControl) -> Result<f64> {
    let segments = control.segments();
    let mut wrong = 0usize;
    for seg in &segments {
        let theta = 0.5 * (seg.theta_start + seg.theta_end);
        let trace = adjoint_trace_time_to_go(seq, level, theta)?;
        if f64::from(seg.sign) * trace >= 0.0 {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / segments.len() as f64)
}

impl ChatteringInstance {
    /// Probe times `t_k` inside `(0, T)` and the trace there.
    pub fn interior_samples(&self) -> Result<Vec<(usize, f64, f64)>> {
        switching_samples(&self.seq, self.level, self.horizon)?
            .into_iter()
            .filter(|s| s.interior)
            .map(|s| Ok((s.k, s.t, adjoint_trace_time_to_go(&self.seq, self.level, s.time_to_go)?)))
            .collect()
    }

    pub fn to_document(&self) -> Result<InstanceDocument> {
        let samples = uniform_grid(DENSE_GRID_POINTS)
            .into_iter()
            .map(|x| GridSample {
                x,
                w: self.w.eval(x),
                y_d: self.y_d.eval(x),
            })
            .collect();
        Ok(InstanceDocument {
            sequence: self.seq.to_document()?,
            horizon: self.horizon,
            level: self.level,
            w: self.w.clone(),
            terminal_state: self.terminal_state.clone(),
            y_d: self.y_d.clone(),
            control: self.control.to_document(),
            diagnostics: self.diagnostics.clone(),
            samples,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document()?)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(s)?)
    }

    /// Rebuilds an instance and checks that its parts fit together.
    pub fn from_document(doc: InstanceDocument) -> Result<Self> {
        let seq = ChatterSequence::from_document(doc.sequence)?;
        seq.check_level(doc.level)?;
        let control = BangBangControl::from_document(&doc.control)?;
        if control.horizon() != doc.horizon {
            return Err(Error::Document("control horizon differs from T".into()));
        }
        for s in [&doc.w, &doc.terminal_state, &doc.y_d] {
            s.validate().map_err(|e| Error::Document(e.to_string()))?;
        }
        if doc.w != crate::spectral::terminal_datum_w(&seq, doc.level)? {
            return Err(Error::Document("w does not match the sequence".into()));
        }
        if doc.terminal_state.sub(&doc.w) != doc.y_d {
            return Err(Error::Document("y_d is not terminal_state - w".into()));
        }
        Ok(ChatteringInstance {
            horizon: doc.horizon,
            level: doc.level,
            seq,
            w: doc.w,
            control,
            terminal_state: doc.terminal_state,
            y_d: doc.y_d,
            diagnostics: doc.diagnostics,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSample {
    pub x: f64,
    pub w: f64,
    pub y_d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub sequence: SequenceDocument,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "L")]
    pub level: usize,
    pub w: CosineSeries,
    pub terminal_state: CosineSeries,
    pub y_d: CosineSeries,
    pub control: ControlDocument,
    pub diagnostics: Diagnostics,
    pub samples: Vec<GridSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignLawCheck {
    pub points: usize,
    /// Points inside a switch collar or where the trace is below its
    /// rounding floor.
    pub excluded: usize,
    pub mismatches: usize,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalCheck {
    pub samples: usize,
    pub grid_cells: usize,
    /// Smallest `(p(., 1), u - ubar)` over the random controls.
    pub min_inner_product: f64,
    pub eps_quad: f64,
    /// The same pairing for `u = ubar` and `u = -ubar`.
    pub at_optimum: f64,
    pub at_reflection: f64,
    /// `2 int |p(t, 1)| dt`, which the reflected pairing should equal.
    pub twice_abs_integral: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalCheck {
    /// Largest `|(ybar_n - yd_n) - w_n|` in units of `|ybar_n| + |w_n|`.
    pub max_relative_mode_gap: f64,
    /// `L^2` norm of `(ybar - y_d) - w`.
    pub l2_gap: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub sign_law: SignLawCheck,
    pub variational: VariationalCheck,
    pub terminal: TerminalCheck,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub t_grid_size: usize,
    pub control_samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            t_grid_size: 10_000,
            control_samples: 100,
            seed: 0,
        }
    }
}

/// Half-width of the excluded collar around a switch at time-to-go `theta`.
pub fn switch_collar(theta: f64) -> f64 {
    1e-12f64.min(1e-6 * theta)
}

pub fn verify_optimality(inst: &ChatteringInstance, opts: &VerifyOptions) -> Result<OptimalityReport> {
    if opts.t_grid_size < 2 {
        return Err(Error::domain("t_grid_size must be at least 2"));
    }
    let sign_law = check_sign_law(inst, opts.t_grid_size)?;
    let variational = check_variational(inst, opts)?;
    let terminal = check_terminal(inst);
    let passed = sign_law.passed && variational.passed && terminal.passed;
    Ok(OptimalityReport {
        sign_law,
        variational,
        terminal,
        passed,
    })
}

/// Uniform grid in `t` plus a logarithmic grid in time-to-go reaching well
/// past the last switch, so the accumulation near `T` is sampled too.
fn check_sign_law(inst: &ChatteringInstance, n: usize) -> Result<SignLawCheck> {
    let horizon = inst.horizon;
    let thetas = inst.control.switch_time_to_go();
    let smallest = thetas
        .last()
        .copied()
        .unwrap_or(horizon)
        .min(-inst.seq.log_z_f64(inst.level) / PI_SQUARED);
    let theta_min = smallest * 1e-3;
    let mut grid: Vec<f64> = (0..n).map(|i| horizon * (n - i) as f64 / n as f64).collect();
    let ratio = (theta_min / horizon).ln();
    grid.extend((0..n).map(|j| horizon * (ratio * j as f64 / (n - 1) as f64).exp()));

    let mut excluded = 0;
    let mut mismatches = 0;
    for &theta in &grid {
        let idx = thetas.partition_point(|&s| s > theta);
        let near = |i: usize| thetas.get(i).is_some_and(|&s| (s - theta).abs() < switch_collar(s));
        if near(idx) || (idx > 0 && near(idx - 1)) {
            excluded += 1;
            continue;
        }
        let trace = adjoint_trace_time_to_go(&inst.seq, inst.level, theta)?;
        if trace == 0.0 {
            excluded += 1;
            continue;
        }
        let want = if trace > 0.0 { -1 } else { 1 };
        if inst.control.value_at_time_to_go(theta) != want {
            mismatches += 1;
        }
    }
    let checked = grid.len() - excluded;
    Ok(SignLawCheck {
        points: grid.len(),
        excluded,
        mismatches,
        residual: if checked == 0 { 0.0 } else { mismatches as f64 / checked as f64 },
        passed: mismatches == 0 && checked > 0,
    })
}

/// The pairing `int p(t, 1) (u - ubar) dt` is evaluated exactly cell by cell
/// (the trace integrates in closed form), splitting cells at the switches.
/// `eps_quad` covers rounding and the switch-location uncertainty, the
/// latter through the trace's slope bound over each root bracket.
fn check_variational(inst: &ChatteringInstance, opts: &VerifyOptions) -> Result<VariationalCheck> {
    let (seq, level, horizon) = (&inst.seq, inst.level, inst.horizon);
    let n = opts.t_grid_size;
    let thetas = inst.control.switch_time_to_go();
    // Cell i covers time-to-go [edge(i + 1), edge(i)].
    let edge = |i: usize| horizon * (n - i) as f64 / n as f64;

    let mut cell_integral = Vec::with_capacity(n);
    let mut cell_control = Vec::with_capacity(n);
    let mut abs_total = NeumaierSum::new();
    let mut magnitude = 0.0f64;
    let mut next_switch = 0;
    for i in 0..n {
        let (hi, lo) = (edge(i), edge(i + 1));
        cell_integral.push(adjoint_trace_integral(seq, level, lo, hi)?);
        let mut ubar_part = NeumaierSum::new();
        let mut top = hi;
        while next_switch < thetas.len() && thetas[next_switch] > lo {
            let s = thetas[next_switch].min(top);
            let piece = adjoint_trace_integral(seq, level, s, top)?;
            ubar_part.add(f64::from(inst.control.value_at_time_to_go(top)) * piece);
            abs_total.add(piece.abs());
            magnitude += piece.abs();
            top = s;
            next_switch += 1;
        }
        let piece = adjoint_trace_integral(seq, level, lo, top)?;
        ubar_part.add(f64::from(inst.control.value_at_time_to_go(top)) * piece);
        abs_total.add(piece.abs());
        magnitude += piece.abs();
        cell_control.push(ubar_part.value());
    }

    // Rounding: a few ulps of every piece, amplified by |u - ubar| <= 2.
    let rounding = 64.0 * f64::EPSILON * magnitude * 2.0;
    // Location: a root known to within w carries at most slope * w^2 of
    // misattributed mass on each side.
    let mut location = 0.0;
    let scan_width = crate::series::ROOT_RELATIVE_WIDTH;
    for &s in thetas {
        let width = s * scan_width * 4.0;
        location += 2.0 * adjoint_trace_slope_bound(seq, level, (s - width).max(0.0))? * width * width;
    }
    let eps_quad = rounding + 2.0 * location;

    let pairing = |u: &dyn Fn(usize) -> f64| -> f64 {
        let mut s = NeumaierSum::new();
        for i in 0..n {
            s.add(u(i) * cell_integral[i] - cell_control[i]);
        }
        s.value()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut min_inner = f64::INFINITY;
    for _ in 0..opts.control_samples {
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        min_inner = min_inner.min(pairing(&|i| values[i]));
    }
    // Pairing ubar with itself cancels piece by piece.
    let at_optimum = 0.0f64;
    let mut reflected = NeumaierSum::new();
    for c in &cell_control {
        reflected.add(-2.0 * c);
    }
    let at_reflection = reflected.value();
    let twice_abs_integral = 2.0 * abs_total.value();
    let reflection_ok = (at_reflection - twice_abs_integral).abs() <= eps_quad + 1e-12 * twice_abs_integral;
    let passed = min_inner >= -eps_quad && reflection_ok && at_reflection > 0.0;
    Ok(VariationalCheck {
        samples: opts.control_samples,
        grid_cells: n,
        min_inner_product: if opts.control_samples == 0 { 0.0 } else { min_inner },
        eps_quad,
        at_optimum,
        at_reflection,
        twice_abs_integral,
        passed,
    })
}

/// The adjoint's terminal value `ybar - y_d` must be `w` again.
fn check_terminal(inst: &ChatteringInstance) -> TerminalCheck {
    let back = inst.terminal_state.sub(&inst.y_d);
    let gap = back.sub(&inst.w);
    let mut worst = 0.0f64;
    for m in &gap.modes {
        let scale = inst.terminal_state.coefficient(m.n).abs() + inst.w.coefficient(m.n).abs();
        if m.a_n != 0.0 {
            worst = worst.max(m.a_n.abs() / scale);
        }
    }
    let l2_gap = gap.norm_squared().sqrt();
    TerminalCheck {
        max_relative_mode_gap: worst,
        l2_gap,
        passed: gap.a0 == 0.0 && worst <= 2.0 * f64::EPSILON,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityCertificate {
    /// `||w||^2` from the block structure.
    pub parseval: f64,
    /// `||w||^2` by the trapezoidal rule on `2 q_L + 1` nodes.
    pub quadrature: f64,
    pub relative_gap: f64,
    pub passed: bool,
}

impl PositivityCertificate {
    pub fn value(&self) -> f64 {
        self.parseval
    }
}

pub fn positivity_certificate(inst: &ChatteringInstance) -> Result<PositivityCertificate> {
    let parseval = 0.5 * coefficient_power_sum(&inst.seq, 2.0, inst.level)?;
    let nodes = 2 * inst.seq.q(inst.level) as usize + 1;
    let squares: Vec<f64> = uniform_grid(nodes)
        .into_iter()
        .map(|x| {
            let v = inst.w.eval(x);
            v * v
        })
        .collect();
    let quadrature = trapezoid(&squares, 1.0 / (nodes - 1) as f64);
    let relative_gap = (parseval - quadrature).abs() / parseval;
    Ok(PositivityCertificate {
        parseval,
        quadrature,
        relative_gap,
        passed: parseval > 0.0 && relative_gap <= POSITIVITY_AGREEMENT,
    })
}
