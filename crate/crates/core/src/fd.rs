//! Crank-Nicolson solver for `y_t = y_xx` on `(0, 1)`, zero initial state,
//! `y_x(t, 0) = 0` and `y_x(t, 1) = u(t)` for a bang-bang `u`.
//!
//! Kept deliberately independent of the spectral code: it only shares the
//! control type.

use crate::error::{Error, Result};
use crate::quadrature::trapezoid;
use crate::spectral::{uniform_grid, BangBangControl, CosineSeries, Segment};

/// Segments shorter than `T * MERGE_FRACTION` are folded into a neighbour.
pub const MERGE_FRACTION: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    /// Grid points on `[0, 1]`, at least 3.
    pub nx: usize,
    /// Time steps over `(0, T)`, spread over segments by length.
    pub nt: usize,
    pub min_steps_per_segment: usize,
    /// Replace the first step of every segment with two backward-Euler half
    /// steps, which damps the jump in the boundary data.
    pub smoothing_start: bool,
}

impl FdConfig {
    pub fn new(nx: usize, nt: usize) -> Self {
        FdConfig {
            nx,
            nt,
            min_steps_per_segment: 1,
            smoothing_start: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdSolution {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub steps: usize,
    pub merged_segments: usize,
    /// `int |u_solved - u|` over the merged pieces.
    pub merge_defect: f64,
}

/// Terminal state on a uniform grid.
pub fn crank_nicolson_solve(control: &BangBangControl, config: &FdConfig) -> Result<FdSolution> {
    if config.nx < 3 {
        return Err(Error::domain(format!("nx = {} must be at least 3", config.nx)));
    }
    if config.nt < 1 {
        return Err(Error::domain("nt must be at least 1"));
    }
    control.validate()?;
    let horizon = control.horizon();
    let (segments, merged_segments, merge_defect) = merge_short(control.segments(), horizon * MERGE_FRACTION);

    let n = config.nx;
    let h = 1.0 / (n - 1) as f64;
    let mut y = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut steps = 0;
    for seg in &segments {
        let duration = seg.duration();
        let share = (config.nt as f64 * duration / horizon).round() as usize;
        let count = share.max(config.min_steps_per_segment).max(1);
        let dt = duration / count as f64;
        let u = f64::from(seg.sign);
        let mut remaining = count;
        if config.smoothing_start {
            let half = Stepper::new(n, h, 0.5 * dt, 1.0);
            half.step(&mut y, u, &mut rhs, &mut scratch);
            half.step(&mut y, u, &mut rhs, &mut scratch);
            remaining -= 1;
            steps += 1;
        }
        let cn = Stepper::new(n, h, dt, 0.5);
        for _ in 0..remaining {
            cn.step(&mut y, u, &mut rhs, &mut scratch);
        }
        steps += remaining;
    }
    Ok(FdSolution {
        x: uniform_grid(n),
        values: y,
        steps,
        merged_segments,
        merge_defect,
    })
}

/// Folds segments shorter than `min_len` into the preceding one (the
/// following one for the first segment), then joins equal neighbours.
fn merge_short(segments: Vec<Segment>, min_len: f64) -> (Vec<Segment>, usize, f64) {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    let mut merged = 0;
    let mut defect = 0.0;
    let mut pending: Option<Segment> = None;
    for seg in segments {
        let seg = match pending.take() {
            Some(short) => Segment {
                theta_start: short.theta_start,
                ..seg
            },
            None => seg,
        };
        if seg.duration() < min_len {
            merged += 1;
            defect += 2.0 * seg.duration();
            match out.last_mut() {
                Some(prev) => prev.theta_end = seg.theta_end,
                None => pending = Some(seg),
            }
            continue;
        }
        match out.last_mut() {
            Some(prev) if prev.sign == seg.sign => prev.theta_end = seg.theta_end,
            _ => out.push(seg),
        }
    }
    if let Some(short) = pending {
        // Everything was short; keep the control's sign over the horizon.
        out.push(short);
        defect -= 2.0 * short.duration();
        merged -= 1;
    }
    (out, merged, defect)
}

/// One theta-scheme step `(I - theta dt A) y' = (I + (1 - theta) dt A) y + dt b`,
/// with the tridiagonal system factored once.
struct Stepper {
    r: f64,
    theta: f64,
    flux: f64,
    // Thomas factors for the implicit matrix.
    lower: Vec<f64>,
    upper: Vec<f64>,
    inv_diag: Vec<f64>,
}

impl Stepper {
    fn new(n: usize, h: f64, dt: f64, theta: f64) -> Self {
        let r = dt / (h * h);
        let a = theta * r;
        // Row i: sub[i] y_{i-1} + (1 + 2a) y_i + sup[i] y_{i+1}.
        let sub = |i: usize| if i == n - 1 { -2.0 * a } else { -a };
        let sup = |i: usize| if i == 0 { -2.0 * a } else { -a };
        let diag = 1.0 + 2.0 * a;
        let mut upper = vec![0.0; n];
        let mut inv_diag = vec![0.0; n];
        let mut lower = vec![0.0; n];
        inv_diag[0] = 1.0 / diag;
        upper[0] = sup(0) * inv_diag[0];
        for i in 1..n {
            lower[i] = sub(i);
            let d = diag - lower[i] * upper[i - 1];
            inv_diag[i] = 1.0 / d;
            if i < n - 1 {
                upper[i] = sup(i) * inv_diag[i];
            }
        }
        Stepper {
            r,
            theta,
            flux: 2.0 * dt / h,
            lower,
            upper,
            inv_diag,
        }
    }

    fn step(&self, y: &mut [f64], u: f64, rhs: &mut [f64], scratch: &mut [f64]) {
        let n = y.len();
        let b = (1.0 - self.theta) * self.r;
        rhs[0] = y[0] + b * (2.0 * y[1] - 2.0 * y[0]);
        for i in 1..n - 1 {
            rhs[i] = y[i] + b * (y[i - 1] - 2.0 * y[i] + y[i + 1]);
        }
        rhs[n - 1] = y[n - 1] + b * (2.0 * y[n - 2] - 2.0 * y[n - 1]);
        // Ghost node at x = 1: y_{n} = y_{n-2} + 2 h u, giving a source 2 dt u / h.
        rhs[n - 1] += self.flux * u;

        scratch[0] = rhs[0] * self.inv_diag[0];
        for i in 1..n {
            scratch[i] = (rhs[i] - self.lower[i] * scratch[i - 1]) * self.inv_diag[i];
        }
        y[n - 1] = scratch[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = scratch[i] - self.upper[i] * y[i + 1];
        }
    }
}

/// Trapezoidal `L^2(0, 1)` distance between grid values on a uniform grid
/// and a cosine series sampled at the same nodes.
pub fn compare_l2(grid_values: &[f64], series: &CosineSeries) -> f64 {
    let n = grid_values.len();
    if n < 2 {
        return 0.0;
    }
    let xs = uniform_grid(n);
    let sq: Vec<f64> = xs
        .iter()
        .zip(grid_values)
        .map(|(&x, &g)| {
            let d = g - series.eval(x);
            d * d
        })
        .collect();
    trapezoid(&sq, 1.0 / (n - 1) as f64).sqrt()
}

/// Trapezoidal mean of grid values on `[0, 1]`.
pub fn grid_mean(grid_values: &[f64]) -> f64 {
    trapezoid(grid_values, 1.0 / (grid_values.len().max(2) - 1) as f64)
}
