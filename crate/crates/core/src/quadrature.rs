//! Gauss-Legendre rules, composite and adaptive.

use crate::error::{Error, Result};
use crate::precision::NeumaierSum;

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule; nodes are found by Newton's method on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let wgt = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = wgt;
            weights[n - 1 - i] = wgt;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integral of `f` over `[a, b]` with a single application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = NeumaierSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s.add(w * f(mid + half * x));
        }
        half * s.value()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The rule applied on `panels` equal subintervals of `[a, b]`.
pub fn composite<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = NeumaierSum::new();
    for i in 0..panels {
        let lo = a + h * i as f64;
        let hi = if i + 1 == panels { b } else { lo + h };
        s.add(rule.integrate(&mut f, lo, hi));
    }
    s.value()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub change: f64,
    pub panels: usize,
}

/// Composite rule with the panel count doubled until two successive levels
/// agree to `tol` (absolute).
pub fn adaptive_composite<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    mut f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    tol: f64,
    max_doublings: u32,
) -> Result<AdaptiveResult> {
    let mut panels = initial_panels.max(1);
    let mut prev = composite(rule, &mut f, a, b, panels);
    for _ in 0..max_doublings {
        panels *= 2;
        let cur = composite(rule, &mut f, a, b, panels);
        let change = (cur - prev).abs();
        if change <= tol {
            return Ok(AdaptiveResult {
                value: cur,
                change,
                panels,
            });
        }
        prev = cur;
    }
    Err(Error::Precision(format!(
        "quadrature did not settle to {tol:e} within {max_doublings} doublings"
    )))
}

/// Trapezoidal rule for samples on a uniform grid with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let mut s: NeumaierSum = values[1..n - 1].iter().copied().collect();
            s.add(0.5 * values[0]);
            s.add(0.5 * values[n - 1]);
            h * s.value()
        }
    }
}
