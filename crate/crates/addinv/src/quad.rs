//! Numerical quadrature: composite Simpson rules on uniform panels and a
//! small adaptive Simpson for truth convolutions.

use num_complex::Complex64;

use crate::{Error, Result};

/// Composite Simpson rule with `panels` uniform subintervals (`panels` even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let nodes = SimpsonRule::new(a, b, panels);
    nodes.iter().map(|(x, w)| w * f(x)).sum()
}

/// Composite Simpson rule for complex-valued integrands.
pub fn simpson_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let nodes = SimpsonRule::new(a, b, panels);
    nodes
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, (x, w)| acc + f(x) * w)
}

/// Precomputed Simpson nodes and weights, reusable across integrands that
/// share the same interval and resolution.
#[derive(Debug, Clone)]
pub struct SimpsonRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SimpsonRule {
    pub fn new(a: f64, b: f64, panels: usize) -> Self {
        let panels = panels.max(2) + panels % 2; // force even, at least 2
        let n = panels + 1;
        let dx = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            nodes.push(a + i as f64 * dx);
            let w = if i == 0 || i == panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            weights.push(w * dx / 3.0);
        }
        SimpsonRule { nodes, weights }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Adaptive Simpson with Richardson correction. Errors out when the depth
/// budget is exhausted before the local tolerance is met.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0;
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) * (fa + 4.0 * flm + fm) / 6.0;
    let right = (b - m) * (fm + 4.0 * frm + fb) / 6.0;
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence(format!(
            "adaptive Simpson depth exhausted on [{a}, {b}]"
        )));
    }
    let l = adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Trapezoid rule over tabulated values on a uniform grid with spacing `dx`.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    dx * (0.5 * values[0] + interior + 0.5 * values[values.len() - 1])
}
