//! The inverse step: residual construction, truncated-density-weighted
//! empirical Fourier transform, smoothed Fourier inversion to the component
//! signals, additive assembly, and the variance normalizers with their
//! confidence bands.
//!
//! All Fourier integrals run in the substituted variable `v = h w` over
//! `[-1, 1]` (the support of the deconvolution kernel transform) with a
//! shared composite Simpson rule, so the pointwise inversion and the linear
//! weight representation are the same sum in two associations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::backfitting::BackfitResult;
use crate::empirical::{kde_at, Dataset, TransformedDataset};
use crate::grid::{CurveOnGrid, Grid};
use crate::kernels::{ConvolutionFamily, DeconvKernel};
use crate::quad::SimpsonRule;
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Configuration of the Fourier inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeconvConfig {
    /// Inversion bandwidth `h`.
    pub bandwidth: f64,
    /// Truncation sequence value; the density weight is floored at the
    /// density evaluated at `1/truncation`.
    pub truncation: f64,
    /// Deconvolution kernel, realised through its Fourier transform.
    pub kernel: DeconvKernel,
    /// Panel count of the Simpson rule on `[-1, 1]`.
    pub fourier_panels: usize,
}

impl DeconvConfig {
    pub fn new(bandwidth: f64, truncation: f64) -> Result<Self> {
        let cfg = DeconvConfig {
            bandwidth,
            truncation,
            kernel: DeconvKernel::default(),
            fourier_panels: 2048,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::InvalidBandwidth(self.bandwidth));
        }
        if !(self.truncation > 0.0) || !self.truncation.is_finite() {
            return Err(Error::Config(format!(
                "truncation must be positive, got {}",
                self.truncation
            )));
        }
        if self.fourier_panels < 8 {
            return Err(Error::Config("fourier_panels must be at least 8".into()));
        }
        Ok(())
    }

    fn rule(&self) -> SimpsonRule {
        SimpsonRule::new(-1.0, 1.0, self.fourier_panels)
    }

    /// Edge abscissa `1/truncation` at which the density floor is taken.
    pub fn edge(&self) -> f64 {
        1.0 / self.truncation
    }
}

/// Marginal density values at the observations plus the floor value at the
/// truncation edge, feeding the Fourier weight `1 / max(f(X), f(edge))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityWeights {
    pub at_data: Vec<f64>,
    pub at_edge: f64,
}

impl DensityWeights {
    /// Estimated weights: kernel density estimate of column `axis` with
    /// bandwidth `h_d`, evaluated at the data and at the truncation edge.
    pub fn estimated(data: &Dataset, axis: usize, h_d: f64, truncation: f64) -> Result<Self> {
        let col = data.column(axis)?;
        let at_data = col
            .iter()
            .map(|&x| kde_at(col, h_d, x))
            .collect::<Result<Vec<_>>>()?;
        let at_edge = kde_at(col, h_d, 1.0 / truncation)?;
        Ok(DensityWeights { at_data, at_edge })
    }

    /// Exact-density override used by simulation oracles.
    pub fn exact(
        f: impl Fn(f64) -> f64,
        data: &Dataset,
        axis: usize,
        truncation: f64,
    ) -> Result<Self> {
        let col = data.column(axis)?;
        let at_data = col.iter().map(|&x| f(x)).collect();
        Ok(DensityWeights {
            at_data,
            at_edge: f(1.0 / truncation),
        })
    }

    /// Truncated reciprocal weight for observation `k`.
    pub fn truncated(&self, k: usize) -> f64 {
        1.0 / self.at_data[k].max(self.at_edge)
    }
}

/// `1 / max(f_value, f_edge)`: the truncation keeps the reciprocal bounded
/// where the density gets small.
pub fn truncated_density_weight(f_value: f64, f_edge: f64) -> Result<f64> {
    if f_edge <= 0.0 && f_value <= 0.0 {
        return Err(Error::InvalidArgument(
            "density and edge floor are both nonpositive".into(),
        ));
    }
    Ok(1.0 / f_value.max(f_edge))
}

/// Per-component residuals: the response minus the intercept and all *other*
/// fitted components evaluated at the transformed observations.
pub fn residuals(
    data: &Dataset,
    z: &TransformedDataset,
    fit: &BackfitResult,
    axis: usize,
) -> Result<Vec<f64>> {
    let d = fit.components.len();
    if axis >= d {
        return Err(Error::InvalidAxis { axis, dim: d });
    }
    if z.dim() != d || data.dim() != d {
        return Err(Error::DimensionMismatch(
            "dataset, transform and fit must share the predictor dimension".into(),
        ));
    }
    let n = data.n();
    let mut u = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = data.response()[k] - fit.intercept;
        for i in 0..d {
            if i == axis {
                continue;
            }
            v -= fit.components[i].eval(z.column(i)?[k]);
        }
        u.push(v);
    }
    Ok(u)
}

/// Empirical Fourier transform of the component regression function at
/// physical frequency `w`: the truncated-density-weighted residual sum.
pub fn empirical_fourier_g(
    data: &Dataset,
    residuals: &[f64],
    axis: usize,
    weights: &DensityWeights,
    w: f64,
) -> Result<Complex64> {
    let col = data.column(axis)?;
    if residuals.len() != col.len() || weights.at_data.len() != col.len() {
        return Err(Error::DimensionMismatch(
            "residuals and weights must match the sample size".into(),
        ));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &x) in col.iter().enumerate() {
        let (s, c) = (w * x).sin_cos();
        acc += Complex64::new(c, s) * (residuals[k] * weights.truncated(k));
    }
    Ok(acc / col.len() as f64)
}

/// Result of one pointwise inversion: the real-part estimate and the
/// imaginary residue of the quadrature (a diagnostic, not discarded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub value: f64,
    pub imag_residue: f64,
}

/// Smoothed Fourier inversion of an arbitrary transform estimate.
///
/// Computes `(1/2 pi) int e^{-i w x} Phi_K(h w) fun(w) / Phi_psi(w) dw` by
/// Simpson quadrature in the substituted variable. Used with the empirical
/// transform in production and with synthetic injections in tests.
pub fn invert_transform_with(
    fun: impl Fn(f64) -> Complex64,
    cfg: &DeconvConfig,
    fam: &ConvolutionFamily,
    axis: usize,
    x: f64,
) -> Result<Inversion> {
    cfg.validate()?;
    let h = cfg.bandwidth;
    let rule = cfg.rule();
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, wgt) in rule.iter() {
        let k = cfg.kernel.fourier(v);
        if k == 0.0 {
            continue;
        }
        let psi = fam.fourier_marginal(axis, v / h)?;
        let phase = -v * x / h;
        let (s, c) = phase.sin_cos();
        acc += Complex64::new(c, s) * (wgt * k / psi) * fun(v / h);
    }
    acc /= TWO_PI * h;
    let scale = 1.0 + acc.re.abs();
    if acc.im.abs() > 1e-6 * scale {
        return Err(Error::QuadratureResidue {
            residue: acc.im.abs(),
        });
    }
    Ok(Inversion {
        value: acc.re,
        imag_residue: acc.im.abs(),
    })
}

/// Pointwise component estimate: inversion of the empirical Fourier
/// transform of the weighted residuals.
pub fn invert_component(
    data: &Dataset,
    residuals: &[f64],
    axis: usize,
    cfg: &DeconvConfig,
    fam: &ConvolutionFamily,
    weights: &DensityWeights,
    x: f64,
) -> Result<Inversion> {
    let col = data.column(axis)?;
    let h = cfg.bandwidth;
    // Cache the empirical transform at the quadrature nodes.
    let rule = cfg.rule();
    let phi_hat: Vec<Complex64> = rule
        .nodes
        .iter()
        .map(|&v| empirical_fourier_g(data, residuals, axis, weights, v / h))
        .collect::<Result<Vec<_>>>()?;
    let _ = col;
    invert_cached(&rule, &phi_hat, cfg, fam, axis, x)
}

fn invert_cached(
    rule: &SimpsonRule,
    phi_hat: &[Complex64],
    cfg: &DeconvConfig,
    fam: &ConvolutionFamily,
    axis: usize,
    x: f64,
) -> Result<Inversion> {
    let h = cfg.bandwidth;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (v, wgt)) in rule.iter().enumerate() {
        let k = cfg.kernel.fourier(v);
        if k == 0.0 {
            continue;
        }
        let psi = fam.fourier_marginal(axis, v / h)?;
        let phase = -v * x / h;
        let (s, c) = phase.sin_cos();
        acc += Complex64::new(c, s) * (wgt * k / psi) * phi_hat[i];
    }
    acc /= TWO_PI * h;
    let scale = 1.0 + acc.re.abs();
    if acc.im.abs() > 1e-6 * scale {
        return Err(Error::QuadratureResidue {
            residue: acc.im.abs(),
        });
    }
    Ok(Inversion {
        value: acc.re,
        imag_residue: acc.im.abs(),
    })
}

/// A component signal estimate tabulated on an original-scale grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentEstimate {
    pub axis: usize,
    pub curve: CurveOnGrid,
    /// Largest imaginary residue over the grid.
    pub imag_residue: f64,
    /// Variance normalizer values, when computed.
    pub variance: Option<Vec<f64>>,
    /// Pointwise confidence band, when computed.
    pub band: Option<Band>,
}

/// Lower and upper confidence curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

/// Evaluate one component estimate on a whole grid, caching the empirical
/// transform at the quadrature nodes.
pub fn estimate_component(
    data: &Dataset,
    residuals: &[f64],
    axis: usize,
    cfg: &DeconvConfig,
    fam: &ConvolutionFamily,
    weights: &DensityWeights,
    grid: &Grid,
) -> Result<ComponentEstimate> {
    cfg.validate()?;
    let h = cfg.bandwidth;
    let rule = cfg.rule();
    let phi_hat: Vec<Complex64> = rule
        .nodes
        .iter()
        .map(|&v| empirical_fourier_g(data, residuals, axis, weights, v / h))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(grid.len());
    let mut residue = 0.0f64;
    for &x in grid.points() {
        let inv = invert_cached(&rule, &phi_hat, cfg, fam, axis, x)?;
        values.push(inv.value);
        residue = residue.max(inv.imag_residue);
    }
    Ok(ComponentEstimate {
        axis,
        curve: CurveOnGrid::new(grid.clone(), values)?,
        imag_residue: residue,
        variance: None,
        band: None,
    })
}

/// Additive assembly: intercept plus the interpolated component curves.
pub fn assemble_additive(
    components: &[ComponentEstimate],
    intercept: f64,
    x: &[f64],
) -> Result<f64> {
    if components.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} components but point has dimension {}",
            components.len(),
            x.len()
        )));
    }
    Ok(intercept
        + components
            .iter()
            .zip(x)
            .map(|(c, &xi)| c.curve.eval(xi))
            .sum::<f64>())
}

/// Linear representation: weights `w_k(x)` such that the component estimate
/// equals the weighted residual sum `sum_k w_k(x) U_k`. Shares the Simpson
/// rule with the inversion, so the identity is exact algebra.
pub fn linear_weights(
    data: &Dataset,
    axis: usize,
    cfg: &DeconvConfig,
    fam: &ConvolutionFamily,
    weights: &DensityWeights,
    x: f64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let col = data.column(axis)?;
    let n = col.len() as f64;
    let h = cfg.bandwidth;
    let rule = cfg.rule();
    let mut out = Vec::with_capacity(col.len());
    for (k, &xk) in col.iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (v, wgt) in rule.iter() {
            let kv = cfg.kernel.fourier(v);
            if kv == 0.0 {
                continue;
            }
            let psi = fam.fourier_marginal(axis, v / h)?;
            let phase = -v * (x - xk) / h;
            let (s, c) = phase.sin_cos();
            acc += Complex64::new(c, s) * (wgt * kv / psi);
        }
        out.push(acc.re / (TWO_PI * n * h) * weights.truncated(k));
    }
    Ok(out)
}

/// Variance normalizer of one component at a point, by nested quadrature:
/// the squared modulus of the inversion kernel integrated against
/// `(g^2 + sigma^2) f / max(f, f_edge)^2` over the design support.
#[allow(clippy::too_many_arguments)]
pub fn variance_vnj(
    n: usize,
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    sigma2: f64,
    cfg: &DeconvConfig,
    fam: &ConvolutionFamily,
    axis: usize,
    x: f64,
    support: (f64, f64),
    outer_panels: usize,
) -> Result<f64> {
    if sigma2 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be nonnegative, got {sigma2}"
        )));
    }
    cfg.validate()?;
    let h = cfg.bandwidth;
    let rule = cfg.rule();
    let f_edge = f(cfg.edge());
    let outer = SimpsonRule::new(support.0, support.1, outer_panels);
    let mut total = 0.0;
    for (y, wy) in outer.iter() {
        let inner = inversion_kernel(&rule, cfg, fam, axis, (x - y) / h)?;
        let fy = f(y);
        let m = fy.max(f_edge);
        let gy = g(y);
        total += wy * inner.norm_sqr() * (gy * gy + sigma2) * fy / (m * m);
    }
    Ok(total / (n as f64 * h * h * TWO_PI * TWO_PI))
}

/// Cross-component variance normalizer by nested quadrature over the joint
/// design density. Returned as a complex number; paired axes `(k, l)` and
/// `(l, k)` are conjugates and their sum is real.
#[allow(clippy::too_many_arguments)]
pub fn variance_cross(
    n: usize,
    f_k: impl Fn(f64) -> f64,
    f_l: impl Fn(f64) -> f64,
    f_joint: impl Fn(f64, f64) -> f64,
    g_k: impl Fn(f64) -> f64,
    g_l: impl Fn(f64) -> f64,
    sigma2: f64,
    cfg: &DeconvConfig,
    fam: &ConvolutionFamily,
    axes: (usize, usize),
    x: (f64, f64),
    support: (f64, f64),
    outer_panels: usize,
) -> Result<Complex64> {
    if axes.0 == axes.1 {
        return Err(Error::InvalidArgument(
            "cross variance needs distinct axes".into(),
        ));
    }
    if sigma2 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be nonnegative, got {sigma2}"
        )));
    }
    cfg.validate()?;
    let h = cfg.bandwidth;
    let rule = cfg.rule();
    let edge = cfg.edge();
    let (fk_edge, fl_edge) = (f_k(edge), f_l(edge));
    let outer = SimpsonRule::new(support.0, support.1, outer_panels);
    // Tabulate the two inner kernels along the outer nodes.
    let mut ik = Vec::with_capacity(outer.nodes.len());
    let mut il = Vec::with_capacity(outer.nodes.len());
    for &y in &outer.nodes {
        ik.push(inversion_kernel(&rule, cfg, fam, axes.0, (x.0 - y) / h)?);
        il.push(inversion_kernel(&rule, cfg, fam, axes.1, (x.1 - y) / h)?);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (a, (y, wy)) in outer.iter().enumerate() {
        let fy = f_k(y).max(fk_edge);
        let gky = g_k(y);
        for (b, (z, wz)) in outer.iter().enumerate() {
            let fz = f_l(z).max(fl_edge);
            let joint = f_joint(y, z);
            if joint == 0.0 {
                continue;
            }
            let weight = wy * wz * (sigma2 + gky * g_l(z)) * joint / (fy * fz);
            total += ik[a] * il[b].conj() * weight;
        }
    }
    Ok(total / (n as f64 * h * h * TWO_PI * TWO_PI))
}

/// `int e^{-i v s} Phi_K(v) / Phi_psi(v/h) dv` on the shared rule.
fn inversion_kernel(
    rule: &SimpsonRule,
    cfg: &DeconvConfig,
    fam: &ConvolutionFamily,
    axis: usize,
    s: f64,
) -> Result<Complex64> {
    let h = cfg.bandwidth;
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, wgt) in rule.iter() {
        let k = cfg.kernel.fourier(v);
        if k == 0.0 {
            continue;
        }
        let psi = fam.fourier_marginal(axis, v / h)?;
        let phase = -v * s;
        let (sn, cs) = phase.sin_cos();
        acc += Complex64::new(cs, sn) * (wgt * k / psi);
    }
    Ok(acc)
}

/// Normal-limit confidence band around a component curve.
pub fn confidence_band(values: &[f64], variance: &[f64], alpha: f64) -> Result<Band> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level must lie in (0, 1), got {alpha}"
        )));
    }
    if values.len() != variance.len() {
        return Err(Error::DimensionMismatch(
            "estimate and variance curves differ in length".into(),
        ));
    }
    if variance.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument("negative variance".into()));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z = normal.inverse_cdf(1.0 - alpha / 2.0);
    let lower = values
        .iter()
        .zip(variance)
        .map(|(v, s2)| v - z * s2.sqrt())
        .collect();
    let upper = values
        .iter()
        .zip(variance)
        .map(|(v, s2)| v + z * s2.sqrt())
        .collect();
    Ok(Band {
        lower,
        upper,
        level: 1.0 - alpha,
    })
}
