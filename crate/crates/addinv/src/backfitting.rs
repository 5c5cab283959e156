//! Smooth backfitting on the unit cube: marginal Nadaraya-Watson smoothers,
//! boundary-corrected densities on a shared grid, Gauss-Seidel component
//! updates, convergence control and fixed-point verification, plus the
//! composition with marginal ECDFs that moves component curves back to the
//! original predictor scale.

use serde::{Deserialize, Serialize};

use crate::empirical::{
    ecdf_at, unit_kernel_weight, Dataset, DensityEstimate, TransformedDataset,
};
use crate::grid::{CurveOnGrid, Grid};
use crate::kernels::SmoothingKernel;
use crate::{Error, Result};

/// Configuration of one backfitting run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackfitConfig {
    /// Bandwidth on the unit interval.
    pub bandwidth: f64,
    /// Hard cap on full Gauss-Seidel sweeps.
    pub max_iterations: usize,
    /// Relative sup-norm threshold on successive iterates; the effective
    /// threshold is `tolerance * (1 + max |Y|)`.
    pub tolerance: f64,
    /// Shared unit-interval abscissae for curves, densities and integrals.
    pub grid: Grid,
}

impl BackfitConfig {
    pub fn new(bandwidth: f64) -> Result<Self> {
        let cfg = BackfitConfig {
            bandwidth,
            max_iterations: 100,
            tolerance: 1e-8,
            grid: Grid::unit_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::InvalidBandwidth(self.bandwidth));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Converged (or flagged) backfitting output.
#[derive(Debug, Clone, PartialEq)]
pub struct BackfitResult {
    /// Response mean, absorbing all additive constants.
    pub intercept: f64,
    /// Centered component curves on the unit interval.
    pub components: Vec<CurveOnGrid>,
    /// Full sweeps performed.
    pub iterations: usize,
    /// Sup-norm change of the final sweep.
    pub final_change: f64,
    /// Largest violation of the fixed-point system at the returned curves.
    pub fixed_point_residual: f64,
    /// Whether the stopping rule fired before the iteration cap.
    pub converged: bool,
    /// Sup-norm change after each sweep, in sweep order.
    pub sweep_changes: Vec<f64>,
    /// Grid points where the local smoother had an empty window and fell
    /// back to the intercept.
    pub empty_window_fallbacks: usize,
}

/// Everything the sweeps need, precomputed on the shared grid: smoother
/// curves, boundary-corrected densities and the pairwise integral kernels.
///
/// All integrals here use the trapezoid rule on the shared grid. The
/// marginalised pair density is computed with the same rule, which makes the
/// bracket `p_jk/p_j - p_k_over_j` annihilate constants exactly and keeps
/// every updated component centered to machine precision.
#[derive(Debug, Clone)]
pub struct BackfitEstimates {
    grid: Grid,
    trap: Vec<f64>,
    dim: usize,
    /// Nadaraya-Watson curve per axis.
    nw: Vec<Vec<f64>>,
    /// Boundary-corrected marginal density per axis.
    density: Vec<Vec<f64>>,
    /// Centering constant per axis: trapezoid of `nw * density / density`.
    centering: Vec<f64>,
    /// Row-major `m x m` bracket for each ordered pair `(j, k)`, indexed
    /// `j * dim + k`; empty vector on the diagonal.
    bracket: Vec<Vec<f64>>,
    intercept: f64,
    y_scale: f64,
    empty_window_fallbacks: usize,
}

impl BackfitEstimates {
    /// Precompute smoothers and densities for `backfit` / `backfit_sweep`.
    pub fn build(z: &TransformedDataset, y: &[f64], cfg: &BackfitConfig) -> Result<Self> {
        cfg.validate()?;
        let n = z.n();
        let d = z.dim();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "response length {} != sample size {n}",
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "response" });
        }
        let kernel = SmoothingKernel::Epanechnikov;
        let h = cfg.bandwidth;
        let m = cfg.grid.len();
        let pts = cfg.grid.points().to_vec();
        let trap = cfg.grid.trapezoid_weights();

        // Canonical observation order: sums over the data run in a sorted
        // order so results are bit-identical under input permutation.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| {
            for j in 0..d {
                let col = z.column(j).expect("axis in range");
                match col[a].partial_cmp(&col[b]).unwrap() {
                    std::cmp::Ordering::Equal => continue,
                    o => return o,
                }
            }
            y[a].partial_cmp(&y[b]).unwrap()
        });
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let col = z.column(j).expect("axis in range");
                order.iter().map(|&k| col[k]).collect()
            })
            .collect();
        let yc: Vec<f64> = order.iter().map(|&k| y[k]).collect();

        let intercept = yc.iter().sum::<f64>() / n as f64;
        let y_scale = yc.iter().fold(0.0f64, |a, v| a.max(v.abs()));

        // Boundary-normalised kernel weights per axis: weights[j][a * n + k].
        let mut weights: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut density: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut nw: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut empty_window_fallbacks = 0usize;
        for col in cols.iter() {
            let mut w = vec![0.0; m * n];
            let mut dens = vec![0.0; m];
            let mut nwj = vec![0.0; m];
            for (a, &za) in pts.iter().enumerate() {
                let mut psum = 0.0;
                let mut knum = 0.0;
                let mut kden = 0.0;
                for (k, &v) in col.iter().enumerate() {
                    let bw = unit_kernel_weight(kernel, za, v, h);
                    w[a * n + k] = bw;
                    psum += bw;
                    let raw = kernel.eval((v - za) / h);
                    knum += raw * yc[k];
                    kden += raw;
                }
                dens[a] = psum / n as f64;
                if dens[a] < 1e-12 {
                    return Err(Error::DegenerateDensity {
                        at: za,
                        mass: dens[a],
                    });
                }
                if kden > 0.0 {
                    nwj[a] = knum / kden;
                } else {
                    log::warn!(
                        "empty smoothing window at grid point {za}; falling back to intercept"
                    );
                    nwj[a] = intercept;
                    empty_window_fallbacks += 1;
                }
            }
            weights.push(w);
            density.push(dens);
            nw.push(nwj);
        }

        // Centering constants from the smoother curves.
        let centering: Vec<f64> = (0..d)
            .map(|j| {
                let num: f64 = (0..m).map(|a| trap[a] * nw[j][a] * density[j][a]).sum();
                let den: f64 = (0..m).map(|a| trap[a] * density[j][a]).sum();
                num / den
            })
            .collect();

        // Pairwise brackets.
        let mut bracket = vec![Vec::new(); d * d];
        for j in 0..d {
            for k in 0..d {
                if j == k {
                    continue;
                }
                let wj = &weights[j];
                let wk = &weights[k];
                // pair[a * m + b] = p_jk(z_a, z_b)
                let mut pair = vec![0.0; m * m];
                for a in 0..m {
                    for b in 0..m {
                        let mut s = 0.0;
                        for kk in 0..n {
                            s += wj[a * n + kk] * wk[b * n + kk];
                        }
                        pair[a * m + b] = s / n as f64;
                    }
                }
                let pj_mass: f64 = (0..m).map(|a| trap[a] * density[j][a]).sum();
                let marginalised: Vec<f64> = (0..m)
                    .map(|b| {
                        let num: f64 = (0..m).map(|a| trap[a] * pair[a * m + b]).sum();
                        num / pj_mass
                    })
                    .collect();
                let mut br = vec![0.0; m * m];
                for a in 0..m {
                    for b in 0..m {
                        br[a * m + b] = pair[a * m + b] / density[j][a] - marginalised[b];
                    }
                }
                bracket[j * d + k] = br;
            }
        }

        Ok(BackfitEstimates {
            grid: cfg.grid.clone(),
            trap,
            dim: d,
            nw,
            density,
            centering,
            bracket,
            intercept,
            y_scale,
            empty_window_fallbacks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Nadaraya-Watson curve of axis `j` on the shared grid.
    pub fn nw_curve(&self, axis: usize) -> Result<CurveOnGrid> {
        self.check_axis(axis)?;
        CurveOnGrid::new(self.grid.clone(), self.nw[axis].clone())
    }

    /// Boundary-corrected marginal density of axis `j` on the shared grid.
    pub fn density_estimate(&self, axis: usize, bandwidth: f64) -> Result<DensityEstimate> {
        self.check_axis(axis)?;
        DensityEstimate::from_values(self.grid.clone(), self.density[axis].clone(), bandwidth)
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::InvalidAxis {
                axis,
                dim: self.dim,
            });
        }
        Ok(())
    }

    /// Right-hand side of the component equation for axis `j` given the
    /// current curves: smoother minus coupling integrals minus centering.
    fn component_rhs(&self, state: &[Vec<f64>], j: usize) -> Vec<f64> {
        let m = self.grid.len();
        let d = self.dim;
        let mut acc = self.nw[j].clone();
        for (k, curve) in state.iter().enumerate().take(d) {
            if k == j {
                continue;
            }
            let br = &self.bracket[j * d + k];
            // weighted state: trapezoid quadrature over z_k
            let wk: Vec<f64> = (0..m).map(|b| self.trap[b] * curve[b]).collect();
            for (a, slot) in acc.iter_mut().enumerate() {
                let mut s = 0.0;
                for b in 0..m {
                    s += br[a * m + b] * wk[b];
                }
                *slot -= s;
            }
        }
        for v in acc.iter_mut() {
            *v -= self.centering[j];
        }
        acc
    }
}

/// One-dimensional Nadaraya-Watson estimate from a transformed sample.
pub fn nadaraya_watson_at(sample_z: &[f64], y: &[f64], h: f64, z: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidBandwidth(h));
    }
    let kernel = SmoothingKernel::Epanechnikov;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&v, &yk) in sample_z.iter().zip(y) {
        let w = kernel.eval((v - z) / h);
        num += w * yk;
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::EmptyWindow { at: z });
    }
    Ok(num / den)
}

/// Kernel-weighted response average of axis `j` at a unit-interval point.
pub fn nadaraya_watson(
    z: &TransformedDataset,
    y: &[f64],
    axis: usize,
    h: f64,
    point: f64,
) -> Result<f64> {
    nadaraya_watson_at(z.column(axis)?, y, h, point)
}

/// `int g p dz / int p dz` by trapezoid quadrature on the shared grid.
pub fn centering_constant(curve: &CurveOnGrid, density: &DensityEstimate) -> Result<f64> {
    if curve.grid != density.curve.grid {
        return Err(Error::GridMismatch(
            "curve and density must share a grid".into(),
        ));
    }
    let trap = curve.grid.trapezoid_weights();
    let num: f64 = trap
        .iter()
        .zip(&curve.values)
        .zip(&density.curve.values)
        .map(|((w, g), p)| w * g * p)
        .sum();
    let den: f64 = trap
        .iter()
        .zip(&density.curve.values)
        .map(|(w, p)| w * p)
        .sum();
    Ok(num / den)
}

/// One full Gauss-Seidel pass over all components, ascending axis order;
/// returns the sup-norm change over the pass.
pub fn backfit_sweep(state: &mut [Vec<f64>], estimates: &BackfitEstimates) -> f64 {
    let mut change = 0.0f64;
    for j in 0..estimates.dim {
        let updated = estimates.component_rhs(state, j);
        let delta = updated
            .iter()
            .zip(&state[j])
            .fold(0.0f64, |a, (u, s)| a.max((u - s).abs()));
        change = change.max(delta);
        state[j] = updated;
    }
    change
}

/// Run smooth backfitting from zero initial curves until the sup-norm change
/// falls below `tolerance * (1 + max |Y|)` or the iteration cap is reached.
/// Non-convergence is reported through the `converged` flag, not an error.
pub fn backfit(z: &TransformedDataset, y: &[f64], cfg: &BackfitConfig) -> Result<BackfitResult> {
    let estimates = BackfitEstimates::build(z, y, cfg)?;
    backfit_with(&estimates, cfg)
}

/// Same as [`backfit`] but reusing prebuilt estimates.
pub fn backfit_with(estimates: &BackfitEstimates, cfg: &BackfitConfig) -> Result<BackfitResult> {
    cfg.validate()?;
    let d = estimates.dim;
    let m = estimates.grid.len();
    let threshold = cfg.tolerance * (1.0 + estimates.y_scale);
    let mut state: Vec<Vec<f64>> = vec![vec![0.0; m]; d];
    let mut sweep_changes = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut final_change = f64::INFINITY;
    while iterations < cfg.max_iterations {
        let change = backfit_sweep(&mut state, estimates);
        iterations += 1;
        sweep_changes.push(change);
        final_change = change;
        if change < threshold {
            converged = true;
            break;
        }
    }
    let residual = fixed_point_residual_values(&state, estimates);
    let components = state
        .into_iter()
        .map(|values| CurveOnGrid::new(estimates.grid.clone(), values))
        .collect::<Result<Vec<_>>>()?;
    Ok(BackfitResult {
        intercept: estimates.intercept,
        components,
        iterations,
        final_change,
        fixed_point_residual: residual,
        converged,
        sweep_changes,
        empty_window_fallbacks: estimates.empty_window_fallbacks,
    })
}

fn fixed_point_residual_values(state: &[Vec<f64>], estimates: &BackfitEstimates) -> f64 {
    let mut residual = 0.0f64;
    for j in 0..estimates.dim {
        let rhs = estimates.component_rhs(state, j);
        for (a, r) in rhs.iter().enumerate() {
            residual = residual.max((state[j][a] - r).abs());
        }
    }
    residual
}

/// Largest violation, over components and grid points, of the coupled
/// component system evaluated at the returned curves.
pub fn fixed_point_residual(result: &BackfitResult, estimates: &BackfitEstimates) -> f64 {
    let state: Vec<Vec<f64>> = result
        .components
        .iter()
        .map(|c| c.values.clone())
        .collect();
    fixed_point_residual_values(&state, estimates)
}

/// Component curve of axis `j` evaluated on the original predictor scale:
/// the unit-interval curve composed with the marginal ECDF, linearly
/// interpolated between grid points.
pub fn compose_with_ecdf(
    result: &BackfitResult,
    data: &Dataset,
    axis: usize,
    x: f64,
) -> Result<f64> {
    let curve = result.components.get(axis).ok_or(Error::InvalidAxis {
        axis,
        dim: result.components.len(),
    })?;
    let z = ecdf_at(data, axis, x)?;
    Ok(curve.eval(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::ecdf_transform;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn make_dataset(n: usize, d: usize, seed: u64, f: impl Fn(&[f64], f64) -> f64) -> Dataset {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|k| {
                let xs: Vec<f64> = cols.iter().map(|c| c[k]).collect();
                let eps: f64 = rng.gen_range(-0.5..0.5);
                f(&xs, eps)
            })
            .collect();
        Dataset::new(cols, y).unwrap()
    }

    #[test]
    fn nw_constant_response() {
        let d = make_dataset(50, 1, 3, |_, _| 4.2);
        let z = ecdf_transform(&d).unwrap();
        for &p in &[0.1, 0.5, 0.9] {
            assert_relative_eq!(
                nadaraya_watson(&z, d.response(), 0, 0.3, p).unwrap(),
                4.2,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn nw_symmetric_pair_averages() {
        // two points equidistant from z with responses 0 and 4
        let v = nadaraya_watson_at(&[0.4, 0.6], &[0.0, 4.0], 0.3, 0.5).unwrap();
        assert_relative_eq!(v, 2.0);
        // single observation inside the window
        let v = nadaraya_watson_at(&[0.5], &[7.0], 0.2, 0.45).unwrap();
        assert_relative_eq!(v, 7.0);
        // empty window signals bandwidth too small
        assert!(matches!(
            nadaraya_watson_at(&[0.9], &[1.0], 0.05, 0.1),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn centering_constant_examples() {
        let grid = Grid::unit_default();
        let flat =
            DensityEstimate::from_values(grid.clone(), vec![1.0; grid.len()], 0.1).unwrap();
        // constant curve -> the constant
        let c = CurveOnGrid::new(grid.clone(), vec![3.0; grid.len()]).unwrap();
        assert_relative_eq!(centering_constant(&c, &flat).unwrap(), 3.0, epsilon = 1e-12);
        // identity curve against a flat density -> 1/2
        let idv: Vec<f64> = grid.points().to_vec();
        let idc = CurveOnGrid::new(grid.clone(), idv).unwrap();
        assert_relative_eq!(centering_constant(&idc, &flat).unwrap(), 0.5, epsilon = 1e-12);
        // odd curve about 1/2 with symmetric density -> 0
        let odd: Vec<f64> = grid.points().iter().map(|z| z - 0.5).collect();
        let oddc = CurveOnGrid::new(grid.clone(), odd).unwrap();
        let sym: Vec<f64> = grid
            .points()
            .iter()
            .map(|z| 1.0 + (z - 0.5).powi(2))
            .collect();
        let symd = DensityEstimate::from_values(grid, sym, 0.1).unwrap();
        assert!(centering_constant(&oddc, &symd).unwrap().abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_single_sweep_is_fixed_point() {
        let d = make_dataset(120, 1, 5, |x, e| x[0].sin() + e);
        let z = ecdf_transform(&d).unwrap();
        let mut cfg = BackfitConfig::new(0.2).unwrap();
        cfg.max_iterations = 1;
        let est = BackfitEstimates::build(&z, d.response(), &cfg).unwrap();
        let res = backfit_with(&est, &cfg).unwrap();
        assert!(fixed_point_residual(&res, &est) < 1e-12);
        // and equals the NW curve minus its centering constant
        let nw = est.nw_curve(0).unwrap();
        let dens = est.density_estimate(0, cfg.bandwidth).unwrap();
        let c0 = centering_constant(&nw, &dens).unwrap();
        for (a, v) in res.components[0].values.iter().enumerate() {
            assert_relative_eq!(*v, nw.values[a] - c0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_response_yields_zero_components() {
        let d = make_dataset(100, 2, 7, |_, _| 2.5);
        let z = ecdf_transform(&d).unwrap();
        let cfg = BackfitConfig::new(0.25).unwrap();
        let res = backfit(&z, d.response(), &cfg).unwrap();
        assert_relative_eq!(res.intercept, 2.5, max_relative = 1e-12);
        for c in &res.components {
            assert!(c.sup_norm() < 1e-10, "component not null: {}", c.sup_norm());
        }
        assert!(res.converged);
    }

    #[test]
    fn zero_response_zero_after_one_sweep() {
        let d = make_dataset(60, 2, 9, |_, _| 0.0);
        let z = ecdf_transform(&d).unwrap();
        let mut cfg = BackfitConfig::new(0.3).unwrap();
        cfg.max_iterations = 1;
        let res = backfit(&z, d.response(), &cfg).unwrap();
        for c in &res.components {
            assert!(c.sup_norm() < 1e-14);
        }
    }

    #[test]
    fn components_stay_centered_every_sweep() {
        let d = make_dataset(300, 2, 11, |x, e| x[0] + (2.0 * x[1]).sin() + e);
        let z = ecdf_transform(&d).unwrap();
        let cfg = BackfitConfig::new(0.2).unwrap();
        let est = BackfitEstimates::build(&z, d.response(), &cfg).unwrap();
        let y_scale = d.response().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut state = vec![vec![0.0; cfg.grid.len()]; 2];
        for _ in 0..5 {
            backfit_sweep(&mut state, &est);
            for j in 0..2 {
                let curve = CurveOnGrid::new(cfg.grid.clone(), state[j].clone()).unwrap();
                let dens = est.density_estimate(j, cfg.bandwidth).unwrap();
                let c = centering_constant(&curve, &dens).unwrap();
                assert!(
                    c.abs() < 1e-6 * y_scale.max(1.0),
                    "axis {j} centering {c}"
                );
            }
        }
    }

    #[test]
    fn converged_fixed_point_residual_small() {
        let d = make_dataset(400, 2, 13, |x, e| x[0].powi(2) + x[1] + e);
        let z = ecdf_transform(&d).unwrap();
        let mut cfg = BackfitConfig::new(0.2).unwrap();
        cfg.tolerance = 1e-10;
        let est = BackfitEstimates::build(&z, d.response(), &cfg).unwrap();
        let res = backfit_with(&est, &cfg).unwrap();
        assert!(res.converged);
        assert!(res.fixed_point_residual < 1e-8, "{}", res.fixed_point_residual);
        // unconverged run has a strictly larger residual
        let mut early = cfg.clone();
        early.max_iterations = 1;
        let res1 = backfit_with(&est, &early).unwrap();
        assert!(res1.fixed_point_residual > res.fixed_point_residual);
    }

    #[test]
    fn geometric_convergence_tail() {
        let d = make_dataset(500, 2, 17, |x, e| (3.0 * x[0]).sin() + x[1].abs() + e);
        let z = ecdf_transform(&d).unwrap();
        let cfg = BackfitConfig::new(0.15).unwrap();
        let res = backfit(&z, d.response(), &cfg).unwrap();
        assert!(res.converged);
        let ch = &res.sweep_changes;
        assert!(ch.len() >= 4, "expected several sweeps, got {}", ch.len());
        for w in ch[ch.len() - 3..].windows(2) {
            assert!(w[1] < w[0], "change ratios not contracting: {ch:?}");
        }
    }

    #[test]
    fn permutation_equivariance_bit_for_bit() {
        let d = make_dataset(150, 2, 19, |x, e| x[0] + x[1] * x[1] + e);
        let cfg = BackfitConfig::new(0.25).unwrap();
        let z = ecdf_transform(&d).unwrap();
        let base = backfit(&z, d.response(), &cfg).unwrap();

        let mut idx: Vec<usize> = (0..d.n()).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        idx.shuffle(&mut rng);
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|j| idx.iter().map(|&k| d.column(j).unwrap()[k]).collect())
            .collect();
        let y: Vec<f64> = idx.iter().map(|&k| d.response()[k]).collect();
        let perm = Dataset::new(cols, y).unwrap();
        let zp = ecdf_transform(&perm).unwrap();
        let permuted = backfit(&zp, perm.response(), &cfg).unwrap();

        assert_eq!(base.intercept.to_bits(), permuted.intercept.to_bits());
        for (a, b) in base.components.iter().zip(&permuted.components) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn linear_in_response() {
        let d1 = make_dataset(200, 2, 23, |x, e| x[0] + e);
        let y2: Vec<f64> = d1
            .response()
            .iter()
            .enumerate()
            .map(|(k, _)| ((k as f64) * 0.37).sin())
            .collect();
        let cols: Vec<Vec<f64>> = (0..2).map(|j| d1.column(j).unwrap().to_vec()).collect();
        let ysum: Vec<f64> = d1.response().iter().zip(&y2).map(|(a, b)| a + b).collect();
        let z = ecdf_transform(&d1).unwrap();
        let mut cfg = BackfitConfig::new(0.25).unwrap();
        cfg.tolerance = 1e-13;
        let r1 = backfit(&z, d1.response(), &cfg).unwrap();
        let r2 = backfit(&z, &y2, &cfg).unwrap();
        let rsum = backfit(&z, &ysum, &cfg).unwrap();
        let _ = cols;
        assert_relative_eq!(r1.intercept + r2.intercept, rsum.intercept, epsilon = 1e-10);
        for j in 0..2 {
            for a in 0..cfg.grid.len() {
                let lhs = r1.components[j].values[a] + r2.components[j].values[a];
                let rhs = rsum.components[j].values[a];
                assert!((lhs - rhs).abs() < 1e-8, "axis {j} point {a}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn independent_design_components_close_to_marginal_smoother() {
        let d = make_dataset(2000, 2, 29, |x, e| {
            (x[0] - 0.0) + (2.0 * std::f64::consts::PI * x[1] / 4.0).sin() + 0.2 * e
        });
        let z = ecdf_transform(&d).unwrap();
        let cfg = BackfitConfig::new(0.2).unwrap();
        let est = BackfitEstimates::build(&z, d.response(), &cfg).unwrap();
        let res = backfit_with(&est, &cfg).unwrap();
        for j in 0..2 {
            let nw = est.nw_curve(j).unwrap();
            let dens = est.density_estimate(j, cfg.bandwidth).unwrap();
            let c = centering_constant(&nw, &dens).unwrap();
            let centered: Vec<f64> = nw.values.iter().map(|v| v - c).collect();
            let sup = res.components[j]
                .values
                .iter()
                .zip(&centered)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(sup < 0.05, "axis {j} cross-terms too large: {sup}");
        }
    }

    #[test]
    fn recovers_additive_truth_on_unit_cube() {
        // noiseless additive data on nearly uniform transformed marginals
        let n = 2000;
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let g1 = |z: f64| z - 0.5;
        let g2 = |z: f64| (2.0 * std::f64::consts::PI * z).sin();
        let y: Vec<f64> = (0..n).map(|k| g1(cols[0][k]) + g2(cols[1][k])).collect();
        let data = Dataset::new(cols, y).unwrap();
        let z = ecdf_transform(&data).unwrap();
        let cfg = BackfitConfig::new(0.1).unwrap();
        let res = backfit(&z, data.response(), &cfg).unwrap();
        assert!(res.converged);
        // compare on the interior to sidestep boundary smoothing bias;
        // the ECDF warp is the identity here up to 1/(n+1) jitter
        let pts = cfg.grid.points();
        for (a, &zp) in pts.iter().enumerate() {
            if !(0.1..=0.9).contains(&zp) {
                continue;
            }
            assert!(
                (res.components[0].values[a] - g1(zp)).abs() < 0.1,
                "component 1 at {zp}"
            );
            assert!(
                (res.components[1].values[a] - g2(zp)).abs() < 0.1,
                "component 2 at {zp}"
            );
        }
    }

    #[test]
    fn compose_with_ecdf_basics() {
        let d = Dataset::new(vec![vec![1.0, 2.0, 3.0, 4.0]], vec![0.0; 4]).unwrap();
        let grid = Grid::unit_default();
        let values: Vec<f64> = grid.points().to_vec(); // identity curve
        let res = BackfitResult {
            intercept: 0.0,
            components: vec![CurveOnGrid::new(grid, values).unwrap()],
            iterations: 1,
            final_change: 0.0,
            fixed_point_residual: 0.0,
            converged: true,
            sweep_changes: vec![0.0],
            empty_window_fallbacks: 0,
        };
        // below all observations: ECDF is 0, curve evaluated at the 0 edge
        assert_relative_eq!(compose_with_ecdf(&res, &d, 0, -10.0).unwrap(), 0.0);
        // median observation: rank 2 of 4 -> 2/5
        assert_relative_eq!(compose_with_ecdf(&res, &d, 0, 2.0).unwrap(), 0.4, epsilon = 1e-12);
        // constant curve returns the constant everywhere
        let c = BackfitResult {
            components: vec![CurveOnGrid::new(Grid::unit_default(), vec![5.5; 101]).unwrap()],
            ..res
        };
        for &x in &[-3.0, 0.0, 2.5, 99.0] {
            assert_relative_eq!(compose_with_ecdf(&c, &d, 0, x).unwrap(), 5.5);
        }
    }
}
