//! Empirical distribution transforms and kernel density estimators: marginal
//! ECDF/quantile maps, kernel density estimation on the real line, and the
//! boundary-corrected unit-interval densities consumed by the backfitting
//! engine.

use crate::grid::{CurveOnGrid, Grid};
use crate::kernels::SmoothingKernel;
use crate::quad::SimpsonRule;
use crate::{Error, Result};

/// Raw observations: `d` predictor columns of length `n` and a response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    response: Vec<f64>,
}

impl Dataset {
    pub fn new(columns: Vec<Vec<f64>>, response: Vec<f64>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::DimensionMismatch("need at least one predictor".into()));
        }
        let n = response.len();
        if n < 2 {
            return Err(Error::TooFewObservations { min: 2, got: n });
        }
        for col in &columns {
            if col.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "predictor column length {} != response length {}",
                    col.len(),
                    n
                )));
            }
        }
        let finite = response.iter().all(|v| v.is_finite())
            && columns.iter().all(|c| c.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::NonFinite { context: "dataset" });
        }
        Ok(Dataset { columns, response })
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, axis: usize) -> Result<&[f64]> {
        self.columns
            .get(axis)
            .map(|c| c.as_slice())
            .ok_or(Error::InvalidAxis {
                axis,
                dim: self.dim(),
            })
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }
}

/// Predictors mapped to the open unit cube by their marginal ECDFs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedDataset {
    columns: Vec<Vec<f64>>,
}

impl TransformedDataset {
    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, axis: usize) -> Result<&[f64]> {
        self.columns
            .get(axis)
            .map(|c| c.as_slice())
            .ok_or(Error::InvalidAxis {
                axis,
                dim: self.dim(),
            })
    }
}

/// Rank transform `z = #{x_m <= x} / (n + 1)` applied column by column.
///
/// Ties count with `<=`, so tied observations share a rank. Every value lands
/// in `[1/(n+1), n/(n+1)]` and within-column ordering is preserved.
pub fn ecdf_transform(data: &Dataset) -> Result<TransformedDataset> {
    let n = data.n() as f64;
    let mut columns = Vec::with_capacity(data.dim());
    for j in 0..data.dim() {
        let col = data.column(j)?;
        let mut sorted = col.to_vec();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let z = col
            .iter()
            .map(|&x| sorted.partition_point(|&s| s <= x) as f64 / (n + 1.0))
            .collect();
        columns.push(z);
    }
    Ok(TransformedDataset { columns })
}

/// ECDF of column `axis` evaluated at an arbitrary point, on the same
/// `1/(n+1)` scale as [`ecdf_transform`].
pub fn ecdf_at(data: &Dataset, axis: usize, x: f64) -> Result<f64> {
    let col = data.column(axis)?;
    let count = col.iter().filter(|&&v| v <= x).count() as f64;
    Ok(count / (data.n() as f64 + 1.0))
}

/// Left-continuous generalized inverse of the ECDF of column `axis`.
pub fn empirical_quantile(data: &Dataset, axis: usize, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level must lie in (0, 1), got {u}"
        )));
    }
    let col = data.column(axis)?;
    let mut sorted = col.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let k = (u * n as f64).ceil() as usize;
    Ok(sorted[k.clamp(1, n) - 1])
}

/// Kernel density estimate from a raw sample at a single point.
pub fn kde_at(sample: &[f64], bandwidth: f64, x: f64) -> Result<f64> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidBandwidth(bandwidth));
    }
    let kernel = SmoothingKernel::Epanechnikov;
    let sum: f64 = sample.iter().map(|&v| kernel.eval((v - x) / bandwidth)).sum();
    Ok(sum / (sample.len() as f64 * bandwidth))
}

/// Marginal density estimate of predictor column `axis`.
pub fn kde_marginal(data: &Dataset, axis: usize, bandwidth: f64, x: f64) -> Result<f64> {
    kde_at(data.column(axis)?, bandwidth, x)
}

/// Normal-reference bandwidth `1.06 * sigma_hat * n^(-1/5)` for [`kde_marginal`].
pub fn normal_reference_bandwidth(sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

/// A density tabulated on a grid together with the bandwidth that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub curve: CurveOnGrid,
    pub bandwidth: f64,
}

impl DensityEstimate {
    pub fn from_values(grid: Grid, values: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if values.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArgument(
                "density values must be nonnegative".into(),
            ));
        }
        Ok(DensityEstimate {
            curve: CurveOnGrid::new(grid, values)?,
            bandwidth,
        })
    }
}

/// Mass of the scaled kernel centred at datum `v` that falls inside `[0, 1]`:
/// the closed form of `int_0^1 L((w - v)/h) dw`.
pub fn unit_kernel_mass(kernel: SmoothingKernel, v: f64, h: f64) -> f64 {
    h * (kernel.cdf((1.0 - v) / h) - kernel.cdf(-v / h))
}

fn check_unit_point(z: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::InvalidArgument(format!(
            "evaluation point must lie in [0, 1], got {z}"
        )));
    }
    Ok(())
}

/// Boundary-normalized kernel weight `L((v - z)/h) / int_0^1 L((w - v)/h) dw`.
///
/// Dividing by the truncated mass at the datum keeps every kernel bump a unit
/// mass over `[0, 1]`, so marginal and joint densities built from these
/// weights integrate to one exactly and are mutually consistent.
pub fn unit_kernel_weight(kernel: SmoothingKernel, z: f64, v: f64, h: f64) -> f64 {
    let num = kernel.eval((v - z) / h);
    if num == 0.0 {
        return 0.0;
    }
    num / unit_kernel_mass(kernel, v, h)
}

/// Boundary-corrected marginal density on the unit interval from a
/// transformed sample.
pub fn kde_unit_marginal_at(sample_z: &[f64], h: f64, z: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidBandwidth(h));
    }
    check_unit_point(z)?;
    let kernel = SmoothingKernel::Epanechnikov;
    let sum: f64 = sample_z
        .iter()
        .map(|&v| unit_kernel_weight(kernel, z, v, h))
        .sum();
    Ok(sum / sample_z.len() as f64)
}

/// Marginal of the common unit-cube density estimator along `axis`.
pub fn kde_unit_marginal(z: &TransformedDataset, axis: usize, h: f64, point: f64) -> Result<f64> {
    kde_unit_marginal_at(z.column(axis)?, h, point)
}

/// Product-kernel boundary-corrected pair density on the unit square.
pub fn kde_unit_joint_at(zj: &[f64], zk: &[f64], h: f64, z_j: f64, z_k: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidBandwidth(h));
    }
    check_unit_point(z_j)?;
    check_unit_point(z_k)?;
    let kernel = SmoothingKernel::Epanechnikov;
    let sum: f64 = zj
        .iter()
        .zip(zk)
        .map(|(&vj, &vk)| {
            unit_kernel_weight(kernel, z_j, vj, h) * unit_kernel_weight(kernel, z_k, vk, h)
        })
        .sum();
    Ok(sum / zj.len() as f64)
}

/// `(axis_j, axis_k)` marginal of the common unit-cube density estimator.
pub fn kde_unit_joint(
    z: &TransformedDataset,
    axis_j: usize,
    axis_k: usize,
    h: f64,
    z_j: f64,
    z_k: f64,
) -> Result<f64> {
    if axis_j == axis_k {
        return Err(Error::InvalidArgument(format!(
            "pair density needs distinct axes, got ({axis_j}, {axis_k})"
        )));
    }
    kde_unit_joint_at(z.column(axis_j)?, z.column(axis_k)?, h, z_j, z_k)
}

/// Pair density integrated over its first argument, normalised by the mass of
/// the first marginal: `int p_jk(z_j, z_k) dz_j / int p_j(z_j) dz_j`.
///
/// Both integrals run over `[0, 1]` by composite Simpson with `panels`
/// uniform panels.
pub fn marginal_over_j_at(zj: &[f64], zk: &[f64], h: f64, z_k: f64, panels: usize) -> Result<f64> {
    check_unit_point(z_k)?;
    let rule = SimpsonRule::new(0.0, 1.0, panels);
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, w) in rule.iter() {
        num += w * kde_unit_joint_at(zj, zk, h, x, z_k)?;
        den += w * kde_unit_marginal_at(zj, h, x)?;
    }
    if den < 1e-12 {
        return Err(Error::DegenerateDensity { at: z_k, mass: den });
    }
    Ok(num / den)
}

/// Spec'd wrapper of [`marginal_over_j_at`] on a transformed dataset.
pub fn marginal_over_j(
    z: &TransformedDataset,
    axis_j: usize,
    axis_k: usize,
    h: f64,
    z_k: f64,
) -> Result<f64> {
    if axis_j == axis_k {
        return Err(Error::InvalidArgument(format!(
            "marginalisation needs distinct axes, got ({axis_j}, {axis_k})"
        )));
    }
    marginal_over_j_at(z.column(axis_j)?, z.column(axis_k)?, h, z_k, 8192)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::quad::simpson;

    fn dataset_1d(xs: &[f64]) -> Dataset {
        let y = vec![0.0; xs.len()];
        Dataset::new(vec![xs.to_vec()], y).unwrap()
    }

    #[test]
    fn ecdf_transform_rank_counts() {
        let d = Dataset::new(vec![vec![5.0, 1.0, 3.0]], vec![0.0; 3]).unwrap();
        let z = ecdf_transform(&d).unwrap();
        assert_eq!(z.column(0).unwrap(), &[0.75, 0.25, 0.5]);
    }

    #[test]
    fn ecdf_transform_two_points_and_ties() {
        let d = Dataset::new(vec![vec![7.0, -1.0]], vec![0.0; 2]).unwrap();
        let z = ecdf_transform(&d).unwrap();
        assert_eq!(z.column(0).unwrap(), &[2.0 / 3.0, 1.0 / 3.0]);

        let tied = Dataset::new(vec![vec![2.0, 2.0]], vec![0.0; 2]).unwrap();
        let z = ecdf_transform(&tied).unwrap();
        assert_eq!(z.column(0).unwrap(), &[2.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn ecdf_rejects_small_or_nonfinite() {
        assert!(Dataset::new(vec![vec![1.0]], vec![0.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0, f64::NAN]], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn quantile_order_statistics() {
        let d = dataset_1d(&[1.0, 2.0, 3.0]);
        assert_eq!(empirical_quantile(&d, 0, 0.5).unwrap(), 2.0);
        // just above 1/(n+1) with n = 3 lands on the smallest observation
        assert_eq!(empirical_quantile(&d, 0, 0.26).unwrap(), 1.0);
        let c = dataset_1d(&[4.2, 4.2, 4.2]);
        for &u in &[0.1, 0.5, 0.9] {
            assert_eq!(empirical_quantile(&c, 0, u).unwrap(), 4.2);
        }
        assert!(empirical_quantile(&d, 0, 0.0).is_err());
        assert!(empirical_quantile(&d, 0, 1.0).is_err());
    }

    #[test]
    fn kde_single_point_peak() {
        let v = kde_at(&[2.5], 0.3, 2.5).unwrap();
        assert_relative_eq!(v, 0.75 / 0.3);
        // farther than one bandwidth from the only point
        assert_eq!(kde_at(&[2.5], 0.3, 3.0).unwrap(), 0.0);
        assert!(kde_at(&[2.5], 0.0, 2.5).is_err());
    }

    #[test]
    fn kde_mass_conservation() {
        let sample: Vec<f64> = (0..40).map(|i| (i as f64 * 0.618).sin() * 2.0).collect();
        let h = 0.4;
        let mass = simpson(|x| kde_at(&sample, h, x).unwrap(), -3.5, 3.5, 4096);
        assert!((mass - 1.0).abs() < 1e-3, "mass {mass}");
    }

    #[test]
    fn unit_kde_single_interior_point() {
        // boundary factor is exactly 1 for z in [h, 1-h]
        let v = kde_unit_marginal_at(&[0.5], 0.2, 0.5).unwrap();
        assert_relative_eq!(v, 0.75 / 0.2, max_relative = 1e-12);
    }

    #[test]
    fn unit_kde_integrates_to_one() {
        let sample = [0.02, 0.1, 0.37, 0.55, 0.91, 0.99];
        let h = 0.25;
        let mass = simpson(
            |z| kde_unit_marginal_at(&sample, h, z).unwrap(),
            0.0,
            1.0,
            16384,
        );
        assert!((mass - 1.0).abs() < 1e-8, "mass {mass}");
    }

    #[test]
    fn unit_kde_flat_on_uniform_grid_sample() {
        let n = 200;
        let sample: Vec<f64> = (1..=n).map(|k| k as f64 / (n as f64 + 1.0)).collect();
        let h = 0.1;
        for &z in &[0.2, 0.5, 0.8] {
            let v = kde_unit_marginal_at(&sample, h, z).unwrap();
            assert!((v - 1.0).abs() < 0.1, "p_j({z}) = {v}");
        }
    }

    #[test]
    fn joint_normalisation_and_marginal_consistency() {
        let zj = [0.05, 0.3, 0.5, 0.72, 0.94];
        let zk = [0.88, 0.12, 0.44, 0.6, 0.27];
        let h = 0.3;
        // two-dimensional mass
        let mass = simpson(
            |a| {
                simpson(
                    |b| kde_unit_joint_at(&zj, &zk, h, a, b).unwrap(),
                    0.0,
                    1.0,
                    2048,
                )
            },
            0.0,
            1.0,
            2048,
        );
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
        // integrating out the first axis recovers the second marginal
        for &zq in &[0.0, 0.31, 0.5, 0.77, 1.0] {
            let lhs = simpson(
                |a| kde_unit_joint_at(&zj, &zk, h, a, zq).unwrap(),
                0.0,
                1.0,
                8192,
            );
            let rhs = kde_unit_marginal_at(&zk, h, zq).unwrap();
            assert!((lhs - rhs).abs() < 1e-6, "at {zq}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn marginal_over_j_reduces_to_marginal() {
        let zj = [0.15, 0.42, 0.61, 0.88];
        let zk = [0.52, 0.19, 0.77, 0.34];
        let h = 0.28;
        for &zq in &[0.1, 0.5, 0.9] {
            let v = marginal_over_j_at(&zj, &zk, h, zq, 8192).unwrap();
            let pk = kde_unit_marginal_at(&zk, h, zq).unwrap();
            assert!((v - pk).abs() < 1e-6, "at {zq}: {v} vs {pk}");
        }
        // single datum: kernel bump centred at the datum, checked by quadrature
        let v = marginal_over_j_at(&[0.5], &[0.4], 0.2, 0.4, 4096).unwrap();
        assert_relative_eq!(v, 0.75 / 0.2, max_relative = 1e-9);
        // mass over z_k is one
        let mass = simpson(
            |zq| marginal_over_j_at(&zj, &zk, h, zq, 1024).unwrap(),
            0.0,
            1.0,
            1024,
        );
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn joint_requires_distinct_axes() {
        let d = Dataset::new(
            vec![vec![1.0, 2.0, 3.0], vec![4.0, 2.0, 0.5]],
            vec![0.0; 3],
        )
        .unwrap();
        let z = ecdf_transform(&d).unwrap();
        assert!(kde_unit_joint(&z, 1, 1, 0.2, 0.5, 0.5).is_err());
        assert!(kde_unit_joint(&z, 0, 1, 0.2, 1.5, 0.5).is_err());
        assert!(marginal_over_j(&z, 0, 0, 0.2, 0.5).is_err());
    }
}
