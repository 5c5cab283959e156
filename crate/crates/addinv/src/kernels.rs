//! Kernel functions and characteristic-function machinery: the smoothing
//! kernel used by all real-space estimators, the Fourier-domain deconvolution
//! kernel, and the known convolution operator with its marginals.

use serde::{Deserialize, Serialize};

use crate::quad::simpson;
use crate::{Error, Result};

/// Compactly supported smoothing kernel on `[-1, 1]`.
///
/// Both the density smoothers and the marginal regression smoother use the
/// same kernel family; only Epanechnikov is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SmoothingKernel {
    #[default]
    Epanechnikov,
}

impl SmoothingKernel {
    /// Kernel value; zero outside `[-1, 1]`.
    pub fn eval(self, u: f64) -> f64 {
        match self {
            SmoothingKernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Antiderivative normalised so that `cdf(-1) = 0` and `cdf(1) = 1`.
    pub fn cdf(self, u: f64) -> f64 {
        match self {
            SmoothingKernel::Epanechnikov => {
                let u = u.clamp(-1.0, 1.0);
                0.25 * (2.0 + 3.0 * u - u * u * u)
            }
        }
    }
}

/// Deconvolution kernel, realised purely through its Fourier transform.
///
/// The transform is 1 on `[-b, b]`, decays smoothly on `b < |w| <= 1`
/// (raised-cosine taper) and vanishes beyond 1. With `flat_radius = 1` it is
/// exactly the indicator of `[-1, 1]`; the time-domain kernel is never
/// evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeconvKernel {
    flat_radius: f64,
}

impl Default for DeconvKernel {
    fn default() -> Self {
        DeconvKernel { flat_radius: 1.0 }
    }
}

impl DeconvKernel {
    pub fn new(flat_radius: f64) -> Result<Self> {
        if !(flat_radius > 0.0 && flat_radius <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "flat radius must lie in (0, 1], got {flat_radius}"
            )));
        }
        Ok(DeconvKernel { flat_radius })
    }

    pub fn flat_radius(&self) -> f64 {
        self.flat_radius
    }

    /// Fourier transform of the kernel.
    pub fn fourier(&self, w: f64) -> f64 {
        let a = w.abs();
        let b = self.flat_radius;
        if a <= b {
            1.0
        } else if a >= 1.0 {
            0.0
        } else {
            // raised-cosine taper from 1 at |w| = b to 0 at |w| = 1
            let t = (a - b) / (1.0 - b);
            let c = (0.5 * std::f64::consts::PI * t).cos();
            c * c
        }
    }
}

/// The known convolution operator, restricted to product families whose
/// marginals admit closed-form Fourier transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConvolutionFamily {
    /// `psi(t) = prod_j (lambda_j / 2) exp(-lambda_j |t_j|)`.
    ///
    /// `ill_posedness` stores the polynomial decay order of the reciprocal
    /// marginal transforms (2 for every axis of this family).
    LaplaceProduct {
        decay: Vec<f64>,
        ill_posedness: Vec<f64>,
    },
}

impl ConvolutionFamily {
    /// Laplace product family with the given per-axis decay rates.
    pub fn laplace_product(decay: Vec<f64>) -> Result<Self> {
        if decay.is_empty() {
            return Err(Error::InvalidArgument("family needs dimension >= 1".into()));
        }
        if decay.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidArgument(
                "decay rates must be positive and finite".into(),
            ));
        }
        let d = decay.len();
        Ok(ConvolutionFamily::LaplaceProduct {
            decay,
            ill_posedness: vec![2.0; d],
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvolutionFamily::LaplaceProduct { decay, .. } => decay.len(),
        }
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim() {
            return Err(Error::InvalidAxis {
                axis,
                dim: self.dim(),
            });
        }
        Ok(())
    }

    pub fn decay(&self, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        match self {
            ConvolutionFamily::LaplaceProduct { decay, .. } => Ok(decay[axis]),
        }
    }

    /// Polynomial ill-posedness order of axis `axis`.
    pub fn ill_posedness(&self, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        match self {
            ConvolutionFamily::LaplaceProduct { ill_posedness, .. } => Ok(ill_posedness[axis]),
        }
    }

    /// Marginal density of the operator along `axis`: the `(d-1)`-fold
    /// integral over the other axes collapses for product families.
    pub fn marginal(&self, axis: usize, t: f64) -> Result<f64> {
        let lambda = self.decay(axis)?;
        Ok(0.5 * lambda * (-lambda * t.abs()).exp())
    }

    /// Fourier transform of the marginal along `axis`:
    /// `lambda^2 / (lambda^2 + w^2)` - real, positive, even.
    pub fn fourier_marginal(&self, axis: usize, w: f64) -> Result<f64> {
        let lambda = self.decay(axis)?;
        let l2 = lambda * lambda;
        Ok(l2 / (l2 + w * w))
    }
}

/// Power of the transform ratio integrated by [`ratio_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioPower {
    One,
    Two,
}

/// Quadrature of `|Phi_K(w)|^p / |Phi_psi_axis(w/h)|^p` over `[-1, 1]`.
///
/// This is the operator-dependent constant controlling the variance scale of
/// the Fourier inversion; composite Simpson with `panels` uniform panels
/// (2048 by default in the inversion configuration).
pub fn ratio_integral(
    fam: &ConvolutionFamily,
    axis: usize,
    kernel: &DeconvKernel,
    h: f64,
    power: RatioPower,
    panels: usize,
) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidBandwidth(h));
    }
    fam.check_axis(axis)?;
    let p = match power {
        RatioPower::One => 1,
        RatioPower::Two => 2,
    };
    let value = simpson(
        |w| {
            let num = kernel.fourier(w).abs().powi(p);
            let den = fam
                .fourier_marginal(axis, w / h)
                .expect("axis checked")
                .abs()
                .powi(p);
            num / den
        },
        -1.0,
        1.0,
        panels,
    );
    Ok(value)
}
