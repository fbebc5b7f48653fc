//! Even (cosine-carrier) Gabor kernels and oriented filter banks.
//!
//! Kernel coordinates follow the raster convention used for finger-vein ROIs:
//! `x` is the row offset and `y` the column offset from the kernel center, so
//! the carrier `cos(2π f0 x_θ)` at `θ = 0` oscillates down the rows and
//! responds to horizontal lines. A line detected by orientation `θ` runs along
//! `(dx, dy) = (cos θ, -sin θ)` in column/row image coordinates.
//!
//! Every kernel is made zero-mean after sampling, so flat image regions produce
//! exactly zero response.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_F0: f64 = 0.1;
pub const DEFAULT_SIGMA: f64 = 4.0;
pub const DEFAULT_HALF_SIZE: usize = 8;

/// Parameters shared by every kernel of a bank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankParams {
    /// Carrier frequency in cycles per pixel.
    pub f0: f64,
    /// Gaussian envelope standard deviation in pixels.
    pub sigma: f64,
    /// Kernel half-extent; the kernel side is `2 * half_size + 1`.
    pub half_size: usize,
}

impl Default for BankParams {
    fn default() -> Self {
        Self {
            f0: DEFAULT_F0,
            sigma: DEFAULT_SIGMA,
            half_size: DEFAULT_HALF_SIZE,
        }
    }
}

impl BankParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "f0 must be > 0, got {}",
                self.f0
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.half_size < 1 {
            return Err(Error::InvalidParameter("half_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        2 * self.half_size + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    pub theta: f64,
    pub f0: f64,
    pub sigma: f64,
    pub half_size: usize,
}

impl GaborParams {
    pub fn new(theta: f64, bank: BankParams) -> Self {
        Self {
            theta,
            f0: bank.f0,
            sigma: bank.sigma,
            half_size: bank.half_size,
        }
    }

    pub fn bank_params(&self) -> BankParams {
        BankParams {
            f0: self.f0,
            sigma: self.sigma,
            half_size: self.half_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_angle(self.theta)?;
        self.bank_params().validate()
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if (0.0..PI).contains(&theta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "orientation {theta} outside [0, pi)"
        )))
    }
}

/// Square odd-sided filter, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    side: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Wraps arbitrary weights; `side` must be odd and match the buffer.
    pub fn from_weights(side: usize, weights: Vec<f64>) -> Result<Self> {
        if side.is_multiple_of(2) || weights.len() != side * side {
            return Err(Error::InvalidParameter(format!(
                "kernel side {side} must be odd and match {} weights",
                weights.len()
            )));
        }
        Ok(Self { side, weights })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn half(&self) -> usize {
        self.side / 2
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.side + col]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Raw samples of the Gabor function, before DC removal.
pub fn sample_gabor(params: &GaborParams) -> Result<Vec<f64>> {
    params.validate()?;
    let half = params.half_size as isize;
    let (sin_t, cos_t) = params.theta.sin_cos();
    let two_sigma_sq = 2.0 * params.sigma * params.sigma;
    let norm = 1.0 / (2.0 * PI * params.sigma * params.sigma);
    let omega = 2.0 * PI * params.f0;
    let side = params.half_size * 2 + 1;
    let mut weights = Vec::with_capacity(side * side);
    for row in -half..=half {
        let x = row as f64;
        for col in -half..=half {
            let y = col as f64;
            let x_theta = x * cos_t + y * sin_t;
            let y_theta = -x * sin_t + y * cos_t;
            let envelope = (-(x_theta * x_theta + y_theta * y_theta) / two_sigma_sq).exp();
            // cos is even; evaluating on |arg| keeps point symmetry bit-exact.
            weights.push(norm * envelope * (omega * x_theta).abs().cos());
        }
    }
    Ok(weights)
}

/// Samples the Gabor function on the integer grid and removes its mean.
pub fn make_kernel(params: &GaborParams) -> Result<Kernel> {
    let mut weights = sample_gabor(params)?;
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    for w in &mut weights {
        *w -= mean;
    }
    Ok(Kernel {
        side: params.half_size * 2 + 1,
        weights,
    })
}

/// `count` evenly spaced angles `π k / count`, `k = 0..count`.
pub fn uniform_orientations(count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "orientation count must be >= 1".into(),
        ));
    }
    Ok((0..count).map(|k| orientation_angle(k, count)).collect())
}

/// The angle of bin `k` in an `count`-bin uniform partition of `[0, π)`.
#[inline]
pub fn orientation_angle(k: usize, count: usize) -> f64 {
    PI * k as f64 / count as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankMode {
    Uniform,
    Physiological,
}

/// Immutable ordered set of oriented kernels sharing one parameter set.
#[derive(Debug, Clone)]
pub struct FilterBank {
    thetas: Vec<f64>,
    kernels: Vec<Kernel>,
    params: BankParams,
    mode: BankMode,
}

impl FilterBank {
    pub fn uniform(count: usize, params: BankParams) -> Result<Self> {
        build_bank(&uniform_orientations(count)?, params)
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn params(&self) -> BankParams {
        self.params
    }

    pub fn mode(&self) -> BankMode {
        self.mode
    }

    pub fn side(&self) -> usize {
        self.params.side()
    }
}

/// Builds one kernel per orientation. The bank is `Uniform` exactly when the
/// orientations coincide with `uniform_orientations(len)`.
pub fn build_bank(orientations: &[f64], params: BankParams) -> Result<FilterBank> {
    if orientations.is_empty() {
        return Err(Error::InvalidParameter("orientation list is empty".into()));
    }
    params.validate()?;
    for &theta in orientations {
        check_angle(theta)?;
    }
    if let Some(w) = orientations.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "orientations must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    let kernels = orientations
        .iter()
        .map(|&theta| make_kernel(&GaborParams::new(theta, params)))
        .collect::<Result<Vec<_>>>()?;
    let mode = if uniform_orientations(orientations.len())? == orientations {
        BankMode::Uniform
    } else {
        BankMode::Physiological
    };
    Ok(FilterBank {
        thetas: orientations.to_vec(),
        kernels,
        params,
        mode,
    })
}
