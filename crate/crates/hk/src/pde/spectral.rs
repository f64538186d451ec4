//! Truncated Fourier representation of the density and the transform pair.
//!
//! A density is stored as `2m+1` complex coefficients for modes `k = -m..m`
//! with the convention `rho(x) = sum_k rho_k e^{i 2 pi k x}`, so the zero mode
//! equals the spatial mean and unit total mass pins `rho_0 = 1`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("sample count {got} does not match expected grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid solver config: {0}")]
    BadConfig(String),
    #[error("invalid initial density: {0}")]
    InvalidInit(String),
    #[error("unknown initializer '{0}'")]
    UnknownInit(String),
    #[error("blow-up: non-finite coefficient at step {step}")]
    BlowUp { step: usize },
}

/// Fourier modes `k = -m..m` of the density (index `k + m`) plus the clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    coeffs: Vec<Complex64>,
    m: usize,
    pub t: f64,
}

impl SpectralDensity {
    /// The uniform density `rho == 1`: an exact fixed point of the dynamics.
    pub fn uniform(m: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
        coeffs[m] = Complex64::new(1.0, 0.0);
        SpectralDensity { coeffs, m, t: 0.0 }
    }

    /// Transform physical samples into a truncated mode set. The input is not
    /// rescaled: the zero mode becomes the spatial mean of the samples.
    pub fn from_samples(samples: &[f64], m: usize) -> Result<Self, PdeError> {
        let coeffs = forward_transform(samples, m)?;
        let mut state = SpectralDensity { coeffs, m, t: 0.0 };
        state.project_symmetry();
        Ok(state)
    }

    pub fn truncation(&self) -> usize {
        self.m
    }

    /// Coefficient of mode `k` (zero outside the truncation).
    pub fn coeff(&self, k: i64) -> Complex64 {
        let m = self.m as i64;
        if k < -m || k > m {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + m) as usize]
        }
    }

    pub fn mode_amplitude(&self, k: i64) -> f64 {
        self.coeff(k).norm()
    }

    /// Total mass `rho_0 * L` (L = 1).
    pub fn mass(&self) -> f64 {
        self.coeffs[self.m].re
    }

    pub(crate) fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Enforce `rho_{-k} = conj(rho_k)` by symmetric averaging.
    pub(crate) fn project_symmetry(&mut self) {
        let m = self.m;
        self.coeffs[m] = Complex64::new(self.coeffs[m].re, 0.0);
        for k in 1..=m {
            let a = 0.5 * (self.coeffs[m + k] + self.coeffs[m - k].conj());
            self.coeffs[m + k] = a;
            self.coeffs[m - k] = a.conj();
        }
    }

    /// Real physical-space samples on a uniform grid of the given size.
    pub fn to_samples(&self, grid: usize) -> Result<Vec<f64>, PdeError> {
        Ok(inverse_transform(&self.coeffs, grid)?.iter().map(|c| c.re).collect())
    }

    /// Largest imaginary residue of the physical field; a reality check.
    pub fn max_imag_residue(&self, grid: usize) -> Result<f64, PdeError> {
        Ok(inverse_transform(&self.coeffs, grid)?
            .iter()
            .map(|c| c.im.abs())
            .fold(0.0, f64::max))
    }

    /// Mean-field order parameter
    /// `Q = int int 1_{|x-y| <= R} rho(x) rho(y) dx dy`,
    /// evaluated spectrally as `2R + sum_{k != 0} sin(2 pi k R)/(pi k) |rho_k|^2`.
    /// This is the N -> infinity limit of the agent-graph edge density.
    pub fn order_parameter(&self, r: f64) -> f64 {
        let mut q = 2.0 * r;
        for k in 1..=self.m {
            let g = (2.0 * std::f64::consts::PI * k as f64 * r).sin() / (std::f64::consts::PI * k as f64);
            // modes +-k contribute equally
            q += 2.0 * g * self.coeffs[self.m + k].norm_sqr();
        }
        q
    }
}

/// Discrete Fourier coefficients `rho_k = (1/n) sum_j rho(x_j) e^{-i 2 pi k j / n}`
/// for `k = -m..m`, from samples on the uniform grid `x_j = j/n`.
pub fn forward_transform(samples: &[f64], m: usize) -> Result<Vec<Complex64>, PdeError> {
    let n = samples.len();
    if n < 2 * m + 1 {
        return Err(PdeError::SizeMismatch {
            expected: 2 * m + 1,
            got: n,
        });
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
    let nf = n as f64;
    for (idx, slot) in out.iter_mut().enumerate() {
        let k = idx as i64 - m as i64;
        let src = k.rem_euclid(n as i64) as usize;
        *slot = buf[src] / nf;
    }
    Ok(out)
}

/// Physical samples `rho(x_j) = sum_k rho_k e^{i 2 pi k j / n}` on a grid of
/// size `grid` from coefficients indexed `k = -m..m`.
pub fn inverse_transform(coeffs: &[Complex64], grid: usize) -> Result<Vec<Complex64>, PdeError> {
    if coeffs.len() % 2 == 0 {
        return Err(PdeError::SizeMismatch {
            expected: coeffs.len() + 1,
            got: coeffs.len(),
        });
    }
    let m = coeffs.len() / 2;
    if grid < 2 * m + 1 {
        return Err(PdeError::SizeMismatch {
            expected: 2 * m + 1,
            got: grid,
        });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    for (idx, &c) in coeffs.iter().enumerate() {
        let k = idx as i64 - m as i64;
        let dst = k.rem_euclid(grid as i64) as usize;
        buf[dst] = c;
    }
    FftPlanner::new().plan_fft_inverse(grid).process(&mut buf);
    Ok(buf)
}
