//! Semi-implicit pseudo-spectral time stepper.
//!
//! Per step, with `m_k` the interaction multiplier:
//!
//! 1. `phi_k = m_k rho_k` (the attraction velocity field, mode-wise),
//! 2. inverse-transform `rho` and `phi`, form `psi = phi * rho` pointwise,
//! 3. forward-transform `psi`,
//! 4. `rho_k <- (rho_k - i 2 pi k h psi_k) / (1 + 2 pi^2 sigma^2 k^2 h)`.
//!
//! Diffusion sits in the implicit denominator, advection is explicit. The
//! zero mode is pinned to 1 (unit mass) and conjugate symmetry is re-imposed
//! after every step, so mass is conserved bit-exactly and the physical field
//! stays real to rounding.

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::spectral::{PdeError, SpectralDensity};
use crate::cluster::detect_weighted_clusters;
use crate::geometry::signed_displacement;
use crate::params::ModelParams;
use crate::rng::{seeded_stream, INIT_STREAM};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Density level (relative to the unit mean) above which grid cells count as
/// cluster material when the diagnostics count bumps.
pub const DENSITY_CLUSTER_LEVEL: f64 = 1.25;

/// Interaction multiplier `m_k` such that `phi_k = m_k rho_k` is the Fourier
/// transform of the attraction velocity field:
/// `m_k = i [ sin(2 pi k R) / (2 pi^2 k^2) - R cos(2 pi k R) / (pi k) ]`.
///
/// Purely imaginary and odd in `k`; the `k = 0` value is 0.
pub fn interaction_multiplier(k: i64, r: f64) -> Complex64 {
    if k == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let kf = k as f64;
    let theta = TWO_PI * kf * r;
    let im = theta.sin() / (2.0 * std::f64::consts::PI * std::f64::consts::PI * kf * kf)
        - r * theta.cos() / (std::f64::consts::PI * kf);
    Complex64::new(0.0, im)
}

/// Spectral solver configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    /// Mode truncation: coefficients are kept for `k = -m..m`.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Collocation points for the product grid; power of two, at least `2m+2`.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Time step.
    #[serde(default = "default_h")]
    pub h: f64,
    /// Truncate quadratic products by the 2/3 rule. With the default
    /// `grid >= 3m+1` the retained modes are alias-free either way.
    #[serde(default = "default_dealias")]
    pub dealias: bool,
}

fn default_m() -> usize {
    128
}
fn default_grid() -> usize {
    512
}
fn default_h() -> f64 {
    1e-3
}
fn default_dealias() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            m: default_m(),
            grid: default_grid(),
            h: default_h(),
            dealias: default_dealias(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), PdeError> {
        if self.m == 0 {
            return Err(PdeError::BadConfig("truncation m must be positive".into()));
        }
        if !self.grid.is_power_of_two() || self.grid < 2 * self.m + 2 {
            return Err(PdeError::BadConfig(format!(
                "grid {} must be a power of two >= 2m+2 = {}",
                self.grid,
                2 * self.m + 2
            )));
        }
        if !(self.h > 0.0) {
            return Err(PdeError::BadConfig(format!("time step {} must be positive", self.h)));
        }
        Ok(())
    }
}

/// Initial density profile.
#[derive(Debug, Clone, PartialEq)]
pub enum PdeInit {
    /// Exactly uniform density.
    Uniform,
    /// `1 + eps * u(x)` with `u` i.i.d. uniform on [-1, 1] per grid cell.
    UniformNoise { eps: f64, seed: u64 },
    /// Profile proportional to `e^{-a d(x, center)^2}`.
    Gaussian { center: f64, a: f64 },
    /// Explicit samples on the collocation grid.
    Profile(Vec<f64>),
}

impl PdeInit {
    /// Parse `"uniform"`, `"uniform-plus-noise(eps, seed)"` or
    /// `"gaussian(center, a)"`.
    pub fn parse(s: &str) -> Result<Self, PdeError> {
        let t = s.trim();
        if t == "uniform" {
            return Ok(PdeInit::Uniform);
        }
        if let Some(args) = t
            .strip_prefix("uniform-plus-noise")
            .and_then(|r| r.strip_prefix('('))
            .and_then(|r| r.strip_suffix(')'))
        {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() == 2 {
                if let (Ok(eps), Ok(seed)) =
                    (parts[0].trim().parse::<f64>(), parts[1].trim().parse::<u64>())
                {
                    return Ok(PdeInit::UniformNoise { eps, seed });
                }
            }
            return Err(PdeError::UnknownInit(s.to_string()));
        }
        if let Some(args) = t
            .strip_prefix("gaussian")
            .and_then(|r| r.strip_prefix('('))
            .and_then(|r| r.strip_suffix(')'))
        {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() == 2 {
                if let (Ok(center), Ok(a)) =
                    (parts[0].trim().parse::<f64>(), parts[1].trim().parse::<f64>())
                {
                    return Ok(PdeInit::Gaussian { center, a });
                }
            }
            return Err(PdeError::UnknownInit(s.to_string()));
        }
        Err(PdeError::UnknownInit(s.to_string()))
    }

    /// Samples on the grid, rescaled to unit mass. Errors if any sample is
    /// negative before rescaling.
    fn materialize(&self, grid: usize) -> Result<Option<Vec<f64>>, PdeError> {
        let xs = |j: usize| j as f64 / grid as f64;
        let raw: Vec<f64> = match self {
            PdeInit::Uniform => return Ok(None), // exact uniform state, no transform
            PdeInit::UniformNoise { eps, seed } => {
                if *eps < 0.0 || *eps > 1.0 {
                    return Err(PdeError::InvalidInit(format!(
                        "noise amplitude {eps} must lie in [0, 1]"
                    )));
                }
                let mut rng = seeded_stream(*seed, INIT_STREAM);
                (0..grid).map(|_| 1.0 + eps * rng.gen_range(-1.0..1.0)).collect()
            }
            PdeInit::Gaussian { center, a } => (0..grid)
                .map(|j| {
                    let d = signed_displacement(xs(j), *center, 1.0);
                    (-a * d * d).exp()
                })
                .collect(),
            PdeInit::Profile(samples) => {
                if samples.len() != grid {
                    return Err(PdeError::SizeMismatch {
                        expected: grid,
                        got: samples.len(),
                    });
                }
                samples.clone()
            }
        };
        if raw.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(PdeError::InvalidInit("initial density must be nonnegative".into()));
        }
        let mean: f64 = raw.iter().sum::<f64>() / grid as f64;
        if mean <= 0.0 {
            return Err(PdeError::InvalidInit("initial density has zero mass".into()));
        }
        Ok(Some(raw.into_iter().map(|v| v / mean).collect()))
    }
}

/// One diagnostics sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub mass: f64,
    pub min_rho: f64,
    /// Amplitudes of modes 1..=8.
    pub amps: [f64; 8],
    pub n_clusters: usize,
    /// Mean-field order parameter at the solver's radius.
    pub q: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub rows: Vec<DiagRow>,
}

impl Diagnostics {
    /// CSV `t,mass,min_rho,amp_k1,...,amp_k8,n_clusters`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("t,mass,min_rho");
        for k in 1..=8 {
            let _ = write!(out, ",amp_k{k}");
        }
        out.push_str(",n_clusters\n");
        for r in &self.rows {
            let _ = write!(out, "{},{:.9e},{:.9e}", r.t, r.mass, r.min_rho);
            for a in r.amps {
                let _ = write!(out, ",{a:.9e}");
            }
            let _ = writeln!(out, ",{}", r.n_clusters);
        }
        out
    }
}

/// Result of a mode-growth measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthMeasurement {
    /// Least-squares slope of `log |rho_k(t)|`.
    pub rate: f64,
    /// True when the amplitude decayed to round-off inside the window, in
    /// which case `rate` is only a lower bound on the decay speed.
    pub lower_bound: bool,
}

/// Pseudo-spectral integrator with instance-owned transforms and scratch.
pub struct SpectralSolver {
    config: SolverConfig,
    r: f64,
    sigma: f64,
    multipliers: Vec<Complex64>,
    denominators: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf_rho: Vec<Complex64>,
    buf_phi: Vec<Complex64>,
    steps_taken: usize,
}

impl SpectralSolver {
    pub fn new(config: SolverConfig, params: &ModelParams) -> Result<Self, PdeError> {
        config.validate()?;
        let m = config.m;
        let multipliers: Vec<Complex64> = (-(m as i64)..=m as i64)
            .map(|k| interaction_multiplier(k, params.r))
            .collect();
        let denominators: Vec<f64> = (-(m as i64)..=m as i64)
            .map(|k| {
                let kf = k as f64;
                1.0 + 2.0 * std::f64::consts::PI.powi(2) * params.sigma * params.sigma * kf * kf * config.h
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(SpectralSolver {
            config,
            r: params.r,
            sigma: params.sigma,
            multipliers,
            denominators,
            fwd: planner.plan_fft_forward(config.grid),
            inv: planner.plan_fft_inverse(config.grid),
            buf_rho: vec![Complex64::new(0.0, 0.0); config.grid],
            buf_phi: vec![Complex64::new(0.0, 0.0); config.grid],
            steps_taken: 0,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Largest nonlinearly-updated mode: `m`, or `grid/3` under the 2/3 rule.
    fn cutoff(&self) -> usize {
        if self.config.dealias {
            self.config.m.min(self.config.grid / 3)
        } else {
            self.config.m
        }
    }

    /// Advance the state by one step of size `config.h`.
    pub fn step(&mut self, state: &mut SpectralDensity) -> Result<(), PdeError> {
        let m = self.config.m;
        assert_eq!(state.truncation(), m, "state truncation does not match solver");
        let n = self.config.grid;
        let kc = self.cutoff();

        // pack rho and phi = m_k rho_k onto the grid spectrum
        self.buf_rho.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        self.buf_phi.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        {
            let coeffs = state.coeffs();
            for (idx, &c) in coeffs.iter().enumerate() {
                let k = idx as i64 - m as i64;
                if k.unsigned_abs() as usize > kc {
                    continue;
                }
                let dst = k.rem_euclid(n as i64) as usize;
                self.buf_rho[dst] = c;
                self.buf_phi[dst] = self.multipliers[idx] * c;
            }
        }

        // to physical space, pointwise product, back
        self.inv.process(&mut self.buf_rho);
        self.inv.process(&mut self.buf_phi);
        for (p, r) in self.buf_phi.iter_mut().zip(&self.buf_rho) {
            *p *= r;
        }
        self.fwd.process(&mut self.buf_phi);
        let scale = 1.0 / n as f64;

        // semi-implicit update per mode
        let coeffs = state.coeffs_mut();
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let k = idx as i64 - m as i64;
            let psi = if k.unsigned_abs() as usize > kc {
                Complex64::new(0.0, 0.0)
            } else {
                self.buf_phi[k.rem_euclid(n as i64) as usize] * scale
            };
            let kf = k as f64;
            let advect = Complex64::new(0.0, TWO_PI * kf * self.config.h) * psi;
            *c = (*c - advect) / self.denominators[idx];
        }
        coeffs[m] = Complex64::new(1.0, 0.0);
        state.project_symmetry();

        self.steps_taken += 1;
        if state.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(PdeError::BlowUp {
                step: self.steps_taken,
            });
        }
        state.t += self.config.h;
        Ok(())
    }

    fn initial_state(&self, init: &PdeInit) -> Result<SpectralDensity, PdeError> {
        match init.materialize(self.config.grid)? {
            None => Ok(SpectralDensity::uniform(self.config.m)),
            Some(samples) => {
                let mut state = SpectralDensity::from_samples(&samples, self.config.m)?;
                state.coeffs_mut()[self.config.m] = Complex64::new(1.0, 0.0);
                Ok(state)
            }
        }
    }

    /// Integrate from an initial profile to time `t_end`, recording a
    /// diagnostics row every `stride` steps (first and last rows included).
    pub fn evolve(
        &mut self,
        init: &PdeInit,
        t_end: f64,
        stride: usize,
    ) -> Result<(SpectralDensity, Diagnostics), PdeError> {
        assert!(t_end > 0.0, "horizon must be positive");
        let stride = stride.max(1);
        let mut state = self.initial_state(init)?;
        self.steps_taken = 0;

        let steps = (t_end / self.config.h).ceil() as usize;
        let mut diags = Diagnostics::default();
        diags.rows.push(self.diag_row(&state)?);
        for s in 1..=steps {
            self.step(&mut state)?;
            state.t = s as f64 * self.config.h;
            if s % stride == 0 || s == steps {
                diags.rows.push(self.diag_row(&state)?);
            }
        }
        Ok((state, diags))
    }

    fn diag_row(&self, state: &SpectralDensity) -> Result<DiagRow, PdeError> {
        let samples = state.to_samples(self.config.grid)?;
        let min_rho = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut amps = [0.0; 8];
        for (k, a) in amps.iter_mut().enumerate() {
            *a = state.mode_amplitude(k as i64 + 1);
        }
        Ok(DiagRow {
            t: state.t,
            mass: state.mass(),
            min_rho,
            amps,
            n_clusters: count_density_clusters(&samples, self.r),
            q: state.order_parameter(self.r),
        })
    }

    /// Growth rate of mode `k` from the linear regime: start from
    /// `rho = 1 + eps cos(2 pi k x)` and fit the slope of `log |rho_k(t)|`
    /// over `[0, t_window]`. Recording stops once the amplitude leaves the
    /// linear window (`> 10 eps`) or drops to round-off (`lower_bound`).
    pub fn measure_mode_growth(
        &mut self,
        k: usize,
        eps: f64,
        t_window: f64,
    ) -> Result<GrowthMeasurement, PdeError> {
        assert!(k >= 1 && k <= self.config.m, "mode outside truncation");
        assert!((1e-8..=1e-3).contains(&eps), "eps must keep the perturbation linear");
        let m = self.config.m;
        let mut state = SpectralDensity::uniform(m);
        state.coeffs_mut()[m + k] = Complex64::new(eps / 2.0, 0.0);
        state.coeffs_mut()[m - k] = Complex64::new(eps / 2.0, 0.0);
        self.steps_taken = 0;

        const FLOOR: f64 = 1e-13;
        let steps = (t_window / self.config.h).ceil() as usize;
        let mut ts = Vec::with_capacity(steps + 1);
        let mut logs = Vec::with_capacity(steps + 1);
        ts.push(0.0);
        logs.push((eps / 2.0).ln());
        let mut lower_bound = false;
        for s in 1..=steps {
            self.step(&mut state)?;
            let amp = state.mode_amplitude(k as i64);
            if amp < FLOOR {
                lower_bound = true;
                break;
            }
            ts.push(s as f64 * self.config.h);
            logs.push(amp.ln());
            if amp > 10.0 * eps {
                break;
            }
        }

        let n = ts.len() as f64;
        let sx: f64 = ts.iter().sum();
        let sy: f64 = logs.iter().sum();
        let sxx: f64 = ts.iter().map(|t| t * t).sum();
        let sxy: f64 = ts.iter().zip(&logs).map(|(t, l)| t * l).sum();
        let rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        Ok(GrowthMeasurement { rate, lower_bound })
    }
}

/// Count density bumps: grid cells above [`DENSITY_CLUSTER_LEVEL`] are
/// clustered by circular gap (threshold = the confidence radius), weighting
/// each cell by its mass.
pub fn count_density_clusters(samples: &[f64], r: f64) -> usize {
    let n = samples.len();
    let mut pos = Vec::new();
    let mut w = Vec::new();
    for (j, &v) in samples.iter().enumerate() {
        if v > DENSITY_CLUSTER_LEVEL {
            pos.push(j as f64 / n as f64);
            w.push(v / n as f64);
        }
    }
    if pos.is_empty() {
        return 0;
    }
    detect_weighted_clusters(&pos, &w, r, 1.0).map_or(0, |set| set.len())
}
