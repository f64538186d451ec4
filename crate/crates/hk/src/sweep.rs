//! Parallel `(R, sigma)` parameter sweeps.
//!
//! Cells are embarrassingly parallel: each gets its own random stream derived
//! from the global seed and its grid coordinates, so the table is
//! byte-identical across reruns regardless of worker count or scheduling.
//! Failed cells (integration blow-ups) are flagged in-row and the sweep
//! continues.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::detect_clusters;
use crate::order::{disordered_reference_q, order_parameter};
use crate::params::ModelParams;
use crate::pde::{PdeInit, SolverConfig, SpectralSolver};
use crate::rng::cell_seed;
use crate::sde::{simulate, SdeInit};
use crate::stability::{classify_phase_region, PhaseLabel};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    BadSpec(String),
    #[error("transition scan needs at least 5 sigma points at R={0}, found {1}")]
    TooFewPoints(f64, usize),
}

/// Inclusive linear grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + step * i as f64).collect()
    }

    fn validate(&self, name: &str) -> Result<(), SweepError> {
        if self.count == 0 {
            return Err(SweepError::BadSpec(format!("{name} grid is empty")));
        }
        if self.count > 1 && !(self.max > self.min) {
            return Err(SweepError::BadSpec(format!(
                "{name} grid must be strictly increasing"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Sde,
    Pde,
}

/// Sweep specification: grids, engine, per-cell run parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub r_grid: GridSpec,
    pub sigma_grid: GridSpec,
    pub engine: Engine,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Integration horizon per cell.
    pub horizon: f64,
    /// Trailing fraction of the run that enters the averages.
    #[serde(default = "default_window")]
    pub window_fraction: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Steps between recorded snapshots.
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Named initializer; engine defaults: `uniform-random` (SDE),
    /// `uniform-plus-noise(1e-3, <cell seed>)` (PDE).
    #[serde(default)]
    pub init: Option<String>,
    /// Spectral solver settings for PDE cells.
    #[serde(default)]
    pub solver: SolverConfig,
    /// Record wall-clock time per cell. Off by default so that output files
    /// are byte-identical across reruns.
    #[serde(default)]
    pub timing: bool,
}

fn default_n() -> usize {
    100
}
fn default_h() -> f64 {
    1e-2
}
fn default_seed() -> u64 {
    1
}
fn default_window() -> f64 {
    0.25
}
fn default_replicates() -> usize {
    1
}
fn default_stride() -> usize {
    100
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        self.r_grid.validate("R")?;
        self.sigma_grid.validate("sigma")?;
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(SweepError::BadSpec(format!(
                "window fraction {} outside (0, 1]",
                self.window_fraction
            )));
        }
        if self.replicates == 0 {
            return Err(SweepError::BadSpec("need at least one replicate".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(SweepError::BadSpec("horizon must be positive".into()));
        }
        Ok(())
    }
}

/// One sweep cell outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub r: f64,
    pub sigma: f64,
    pub replicate: usize,
    pub seed: u64,
    pub q_mean: f64,
    pub q_std: f64,
    pub n_clusters: usize,
    pub phase_label: PhaseLabel,
    pub failed: bool,
    pub wall_ms: u64,
}

/// Sweep output: one row per `(R, sigma, replicate)` in deterministic order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseDiagramTable {
    pub spec: SweepSpec,
    pub rows: Vec<CellResult>,
}

impl PhaseDiagramTable {
    /// CSV with the stable column order
    /// `R,sigma,replicate,seed,Q_mean,Q_std,n_clusters,phase_label,failed,wall_ms`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("R,sigma,replicate,seed,Q_mean,Q_std,n_clusters,phase_label,failed,wall_ms\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.9e},{:.9e},{},{},{},{}",
                row.r,
                row.sigma,
                row.replicate,
                row.seed,
                row.q_mean,
                row.q_std,
                row.n_clusters,
                row.phase_label,
                row.failed,
                row.wall_ms
            );
        }
        out
    }

    /// Sidecar metadata: the full spec plus the crate version.
    pub fn metadata_json(&self) -> String {
        let meta = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "spec": self.spec,
        });
        serde_json::to_string_pretty(&meta).expect("metadata serializes")
    }

    /// Rows at a given radius (all replicates), sorted by sigma.
    fn column(&self, r: f64) -> Vec<&CellResult> {
        let mut rows: Vec<&CellResult> = self
            .rows
            .iter()
            .filter(|row| (row.r - r).abs() < 1e-12)
            .collect();
        rows.sort_by(|a, b| a.sigma.total_cmp(&b.sigma).then(a.replicate.cmp(&b.replicate)));
        rows
    }
}

/// Run every `(R, sigma, replicate)` cell, in parallel, in deterministic
/// output order.
pub fn run_sweep(spec: &SweepSpec) -> Result<PhaseDiagramTable, SweepError> {
    spec.validate()?;
    let rs = spec.r_grid.values();
    let sigmas = spec.sigma_grid.values();

    let mut cells = Vec::new();
    for (ri, &r) in rs.iter().enumerate() {
        for (si, &sigma) in sigmas.iter().enumerate() {
            for rep in 0..spec.replicates {
                cells.push((ri, si, rep, r, sigma));
            }
        }
    }

    let rows: Vec<CellResult> = cells
        .par_iter()
        .map(|&(ri, si, rep, r, sigma)| run_cell(spec, ri, si, rep, r, sigma))
        .collect();

    Ok(PhaseDiagramTable {
        spec: spec.clone(),
        rows,
    })
}

fn run_cell(spec: &SweepSpec, ri: usize, si: usize, rep: usize, r: f64, sigma: f64) -> CellResult {
    let seed = cell_seed(&[spec.seed, ri as u64, si as u64, rep as u64]);
    let started = std::time::Instant::now();
    let phase_label = classify_phase_region(r, sigma).label;
    let outcome = match spec.engine {
        Engine::Sde => run_sde_cell(spec, r, sigma, seed),
        Engine::Pde => run_pde_cell(spec, r, sigma, seed),
    };
    let wall_ms = if spec.timing {
        started.elapsed().as_millis() as u64
    } else {
        0
    };
    match outcome {
        Ok((q_mean, q_std, n_clusters)) => CellResult {
            r,
            sigma,
            replicate: rep,
            seed,
            q_mean,
            q_std,
            n_clusters,
            phase_label,
            failed: false,
            wall_ms,
        },
        Err(_) => CellResult {
            r,
            sigma,
            replicate: rep,
            seed,
            q_mean: f64::NAN,
            q_std: f64::NAN,
            n_clusters: 0,
            phase_label,
            failed: true,
            wall_ms,
        },
    }
}

fn run_sde_cell(
    spec: &SweepSpec,
    r: f64,
    sigma: f64,
    seed: u64,
) -> Result<(f64, f64, usize), String> {
    let params = ModelParams {
        n: spec.n,
        r,
        sigma,
        l: 1.0,
        seed,
        h: spec.h,
    };
    let init = match &spec.init {
        Some(name) => SdeInit::parse(name).map_err(|e| e.to_string())?,
        None => SdeInit::UniformRandom,
    };
    let traj = simulate(&params, spec.horizon, &init, spec.record_stride).map_err(|e| e.to_string())?;
    let window = traj.trailing_window(spec.window_fraction);
    let qs: Vec<f64> = window.iter().map(|snap| order_parameter(snap, r, 1.0)).collect();
    let counts: Vec<usize> = window
        .iter()
        .map(|snap| detect_clusters(snap, r, 1.0).map(|s| s.len()).unwrap_or(0))
        .collect();
    Ok(summarize(&qs, &counts))
}

fn run_pde_cell(
    spec: &SweepSpec,
    r: f64,
    sigma: f64,
    seed: u64,
) -> Result<(f64, f64, usize), String> {
    let params = ModelParams {
        n: spec.n,
        r,
        sigma,
        l: 1.0,
        seed,
        h: spec.h,
    };
    let init = match &spec.init {
        Some(name) => PdeInit::parse(name).map_err(|e| e.to_string())?,
        None => PdeInit::UniformNoise { eps: 1e-3, seed },
    };
    let mut solver = SpectralSolver::new(spec.solver, &params).map_err(|e| e.to_string())?;
    let (_, diags) = solver
        .evolve(&init, spec.horizon, spec.record_stride)
        .map_err(|e| e.to_string())?;
    let t_end = diags.rows.last().map(|row| row.t).unwrap_or(0.0);
    let t_cut = t_end * (1.0 - spec.window_fraction);
    let window: Vec<_> = diags.rows.iter().filter(|row| row.t >= t_cut).collect();
    let qs: Vec<f64> = window.iter().map(|row| row.q).collect();
    let counts: Vec<usize> = window.iter().map(|row| row.n_clusters).collect();
    Ok(summarize(&qs, &counts))
}

/// Mean/std of Q plus the modal cluster count over the window.
fn summarize(qs: &[f64], counts: &[usize]) -> (f64, f64, usize) {
    let n = qs.len().max(1) as f64;
    let mean = qs.iter().sum::<f64>() / n;
    let var = qs.iter().map(|q| (q - mean) * (q - mean)).sum::<f64>() / n;
    let modal = modal_count(counts);
    (mean, var.sqrt(), modal)
}

fn modal_count(counts: &[usize]) -> usize {
    let mut freq: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for &c in counts {
        *freq.entry(c).or_insert(0) += 1;
    }
    freq.into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
        .unwrap_or(0)
}

/// Smallest margin (above the disordered reference) that counts as a real
/// clustered plateau when scanning for a transition.
const TRANSITION_MARGIN: f64 = 0.04;

/// Scan a sigma column of the table at fixed `R` for the order-disorder
/// transition.
///
/// The crossing threshold is the midpoint between the column's clustered
/// plateau (its maximum `Q`) and the disordered reference; the returned sigma
/// interpolates linearly between the bracketing cells. Returns `None` when
/// the column never rises above the reference by `TRANSITION_MARGIN` or never
/// drops below the midpoint, which is the expected outcome at large `R`.
pub fn detect_transition(table: &PhaseDiagramTable, r: f64) -> Result<Option<f64>, SweepError> {
    let rows = table.column(r);
    // average replicates per sigma value, skipping failed cells
    let mut sigmas: Vec<f64> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    let mut reps: Vec<usize> = Vec::new();
    for row in rows {
        if row.failed {
            continue;
        }
        match sigmas.last() {
            Some(&last) if (row.sigma - last).abs() < 1e-12 => {
                *sums.last_mut().unwrap() += row.q_mean;
                *reps.last_mut().unwrap() += 1;
            }
            _ => {
                sigmas.push(row.sigma);
                sums.push(row.q_mean);
                reps.push(1);
            }
        }
    }
    let qs: Vec<f64> = sums.iter().zip(&reps).map(|(s, &c)| s / c as f64).collect();
    if sigmas.len() < 5 {
        return Err(SweepError::TooFewPoints(r, sigmas.len()));
    }

    let q_ref = match table.spec.engine {
        Engine::Sde => disordered_reference_q(table.spec.n, r, 1.0),
        Engine::Pde => 2.0 * r,
    };
    let (i_max, &q_hi) = qs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    if q_hi < q_ref + TRANSITION_MARGIN {
        return Ok(None);
    }
    let threshold = 0.5 * (q_hi + q_ref);
    for i in (i_max + 1)..qs.len() {
        if qs[i] < threshold && qs[i - 1] >= threshold {
            let frac = (qs[i - 1] - threshold) / (qs[i - 1] - qs[i]);
            return Ok(Some(sigmas[i - 1] + frac * (sigmas[i] - sigmas[i - 1])));
        }
    }
    Ok(None)
}
