//! Finite-N stochastic simulator.
//!
//! Agents on the circle obey
//! `dx_i = -(1/N) sum_{j: |x_i-x_j| <= R} (x_i - x_j) dt + sigma dW_i`,
//! with distances and differences taken as shortest circular displacements.
//! Time stepping is explicit Euler-Maruyama. The per-step drift pass uses a
//! sort-based windowed sum, so a step costs O(N log N) instead of O(N^2);
//! both paths agree to rounding and the simple quadratic one backs the
//! single-agent [`drift`] operation.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{signed_displacement, wrap_position};
use crate::params::{AgentState, ModelParams, ParamError};
use crate::rng::{seeded_stream, RUN_STREAM};

#[derive(Debug, Error)]
pub enum SdeError {
    #[error("unstable step: |drift|*h = {0} exceeds L/2")]
    UnstableStep(f64),
    #[error("unknown initializer '{0}'")]
    UnknownInit(String),
    #[error("initializer does not match params: {0}")]
    BadInit(String),
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// Initial condition for a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub enum SdeInit {
    /// Independent uniform positions on `[0, L)`.
    UniformRandom,
    /// All agents at one point.
    Point(f64),
    /// Normal displacements around a center, wrapped onto the circle.
    Gaussian { center: f64, std: f64 },
    /// Explicit positions (length must equal `N`).
    Explicit(Vec<f64>),
}

impl SdeInit {
    /// Parse `"uniform-random"`, `"point(x0)"` or `"gaussian(x0, s)"`.
    pub fn parse(s: &str) -> Result<Self, SdeError> {
        let t = s.trim();
        if t == "uniform-random" {
            return Ok(SdeInit::UniformRandom);
        }
        if let Some(args) = strip_call(t, "point") {
            let x0: f64 = args
                .trim()
                .parse()
                .map_err(|_| SdeError::UnknownInit(s.to_string()))?;
            return Ok(SdeInit::Point(x0));
        }
        if let Some(args) = strip_call(t, "gaussian") {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() == 2 {
                let center = parts[0].trim().parse();
                let std = parts[1].trim().parse();
                if let (Ok(center), Ok(std)) = (center, std) {
                    return Ok(SdeInit::Gaussian { center, std });
                }
            }
            return Err(SdeError::UnknownInit(s.to_string()));
        }
        Err(SdeError::UnknownInit(s.to_string()))
    }

    fn materialize(&self, params: &ModelParams, rng: &mut ChaCha12Rng) -> Result<Vec<f64>, SdeError> {
        let n = params.n;
        let l = params.l;
        match self {
            SdeInit::UniformRandom => Ok((0..n).map(|_| rng.gen_range(0.0..l)).collect()),
            SdeInit::Point(x0) => Ok(vec![wrap_position(*x0, l); n]),
            SdeInit::Gaussian { center, std } => Ok((0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    wrap_position(center + std * z, l)
                })
                .collect()),
            SdeInit::Explicit(pos) => {
                if pos.len() != n {
                    return Err(SdeError::BadInit(format!(
                        "explicit init has {} positions, params.n = {}",
                        pos.len(),
                        n
                    )));
                }
                Ok(pos.iter().map(|&x| wrap_position(x, l)).collect())
            }
        }
    }
}

fn strip_call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')
}

/// Deterministic velocity of agent `i`: `-(1/N) sum_{j in range} (x_i - x_j)`
/// with signed circular differences. The `j = i` term contributes zero.
pub fn drift(positions: &[f64], i: usize, params: &ModelParams) -> f64 {
    let xi = positions[i];
    let mut acc = 0.0;
    for &xj in positions {
        let d = signed_displacement(xi, xj, params.l);
        if d.abs() <= params.r {
            acc += d;
        }
    }
    -acc / params.n as f64
}

/// Drift of every agent in one pass over the sorted positions.
///
/// Positions are sorted and duplicated with a +L shift; each agent's neighbor
/// set is then a contiguous window located by binary search, and the window's
/// displacement sum follows from prefix sums. Matches [`drift`] up to
/// floating-point summation order.
pub fn drift_all(positions: &[f64], params: &ModelParams, out: &mut [f64]) {
    let n = positions.len();
    assert_eq!(out.len(), n);
    let l = params.l;
    let r = params.r;

    let mut sorted: Vec<f64> = positions.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);

    // extended copy: sorted ++ sorted + L, with prefix sums
    let mut ext = Vec::with_capacity(2 * n);
    ext.extend_from_slice(&sorted);
    ext.extend(sorted.iter().map(|&x| x + l));
    let mut prefix = Vec::with_capacity(2 * n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in &ext {
        acc += x;
        prefix.push(acc);
    }

    for (i, &x) in positions.iter().enumerate() {
        // query in [L/2, 3L/2) so the window never leaves the extended range
        let q = if x < l / 2.0 { x + l } else { x };
        let lo = ext.partition_point(|&v| v < q - r);
        let mut hi = ext.partition_point(|&v| v <= q + r);
        // a full-circle window (R = L/2) sees both copies of agents exactly at
        // the antipode; drop the right-edge copies so the tie resolves to a
        // displacement of +L/2
        if hi - lo > n {
            hi -= (hi - lo) - n;
        }
        let count = (hi - lo) as f64;
        let sum = prefix[hi] - prefix[lo];
        out[i] = -(count * q - sum) / params.n as f64;
    }
}

/// One Euler-Maruyama step: `x_i <- (x_i + drift_i h + sigma sqrt(h) xi_i) mod L`.
///
/// Fails with [`SdeError::UnstableStep`] if any `|drift_i| * h` reaches `L/2`.
pub fn step(state: &mut AgentState, params: &ModelParams, rng: &mut ChaCha12Rng) -> Result<(), SdeError> {
    let n = state.len();
    let mut drifts = vec![0.0; n];
    step_with_scratch(state, params, rng, &mut drifts)
}

fn step_with_scratch(
    state: &mut AgentState,
    params: &ModelParams,
    rng: &mut ChaCha12Rng,
    drifts: &mut [f64],
) -> Result<(), SdeError> {
    drift_all(&state.positions, params, drifts);
    let h = params.h;
    let sqh = h.sqrt();
    for (x, &d) in state.positions.iter_mut().zip(drifts.iter()) {
        let move_len = (d * h).abs();
        if move_len >= params.l / 2.0 {
            return Err(SdeError::UnstableStep(move_len));
        }
        let noise: f64 = rng.sample(StandardNormal);
        *x = wrap_position(*x + d * h + params.sigma * sqh * noise, params.l);
    }
    state.t += h;
    Ok(())
}

/// Recorded run: snapshot times, positions per snapshot, and the stride (in
/// steps) between snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub record_stride: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Vec<f64> {
        self.snapshots.last().expect("trajectory never empty")
    }

    /// Snapshots in the trailing fraction of the run (by time).
    pub fn trailing_window(&self, fraction: f64) -> &[Vec<f64>] {
        let t_end = *self.times.last().unwrap();
        let t_cut = t_end * (1.0 - fraction);
        let start = self.times.partition_point(|&t| t < t_cut);
        &self.snapshots[start.min(self.snapshots.len() - 1)..]
    }

    /// CSV with header `t,x0,...,x{N-1}`; positions carry 9 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.snapshots.first().map_or(0, |s| s.len());
        let mut out = String::new();
        out.push('t');
        for i in 0..n {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for (t, snap) in self.times.iter().zip(&self.snapshots) {
            let _ = write!(out, "{t}");
            for x in snap {
                let _ = write!(out, ",{x:.8e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Run `ceil(T/h)` steps from the given initial condition, recording every
/// `record_stride`-th state (the initial state included).
pub fn simulate(
    params: &ModelParams,
    t_end: f64,
    init: &SdeInit,
    record_stride: usize,
) -> Result<Trajectory, SdeError> {
    params.validate()?;
    assert!(t_end > 0.0, "horizon must be positive");
    let stride = record_stride.max(1);
    let mut rng = seeded_stream(params.seed, RUN_STREAM);
    let positions = init.materialize(params, &mut rng)?;
    let mut state = AgentState::new(positions, 0.0, params.l);

    let steps = (t_end / params.h).ceil() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps / stride + 2),
        snapshots: Vec::with_capacity(steps / stride + 2),
        record_stride: stride,
    };
    traj.times.push(0.0);
    traj.snapshots.push(state.positions.clone());

    let mut drifts = vec![0.0; params.n];
    for s in 1..=steps {
        step_with_scratch(&mut state, params, &mut rng, &mut drifts)?;
        state.t = s as f64 * params.h; // avoid accumulated addition error
        if s % stride == 0 {
            traj.times.push(state.t);
            traj.snapshots.push(state.positions.clone());
        }
    }
    Ok(traj)
}

/// Steady-state covariance structure of one cluster of `n` agents (out of `N`)
/// held together by its own attraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterMoments {
    pub n: usize,
    /// One-fold eigenvalue `(1 + n/2N + N/2n) sigma^2` (center-of-mass mode).
    pub eigen_large: f64,
    /// (n-1)-fold eigenvalue `N sigma^2 / 2n` (shape modes).
    pub eigen_small: f64,
    /// Stationary per-agent variance `(N sigma^2 / 2n) [(1 + 1/N)^2 + (n-1)/N^2]`.
    pub var_ii: f64,
}

/// Moments of the linearized in-cluster dynamics, valid while the cluster
/// stays narrower than `2R`. The range of validity is the caller's concern.
pub fn cluster_moment_prediction(
    n_cluster: usize,
    params: &ModelParams,
) -> Result<ClusterMoments, SdeError> {
    if n_cluster < 1 || n_cluster > params.n {
        return Err(SdeError::BadInit(format!(
            "cluster population {} outside 1..={}",
            n_cluster, params.n
        )));
    }
    let n = n_cluster as f64;
    let big_n = params.n as f64;
    let s2 = params.sigma * params.sigma;
    let base = big_n * s2 / (2.0 * n);
    Ok(ClusterMoments {
        n: n_cluster,
        eigen_large: (1.0 + n / (2.0 * big_n) + big_n / (2.0 * n)) * s2,
        eigen_small: base,
        var_ii: base * ((1.0 + 1.0 / big_n).powi(2) + (n - 1.0) / (big_n * big_n)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{circular_mean, periodic_distance};

    fn params(n: usize, r: f64, sigma: f64) -> ModelParams {
        ModelParams {
            n,
            r,
            sigma,
            ..Default::default()
        }
    }

    #[test]
    fn drift_two_agents() {
        let p = params(2, 0.3, 0.0);
        let pos = vec![0.4, 0.6];
        assert!((drift(&pos, 0, &p) - 0.1).abs() < 1e-12);
        assert!((drift(&pos, 1, &p) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn drift_no_neighbors_is_zero() {
        let p = params(3, 0.05, 0.0);
        let pos = vec![0.1, 0.5, 0.9];
        for i in 0..3 {
            assert_eq!(drift(&pos, i, &p), 0.0);
        }
    }

    #[test]
    fn drift_vanishes_at_symmetric_center() {
        let p = params(3, 0.2, 0.0);
        let pos = vec![0.5, 0.4, 0.6];
        assert!(drift(&pos, 0, &p).abs() < 1e-15);
    }

    #[test]
    fn fast_path_matches_quadratic_path() {
        let mut rng = seeded_stream(77, 0);
        for trial in 0..200 {
            let n = rng.gen_range(1..60);
            let r = rng.gen_range(0.01..0.5);
            let p = params(n, r, 0.0);
            let pos: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut fast = vec![0.0; n];
            drift_all(&pos, &p, &mut fast);
            for i in 0..n {
                let slow = drift(&pos, i, &p);
                assert!(
                    (fast[i] - slow).abs() < 1e-12,
                    "trial {trial}: agent {i}: fast {} vs slow {}",
                    fast[i],
                    slow
                );
            }
        }
    }

    #[test]
    fn fast_path_full_circle_window() {
        // R = L/2: every agent interacts with every other exactly once
        let p = params(4, 0.5, 0.0);
        let pos = vec![0.0, 0.25, 0.5, 0.75];
        let mut fast = vec![0.0; 4];
        drift_all(&pos, &p, &mut fast);
        for (i, &f) in fast.iter().enumerate() {
            let slow = drift(&pos, i, &p);
            assert!((f - slow).abs() < 1e-12, "agent {i}: {f} vs {slow}");
        }
    }

    #[test]
    fn drift_sums_to_zero_when_all_visible() {
        let mut rng = seeded_stream(13, 0);
        let n = 200;
        let p = params(n, 0.5, 0.0);
        // bunch everyone within R so the interaction graph is complete
        let pos: Vec<f64> = (0..n).map(|_| 0.3 + 0.2 * rng.gen::<f64>()).collect();
        let mut d = vec![0.0; n];
        drift_all(&pos, &p, &mut d);
        let total: f64 = d.iter().sum();
        assert!(total.abs() <= 1e-12 * n as f64, "net drift {total}");
    }

    #[test]
    fn deterministic_step_contracts_two_agents() {
        let p = ModelParams {
            h: 0.1,
            ..params(2, 0.3, 0.0)
        };
        let mut state = AgentState::new(vec![0.4, 0.6], 0.0, 1.0);
        let mut rng = seeded_stream(0, 0);
        step(&mut state, &p, &mut rng).unwrap();
        assert!((state.positions[0] - 0.41).abs() < 1e-12);
        assert!((state.positions[1] - 0.59).abs() < 1e-12);
        assert!((state.t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn coincident_agents_are_a_fixed_point() {
        let p = params(5, 0.1, 0.0);
        let mut state = AgentState::new(vec![0.7; 5], 0.0, 1.0);
        let mut rng = seeded_stream(0, 0);
        for _ in 0..50 {
            step(&mut state, &p, &mut rng).unwrap();
        }
        for &x in &state.positions {
            assert_eq!(x, 0.7);
        }
    }

    #[test]
    fn pure_noise_increments_pass_ks_test() {
        // R -> 0 disables the drift; increments must be N(0, sigma^2 h)
        let p = ModelParams {
            h: 0.01,
            ..params(1, 1e-12, 0.3)
        };
        let mut rng = seeded_stream(4, 0);
        let mut state = AgentState::new(vec![0.5], 0.0, 1.0);
        let mut incs = Vec::with_capacity(10_000);
        let mut prev = state.positions[0];
        for _ in 0..10_000 {
            step(&mut state, &p, &mut rng).unwrap();
            let x = state.positions[0];
            incs.push(signed_displacement(x, prev, 1.0));
            prev = x;
        }
        // Kolmogorov-Smirnov against N(0, sigma^2 h)
        let sd = p.sigma * p.h.sqrt();
        incs.sort_by(f64::total_cmp);
        let norm_cdf = |x: f64| 0.5 * (1.0 + erf(x / (sd * std::f64::consts::SQRT_2)));
        let n = incs.len() as f64;
        let mut dmax: f64 = 0.0;
        for (i, &x) in incs.iter().enumerate() {
            let f = norm_cdf(x);
            dmax = dmax.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        // 1% critical value 1.63/sqrt(n)
        assert!(dmax < 1.63 / n.sqrt(), "KS statistic {dmax}");
    }

    // Abramowitz-Stegun 7.1.26 rational approximation, 1.5e-7 absolute
    fn erf(x: f64) -> f64 {
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let y = 1.0
            - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
                + 0.254829592)
                * t
                * (-x * x).exp();
        sign * y
    }

    #[test]
    fn contraction_of_pairwise_distances_without_noise() {
        let p = ModelParams {
            h: 0.05,
            ..params(20, 0.3, 0.0)
        };
        let mut rng = seeded_stream(21, 0);
        let mut state = AgentState::new(
            (0..20).map(|_| 0.4 + 0.2 * rng.gen::<f64>()).collect(),
            0.0,
            1.0,
        );
        let spread = |s: &AgentState| -> f64 {
            let mut m: f64 = 0.0;
            for i in 0..s.len() {
                for j in 0..i {
                    m = m.max(periodic_distance(s.positions[i], s.positions[j], 1.0));
                }
            }
            m
        };
        let mut prev = spread(&state);
        for _ in 0..100 {
            step(&mut state, &p, &mut rng).unwrap();
            let cur = spread(&state);
            assert!(cur <= prev + 1e-12, "spread grew: {prev} -> {cur}");
            prev = cur;
        }
    }

    #[test]
    fn full_attraction_converges_to_a_point() {
        let p = ModelParams {
            h: 0.05,
            ..params(30, 0.5, 0.0)
        };
        let traj = simulate(&p, 40.0, &SdeInit::UniformRandom, 100).unwrap();
        let last = traj.last();
        let mean = circular_mean(last, 1.0);
        let var: f64 = last
            .iter()
            .map(|&x| signed_displacement(x, mean, 1.0).powi(2))
            .sum::<f64>()
            / last.len() as f64;
        assert!(var < 1e-8, "sample variance {var}");
    }

    #[test]
    fn reruns_are_bit_identical() {
        let p = params(40, 0.2, 0.1);
        let a = simulate(&p, 5.0, &SdeInit::UniformRandom, 10).unwrap();
        let b = simulate(&p, 5.0, &SdeInit::UniformRandom, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn unknown_initializer_rejected() {
        assert!(matches!(
            SdeInit::parse("blob(0.3)"),
            Err(SdeError::UnknownInit(_))
        ));
        assert!(matches!(
            SdeInit::parse("gaussian(0.5)"),
            Err(SdeError::UnknownInit(_))
        ));
        assert_eq!(SdeInit::parse("point(0.25)").unwrap(), SdeInit::Point(0.25));
        assert_eq!(
            SdeInit::parse("gaussian(0.5, 0.1)").unwrap(),
            SdeInit::Gaussian {
                center: 0.5,
                std: 0.1
            }
        );
        assert_eq!(
            SdeInit::parse("uniform-random").unwrap(),
            SdeInit::UniformRandom
        );
    }

    #[test]
    fn moment_prediction_limits() {
        let p = params(100, 0.3, 0.05);
        // n = N: eigenvalues 2 sigma^2 and sigma^2/2
        let m = cluster_moment_prediction(100, &p).unwrap();
        let s2 = 0.05 * 0.05;
        assert!((m.eigen_large - 2.0 * s2).abs() < 1e-15);
        assert!((m.eigen_small - s2 / 2.0).abs() < 1e-15);

        // var_ii from an explicit Sigma Sigma^T product
        let n = 100usize;
        let mut row = vec![1.0 / n as f64; n];
        row[0] += 1.0;
        let diag: f64 = row.iter().map(|v| v * v).sum();
        let expect = n as f64 * s2 / (2.0 * n as f64) * diag;
        assert!((m.var_ii - expect).abs() < 1e-15);
        assert!((m.var_ii - 1.2875e-3).abs() < 1e-7);
    }

    #[test]
    fn moment_eigenvalues_decrease_with_population() {
        let p = params(100, 0.3, 0.05);
        let mut prev_large = f64::INFINITY;
        let mut prev_small = f64::INFINITY;
        for n in [1usize, 2, 5, 10, 25, 50, 100] {
            let m = cluster_moment_prediction(n, &p).unwrap();
            assert!(m.eigen_large >= m.eigen_small);
            assert!(m.eigen_small > 0.0);
            assert!(m.eigen_large < prev_large);
            assert!(m.eigen_small < prev_small);
            prev_large = m.eigen_large;
            prev_small = m.eigen_small;
        }
    }

    #[test]
    fn eigen_small_halves_when_population_doubles() {
        let p = params(128, 0.3, 0.05);
        let a = cluster_moment_prediction(16, &p).unwrap();
        let b = cluster_moment_prediction(32, &p).unwrap();
        assert!((a.eigen_small / b.eigen_small - 2.0).abs() < 1e-12);
    }

    #[test]
    fn moment_prediction_range_check() {
        let p = params(10, 0.3, 0.05);
        assert!(cluster_moment_prediction(0, &p).is_err());
        assert!(cluster_moment_prediction(11, &p).is_err());
    }

    #[test]
    fn trajectory_csv_shape() {
        let p = params(3, 0.2, 0.1);
        let traj = simulate(&p, 1.0, &SdeInit::Point(0.5), 50).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x0,x1,x2");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), traj.times.len());
        assert!(rows[0].starts_with("0,"));
    }
}
