//! Clustered-phase steady-state theory.
//!
//! A steady single cluster centered at 0 satisfies the integral fixed-point
//! equation `rho(x) = rho(0) exp{ (2/sigma^2) int K(x,y) rho(y) dy }` with the
//! kernel `K(x,y) = int_0^x (y - xi) 1_{|y - xi| <= R} dxi`. For small noise
//! the profile approaches `rho_0(x) = C exp{-min(x^2, R^2)/sigma^2}`: Gaussian
//! of variance `sigma^2/2` inside the confidence radius, a flat plateau
//! outside. The analysis domain is `[-1/2, 1/2]` with the cluster at 0;
//! callers shift coordinates so a detected cluster center maps to 0.

use thiserror::Error;

use crate::geometry::periodic_distance;
use crate::special::adaptive_simpson;

#[derive(Debug, Error, PartialEq)]
pub enum SteadyError {
    #[error("asymmetric input: density must be even about 0 within 1% of its peak")]
    AsymmetricInput,
    #[error("clusters interact: centers closer than 2R")]
    ClustersInteract,
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// Kernel of the fixed-point equation, evaluated from its closed form.
///
/// The integrand `(y - xi) 1_{|y - xi| <= R}` is linear on the part of
/// `[0, x]` where the indicator is active, so clipping the window and applying
/// the antiderivative `y xi - xi^2/2` reproduces the published three-branch
/// case analysis exactly.
pub fn kernel_k(x: f64, y: f64, r: f64) -> f64 {
    let (lo, hi) = if x >= 0.0 { (0.0, x) } else { (x, 0.0) };
    let a = lo.max(y - r);
    let b = hi.min(y + r);
    if a >= b {
        return 0.0;
    }
    let anti = |t: f64| y * t - 0.5 * t * t;
    let val = anti(b) - anti(a);
    if x >= 0.0 {
        val
    } else {
        -val
    }
}

/// Single-cluster asymptotic profile with its normalization constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterProfile {
    pub center: f64,
    pub sigma: f64,
    pub r: f64,
    /// Normalization `C` making the profile integrate to 1 over the circle.
    pub c: f64,
}

impl ClusterProfile {
    pub fn new(center: f64, r: f64, sigma: f64) -> Result<Self, SteadyError> {
        if !(sigma > 0.0) {
            return Err(SteadyError::BadParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(r > 0.0 && r <= 0.5) {
            return Err(SteadyError::BadParameter(format!("radius {r} outside (0, 1/2]")));
        }
        // normalize numerically so the plateau mass is included exactly;
        // split at the exponent kink |x| = R
        let f = |d: f64| (-(d * d).min(r * r) / (sigma * sigma)).exp();
        let cut = r.min(0.5);
        let mut total = 2.0 * adaptive_simpson(&f, 0.0, cut, 1e-13);
        if cut < 0.5 {
            total += 2.0 * (0.5 - cut) * (-(r * r) / (sigma * sigma)).exp();
        }
        Ok(ClusterProfile {
            center,
            sigma,
            r,
            c: 1.0 / total,
        })
    }

    /// Density at `x` (periodic displacement from the center).
    pub fn density(&self, x: f64) -> f64 {
        let d = periodic_distance(x, self.center, 1.0);
        self.c * (-(d * d).min(self.r * self.r) / (self.sigma * self.sigma)).exp()
    }
}

/// `C exp{-min(d^2, R^2)/sigma^2}` with `d` the circular displacement from
/// `center`; the constant is computed by numerical normalization.
pub fn asymptotic_profile(x: f64, center: f64, r: f64, sigma: f64) -> Result<f64, SteadyError> {
    Ok(ClusterProfile::new(center, r, sigma)?.density(x))
}

/// Max-norm residual of the fixed-point equation on a uniform grid of
/// `[-1/2, 1/2)` (`x_i = -1/2 + i/n`, `n` even so the center is a node).
///
/// The `y`-integral runs over the periodic extension of the kernel
/// (`K(x,y) + K(x,y-1) + K(x,y+1)`), matching the circular setting in which
/// the constant density is an exact solution; quadrature is the trapezoid
/// rule on the same grid. The input must be even about 0 within 1% of its
/// peak.
pub fn fixed_point_residual(rho: &[f64], r: f64, sigma: f64) -> Result<f64, SteadyError> {
    let n = rho.len();
    if n < 16 || n % 2 != 0 {
        return Err(SteadyError::BadGrid(format!(
            "need an even grid of at least 16 points, got {n}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(SteadyError::BadParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let peak = rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for i in 1..n {
        let mirror = n - i;
        if mirror < n && (rho[i] - rho[mirror]).abs() > 0.01 * peak {
            return Err(SteadyError::AsymmetricInput);
        }
    }

    let x_at = |i: usize| -0.5 + i as f64 / n as f64;
    let rho0 = rho[n / 2];
    let inv_n = 1.0 / n as f64;
    let mut worst = 0.0f64;
    for i in 0..n {
        let x = x_at(i);
        let mut integral = 0.0;
        for (j, &w) in rho.iter().enumerate() {
            let y = x_at(j);
            let k = kernel_k(x, y, r) + kernel_k(x, y - 1.0, r) + kernel_k(x, y + 1.0, r);
            integral += k * w;
        }
        integral *= inv_n;
        let fixed = rho0 * (2.0 / (sigma * sigma) * integral).exp();
        worst = worst.max((rho[i] - fixed).abs());
    }
    Ok(worst)
}

/// Equal-weight mixture of single-cluster profiles sampled on a uniform grid
/// of `[0, 1)`. Centers must be pairwise farther than `2R` apart so the
/// clusters do not interact.
pub fn multi_cluster_profile(
    centers: &[f64],
    r: f64,
    sigma: f64,
    grid: usize,
) -> Result<Vec<f64>, SteadyError> {
    if centers.is_empty() {
        return Err(SteadyError::BadParameter("need at least one center".into()));
    }
    for (i, &a) in centers.iter().enumerate() {
        for &b in centers.iter().skip(i + 1) {
            if periodic_distance(a, b, 1.0) <= 2.0 * r {
                return Err(SteadyError::ClustersInteract);
            }
        }
    }
    let profiles: Result<Vec<ClusterProfile>, _> = centers
        .iter()
        .map(|&c| ClusterProfile::new(c, r, sigma))
        .collect();
    let profiles = profiles?;
    let w = 1.0 / centers.len() as f64;
    Ok((0..grid)
        .map(|j| {
            let x = j as f64 / grid as f64;
            profiles.iter().map(|p| w * p.density(x)).sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::signed_displacement;

    /// Independent oracle: integrate the kernel definition piecewise. The
    /// integrand is linear where the indicator is active and zero elsewhere,
    /// so splitting `[0, x]` at the window edges and applying the midpoint
    /// rule per piece is exact.
    fn kernel_quadrature(x: f64, y: f64, r: f64) -> f64 {
        let (lo, hi) = if x >= 0.0 { (0.0, x) } else { (x, 0.0) };
        let mut cuts = vec![lo, hi];
        for c in [y - r, y + r] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
        cuts.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let mid = 0.5 * (a + b);
            if (y - mid).abs() <= r {
                acc += (y - mid) * (b - a);
            }
        }
        if x >= 0.0 {
            acc
        } else {
            -acc
        }
    }

    /// The published three-branch closed forms, transcribed literally.
    fn kernel_branches(x: f64, y: f64, r: f64) -> f64 {
        let quad = |x: f64, y: f64| 0.5 * (r + x - y) * (r - x + y);
        if x.abs() > 2.0 * r {
            if y >= x - r && y <= x + r {
                quad(x, y)
            } else if y.abs() <= r {
                0.5 * (y * y - r * r)
            } else {
                0.0
            }
        } else if x >= 0.0 {
            if y >= r && y <= x + r {
                quad(x, y)
            } else if y >= x - r && y <= r {
                -0.5 * x * (x - 2.0 * y)
            } else if y >= -r && y <= x - r {
                0.5 * (y * y - r * r)
            } else {
                0.0
            }
        } else {
            if y >= x - r && y <= -r {
                quad(x, y)
            } else if y >= -r && y <= x + r {
                -0.5 * x * (x - 2.0 * y)
            } else if y >= x + r && y <= r {
                0.5 * (y * y - r * r)
            } else {
                0.0
            }
        }
    }

    #[test]
    fn kernel_vanishes_at_x_zero() {
        for y in [-0.4, -0.1, 0.0, 0.2, 0.45] {
            assert_eq!(kernel_k(0.0, y, 0.1), 0.0);
        }
    }

    #[test]
    fn kernel_spot_values() {
        assert!((kernel_k(0.5, 0.0, 0.1) + 0.005).abs() < 1e-15);
        assert!((kernel_k(0.05, 0.0, 0.1) + 0.00125).abs() < 1e-15);
    }

    #[test]
    fn kernel_matches_quadrature_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::seeded_stream(101, 0);
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let r = rng.gen_range(0.01..0.45);
            let x = rng.gen_range(-0.5..0.5);
            let y = rng.gen_range(-0.5..0.5);
            let d = (kernel_k(x, y, r) - kernel_quadrature(x, y, r)).abs();
            worst = worst.max(d);
        }
        assert!(worst < 1e-10, "worst deviation {worst}");
    }

    #[test]
    fn kernel_matches_published_branches() {
        use rand::Rng;
        let mut rng = crate::rng::seeded_stream(103, 0);
        for _ in 0..10_000 {
            let r = rng.gen_range(0.01..0.45);
            let x = rng.gen_range(-0.5..0.5);
            let y = rng.gen_range(-0.5..0.5);
            let d = (kernel_k(x, y, r) - kernel_branches(x, y, r)).abs();
            assert!(d < 1e-13, "mismatch at x={x} y={y} r={r}: {d}");
        }
    }

    #[test]
    fn kernel_continuous_across_branch_boundaries() {
        use rand::Rng;
        let mut rng = crate::rng::seeded_stream(107, 0);
        let eps = 1e-8;
        for _ in 0..200 {
            let r = rng.gen_range(0.05..0.2);
            let y = rng.gen_range(-0.5..0.5);
            for x0 in [-2.0 * r, 0.0, 2.0 * r] {
                let left = kernel_k(x0 - eps, y, r);
                let right = kernel_k(x0 + eps, y, r);
                assert!(
                    (left - right).abs() < 1e-6,
                    "jump at x={x0}, y={y}, r={r}: {left} vs {right}"
                );
            }
        }
    }

    #[test]
    fn profile_maximum_and_plateau() {
        let p = ClusterProfile::new(0.0, 0.1, 0.02).unwrap();
        assert!((p.density(0.0) - p.c).abs() < 1e-12);
        // beyond the radius the profile is the flat plateau C e^{-R^2/sigma^2}
        let plateau = p.c * (-(0.1f64 / 0.02).powi(2)).exp();
        for x in [0.12, 0.2, 0.35, 0.49] {
            assert!((p.density(x) - plateau).abs() < 1e-20);
        }
    }

    #[test]
    fn profile_integrates_to_one() {
        for (r, sigma) in [(0.1, 0.02), (0.1, 0.04), (0.2, 0.1), (0.05, 0.01)] {
            let p = ClusterProfile::new(0.3, r, sigma).unwrap();
            let n = 20_000;
            let mass: f64 = (0..n).map(|j| p.density(j as f64 / n as f64)).sum::<f64>() / n as f64;
            assert!((mass - 1.0).abs() < 1e-8, "mass {mass} at r={r} sigma={sigma}");
        }
    }

    #[test]
    fn profile_second_moment_is_half_sigma_squared() {
        let p = ClusterProfile::new(0.0, 0.1, 0.02).unwrap();
        let n = 40_000;
        let var: f64 = (0..n)
            .map(|j| {
                let x = j as f64 / n as f64;
                let d = signed_displacement(x, 0.0, 1.0);
                d * d * p.density(x)
            })
            .sum::<f64>()
            / n as f64;
        let target = 0.02f64.powi(2) / 2.0;
        assert!(
            (var - target).abs() / target < 0.01,
            "variance {var} vs sigma^2/2 = {target}"
        );
    }

    #[test]
    fn constant_density_has_zero_residual() {
        let rho = vec![1.0; 2048];
        let res = fixed_point_residual(&rho, 0.1, 0.2).unwrap();
        assert!(res < 1e-12, "residual {res}");
        let res = fixed_point_residual(&rho, 0.1, 0.02).unwrap();
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn asymptotic_profile_residual_below_sigma_threshold() {
        let n = 2048;
        let (r, sigma) = (0.1, 0.02);
        let p = ClusterProfile::new(0.0, r, sigma).unwrap();
        let rho: Vec<f64> = (0..n)
            .map(|i| {
                let x = -0.5 + i as f64 / n as f64;
                p.density(x.rem_euclid(1.0))
            })
            .collect();
        let res = fixed_point_residual(&rho, r, sigma).unwrap();
        assert!(res <= 0.05 * p.c, "residual {res} vs threshold {}", 0.05 * p.c);
    }

    #[test]
    fn shifted_profile_rejected_as_asymmetric() {
        let n = 2048;
        let p = ClusterProfile::new(0.0, 0.1, 0.02).unwrap();
        let rho: Vec<f64> = (0..n)
            .map(|i| {
                let x = -0.5 + i as f64 / n as f64 + 0.05;
                p.density(x.rem_euclid(1.0))
            })
            .collect();
        assert_eq!(
            fixed_point_residual(&rho, 0.1, 0.02),
            Err(SteadyError::AsymmetricInput)
        );
    }

    #[test]
    fn multi_cluster_profile_mass_and_peaks() {
        let grid = 4096;
        let rho = multi_cluster_profile(&[0.25, 0.75], 0.1, 0.02, grid).unwrap();
        let mass: f64 = rho.iter().sum::<f64>() / grid as f64;
        assert!((mass - 1.0).abs() < 1e-8);
        let p1 = rho[grid / 4];
        let p2 = rho[3 * grid / 4];
        assert!((p1 - p2).abs() < 1e-9, "peaks differ: {p1} vs {p2}");
    }

    #[test]
    fn single_center_equals_asymptotic_profile() {
        let grid = 1024;
        let rho = multi_cluster_profile(&[0.5], 0.1, 0.03, grid).unwrap();
        for j in (0..grid).step_by(37) {
            let x = j as f64 / grid as f64;
            let expect = asymptotic_profile(x, 0.5, 0.1, 0.03).unwrap();
            assert!((rho[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn interacting_centers_rejected() {
        assert_eq!(
            multi_cluster_profile(&[0.3, 0.45], 0.1, 0.02, 256),
            Err(SteadyError::ClustersInteract)
        );
    }
}
