//! Periodic geometry on the circle of circumference `L`.

/// Map a coordinate into the fundamental domain `[0, L)`.
pub fn wrap_position(x: f64, l: f64) -> f64 {
    let w = x.rem_euclid(l);
    // rem_euclid can return exactly `l` when x is a tiny negative number
    if w >= l {
        0.0
    } else {
        w
    }
}

/// Shortest distance between `a` and `b` on the circle, `min(|a-b|, L-|a-b|)`.
///
/// Inputs are normalized modulo `L` first, so any real coordinates are accepted.
pub fn periodic_distance(a: f64, b: f64, l: f64) -> f64 {
    let d = (a - b).rem_euclid(l);
    d.min(l - d)
}

/// Signed shortest displacement `a - b` on the circle, in `(-L/2, L/2]`.
///
/// The antipodal tie `|a-b| = L/2` resolves to `+L/2` (positive orientation).
pub fn signed_displacement(a: f64, b: f64, l: f64) -> f64 {
    let d = (a - b).rem_euclid(l);
    if d > l / 2.0 {
        d - l
    } else {
        d
    }
}

/// Circular (angular) mean of positions, in `[0, L)`.
///
/// Positions are lifted to unit vectors on the circle and the resultant's
/// angle is mapped back. Returns 0 for an empty slice or a perfectly balanced
/// configuration whose resultant vanishes.
pub fn circular_mean(positions: &[f64], l: f64) -> f64 {
    let mut sx = 0.0;
    let mut sy = 0.0;
    for &p in positions {
        let ang = 2.0 * std::f64::consts::PI * p / l;
        sx += ang.cos();
        sy += ang.sin();
    }
    resultant_angle(sx, sy, l)
}

/// Circular mean with per-point weights (e.g. density mass on a grid).
pub fn circular_mean_weighted(positions: &[f64], weights: &[f64], l: f64) -> f64 {
    assert_eq!(positions.len(), weights.len());
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (&p, &w) in positions.iter().zip(weights) {
        let ang = 2.0 * std::f64::consts::PI * p / l;
        sx += w * ang.cos();
        sy += w * ang.sin();
    }
    resultant_angle(sx, sy, l)
}

fn resultant_angle(sx: f64, sy: f64, l: f64) -> f64 {
    if sx == 0.0 && sy == 0.0 {
        return 0.0;
    }
    let ang = sy.atan2(sx);
    wrap_position(ang * l / (2.0 * std::f64::consts::PI), l)
}
