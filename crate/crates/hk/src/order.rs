//! Order parameter: edge density of the communication graph.

use crate::geometry::periodic_distance;

/// `Q = (1/N^2) * sum_{i,j} 1_{|x_i - x_j| <= R}`, diagonal terms included.
///
/// Equals 1 at consensus and `1/N + (1 - 1/N) * 2R/L` in expectation for
/// i.i.d. uniform positions.
pub fn order_parameter(positions: &[f64], r: f64, l: f64) -> f64 {
    let n = positions.len();
    if n == 0 {
        return 0.0;
    }
    let mut edges: u64 = n as u64; // diagonal
    for i in 0..n {
        for j in (i + 1)..n {
            if periodic_distance(positions[i], positions[j], l) <= r {
                edges += 2;
            }
        }
    }
    edges as f64 / (n as f64 * n as f64)
}

/// Expected `Q` of a disordered (uniform) population of `n` agents.
pub fn disordered_reference_q(n: usize, r: f64, l: f64) -> f64 {
    let nf = n as f64;
    1.0 / nf + (1.0 - 1.0 / nf) * 2.0 * r / l
}
