//! Gap-based cluster detection on the circle.
//!
//! Positions are sorted around the circle and cut wherever the circular gap
//! between consecutive points exceeds `gap_threshold`; each maximal run is one
//! cluster. The same machinery serves agent positions (unit weight per agent)
//! and density fields (grid cells weighted by mass).

use thiserror::Error;

use crate::geometry::{circular_mean_weighted, wrap_position};

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Indices into the caller's position list; sorted ascending.
    pub members: Vec<usize>,
    /// Circular mean of member positions, in `[0, L)`.
    pub center: f64,
    /// Arc length spanned by the members.
    pub width: f64,
    /// Total weight: agent count, or mass for density clusters.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub gap_threshold: f64,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("no agents")]
    NoAgents,
    #[error("gap threshold must be positive, got {0}")]
    BadThreshold(f64),
}

/// Partition agent positions into clusters separated by circular gaps larger
/// than `gap_threshold`. If no gap exceeds the threshold the whole population
/// is one cluster spanning the circle.
pub fn detect_clusters(
    positions: &[f64],
    gap_threshold: f64,
    l: f64,
) -> Result<ClusterSet, ClusterError> {
    let weights = vec![1.0; positions.len()];
    detect_weighted_clusters_impl(positions, &weights, gap_threshold, l)
}

/// Cluster weighted points (e.g. supra-level density cells with their mass).
pub fn detect_weighted_clusters(
    positions: &[f64],
    weights: &[f64],
    gap_threshold: f64,
    l: f64,
) -> Result<ClusterSet, ClusterError> {
    assert_eq!(positions.len(), weights.len());
    detect_weighted_clusters_impl(positions, weights, gap_threshold, l)
}

fn detect_weighted_clusters_impl(
    positions: &[f64],
    weights: &[f64],
    gap_threshold: f64,
    l: f64,
) -> Result<ClusterSet, ClusterError> {
    if positions.is_empty() {
        return Err(ClusterError::NoAgents);
    }
    if !(gap_threshold > 0.0) {
        return Err(ClusterError::BadThreshold(gap_threshold));
    }

    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        wrap_position(positions[a], l).total_cmp(&wrap_position(positions[b], l))
    });
    let sorted: Vec<f64> = order.iter().map(|&i| wrap_position(positions[i], l)).collect();
    let n = sorted.len();

    // gap[j] follows sorted[j]; the last gap wraps around the seam
    let mut gaps = Vec::with_capacity(n);
    for j in 0..n {
        let next = if j + 1 < n { sorted[j + 1] } else { sorted[0] + l };
        gaps.push(next - sorted[j]);
    }

    let cut_after: Vec<usize> = (0..n).filter(|&j| gaps[j] > gap_threshold).collect();

    let mut clusters = Vec::new();
    if cut_after.is_empty() {
        // single cluster spanning the circle; widest gap bounds the span
        let max_gap_at = (0..n)
            .max_by(|&a, &b| gaps[a].total_cmp(&gaps[b]))
            .expect("nonempty");
        let width = if n == 1 { 0.0 } else { l - gaps[max_gap_at] };
        clusters.push(make_cluster(&order, positions, weights, 0, n - 1, width, l, n));
    } else {
        // runs start just after each cut
        for c in 0..cut_after.len() {
            let start = (cut_after[(c + cut_after.len() - 1) % cut_after.len()] + 1) % n;
            let end = cut_after[c];
            let span = if start <= end {
                sorted[end] - sorted[start]
            } else {
                sorted[end] + l - sorted[start]
            };
            clusters.push(make_cluster(&order, positions, weights, start, end, span, l, n));
        }
        // deterministic order: by first (sorted) member position
        clusters.sort_by(|a, b| a.center.total_cmp(&b.center));
    }

    Ok(ClusterSet {
        clusters,
        gap_threshold,
    })
}

#[allow(clippy::too_many_arguments)]
fn make_cluster(
    order: &[usize],
    positions: &[f64],
    weights: &[f64],
    start: usize,
    end: usize,
    width: f64,
    l: f64,
    n: usize,
) -> Cluster {
    let mut members = Vec::new();
    let mut j = start;
    loop {
        members.push(order[j]);
        if j == end {
            break;
        }
        j = (j + 1) % n;
    }
    members.sort_unstable();
    let pos: Vec<f64> = members.iter().map(|&i| positions[i]).collect();
    let w: Vec<f64> = members.iter().map(|&i| weights[i]).collect();
    let center = circular_mean_weighted(&pos, &w, l);
    let mass = w.iter().sum();
    Cluster {
        members,
        center,
        width,
        mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn one_large_gap_two_clusters() {
        let set = detect_clusters(&[0.10, 0.11, 0.50], 0.1, 1.0).unwrap();
        assert_eq!(set.len(), 2);
        let sizes: Vec<usize> = set.clusters.iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes, vec![2, 1]);
        assert!((set.clusters[0].center - 0.105).abs() < 1e-9);
        assert!((set.clusters[1].center - 0.50).abs() < 1e-9);
    }

    #[test]
    fn single_agent_single_zero_width_cluster() {
        let set = detect_clusters(&[0.3], 0.1, 1.0).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.clusters[0].width, 0.0);
        assert_eq!(set.clusters[0].mass, 1.0);
    }

    #[test]
    fn equally_spaced_below_threshold_spans_circle() {
        let pos: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let set = detect_clusters(&pos, 0.2, 1.0).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.clusters[0].members.len(), 10);
        assert!((set.clusters[0].width - 0.9).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_error() {
        assert_eq!(detect_clusters(&[], 0.1, 1.0), Err(ClusterError::NoAgents));
    }

    #[test]
    fn cluster_straddling_seam_detected_whole() {
        let set = detect_clusters(&[0.95, 0.02, 0.5], 0.2, 1.0).unwrap();
        assert_eq!(set.len(), 2);
        let big = set.clusters.iter().find(|c| c.members.len() == 2).unwrap();
        assert!(big.center > 0.9 || big.center < 0.1);
        assert!((big.width - 0.07).abs() < 1e-12);
    }

    #[test]
    fn invariant_under_relabeling_and_rotation() {
        let mut rng = crate::rng::seeded_stream(5, 0);
        for _ in 0..50 {
            let n = rng.gen_range(2..40);
            let pos: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let base = detect_clusters(&pos, 0.15, 1.0).unwrap();

            // relabel: reverse the agent order
            let rev: Vec<f64> = pos.iter().rev().cloned().collect();
            let relabeled = detect_clusters(&rev, 0.15, 1.0).unwrap();
            assert_eq!(base.len(), relabeled.len());
            let mut w1: Vec<f64> = base.clusters.iter().map(|c| c.mass).collect();
            let mut w2: Vec<f64> = relabeled.clusters.iter().map(|c| c.mass).collect();
            w1.sort_by(f64::total_cmp);
            w2.sort_by(f64::total_cmp);
            assert_eq!(w1, w2);

            // rotate everything by a random shift
            let shift: f64 = rng.gen_range(0.0..1.0);
            let rotated: Vec<f64> = pos.iter().map(|x| (x + shift).rem_euclid(1.0)).collect();
            let rot = detect_clusters(&rotated, 0.15, 1.0).unwrap();
            assert_eq!(base.len(), rot.len());
        }
    }

    #[test]
    fn clusters_partition_all_agents() {
        let mut rng = crate::rng::seeded_stream(9, 0);
        let pos: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..1.0)).collect();
        let set = detect_clusters(&pos, 0.01, 1.0).unwrap();
        let mut seen: Vec<usize> = set.clusters.iter().flat_map(|c| c.members.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..200).collect::<Vec<_>>());
    }
}
