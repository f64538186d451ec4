//! Numerical laboratory for the noisy Hegselmann-Krause model on the periodic
//! unit interval.
//!
//! Two simulation engines share one set of domain primitives:
//!
//! * [`sde`] — the finite-N stochastic agent system, integrated with
//!   Euler-Maruyama stepping.
//! * [`pde`] — the mean-field Fokker-Planck equation for the agent density,
//!   solved with a semi-implicit pseudo-spectral scheme.
//!
//! On top of the engines sit the analytical layers: [`stability`] (dispersion
//! relation, critical curves, expected cluster counts), [`steady`] (clustered
//! steady-state profiles and their fixed-point residuals) and [`sweep`]
//! (parallel phase-diagram scans over the `(R, sigma)` plane).
//!
//! Everything is deterministic under a fixed seed: simulations draw from
//! counter-based seeded streams and sweeps derive one stream per grid cell,
//! so outputs are byte-identical across reruns and independent of worker
//! scheduling.

pub mod cluster;
pub mod geometry;
pub mod order;
pub mod params;
pub mod pde;
pub mod rng;
pub mod sde;
pub mod stability;
pub mod steady;
pub mod sweep;

mod special;

pub use cluster::{detect_clusters, detect_weighted_clusters, Cluster, ClusterError, ClusterSet};
pub use geometry::{circular_mean, periodic_distance, signed_displacement, wrap_position};
pub use order::{disordered_reference_q, order_parameter};
pub use params::{AgentState, ModelParams, ParamError};
pub use rng::{cell_seed, seeded_stream};
