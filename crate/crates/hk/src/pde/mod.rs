//! Mean-field Fokker-Planck solver.
//!
//! The agent density on the periodic unit interval evolves under an
//! advection term built from the bounded-confidence attraction and a
//! diffusion term `sigma^2/2 rho_xx`. The solver is pseudo-spectral:
//! derivatives act mode-wise, the quadratic advection product is formed on a
//! collocation grid, and diffusion is treated implicitly so stiffness never
//! limits the step.

mod solver;
mod spectral;

pub use solver::{
    count_density_clusters, interaction_multiplier, DiagRow, Diagnostics, GrowthMeasurement,
    PdeInit, SolverConfig, SpectralSolver, DENSITY_CLUSTER_LEVEL,
};
pub use spectral::{forward_transform, inverse_transform, PdeError, SpectralDensity};
