//! Finite-N oracles: realizations, exact sums, exact diagonalization,
//! occupation counts and the constrained variational search.

mod classical;
mod ed;
mod occupation;
mod oracle;
mod realization;
mod rng;

pub use classical::{classical_pressure_exact, diagonal_energies};
pub use ed::{quantum_pressure_ed, EdEstimate, EdMethod, EdOptions};
pub use occupation::{entropy_s, occupation_entropy_check, LdPoint, OccupationCheck};
pub use oracle::variational_oracle;
pub use realization::{
    eval_hier_field, lexicographic_overlap, reference_overlap, sample_realization,
    shared_prefix_overlap, Level, Realization,
};
pub use rng::{normal_stream, uniform_stream};

/// Which longitudinal field enters the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldMode {
    Iid,
    Hier,
}

/// Size guards for brute-force work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceLimits {
    /// Upper bound on stored tree Gaussians.
    pub max_dim: usize,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        Self { max_dim: 1 << 26 }
    }
}

impl ResourceLimits {
    /// Defaults, overridden by `GREMPHASE_MAX_DIM` when set to an integer.
    pub fn from_env() -> Self {
        let mut limits = Self::default();
        if let Some(v) = std::env::var("GREMPHASE_MAX_DIM")
            .ok()
            .and_then(|s| s.trim().parse().ok())
        {
            limits.max_dim = v;
        }
        limits
    }
}
