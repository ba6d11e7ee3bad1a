//! Brownian rays: Gaussian processes with covariance `φ (s/δ)(1 - t/δ)` on
//! `0 ≤ s ≤ t < δ`, their superpositions and conditioned forms, exact path
//! sampling, reflected (queue) versions and option pricing on a geometric ray.
//!
//! Parallel sampling uses rayon behind the default `parallel` feature. Results
//! are bitwise identical between sequential and parallel execution because
//! every path draws from its own counter-based stream.

pub mod error;
pub mod options;
pub mod process;
pub mod quad;
pub mod queue;
pub mod sampler;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use process::{
    canonical_compose, canonical_decompose, condition_ray, condition_superposition, doob_time_change,
    from_theta_tau, increment_variance, induced_drift, pinned_bridge_cov, ray_cov, superpose, to_theta_tau,
    CanonicalWeights, Composed, ConditionedState, ConditionedSuperposition, RayComponent, RayParams,
    SuperposedCov, SuperpositionSpec, ThetaTau,
};
pub use sampler::{Execution, McConfig, SamplePathBatch, TimeGrid};
