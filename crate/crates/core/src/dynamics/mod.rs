//! Hamiltonian mechanics of small clusters: phase points, k-body potentials,
//! numerical flow maps and the Liouville generators.

mod flow;
mod function;
mod liouville;
mod phase;
mod potential;

pub(crate) use flow::flow_points;
pub use flow::{apply_flow_operator, flow_backward, FlowSolver, Integrator};
pub use function::{FnPhase, GaussianComponent, GaussianMixture, IndependentProduct, PhaseFunction, SharedFunction};
pub use liouville::{apply_liouville, Factor, LiouvilleMode};
pub(crate) use phase::restrict_within;
pub use phase::{restrict, PhaseConfiguration, PhasePoint, MAX_DIM};
pub use potential::{ExternalPotential, InteractionPotential, PotentialFamily};
