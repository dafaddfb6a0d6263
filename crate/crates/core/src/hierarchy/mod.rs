//! Cumulant expansions of the evolution operators and the explicit solution
//! of the correlation hierarchy, all evaluated pointwise.

mod context;
mod cumulant;
mod generator;
mod sequence;
mod solution;
mod transforms;

pub use context::{EvaluationContext, TermSum, DEFAULT_FD_STEP};
pub use cumulant::{cluster_arguments, cumulant_apply, ClusterArgument};
pub use generator::{
    apply_generator_via_cumulant_identity, apply_hierarchy_generator, hierarchy_generator_terms, GeneratorTerm,
};
pub use sequence::{CorrelationSequence, DistributionSequence};
pub use solution::{
    compose_evolution, evolved_sequence, scattering_cumulant_apply, solve_g, solve_g_chaos, solve_g_via_d,
    solve_g_via_d_with_magnitude, solve_g_with_magnitude,
};
pub use transforms::{correlations_of, d_from_g, distribution_of, g_from_d};
