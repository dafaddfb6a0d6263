//! Monte Carlo L¹ norms, the a priori norm bound, flow isometry and the
//! property batteries that produce machine-readable reports.

mod checks;
mod quadrature;
mod report;
mod suite;

pub use checks::{
    cancellation_error, chaos_errors, check_isometry, check_norm_bound, free_streaming_error, group_error,
    initial_condition_error, mixed_error, residual_study, residual_terms, round_trip_errors, route_error,
    ResidualStudy,
};
pub use quadrature::{
    derive_seed, mc_l1_norm, mc_l1_norms, sample_configurations, Estimate, GaussianProposal, McQuadrature, MIN_SAMPLES,
};
pub use report::{judge, Comparison, PropertyReport, ReportParameters};
pub use suite::{
    configurations, plan, run_cell, run_suite, Cell, NamedPotential, ResidualSettings, Suite, SuiteInputs, Tolerances,
    MAX_DYNAMIC_ARITY, MAX_NORM_ARITY,
};
