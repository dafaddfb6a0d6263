use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::checks::{
    cancellation_error, chaos_errors, check_isometry, check_norm_bound, free_streaming_error, group_error,
    initial_condition_error, residual_study, round_trip_errors, route_error,
};
use super::quadrature::{derive_seed, sample_configurations, GaussianProposal, McQuadrature};
use super::report::{Comparison, PropertyReport, ReportParameters};
use crate::dynamics::{FlowSolver, IndependentProduct, PhaseFunction, PhasePoint, PotentialFamily, SharedFunction};
use crate::error::{contract, Result};
use crate::hierarchy::{CorrelationSequence, DistributionSequence, EvaluationContext};

/// Largest arity the residual, group and isometry batteries run at.
pub const MAX_DYNAMIC_ARITY: usize = 3;
/// Largest arity the norm-bound battery runs at.
pub const MAX_NORM_ARITY: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    RoundTrip,
    Identities,
    Residual,
    Group,
    Chaos,
    Norms,
    Isometry,
    All,
}

impl Suite {
    pub const MEMBERS: [Suite; 7] = [
        Suite::RoundTrip,
        Suite::Identities,
        Suite::Residual,
        Suite::Group,
        Suite::Chaos,
        Suite::Norms,
        Suite::Isometry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::RoundTrip => "round_trip",
            Suite::Identities => "identities",
            Suite::Residual => "residual",
            Suite::Group => "group",
            Suite::Chaos => "chaos",
            Suite::Norms => "norms",
            Suite::Isometry => "isometry",
            Suite::All => "all",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::MEMBERS.into_iter().chain([Suite::All]).find(|s| s.name() == name)
    }

    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => Self::MEMBERS.to_vec(),
            s => alloc::vec![s],
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pass thresholds. Algebraic identities use the mixed error
/// `|a − b| / max(1, |b|)`; route equivalence is relative to the summed term
/// magnitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub algebraic: f64,
    pub route_relative: f64,
    pub free_streaming: f64,
    pub residual: f64,
    pub residual_order: f64,
    pub group: f64,
    pub scattering: f64,
    pub isometry_allowance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: 1e-12,
            route_relative: 1e-12,
            free_streaming: 1e-10,
            residual: 1e-4,
            residual_order: 1.9,
            group: 1e-6,
            scattering: 1e-6,
            isometry_allowance: 1e-3,
        }
    }
}

/// Time steps of the residual battery: the central-difference step of the
/// absolute check, and the larger step whose halving measures the order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResidualSettings {
    pub fd_step_t: f64,
    pub order_step: f64,
}

impl Default for ResidualSettings {
    fn default() -> Self {
        Self {
            fd_step_t: 1e-3,
            order_step: 0.04,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedPotential {
    pub name: String,
    pub family: PotentialFamily,
}

/// Everything a battery needs, already validated and built.
#[derive(Clone, Debug)]
pub struct SuiteInputs<'a> {
    pub potentials: Vec<NamedPotential>,
    pub solver: FlowSolver,
    pub partition_cap: usize,
    pub fd_step: f64,
    pub initial: CorrelationSequence<'a>,
    pub arities: Vec<usize>,
    pub times: Vec<f64>,
    pub points: usize,
    pub point_proposal: GaussianProposal,
    pub seed: u64,
    pub quadrature: McQuadrature,
    pub tolerances: Tolerances,
    pub residual: ResidualSettings,
}

impl SuiteInputs<'_> {
    pub fn validate(&self) -> Result<()> {
        if self.potentials.is_empty() {
            return Err(contract("no potentials configured"));
        }
        if self.arities.is_empty() || self.arities.iter().any(|&n| n == 0 || n > self.initial.max_arity()) {
            return Err(contract("arities must lie in 1..=max arity of the initial data"));
        }
        if self.arities.iter().any(|&n| n > self.partition_cap) {
            return Err(contract("arity exceeds the partition cap"));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(contract("times must be finite"));
        }
        if self.points == 0 {
            return Err(contract("at least one phase point per cell is needed"));
        }
        self.point_proposal.validate()?;
        self.quadrature.validate()?;
        for s in [self.residual.fd_step_t, self.residual.order_step] {
            if !(s.is_finite() && s > 0.0) {
                return Err(contract("residual steps must be positive"));
            }
        }
        self.context(0).validate()
    }

    fn context(&self, potential: usize) -> EvaluationContext {
        let mut ctx = EvaluationContext::new(self.potentials[potential].family.clone(), self.solver);
        ctx.partition_cap = self.partition_cap;
        ctx.fd_step = self.fd_step;
        ctx
    }

    fn one_particle(&self) -> Option<SharedFunction<'_>> {
        self.initial.shared(1)
    }
}

/// One independent unit of work of a battery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub suite: Suite,
    pub potential: Option<usize>,
    pub n: usize,
    pub times: Vec<f64>,
    pub seed: u64,
}

/// The cells of `suite` in their fixed report order. Each carries a seed
/// derived from the base seed, the battery and its position, so the cells can
/// run in any order or in parallel.
pub fn plan(inputs: &SuiteInputs<'_>, suite: Suite) -> Vec<Cell> {
    let mut cells = Vec::new();
    for member in suite.members() {
        let start = cells.len();
        let arities = |limit: usize| inputs.arities.iter().copied().filter(move |&n| n <= limit);
        let pots = 0..inputs.potentials.len();
        let mut push = |potential: Option<usize>, n: usize, times: Vec<f64>| {
            cells.push(Cell {
                suite: member,
                potential,
                n,
                times,
                seed: 0,
            })
        };
        match member {
            Suite::RoundTrip => arities(usize::MAX).for_each(|n| push(None, n, Vec::new())),
            Suite::Identities => {
                for p in pots {
                    arities(usize::MAX).for_each(|n| push(Some(p), n, inputs.times.clone()));
                }
            }
            Suite::Residual | Suite::Chaos | Suite::Norms | Suite::Isometry => {
                let limit = if member == Suite::Norms {
                    MAX_NORM_ARITY
                } else {
                    MAX_DYNAMIC_ARITY
                };
                let limit = if member == Suite::Chaos { usize::MAX } else { limit };
                for p in pots {
                    for n in arities(limit) {
                        for &t in &inputs.times {
                            push(Some(p), n, alloc::vec![t]);
                        }
                    }
                }
            }
            Suite::Group => {
                for p in pots {
                    for n in arities(MAX_DYNAMIC_ARITY) {
                        for &t1 in &inputs.times {
                            for &t2 in &inputs.times {
                                push(Some(p), n, alloc::vec![t1, t2]);
                            }
                        }
                    }
                }
            }
            Suite::All => unreachable!("expanded above"),
        }
        for (i, cell) in cells[start..].iter_mut().enumerate() {
            cell.seed = derive_seed(derive_seed(inputs.seed, member.index()), i as u64);
        }
    }
    cells
}

/// Runs one cell. Errors become failed reports.
pub fn run_cell(inputs: &SuiteInputs<'_>, cell: &Cell) -> Vec<PropertyReport> {
    let base = ReportParameters {
        n: cell.n,
        times: cell.times.clone(),
        potential: cell
            .potential
            .map(|p| inputs.potentials[p].name.clone())
            .unwrap_or_default(),
        samples: inputs.points,
        seed: cell.seed,
    };
    let mut reports = Vec::new();
    if let Err(e) = run_cell_into(inputs, cell, &base, &mut reports) {
        reports.push(PropertyReport::failure(failure_name(cell.suite), base, &e));
    }
    reports
}

fn failure_name(suite: Suite) -> &'static str {
    match suite {
        Suite::RoundTrip => "round_trip",
        Suite::Identities => "identities",
        Suite::Residual => "hierarchy_residual",
        Suite::Group => "group_property",
        Suite::Chaos => "chaos_reduction",
        Suite::Norms => "norm_bound",
        Suite::Isometry => "isometry",
        Suite::All => "all",
    }
}

fn run_cell_into(
    inputs: &SuiteInputs<'_>,
    cell: &Cell,
    base: &ReportParameters,
    out: &mut Vec<PropertyReport>,
) -> Result<()> {
    let tol = &inputs.tolerances;
    let n = cell.n;
    let points = sample_configurations(&inputs.point_proposal, n, inputs.points, cell.seed)?;
    let ctx = inputs.context(cell.potential.unwrap_or(0));
    let at_most = |name: &str, observed: f64, target: f64| {
        PropertyReport::new(name, base.clone(), observed, target, Comparison::AtMost)
    };
    let at = |name: &str, t: &[f64], observed: f64, target: f64| {
        let mut params = base.clone();
        params.times = t.to_vec();
        PropertyReport::new(name, params, observed, target, Comparison::AtMost)
    };
    match cell.suite {
        Suite::RoundTrip => {
            let d = distribution_fixture(inputs)?;
            let (gdg, dgd) = round_trip_errors(&inputs.initial, &d, n, &points, inputs.partition_cap)?;
            out.push(at_most("round_trip_g_D_g", gdg, tol.algebraic));
            out.push(at_most("round_trip_D_g_D", dgd, tol.algebraic));
        }
        Suite::Identities => {
            out.push(at(
                "initial_condition",
                &[0.0],
                initial_condition_error(&inputs.initial, n, &points, &ctx)?,
                tol.algebraic,
            ));
            if n >= 2 {
                let c = cancellation_error(0.0, &inputs.initial, n, &points, &ctx, false)?;
                out.push(at("cumulant_cancellation", &[0.0], c, tol.algebraic));
            }
            for &t in &cell.times {
                out.push(at(
                    "route_equivalence",
                    &[t],
                    route_error(t, &inputs.initial, n, &points, &ctx)?,
                    tol.route_relative,
                ));
                if ctx.pot.is_free() {
                    let e = free_streaming_error(t, &inputs.initial, n, &points, &ctx)?;
                    out.push(at("free_streaming", &[t], e, tol.free_streaming));
                    if n >= 2 {
                        let c = cancellation_error(t, &inputs.initial, n, &points, &ctx, true)?;
                        out.push(at("free_cumulant_cancellation", &[t], c, tol.algebraic));
                    }
                }
            }
        }
        Suite::Residual => {
            let t = cell.times[0];
            let s = &inputs.residual;
            let study = residual_study(t, n, &inputs.initial, &points, &ctx, s.fd_step_t, s.order_step)?;
            out.push(
                at_most("hierarchy_residual", study.max_residual, tol.residual).with_note(alloc::format!(
                    "fd_step_t = {}, solver step = {}",
                    s.fd_step_t,
                    ctx.solver.step
                )),
            );
            out.push(
                PropertyReport::new(
                    "residual_order",
                    base.clone(),
                    study.observed_order,
                    tol.residual_order,
                    Comparison::AtLeast,
                )
                .with_note(alloc::format!(
                    "summed residual {} at h = {}, {} at h = {}",
                    study.coarse_sum,
                    s.order_step,
                    study.fine_sum,
                    0.5 * s.order_step
                )),
            );
        }
        Suite::Group => {
            let e = group_error(cell.times[0], cell.times[1], n, &inputs.initial, &points, &ctx)?;
            out.push(at_most("group_property", e, tol.group));
        }
        Suite::Chaos => {
            let g1 = inputs
                .one_particle()
                .ok_or_else(|| contract("chaos checks need a one-particle function"))?;
            let chaos = CorrelationSequence::chaos(g1, n.max(1))?;
            let (reduction, scattering) = chaos_errors(cell.times[0], n, &chaos, &points, &ctx)?;
            out.push(at_most("chaos_reduction", reduction, tol.algebraic));
            if let Some(s) = scattering {
                out.push(at_most("scattering_representation", s, tol.scattering));
            }
        }
        Suite::Norms => {
            let quad = inputs.quadrature.reseeded(cell.seed);
            let mut r = check_norm_bound(cell.times[0], n, &inputs.initial, &ctx, &quad)?;
            r.parameters.potential = base.potential.clone();
            out.push(r);
        }
        Suite::Isometry => {
            let quad = inputs.quadrature.reseeded(cell.seed);
            let f = isometry_fixture(inputs, n)?;
            let mut r = check_isometry(f.as_ref(), n, cell.times[0], &ctx, &quad, tol.isometry_allowance)?;
            r.parameters.potential = base.potential.clone();
            out.push(r);
        }
        Suite::All => unreachable!("cells are planned per battery"),
    }
    Ok(())
}

/// The distribution sequence used by the `D → g → D` round trip: the
/// initial functions themselves when every arity is present, otherwise the
/// factorized sequence of the one-particle function.
fn distribution_fixture<'s>(inputs: &'s SuiteInputs<'_>) -> Result<DistributionSequence<'s>> {
    let max = inputs.initial.max_arity();
    let all: Option<Vec<SharedFunction<'s>>> = (1..=max).map(|k| inputs.initial.shared(k)).collect();
    match all {
        Some(fs) => DistributionSequence::from_functions(max, fs),
        None => {
            let g1 = inputs
                .one_particle()
                .ok_or_else(|| contract("initial data lacks a one-particle function"))?;
            DistributionSequence::independent(g1, max)
        }
    }
}

fn isometry_fixture<'s>(inputs: &'s SuiteInputs<'_>, n: usize) -> Result<Arc<dyn PhaseFunction + 's>> {
    if let Some(f) = inputs.initial.shared(n) {
        return Ok(f);
    }
    let g1 = inputs
        .one_particle()
        .ok_or_else(|| contract("initial data lacks a one-particle function"))?;
    Ok(Arc::new(IndependentProduct::new(g1, n)?))
}

/// Serial reference runner: every cell of `suite` in plan order.
pub fn run_suite(inputs: &SuiteInputs<'_>, suite: Suite) -> Result<Vec<PropertyReport>> {
    inputs.validate()?;
    Ok(plan(inputs, suite).iter().flat_map(|c| run_cell(inputs, c)).collect())
}

/// Helper for callers that evaluate at explicit configurations.
pub fn configurations(inputs: &SuiteInputs<'_>, n: usize, seed: u64) -> Result<Vec<Vec<PhasePoint>>> {
    sample_configurations(&inputs.point_proposal, n, inputs.points, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{GaussianComponent, GaussianMixture, Integrator};
    use alloc::vec;

    fn gauss(arity: usize) -> SharedFunction<'static> {
        let mut c = GaussianComponent::standard(1);
        c.q_center = vec![0.1 * arity as f64];
        c.q_width = 0.8;
        c.weight = 0.6;
        c.q_coupling = if arity > 1 { 0.3 } else { 0.0 };
        Arc::new(GaussianMixture::new(arity, vec![c]).unwrap())
    }

    fn inputs(pot: PotentialFamily) -> SuiteInputs<'static> {
        let mut prop = GaussianProposal::standard(1);
        prop.q_scale = 1.5;
        prop.p_scale = 1.5;
        SuiteInputs {
            potentials: vec![NamedPotential {
                name: "test".into(),
                family: pot,
            }],
            solver: FlowSolver::new(Integrator::VelocityVerlet, 1e-2).unwrap(),
            partition_cap: 8,
            fd_step: 1e-4,
            initial: CorrelationSequence::from_functions(3, (1..=3).map(gauss)).unwrap(),
            arities: vec![1, 2, 3],
            times: vec![0.0, 0.3],
            points: 3,
            point_proposal: GaussianProposal::standard(1),
            seed: 42,
            quadrature: McQuadrature::new(2000, 1, prop).unwrap(),
            tolerances: Tolerances::default(),
            residual: ResidualSettings::default(),
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::MEMBERS.into_iter().chain([Suite::All]) {
            assert_eq!(Suite::parse(s.name()), Some(s));
        }
        assert_eq!(Suite::parse("bogus"), None);
    }

    #[test]
    fn plans_are_seeded_per_battery() {
        let inp = inputs(PotentialFamily::zero());
        let all = plan(&inp, Suite::All);
        let group = plan(&inp, Suite::Group);
        assert_eq!(group.len(), 3 * 4);
        let from_all: Vec<_> = all.iter().filter(|c| c.suite == Suite::Group).cloned().collect();
        assert_eq!(from_all, group);
        let mut seeds: Vec<u64> = all.iter().map(|c| c.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), all.len());
    }

    #[test]
    fn zero_potential_passes_everything() {
        let mut inp = inputs(PotentialFamily::zero());
        inp.arities = vec![1, 2];
        let reports = run_suite(&inp, Suite::All).unwrap();
        for r in &reports {
            assert!(r.passed, "{r:?}");
        }
        assert!(reports.iter().any(|r| r.property == "free_streaming"));
    }

    #[test]
    fn runs_are_reproducible() {
        let inp = inputs(PotentialFamily::harmonic_pair(1.0));
        let a = run_suite(&inp, Suite::Norms).unwrap();
        let b = run_suite(&inp, Suite::Norms).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_become_failed_reports() {
        let inp = inputs(PotentialFamily::zero());
        let cell = Cell {
            suite: Suite::Identities,
            potential: Some(0),
            n: 3,
            times: vec![0.1],
            seed: 0,
        };
        let mut broken = inp.clone();
        broken.partition_cap = 2;
        let reports = run_cell(&broken, &cell);
        assert_eq!(reports.len(), 1);
        assert!(!reports[0].passed);
    }
}
