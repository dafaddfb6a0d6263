//! The TOML run configuration and its translation into core objects.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use liouville_core::dynamics::{
    ExternalPotential, FlowSolver, GaussianComponent, GaussianMixture, InteractionPotential, PhasePoint,
    PotentialFamily, SharedFunction, MAX_DIM,
};
use liouville_core::hierarchy::{CorrelationSequence, DistributionSequence, EvaluationContext, DEFAULT_FD_STEP};
use liouville_core::partitions::{DEFAULT_PARTITION_CAP, MAX_LABELS};
use liouville_core::verify::{
    GaussianProposal, McQuadrature, NamedPotential, ResidualSettings, SuiteInputs, Tolerances, MIN_SAMPLES,
};
use serde::{Deserialize, Serialize};

/// A configuration problem, tied to the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Checked<T = ()> = Result<T, ConfigError>;

fn default_cap() -> usize {
    DEFAULT_PARTITION_CAP
}

fn default_fd_step() -> f64 {
    DEFAULT_FD_STEP
}

fn default_points() -> usize {
    10
}

fn default_samples() -> usize {
    20_000
}

/// Everything a run needs; the single source of truth for an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Spatial dimension ν of each particle.
    pub dimension: usize,
    #[serde(default = "default_cap")]
    pub partition_cap: usize,
    /// Central-difference step for phase functions without analytic gradients.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    pub solver: FlowSolver,
    pub potentials: Vec<PotentialSpec>,
    pub initial: SequenceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<SequenceSpec>,
    pub grid: GridSpec,
    #[serde(default)]
    pub evaluate: EvaluateSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub residual: ResidualSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalPotential>,
    #[serde(default)]
    pub terms: Vec<InteractionPotential>,
}

/// A sequence of Gaussian-mixture functions, one entry per arity.
///
/// `independent = true` means chaos data for a correlation sequence (only
/// `g_1` nonzero) and factorized densities for a distribution sequence
/// (`D_n = ∏ D_1`); only the arity-1 entry is given then.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub max_arity: usize,
    #[serde(default)]
    pub independent: bool,
    pub functions: Vec<FunctionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub arity: usize,
    pub components: Vec<GaussianComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub times: Vec<f64>,
    pub arities: Vec<usize>,
    /// Random phase configurations per arity (and per verification cell).
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal: Option<GaussianProposal>,
    /// Explicit configurations, evaluated in addition to the random ones at
    /// the arity given by their length.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub configurations: Vec<Vec<PhasePoint>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Direct,
    #[serde(rename = "via_D")]
    ViaD,
    Chaos,
    Scattering,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::ViaD => "via_D",
            Route::Chaos => "chaos",
            Route::Scattering => "scattering",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSpec {
    /// Name of the potential used by `evaluate`; the first one by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default = "default_routes")]
    pub routes: Vec<Route>,
}

fn default_routes() -> Vec<Route> {
    vec![Route::Direct]
}

impl Default for EvaluateSpec {
    fn default() -> Self {
        Self {
            potential: None,
            routes: default_routes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal: Option<GaussianProposal>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            seed: None,
            proposal: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Checked<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_default();
            ConfigError::new(path, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Checked<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::new("", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("a RunConfig always serializes")
    }

    /// Structural checks that do not depend on the command.
    pub fn validate(&self) -> Checked {
        let d = self.dimension;
        if d == 0 || d > MAX_DIM {
            return Err(ConfigError::new("dimension", format!("must lie in 1..={MAX_DIM}")));
        }
        if self.partition_cap == 0 || self.partition_cap >= MAX_LABELS {
            return Err(ConfigError::new(
                "partition_cap",
                format!("must lie in 1..{MAX_LABELS}"),
            ));
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(ConfigError::new("fd_step", "must be positive"));
        }
        self.solver.validate().map_err(|e| ConfigError::new("solver", e))?;
        if self.potentials.is_empty() {
            return Err(ConfigError::new("potentials", "at least one potential is required"));
        }
        for (i, p) in self.potentials.iter().enumerate() {
            let path = format!("potentials[{i}]");
            if self.potentials[..i].iter().any(|q| q.name == p.name) {
                return Err(ConfigError::new(
                    format!("{path}.name"),
                    format!("duplicate name {:?}", p.name),
                ));
            }
            p.family().map_err(|e| ConfigError::new(path, e))?;
        }
        self.initial.validate("initial", d, self.partition_cap)?;
        if let Some(dist) = &self.distribution {
            dist.validate("distribution", d, self.partition_cap)?;
        }
        self.grid.validate(d, self.partition_cap, self.initial.max_arity)?;
        if let Some(name) = &self.evaluate.potential {
            if !self.potentials.iter().any(|p| &p.name == name) {
                return Err(ConfigError::new(
                    "evaluate.potential",
                    format!("no potential named {name:?}"),
                ));
            }
        }
        for (i, r) in self.evaluate.routes.iter().enumerate() {
            if matches!(r, Route::Chaos | Route::Scattering) && !self.initial.independent {
                return Err(ConfigError::new(
                    format!("evaluate.routes[{i}]"),
                    format!(
                        "route {} needs chaos initial data (initial.independent = true)",
                        r.name()
                    ),
                ));
            }
        }
        if self.quadrature.samples < MIN_SAMPLES {
            return Err(ConfigError::new(
                "quadrature.samples",
                format!("must be at least {MIN_SAMPLES}"),
            ));
        }
        if let Some(p) = &self.quadrature.proposal {
            check_proposal(p, d, "quadrature.proposal")?;
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("algebraic", t.algebraic),
            ("route_relative", t.route_relative),
            ("free_streaming", t.free_streaming),
            ("residual", t.residual),
            ("residual_order", t.residual_order),
            ("group", t.group),
            ("scattering", t.scattering),
            ("isometry_allowance", t.isometry_allowance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::new(
                    format!("tolerances.{name}"),
                    "must be finite and nonnegative",
                ));
            }
        }
        for (name, v) in [
            ("fd_step_t", self.residual.fd_step_t),
            ("order_step", self.residual.order_step),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(format!("residual.{name}"), "must be positive"));
            }
        }
        Ok(())
    }

    /// The potential `evaluate` uses.
    pub fn evaluation_potential(&self) -> &PotentialSpec {
        match &self.evaluate.potential {
            Some(name) => self.potentials.iter().find(|p| &p.name == name).expect("validated"),
            None => &self.potentials[0],
        }
    }

    pub fn context(&self, potential: &PotentialSpec) -> EvaluationContext {
        let mut ctx = EvaluationContext::new(potential.family().expect("validated"), self.solver);
        ctx.partition_cap = self.partition_cap;
        ctx.fd_step = self.fd_step;
        ctx
    }

    pub fn correlations(&self) -> CorrelationSequence<'static> {
        self.initial.correlations().expect("validated")
    }

    pub fn distributions(&self) -> Checked<DistributionSequence<'static>> {
        let spec = self
            .distribution
            .as_ref()
            .ok_or_else(|| ConfigError::new("distribution", "section required for this command"))?;
        Ok(spec.distributions().expect("validated"))
    }

    pub fn point_proposal(&self) -> GaussianProposal {
        self.grid
            .proposal
            .clone()
            .unwrap_or_else(|| GaussianProposal::standard(self.dimension))
    }

    /// The seed of the random grid, required whenever random points are drawn.
    pub fn grid_seed(&self) -> Checked<u64> {
        self.grid
            .seed
            .ok_or_else(|| ConfigError::new("grid.seed", "required when grid.points > 0"))
    }

    pub fn suite_inputs(&self) -> Checked<SuiteInputs<'static>> {
        let seed = self.grid_seed()?;
        if self.grid.points == 0 {
            return Err(ConfigError::new(
                "grid.points",
                "verification needs random phase points",
            ));
        }
        let quad_seed = self
            .quadrature
            .seed
            .ok_or_else(|| ConfigError::new("quadrature.seed", "required for verification"))?;
        let proposal = self
            .quadrature
            .proposal
            .clone()
            .unwrap_or_else(|| self.point_proposal());
        let quadrature = McQuadrature::new(self.quadrature.samples, quad_seed, proposal)
            .map_err(|e| ConfigError::new("quadrature", e))?;
        let potentials = self
            .potentials
            .iter()
            .map(|p| NamedPotential {
                name: p.name.clone(),
                family: p.family().expect("validated"),
            })
            .collect();
        let inputs = SuiteInputs {
            potentials,
            solver: self.solver,
            partition_cap: self.partition_cap,
            fd_step: self.fd_step,
            initial: self.correlations(),
            arities: self.grid.arities.clone(),
            times: self.grid.times.clone(),
            points: self.grid.points,
            point_proposal: self.point_proposal(),
            seed,
            quadrature,
            tolerances: self.tolerances.clone(),
            residual: self.residual.clone(),
        };
        inputs.validate().map_err(|e| ConfigError::new("", e))?;
        Ok(inputs)
    }
}

impl PotentialSpec {
    pub fn family(&self) -> liouville_core::Result<PotentialFamily> {
        PotentialFamily::new(self.external, self.terms.clone())
    }
}

fn check_proposal(p: &GaussianProposal, dim: usize, path: &str) -> Checked {
    if p.dim() != dim {
        return Err(ConfigError::new(
            path,
            format!("dimension {} does not match dimension = {dim}", p.dim()),
        ));
    }
    p.validate().map_err(|e| ConfigError::new(path, e))
}

impl SequenceSpec {
    fn validate(&self, path: &str, dim: usize, cap: usize) -> Checked {
        if self.max_arity == 0 || self.max_arity > cap {
            return Err(ConfigError::new(
                format!("{path}.max_arity"),
                format!("must lie in 1..={cap} (partition_cap)"),
            ));
        }
        for (i, f) in self.functions.iter().enumerate() {
            let fpath = format!("{path}.functions[{i}]");
            if f.arity == 0 || f.arity > self.max_arity {
                return Err(ConfigError::new(
                    format!("{fpath}.arity"),
                    format!("must lie in 1..={}", self.max_arity),
                ));
            }
            if self.independent && f.arity != 1 {
                return Err(ConfigError::new(
                    format!("{fpath}.arity"),
                    "independent sequences take only an arity-1 entry",
                ));
            }
            if self.functions[..i].iter().any(|g| g.arity == f.arity) {
                return Err(ConfigError::new(format!("{fpath}.arity"), "duplicate arity"));
            }
            if f.components.is_empty() {
                return Err(ConfigError::new(
                    format!("{fpath}.components"),
                    "at least one component is required",
                ));
            }
            for (j, c) in f.components.iter().enumerate() {
                if c.dim() != dim {
                    return Err(ConfigError::new(
                        format!("{fpath}.components[{j}]"),
                        format!("centre dimension {} does not match dimension = {dim}", c.dim()),
                    ));
                }
            }
            f.build().map_err(|e| ConfigError::new(fpath, e))?;
        }
        if self.independent && !self.functions.iter().any(|f| f.arity == 1) {
            return Err(ConfigError::new(
                format!("{path}.functions"),
                "independent sequences need an arity-1 entry",
            ));
        }
        Ok(())
    }

    fn shared(&self) -> liouville_core::Result<Vec<SharedFunction<'static>>> {
        self.functions.iter().map(|f| f.build()).collect()
    }

    pub fn correlations(&self) -> liouville_core::Result<CorrelationSequence<'static>> {
        CorrelationSequence::from_functions(self.max_arity, self.shared()?)
    }

    pub fn distributions(&self) -> liouville_core::Result<DistributionSequence<'static>> {
        let fs = self.shared()?;
        if self.independent {
            DistributionSequence::independent(fs[0].clone(), self.max_arity)
        } else {
            DistributionSequence::from_functions(self.max_arity, fs)
        }
    }
}

impl FunctionSpec {
    fn build(&self) -> liouville_core::Result<SharedFunction<'static>> {
        Ok(Arc::new(GaussianMixture::new(self.arity, self.components.clone())?))
    }
}

impl GridSpec {
    fn validate(&self, dim: usize, cap: usize, max_arity: usize) -> Checked {
        for (i, t) in self.times.iter().enumerate() {
            if !t.is_finite() {
                return Err(ConfigError::new(format!("grid.times[{i}]"), "must be finite"));
            }
        }
        if self.arities.is_empty() && self.configurations.is_empty() {
            return Err(ConfigError::new("grid.arities", "no arities to evaluate"));
        }
        for (i, &n) in self.arities.iter().enumerate() {
            if n == 0 || n > cap {
                return Err(ConfigError::new(
                    format!("grid.arities[{i}]"),
                    format!("arity {n} outside 1..={cap} (partition_cap)"),
                ));
            }
            if n > max_arity {
                return Err(ConfigError::new(
                    format!("grid.arities[{i}]"),
                    format!("arity {n} exceeds initial.max_arity = {max_arity}"),
                ));
            }
        }
        if self.points > 0 && self.seed.is_none() && !self.arities.is_empty() {
            return Err(ConfigError::new("grid.seed", "required when grid.points > 0"));
        }
        if let Some(p) = &self.proposal {
            check_proposal(p, dim, "grid.proposal")?;
        }
        for (i, c) in self.configurations.iter().enumerate() {
            let path = format!("grid.configurations[{i}]");
            if c.is_empty() || c.len() > cap.min(max_arity) {
                return Err(ConfigError::new(
                    path,
                    format!("size {} outside 1..={}", c.len(), cap.min(max_arity)),
                ));
            }
            if c.iter().any(|pt| pt.dim() != dim) {
                return Err(ConfigError::new(path, format!("points must have dimension {dim}")));
            }
        }
        Ok(())
    }
}

/// The configuration bundled with the crate: Gaussian initial data, harmonic
/// and Gaussian pair potentials, `t ∈ {0.25, 0.5, 1.0}`, `n ≤ 3`.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");
