use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::{flow_points, restrict, restrict_within, FlowSolver, PhaseFunction, PhasePoint, PotentialFamily};
use crate::error::{contract, Result};
use crate::partitions::{IndexSet, DEFAULT_PARTITION_CAP};

/// Default central-difference step for phase functions without analytic
/// gradients.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Everything an evaluation needs besides the data: the Hamiltonian, the
/// integrator, the enumeration cap and the finite-difference step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationContext {
    pub pot: PotentialFamily,
    pub solver: FlowSolver,
    pub partition_cap: usize,
    pub fd_step: f64,
}

impl EvaluationContext {
    pub fn new(pot: PotentialFamily, solver: FlowSolver) -> Self {
        Self {
            pot,
            solver,
            partition_cap: DEFAULT_PARTITION_CAP,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(contract("fd_step must be positive"));
        }
        if self.partition_cap == 0 || self.partition_cap > crate::partitions::MAX_LABELS {
            return Err(contract("partition cap must lie in 1..=32"));
        }
        Ok(())
    }
}

/// Where the block functions of an expansion come from.
pub(crate) trait BlockSource {
    /// `None` means the arity-`n` function is identically zero.
    fn block_function(&self, n: usize) -> Result<Option<&dyn PhaseFunction>>;
}

impl BlockSource for super::CorrelationSequence<'_> {
    fn block_function(&self, n: usize) -> Result<Option<&dyn PhaseFunction>> {
        self.get(n).map(|f| f.map(|f| f as &dyn PhaseFunction))
    }
}

/// Chaos data given by its one-particle function.
pub(crate) struct ChaosSource<'f>(pub &'f dyn PhaseFunction);

impl BlockSource for ChaosSource<'_> {
    fn block_function(&self, n: usize) -> Result<Option<&dyn PhaseFunction>> {
        Ok((n == 1).then_some(self.0))
    }
}

/// One pointwise evaluation at a fixed configuration and time.
///
/// Memoizes the backward flow of every particle subset that some term
/// needs, and every pulled-back block value `f_{|X|}(X(−t)|_X)` of a subset
/// `X` flowed jointly inside a cluster `U ⊇ X`.
pub(crate) struct Evaluation<'e> {
    cfg: &'e [PhasePoint],
    ctx: &'e EvaluationContext,
    t: f64,
    flows: BTreeMap<u32, Vec<PhasePoint>>,
    blocks: BTreeMap<(u32, u32), f64>,
}

impl<'e> Evaluation<'e> {
    pub(crate) fn new(cfg: &'e [PhasePoint], ctx: &'e EvaluationContext, t: f64) -> Result<Self> {
        if cfg.is_empty() {
            return Err(contract("empty phase configuration"));
        }
        if !t.is_finite() {
            return Err(contract("evaluation time must be finite"));
        }
        Ok(Self {
            cfg,
            ctx,
            t,
            flows: BTreeMap::new(),
            blocks: BTreeMap::new(),
        })
    }

    pub(crate) fn ctx(&self) -> &'e EvaluationContext {
        self.ctx
    }

    /// `X(−t, ·)` of the particles of `cluster`, evolving jointly.
    pub(crate) fn flowed(&mut self, cluster: IndexSet) -> Result<&[PhasePoint]> {
        let key = cluster.mask();
        if !self.flows.contains_key(&key) {
            let start = restrict(self.cfg, cluster)?;
            let end = flow_points(&start, &self.ctx.pot, -self.t, &self.ctx.solver)?;
            self.flows.insert(key, end);
        }
        Ok(&self.flows[&key])
    }

    /// `f_{|block|}` evaluated at the block's share of the flowed cluster;
    /// exactly zero when the source has no function of that arity.
    pub(crate) fn block_value(&mut self, source: &dyn BlockSource, cluster: IndexSet, block: IndexSet) -> Result<f64> {
        let key = (cluster.mask(), block.mask());
        if let Some(&v) = self.blocks.get(&key) {
            return Ok(v);
        }
        let v = match source.block_function(block.len())? {
            None => 0.0,
            Some(f) => {
                let flowed = self.flowed(cluster)?;
                let pts = restrict_within(flowed, cluster, block);
                f.eval(&pts)?
            }
        };
        self.blocks.insert(key, v);
        Ok(v)
    }
}

/// A sum that also tracks the total magnitude of its terms, the natural
/// scale for judging its rounding error.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TermSum {
    pub value: f64,
    pub magnitude: f64,
}

impl TermSum {
    pub(crate) fn add(&mut self, term: f64) {
        self.value += term;
        self.magnitude += term.abs();
    }

    pub(crate) fn absorb(&mut self, other: TermSum) {
        self.value += other.value;
        self.magnitude += other.magnitude;
    }
}
