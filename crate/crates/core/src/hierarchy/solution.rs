use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use core::fmt;

use super::context::{BlockSource, ChaosSource, Evaluation, EvaluationContext, TermSum};
use super::cumulant::cumulant_sum;
use super::CorrelationSequence;
use crate::dynamics::{flow_points, PhaseFunction, PhasePoint, SharedFunction};
use crate::error::{contract, Result};
use crate::partitions::{enumerate_partitions, mobius_coefficient, IndexSet, Partition};

fn check_arity(n: usize, cfg: &[PhasePoint]) -> Result<IndexSet> {
    if n == 0 || cfg.len() != n {
        return Err(contract(alloc::format!(
            "arity {n} evaluated on {} particles",
            cfg.len()
        )));
    }
    IndexSet::range(n)
}

fn direct_sum(eval: &mut Evaluation<'_>, source: &dyn BlockSource, ground: IndexSet) -> Result<TermSum> {
    let mut sum = TermSum::default();
    'partitions: for partition in enumerate_partitions(ground, eval.ctx().partition_cap)? {
        for block in partition.blocks() {
            if source.block_function(block.len())?.is_none() {
                continue 'partitions;
            }
        }
        sum.absorb(cumulant_sum(eval, source, &partition)?);
    }
    Ok(sum)
}

/// `g_n(t)` at `cfg` from the expansion over all partitions of the particles.
pub fn solve_g(
    t: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<f64> {
    Ok(solve_g_with_magnitude(t, n, initial, cfg, ctx)?.value)
}

/// [`solve_g`] together with the summed magnitude of its terms.
pub fn solve_g_with_magnitude(
    t: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<TermSum> {
    let ground = check_arity(n, cfg)?;
    let mut eval = Evaluation::new(cfg, ctx, t)?;
    direct_sum(&mut eval, initial, ground)
}

/// `g_n(t)` by way of the distribution functions: build `D(0)` block by
/// block, flow each block, and Möbius-transform back.
pub fn solve_g_via_d(
    t: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<f64> {
    Ok(solve_g_via_d_with_magnitude(t, n, initial, cfg, ctx)?.value)
}

/// [`solve_g_via_d`] together with the summed magnitude of its terms.
pub fn solve_g_via_d_with_magnitude(
    t: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<TermSum> {
    let ground = check_arity(n, cfg)?;
    if n > initial.max_arity() {
        return Err(crate::Error::MissingArity(n));
    }
    let cap = ctx.partition_cap;
    let mut eval = Evaluation::new(cfg, ctx, t)?;
    let mut flowed_d: BTreeMap<u32, f64> = BTreeMap::new();
    let mut sum = TermSum::default();
    for outer in enumerate_partitions(ground, cap)? {
        let mut product = mobius_coefficient(outer.len())? as f64;
        for &block in outer.blocks() {
            let d = match flowed_d.get(&block.mask()) {
                Some(&d) => d,
                None => {
                    let mut d = 0.0;
                    'inner: for inner in enumerate_partitions(block, cap)? {
                        let mut term = 1.0;
                        for &z in inner.blocks() {
                            term *= eval.block_value(initial, block, z)?;
                            if term == 0.0 {
                                continue 'inner;
                            }
                        }
                        d += term;
                    }
                    flowed_d.insert(block.mask(), d);
                    d
                }
            };
            product *= d;
        }
        sum.add(product);
    }
    Ok(sum)
}

/// `g_n(t)` for chaos data: the single `n`-th order cumulant applied to
/// `∏ g_1(0, x_i)`.
pub fn solve_g_chaos(
    t: f64,
    n: usize,
    g1_0: &dyn PhaseFunction,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<f64> {
    let ground = check_arity(n, cfg)?;
    if g1_0.arity() != 1 {
        return Err(contract("chaos data needs a one-particle function"));
    }
    let mut eval = Evaluation::new(cfg, ctx, t)?;
    Ok(cumulant_sum(&mut eval, &ChaosSource(g1_0), &Partition::singletons(ground))?.value)
}

/// The `n`-th order cumulant of scattering operators
/// `Ŝ_t(U) = S_{|U|}(−t, U) ∏_{i∈U} S_1(t, x_i)` applied to `∏ g_1(t, x_i)`.
pub fn scattering_cumulant_apply(
    t: f64,
    n: usize,
    g1_t: &dyn PhaseFunction,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<f64> {
    let ground = check_arity(n, cfg)?;
    if g1_t.arity() != 1 {
        return Err(contract("scattering cumulants act on a one-particle function"));
    }
    let mut eval = Evaluation::new(cfg, ctx, t)?;
    let mut singles: BTreeMap<(u32, usize), f64> = BTreeMap::new();
    let mut sum = 0.0;
    for grouping in enumerate_partitions(ground, ctx.partition_cap)? {
        let mut product = mobius_coefficient(grouping.len())? as f64;
        for &cluster in grouping.blocks() {
            for (slot, label) in cluster.iter().enumerate() {
                let key = (cluster.mask(), label);
                let v = match singles.get(&key) {
                    Some(&v) => v,
                    None => {
                        let pt = eval.flowed(cluster)?[slot];
                        let forward = flow_points(&[pt], &ctx.pot, t, &ctx.solver)?;
                        let v = g1_t.eval(&forward)?;
                        singles.insert(key, v);
                        v
                    }
                };
                product *= v;
            }
        }
        sum += product;
    }
    Ok(sum)
}

/// `𝔄_t(initial)` as a lazily evaluated correlation sequence.
pub fn evolved_sequence<'b>(
    t: f64,
    initial: &'b CorrelationSequence<'b>,
    ctx: &'b EvaluationContext,
) -> Result<CorrelationSequence<'b>> {
    let max = initial.max_arity();
    CorrelationSequence::from_functions(
        max,
        (1..=max).map(|arity| Arc::new(Evolved { t, arity, initial, ctx }) as SharedFunction<'b>),
    )
}

struct Evolved<'b> {
    t: f64,
    arity: usize,
    initial: &'b CorrelationSequence<'b>,
    ctx: &'b EvaluationContext,
}

impl fmt::Debug for Evolved<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Evolved(t = {}, arity {})", self.t, self.arity)
    }
}

impl PhaseFunction for Evolved<'_> {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, pts: &[PhasePoint]) -> Result<f64> {
        solve_g(self.t, self.arity, self.initial, pts, self.ctx)
    }
}

/// `(𝔄_{t1}(𝔄_{t2} g(0)), 𝔄_{t1+t2} g(0))` at `cfg`.
pub fn compose_evolution(
    t1: f64,
    t2: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<(f64, f64)> {
    let mid = evolved_sequence(t2, initial, ctx)?;
    let two_step = solve_g(t1, n, &mid, cfg, ctx)?;
    let one_step = solve_g(t1 + t2, n, initial, cfg, ctx)?;
    Ok((two_step, one_step))
}
