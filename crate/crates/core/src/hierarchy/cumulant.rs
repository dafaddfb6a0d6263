use alloc::vec::Vec;

use super::context::{BlockSource, Evaluation, EvaluationContext, TermSum};
use super::CorrelationSequence;
use crate::dynamics::PhasePoint;
use crate::error::{contract, Result};
use crate::partitions::{enumerate_block_partitions, mobius_coefficient, BlockPartition, IndexSet, Partition};

/// A union of partition blocks that evolves as one cluster inside a cumulant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterArgument {
    /// Particles of the cluster.
    pub merged: IndexSet,
    /// Indices of the partition blocks it unites.
    pub blocks: IndexSet,
}

/// The cluster arguments of `grouping`, one per group, in group order.
pub fn cluster_arguments(partition: &Partition, grouping: &BlockPartition) -> Vec<ClusterArgument> {
    grouping
        .merged(partition)
        .into_iter()
        .zip(grouping.groups())
        .map(|(merged, &blocks)| ClusterArgument { merged, blocks })
        .collect()
}

/// `Σ_{P'} μ(|P'|) ∏_{Z∈P'} S_{|Z|}(−t, Z)` applied to `∏_{X∈P} f_{|X|}(X)`.
///
/// Each product over groups factorizes: a group's flow acts only on the
/// blocks it unites, so the term is the product over blocks of the block
/// function evaluated on its share of its cluster's flowed state.
pub(crate) fn cumulant_sum(
    eval: &mut Evaluation<'_>,
    source: &dyn BlockSource,
    partition: &Partition,
) -> Result<TermSum> {
    let cap = eval.ctx().partition_cap;
    let mut sum = TermSum::default();
    let mut cluster_of = alloc::vec![partition.blocks()[0]; partition.len()];
    for grouping in enumerate_block_partitions(partition, cap)? {
        let weight = mobius_coefficient(grouping.len())? as f64;
        for arg in cluster_arguments(partition, &grouping) {
            for b in arg.blocks {
                cluster_of[b] = arg.merged;
            }
        }
        let mut product = 1.0;
        for (b, &block) in partition.blocks().iter().enumerate() {
            product *= eval.block_value(source, cluster_of[b], block)?;
            if product == 0.0 {
                break;
            }
        }
        sum.add(weight * product);
    }
    Ok(sum)
}

/// The cumulant `𝔄_{|P|}(t)` of flow operators over the cluster arguments of
/// `partition`, applied to the fixed product of initial block correlations.
pub fn cumulant_apply(
    t: f64,
    partition: &Partition,
    initial: &CorrelationSequence<'_>,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<f64> {
    if partition.ground().max() >= cfg.len() {
        return Err(contract(alloc::format!(
            "partition over {} does not fit a configuration of {} particles",
            partition.ground(),
            cfg.len()
        )));
    }
    let mut eval = Evaluation::new(cfg, ctx, t)?;
    Ok(cumulant_sum(&mut eval, initial, partition)?.value)
}
