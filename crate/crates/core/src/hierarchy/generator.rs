//! The right-hand side of the hierarchy for correlation functions.

use alloc::vec::Vec;

use super::context::EvaluationContext;
use super::CorrelationSequence;
use crate::dynamics::{apply_liouville, Factor, LiouvilleMode, PhasePoint};
use crate::error::{contract, Result};
use crate::partitions::{
    enumerate_block_partitions, enumerate_partitions, enumerate_subset_selections, mobius_coefficient, IndexSet,
    Partition,
};

/// One summand of the generator: a Liouville operator over `scope` acting on
/// the product of the block functions of `partition`.
///
/// For the one-block partition the operator is the full `−L_n`; otherwise
/// it is the interaction part `−L^int_{|scope|}(scope)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorTerm {
    pub partition: Partition,
    pub scope: IndexSet,
    pub value: f64,
}

fn factors<'g>(g: &'g CorrelationSequence<'_>, partition: &Partition) -> Result<Option<Vec<Factor<'g>>>> {
    let mut out = Vec::with_capacity(partition.len());
    for &block in partition.blocks() {
        match g.get(block.len())? {
            Some(function) => out.push(Factor {
                function,
                labels: block,
            }),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

fn check(n: usize, g: &CorrelationSequence<'_>, cfg: &[PhasePoint]) -> Result<IndexSet> {
    if n == 0 || cfg.len() != n {
        return Err(contract(alloc::format!(
            "arity {n} evaluated on {} particles",
            cfg.len()
        )));
    }
    if n > g.max_arity() {
        return Err(crate::Error::MissingArity(n));
    }
    IndexSet::range(n)
}

/// Every term of the generator at `cfg`, the linear term first, then the
/// multi-block partitions in enumeration order with their subset selections.
/// Partitions with an identically zero block function are left out.
pub fn hierarchy_generator_terms(
    g: &CorrelationSequence<'_>,
    n: usize,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<Vec<GeneratorTerm>> {
    let ground = check(n, g, cfg)?;
    let fd = Some(ctx.fd_step);
    let mut terms = Vec::new();
    for partition in enumerate_partitions(ground, ctx.partition_cap)? {
        let Some(fs) = factors(g, &partition)? else { continue };
        if partition.len() == 1 {
            let value = apply_liouville(&fs, ground, &ctx.pot, cfg, LiouvilleMode::Full, fd)?;
            terms.push(GeneratorTerm {
                partition,
                scope: ground,
                value,
            });
            continue;
        }
        for selection in enumerate_subset_selections(&partition, ctx.partition_cap)? {
            let scope = selection.union();
            let value = apply_liouville(&fs, scope, &ctx.pot, cfg, LiouvilleMode::InteractionOnly, fd)?;
            terms.push(GeneratorTerm {
                partition: partition.clone(),
                scope,
                value,
            });
        }
    }
    Ok(terms)
}

/// `(−L_n) g_n + Σ_{|P|>1} Σ_{Z_i⊆X_i} (−L^int(∪Z_i)) ∏ g_{|X_i|}` at `cfg`.
pub fn apply_hierarchy_generator(
    g: &CorrelationSequence<'_>,
    n: usize,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<f64> {
    Ok(hierarchy_generator_terms(g, n, cfg, ctx)?.iter().map(|t| t.value).sum())
}

/// The same right-hand side before the lattice collapse: for each
/// multi-block partition, `Σ_{P'} μ(|P'|) Σ_k (−L_{|U_k|}(U_k))` over the
/// cluster unions `U_k` of the block groupings, each a full generator.
pub fn apply_generator_via_cumulant_identity(
    g: &CorrelationSequence<'_>,
    n: usize,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
) -> Result<f64> {
    let ground = check(n, g, cfg)?;
    let fd = Some(ctx.fd_step);
    let mut acc = 0.0;
    for partition in enumerate_partitions(ground, ctx.partition_cap)? {
        let Some(fs) = factors(g, &partition)? else { continue };
        if partition.len() == 1 {
            acc += apply_liouville(&fs, ground, &ctx.pot, cfg, LiouvilleMode::Full, fd)?;
            continue;
        }
        for grouping in enumerate_block_partitions(&partition, ctx.partition_cap)? {
            let weight = mobius_coefficient(grouping.len())? as f64;
            for cluster in grouping.merged(&partition) {
                acc += weight * apply_liouville(&fs, cluster, &ctx.pot, cfg, LiouvilleMode::Full, fd)?;
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        FlowSolver, GaussianComponent, GaussianMixture, InteractionPotential, PotentialFamily, SharedFunction,
    };
    use alloc::sync::Arc;
    use alloc::vec;

    fn gauss(arity: usize, shift: f64) -> SharedFunction<'static> {
        let mut c = GaussianComponent::standard(1);
        c.q_center = vec![shift];
        c.p_center = vec![-0.3 * shift];
        c.q_width = 0.9;
        c.q_coupling = if arity > 1 { 0.2 } else { 0.0 };
        c.p_coupling = if arity > 1 { 0.05 } else { 0.0 };
        Arc::new(GaussianMixture::new(arity, vec![c]).unwrap())
    }

    fn full(max: usize) -> CorrelationSequence<'static> {
        CorrelationSequence::from_functions(max, (1..=max).map(|n| gauss(n, 0.2 * n as f64))).unwrap()
    }

    fn cfg(raw: &[(f64, f64)]) -> Vec<PhasePoint> {
        raw.iter().map(|&(q, p)| PhasePoint::new(&[q], &[p]).unwrap()).collect()
    }

    fn ctx(pot: PotentialFamily) -> EvaluationContext {
        EvaluationContext::new(pot, FlowSolver::default())
    }

    #[test]
    fn one_particle_generator_is_streaming() {
        let g = full(1);
        let x = cfg(&[(0.7, -0.4)]);
        let c = ctx(PotentialFamily::harmonic_pair(1.0));
        // g_1 = w N(q; 0.2, 0.81) N(p; -0.06, 1), so −p ∂_q g_1 = p (q − 0.2)/0.81 g_1
        let f = g.get(1).unwrap().unwrap().eval(&x).unwrap();
        let want = -0.4 * (0.7 - 0.2) / 0.81 * f;
        assert!((apply_hierarchy_generator(&g, 1, &x, &c).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn two_particle_terms() {
        let g = full(2);
        let x = cfg(&[(0.1, 0.3), (-0.6, 0.5)]);
        let c = ctx(PotentialFamily::harmonic_pair(1.5));
        let terms = hierarchy_generator_terms(&g, 2, &x, &c).unwrap();
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[1].scope, IndexSet::range(2).unwrap());
        // −L^int_2 on g_1 g_1 with Φ = k/2 (q_1 − q_2)²:
        // ∂_{q1}Φ ∂_{p1} + ∂_{q2}Φ ∂_{p2}, ∂_p log g_1 = −(p + 0.06)
        let g1 = g.get(1).unwrap().unwrap();
        let prod = g1.eval(&x[..1]).unwrap() * g1.eval(&x[1..]).unwrap();
        let force = 1.5 * (0.1 - -0.6);
        let want = force * (-(0.3 + 0.06)) * prod + (-force) * (-(0.5 + 0.06)) * prod;
        assert!((terms[1].value - want).abs() < 1e-14);
    }

    #[test]
    fn pair_potential_has_no_three_body_terms() {
        let g = full(3);
        let x = cfg(&[(0.1, 0.3), (-0.6, 0.5), (0.4, -0.2)]);
        let c = ctx(PotentialFamily::gaussian_pair(1.0, 0.8).unwrap());
        let terms = hierarchy_generator_terms(&g, 3, &x, &c).unwrap();
        // one linear term, three 2-block partitions with 3 selections each, one 3-block
        assert_eq!(terms.len(), 1 + 3 * 3 + 1);
        let three_body: Vec<_> = terms.iter().skip(1).filter(|t| t.scope.len() == 3).collect();
        assert_eq!(three_body.len(), 4);
        assert!(three_body.iter().all(|t| t.value == 0.0));
        assert!(terms
            .iter()
            .skip(1)
            .filter(|t| t.scope.len() == 2)
            .any(|t| t.value != 0.0));
    }

    #[test]
    fn triple_potential_feeds_three_body_terms() {
        let pot = PotentialFamily::new(
            None,
            vec![
                InteractionPotential::HarmonicPair { stiffness: 1.0 },
                InteractionPotential::GaussianTriple {
                    amplitude: 0.7,
                    width: 0.9,
                },
            ],
        )
        .unwrap();
        let g = full(3);
        let x = cfg(&[(0.1, 0.3), (-0.6, 0.5), (0.4, -0.2)]);
        let terms = hierarchy_generator_terms(&g, 3, &x, &ctx(pot)).unwrap();
        assert!(terms
            .iter()
            .skip(1)
            .filter(|t| t.scope.len() == 3)
            .all(|t| t.value != 0.0));
    }

    #[test]
    fn lattice_collapse_identity() {
        let pots = [
            PotentialFamily::harmonic_pair(1.2),
            PotentialFamily::new(
                Some(crate::dynamics::ExternalPotential::Harmonic { stiffness: 0.5 }),
                vec![
                    InteractionPotential::GaussianPair {
                        amplitude: 0.8,
                        width: 0.7,
                    },
                    InteractionPotential::GaussianTriple {
                        amplitude: 0.4,
                        width: 1.1,
                    },
                ],
            )
            .unwrap(),
        ];
        let x = cfg(&[(0.1, 0.3), (-0.6, 0.5), (0.4, -0.2), (0.9, 0.1)]);
        for pot in pots {
            let c = ctx(pot);
            let g = full(4);
            for n in 1..=4 {
                let a = apply_hierarchy_generator(&g, n, &x[..n], &c).unwrap();
                let b = apply_generator_via_cumulant_identity(&g, n, &x[..n], &c).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn arity_errors() {
        let g = full(2);
        let c = ctx(PotentialFamily::zero());
        assert!(apply_hierarchy_generator(&g, 3, &cfg(&[(0.0, 0.0); 3]), &c).is_err());
        assert!(apply_hierarchy_generator(&g, 2, &cfg(&[(0.0, 0.0); 3]), &c).is_err());
    }
}
