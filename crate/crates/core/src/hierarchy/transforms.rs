//! Möbius inversion between distribution and correlation functions on the
//! partition lattice.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use core::fmt;

use super::{CorrelationSequence, DistributionSequence};
use crate::dynamics::{restrict, PhaseFunction, PhasePoint, SharedFunction};
use crate::error::{contract, Result};
use crate::partitions::{enumerate_partitions, mobius_coefficient, IndexSet};

fn check_len(n: usize, cfg: &[PhasePoint]) -> Result<IndexSet> {
    if cfg.len() != n {
        return Err(contract(alloc::format!(
            "arity {n} evaluated on {} particles",
            cfg.len()
        )));
    }
    IndexSet::range(n)
}

/// `g_n = Σ_P (−1)^{|P|−1} (|P|−1)! ∏_{X∈P} D_{|X|}(X)`.
pub fn g_from_d(d: &DistributionSequence<'_>, n: usize, cfg: &[PhasePoint], cap: usize) -> Result<f64> {
    let ground = check_len(n, cfg)?;
    let mut memo: BTreeMap<u32, f64> = BTreeMap::new();
    let mut sum = 0.0;
    for partition in enumerate_partitions(ground, cap)? {
        let mut product = mobius_coefficient(partition.len())? as f64;
        for &block in partition.blocks() {
            let v = match memo.get(&block.mask()) {
                Some(&v) => v,
                None => {
                    let v = d.get(block.len())?.eval(&restrict(cfg, block)?)?;
                    memo.insert(block.mask(), v);
                    v
                }
            };
            product *= v;
        }
        sum += product;
    }
    Ok(sum)
}

/// `D_n = Σ_P ∏_{X∈P} g_{|X|}(X)`, the inverse cluster expansion.
pub fn d_from_g(g: &CorrelationSequence<'_>, n: usize, cfg: &[PhasePoint], cap: usize) -> Result<f64> {
    let ground = check_len(n, cfg)?;
    if n > g.max_arity() {
        return Err(crate::Error::MissingArity(n));
    }
    let mut memo: BTreeMap<u32, f64> = BTreeMap::new();
    let mut sum = 0.0;
    'partitions: for partition in enumerate_partitions(ground, cap)? {
        let mut product = 1.0;
        for &block in partition.blocks() {
            let v = match memo.get(&block.mask()) {
                Some(&v) => v,
                None => {
                    let v = match g.get(block.len())? {
                        Some(f) => f.eval(&restrict(cfg, block)?)?,
                        None => 0.0,
                    };
                    memo.insert(block.mask(), v);
                    v
                }
            };
            if v == 0.0 {
                continue 'partitions;
            }
            product *= v;
        }
        sum += product;
    }
    Ok(sum)
}

struct DistributionOf<'a> {
    g: &'a CorrelationSequence<'a>,
    arity: usize,
    cap: usize,
}

impl<'a> PhaseFunction for DistributionOf<'a> {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, pts: &[PhasePoint]) -> Result<f64> {
        d_from_g(self.g, self.arity, pts, self.cap)
    }
}

struct CorrelationOf<'a> {
    d: &'a DistributionSequence<'a>,
    arity: usize,
    cap: usize,
}

impl<'a> PhaseFunction for CorrelationOf<'a> {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, pts: &[PhasePoint]) -> Result<f64> {
        g_from_d(self.d, self.arity, pts, self.cap)
    }
}

impl fmt::Debug for DistributionOf<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DistributionOf(arity {})", self.arity)
    }
}

impl fmt::Debug for CorrelationOf<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CorrelationOf(arity {})", self.arity)
    }
}

/// The distribution sequence of `g`, evaluated lazily through [`d_from_g`].
pub fn distribution_of<'a>(g: &'a CorrelationSequence<'a>, cap: usize) -> Result<DistributionSequence<'a>> {
    DistributionSequence::from_functions(
        g.max_arity(),
        (1..=g.max_arity()).map(|arity| Arc::new(DistributionOf { g, arity, cap }) as SharedFunction<'a>),
    )
}

/// The correlation sequence of `d`, evaluated lazily through [`g_from_d`].
pub fn correlations_of<'a>(d: &'a DistributionSequence<'a>, cap: usize) -> Result<CorrelationSequence<'a>> {
    CorrelationSequence::from_functions(
        d.max_arity(),
        (1..=d.max_arity()).map(|arity| Arc::new(CorrelationOf { d, arity, cap }) as SharedFunction<'a>),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{GaussianComponent, GaussianMixture};
    use crate::partitions::DEFAULT_PARTITION_CAP as CAP;
    use alloc::vec;
    use alloc::vec::Vec;

    fn mixture(arity: usize, shift: f64) -> SharedFunction<'static> {
        let mut c = GaussianComponent::standard(1);
        c.q_center = vec![shift];
        c.weight = 0.5 + shift;
        c.q_coupling = 0.3;
        Arc::new(GaussianMixture::new(arity, vec![c]).unwrap())
    }

    fn pts(n: usize) -> Vec<PhasePoint> {
        (0..n)
            .map(|i| PhasePoint::new(&[0.3 * i as f64 - 0.4], &[0.2 - 0.1 * i as f64]).unwrap())
            .collect()
    }

    fn full_correlations(max: usize) -> CorrelationSequence<'static> {
        CorrelationSequence::from_functions(max, (1..=max).map(|n| mixture(n, 0.1 * n as f64))).unwrap()
    }

    #[test]
    fn low_order_formulas() {
        let d = DistributionSequence::from_functions(2, [mixture(1, 0.0), mixture(2, 0.2)]).unwrap();
        let x = pts(2);
        let d1a = d.get(1).unwrap().eval(&x[..1]).unwrap();
        let d1b = d.get(1).unwrap().eval(&x[1..]).unwrap();
        let d2 = d.get(2).unwrap().eval(&x).unwrap();
        assert_eq!(g_from_d(&d, 1, &x[..1], CAP).unwrap(), d1a);
        assert!((g_from_d(&d, 2, &x, CAP).unwrap() - (d2 - d1a * d1b)).abs() < 1e-16);

        let g = full_correlations(2);
        let g1a = g.get(1).unwrap().unwrap().eval(&x[..1]).unwrap();
        let g1b = g.get(1).unwrap().unwrap().eval(&x[1..]).unwrap();
        let g2 = g.get(2).unwrap().unwrap().eval(&x).unwrap();
        assert_eq!(d_from_g(&g, 1, &x[..1], CAP).unwrap(), g1a);
        assert!((d_from_g(&g, 2, &x, CAP).unwrap() - (g2 + g1a * g1b)).abs() < 1e-16);
    }

    #[test]
    fn independent_distributions_have_no_correlations() {
        let d = DistributionSequence::independent(mixture(1, 0.3), 4).unwrap();
        for n in 2..=4 {
            assert!(g_from_d(&d, n, &pts(n), CAP).unwrap().abs() < 1e-16);
        }
    }

    #[test]
    fn chaos_correlations_give_product_distribution() {
        let g1 = mixture(1, 0.3);
        let g = CorrelationSequence::chaos(g1.clone(), 4).unwrap();
        let x = pts(4);
        let want: f64 = x.iter().map(|p| g1.eval(core::slice::from_ref(p)).unwrap()).product();
        assert!((d_from_g(&g, 4, &x, CAP).unwrap() - want).abs() < 1e-16);
    }

    #[test]
    fn missing_arity_is_an_error() {
        let d = DistributionSequence::from_functions(3, [mixture(1, 0.0)]).unwrap();
        assert!(g_from_d(&d, 2, &pts(2), CAP).is_err());
        let g = full_correlations(2);
        assert!(d_from_g(&g, 3, &pts(3), CAP).is_err());
    }

    #[test]
    fn round_trips() {
        let g = full_correlations(5);
        let d = distribution_of(&g, CAP).unwrap();
        let back = correlations_of(&d, CAP).unwrap();
        for n in 1..=5 {
            let x = pts(n);
            let want = g.get(n).unwrap().unwrap().eval(&x).unwrap();
            let got = back.get(n).unwrap().unwrap().eval(&x).unwrap();
            assert!((want - got).abs() < 1e-14, "n={n}");
        }
    }
}
