use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use core::fmt;

use crate::dynamics::{IndependentProduct, PhaseFunction, SharedFunction};
use crate::error::{contract, Error, Result};

/// Functions indexed by arity `1..=max_arity`.
#[derive(Clone)]
pub struct FunctionSequence<'a> {
    max_arity: usize,
    functions: BTreeMap<usize, SharedFunction<'a>>,
}

impl fmt::Debug for FunctionSequence<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSequence")
            .field("max_arity", &self.max_arity)
            .field("present", &self.functions.keys().collect::<alloc::vec::Vec<_>>())
            .finish()
    }
}

impl<'a> FunctionSequence<'a> {
    fn new(max_arity: usize) -> Self {
        Self {
            max_arity,
            functions: BTreeMap::new(),
        }
    }

    fn insert(&mut self, f: SharedFunction<'a>) -> Result<()> {
        let n = f.arity();
        if n == 0 || n > self.max_arity {
            return Err(contract(alloc::format!(
                "arity {n} outside 1..={} of this sequence",
                self.max_arity
            )));
        }
        if !f.is_symmetric() {
            return Err(contract(alloc::format!(
                "arity-{n} entry must be permutation symmetric"
            )));
        }
        self.functions.insert(n, f);
        Ok(())
    }

    fn slot(&self, n: usize) -> Result<Option<&(dyn PhaseFunction + 'a)>> {
        if n == 0 || n > self.max_arity {
            return Err(Error::MissingArity(n));
        }
        Ok(self.functions.get(&n).map(|f| f.as_ref()))
    }
}

/// Correlation functions `g_1, g_2, …`; an arity without an entry reads as
/// the zero function.
#[derive(Clone, Debug)]
pub struct CorrelationSequence<'a>(FunctionSequence<'a>);

impl<'a> CorrelationSequence<'a> {
    /// All entries zero up to `max_arity`.
    pub fn new(max_arity: usize) -> Self {
        Self(FunctionSequence::new(max_arity))
    }

    /// Builds a sequence from functions of distinct arities.
    pub fn from_functions(max_arity: usize, fs: impl IntoIterator<Item = SharedFunction<'a>>) -> Result<Self> {
        let mut seq = Self::new(max_arity);
        for f in fs {
            seq.insert(f)?;
        }
        Ok(seq)
    }

    /// Chaos data: `g_1` given, all higher correlations zero.
    pub fn chaos(g1: SharedFunction<'a>, max_arity: usize) -> Result<Self> {
        if g1.arity() != 1 {
            return Err(contract("chaos data needs a one-particle function"));
        }
        Self::from_functions(max_arity, [g1])
    }

    pub fn insert(&mut self, f: SharedFunction<'a>) -> Result<()> {
        self.0.insert(f)
    }

    pub fn max_arity(&self) -> usize {
        self.0.max_arity
    }

    /// `Ok(None)` means `g_n ≡ 0`; arities beyond the sequence are an error.
    pub fn get(&self, n: usize) -> Result<Option<&(dyn PhaseFunction + 'a)>> {
        self.0.slot(n)
    }

    pub fn shared(&self, n: usize) -> Option<SharedFunction<'a>> {
        self.0.functions.get(&n).cloned()
    }

    /// True when only `g_1` can be nonzero.
    pub fn is_chaos(&self) -> bool {
        self.0.functions.keys().all(|&n| n == 1)
    }
}

/// Distribution functions `D_1, D_2, …`; every arity used must be present.
#[derive(Clone, Debug)]
pub struct DistributionSequence<'a>(FunctionSequence<'a>);

impl<'a> DistributionSequence<'a> {
    pub fn from_functions(max_arity: usize, fs: impl IntoIterator<Item = SharedFunction<'a>>) -> Result<Self> {
        let mut seq = FunctionSequence::new(max_arity);
        for f in fs {
            seq.insert(f)?;
        }
        Ok(Self(seq))
    }

    /// Statistically independent particles: `D_n = ∏ D_1(x_i)`.
    pub fn independent(d1: SharedFunction<'a>, max_arity: usize) -> Result<Self> {
        let mut seq = FunctionSequence::new(max_arity);
        seq.insert(d1.clone())?;
        for n in 2..=max_arity {
            seq.insert(Arc::new(IndependentProduct::new(d1.clone(), n)?))?;
        }
        Ok(Self(seq))
    }

    pub fn max_arity(&self) -> usize {
        self.0.max_arity
    }

    pub fn get(&self, n: usize) -> Result<&(dyn PhaseFunction + 'a)> {
        self.0.slot(n)?.ok_or(Error::MissingArity(n))
    }
}
