//! Liouville generators acting on products of phase functions.
//!
//! For a product `F = ∏_j f_j(X_j)` over disjoint particle sets, evaluated
//! at one configuration:
//!
//! - full mode over a scope `S` returns `(−L_S) F`, i.e. free streaming
//!   `−Σ_{i∈S} ⟨p_i, ∂F/∂q_i⟩` plus `Σ_T Σ_{j∈T} ⟨∂Φ_{|T|}/∂q_j, ∂F/∂p_j⟩`
//!   over every interacting tuple `T ⊆ S` (including one-body terms of an
//!   external field);
//! - interaction-only mode returns `(−L^int_{|S|}(S)) F`, the single
//!   `|S|`-body term whose tuple is the scope itself. It is exactly zero when
//!   the family has no `|S|`-body potential.
//!
//! Derivatives of the product follow the Leibniz rule; each factor is
//! differentiated analytically when it can be, otherwise by central
//! differences with the caller's step.

use alloc::vec::Vec;

use super::function::PhaseFunction;
use super::phase::{restrict, PhasePoint, MAX_DIM};
use super::potential::PotentialFamily;
use crate::error::{contract, Result};
use crate::partitions::{nonempty_subsets, IndexSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiouvilleMode {
    Full,
    InteractionOnly,
}

/// One factor `f(X)` of a product of phase functions.
#[derive(Clone, Copy)]
pub struct Factor<'f> {
    pub function: &'f dyn PhaseFunction,
    pub labels: IndexSet,
}

impl core::fmt::Debug for Factor<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Factor")
            .field("arity", &self.function.arity())
            .field("labels", &self.labels)
            .finish()
    }
}

struct FactorState<'f> {
    factor: Factor<'f>,
    points: Vec<PhasePoint>,
    value: f64,
    analytic: Option<Option<Vec<PhasePoint>>>,
}

struct Product<'f> {
    factors: Vec<FactorState<'f>>,
    owner: Vec<Option<usize>>,
    dim: usize,
    fd_step: Option<f64>,
    cache: Vec<Option<f64>>,
}

impl<'f> Product<'f> {
    fn new(factors: &[Factor<'f>], cfg: &[PhasePoint], fd_step: Option<f64>) -> Result<Self> {
        let dim = cfg.first().ok_or_else(|| contract("empty configuration"))?.dim();
        let mut owner = alloc::vec![None; cfg.len()];
        let mut states = Vec::with_capacity(factors.len());
        for (j, factor) in factors.iter().enumerate() {
            if factor.function.arity() != factor.labels.len() {
                return Err(contract(alloc::format!(
                    "factor of arity {} attached to {} labels",
                    factor.function.arity(),
                    factor.labels.len()
                )));
            }
            let points = restrict(cfg, factor.labels)?;
            for label in factor.labels {
                if owner[label].replace(j).is_some() {
                    return Err(contract("factor index sets overlap"));
                }
            }
            let value = factor.function.eval(&points)?;
            states.push(FactorState {
                factor: *factor,
                points,
                value,
                analytic: None,
            });
        }
        Ok(Self {
            factors: states,
            owner,
            dim,
            fd_step,
            cache: alloc::vec![None; cfg.len() * 2 * dim],
        })
    }

    fn covers(&self, set: IndexSet) -> bool {
        set.iter().all(|l| self.owner.get(l).is_some_and(Option::is_some))
    }

    /// ∂F/∂(coordinate `c` of particle `label`), `c < 2ν` over `(q, p)`.
    fn derivative(&mut self, label: usize, c: usize) -> Result<f64> {
        let slot = label * 2 * self.dim + c;
        if let Some(v) = self.cache[slot] {
            return Ok(v);
        }
        let j = self.owner[label].expect("label covered by a factor");
        let others: f64 = self
            .factors
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != j)
            .map(|(_, s)| s.value)
            .product();
        let fd_step = self.fd_step;
        let state = &mut self.factors[j];
        let rank = state.factor.labels.rank(label).expect("owner holds label");
        if state.analytic.is_none() {
            let mut grad = alloc::vec![PhasePoint::zero(state.points[0].dim()); state.points.len()];
            let has = state.factor.function.gradient(&state.points, &mut grad)?;
            state.analytic = Some(has.then_some(grad));
        }
        let partial = match &state.analytic {
            Some(Some(grad)) => grad[rank].coord(c),
            _ => {
                let h = fd_step.ok_or_else(|| {
                    contract("a factor has no analytic gradient and no finite-difference step was given")
                })?;
                let mut shifted = state.points.clone();
                let x0 = shifted[rank].coord(c);
                *shifted[rank].coord_mut(c) = x0 + h;
                let plus = state.factor.function.eval(&shifted)?;
                *shifted[rank].coord_mut(c) = x0 - h;
                let minus = state.factor.function.eval(&shifted)?;
                (plus - minus) / (2.0 * h)
            }
        };
        let v = partial * others;
        self.cache[slot] = Some(v);
        Ok(v)
    }

    /// `Σ_{j∈T} ⟨∂Φ/∂q_j, ∂F/∂p_j⟩` for the tuple `T` with potential gradient `grad`.
    fn contract_momenta(&mut self, tuple: IndexSet, grad: &[[f64; MAX_DIM]]) -> Result<f64> {
        let d = self.dim;
        let mut acc = 0.0;
        for (slot, label) in tuple.iter().enumerate() {
            for c in 0..d {
                if grad[slot][c] != 0.0 {
                    acc += grad[slot][c] * self.derivative(label, d + c)?;
                }
            }
        }
        Ok(acc)
    }
}

/// Value of `(−L) ∏ f_j` at `cfg`; see the module docs for the two modes.
pub fn apply_liouville(
    factors: &[Factor<'_>],
    scope: IndexSet,
    pot: &PotentialFamily,
    cfg: &[PhasePoint],
    mode: LiouvilleMode,
    fd_step: Option<f64>,
) -> Result<f64> {
    if let Some(h) = fd_step {
        if !(h.is_finite() && h > 0.0) {
            return Err(contract("finite-difference step must be positive"));
        }
    }
    let mut product = Product::new(factors, cfg, fd_step)?;
    if !product.covers(scope) {
        return Err(contract("generator scope is not covered by the factors"));
    }
    let d = product.dim;
    match mode {
        LiouvilleMode::InteractionOnly => interaction_term(&mut product, scope, pot, cfg),
        LiouvilleMode::Full => {
            let mut acc = 0.0;
            for label in scope {
                for c in 0..d {
                    let p = cfg[label].p()[c];
                    if p != 0.0 {
                        acc -= p * product.derivative(label, c)?;
                    }
                }
            }
            for tuple in nonempty_subsets(scope) {
                acc += interaction_term(&mut product, tuple, pot, cfg)?;
            }
            Ok(acc)
        }
    }
}

fn interaction_term(
    product: &mut Product<'_>,
    tuple: IndexSet,
    pot: &PotentialFamily,
    cfg: &[PhasePoint],
) -> Result<f64> {
    let mut grad = [[0.0; MAX_DIM]; 3];
    match tuple.len() {
        1 => {
            let Some(ext) = pot.external() else { return Ok(0.0) };
            ext.add_gradient(&cfg[tuple.min()], &mut grad[0]);
        }
        k => {
            let Some(term) = pot.term(k) else { return Ok(0.0) };
            let pts = restrict(cfg, tuple)?;
            term.add_gradient(&pts, &mut grad[..k]);
        }
    }
    product.contract_momenta(tuple, &grad[..tuple.len()])
}
