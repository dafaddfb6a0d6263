use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::phase::{PhasePoint, MAX_DIM};
use crate::error::{contract, Result};

/// A smooth k-body interaction Φ_k(q_1, …, q_k), symmetric in its arguments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InteractionPotential {
    /// Φ₂ = κ/2 |q₁ − q₂|²
    HarmonicPair { stiffness: f64 },
    /// Φ₂ = A exp(−|q₁ − q₂|² / 2σ²)
    GaussianPair { amplitude: f64, width: f64 },
    /// Φ₃ = A exp(−(|q₁−q₂|² + |q₁−q₃|² + |q₂−q₃|²) / 2σ²)
    GaussianTriple { amplitude: f64, width: f64 },
}

impl InteractionPotential {
    pub fn arity(&self) -> usize {
        match self {
            Self::HarmonicPair { .. } | Self::GaussianPair { .. } => 2,
            Self::GaussianTriple { .. } => 3,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::HarmonicPair { stiffness } => stiffness.is_finite(),
            Self::GaussianPair { amplitude, width } | Self::GaussianTriple { amplitude, width } => {
                amplitude.is_finite() && width.is_finite() && width > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(contract(alloc::format!("invalid potential parameters {self:?}")))
        }
    }

    /// Value at the positions of `tuple` (`tuple.len() == arity`).
    pub fn value(&self, tuple: &[PhasePoint]) -> f64 {
        debug_assert_eq!(tuple.len(), self.arity());
        match *self {
            Self::HarmonicPair { stiffness } => 0.5 * stiffness * dist2(&tuple[0], &tuple[1]),
            Self::GaussianPair { amplitude, width } => {
                amplitude * libm::exp(-dist2(&tuple[0], &tuple[1]) / (2.0 * width * width))
            }
            Self::GaussianTriple { amplitude, width } => {
                amplitude * libm::exp(-triple_spread(tuple) / (2.0 * width * width))
            }
        }
    }

    /// Adds ∂Φ/∂q_j to `grad[j]` for every member of the tuple.
    pub fn add_gradient(&self, tuple: &[PhasePoint], grad: &mut [[f64; MAX_DIM]]) {
        let d = tuple[0].dim();
        match *self {
            Self::HarmonicPair { stiffness } => {
                for c in 0..d {
                    let g = stiffness * (tuple[0].q()[c] - tuple[1].q()[c]);
                    grad[0][c] += g;
                    grad[1][c] -= g;
                }
            }
            Self::GaussianPair { amplitude, width } => {
                let s2 = width * width;
                let e = amplitude * libm::exp(-dist2(&tuple[0], &tuple[1]) / (2.0 * s2));
                for c in 0..d {
                    let g = -e / s2 * (tuple[0].q()[c] - tuple[1].q()[c]);
                    grad[0][c] += g;
                    grad[1][c] -= g;
                }
            }
            Self::GaussianTriple { amplitude, width } => {
                let s2 = width * width;
                let e = amplitude * libm::exp(-triple_spread(tuple) / (2.0 * s2));
                for j in 0..3 {
                    for c in 0..d {
                        let qj = tuple[j].q()[c];
                        let pull: f64 = (0..3).filter(|&l| l != j).map(|l| qj - tuple[l].q()[c]).sum();
                        grad[j][c] += -e / s2 * pull;
                    }
                }
            }
        }
    }
}

/// A one-body external field Φ₁(q).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExternalPotential {
    /// Φ₁ = κ/2 |q|²
    Harmonic { stiffness: f64 },
}

impl ExternalPotential {
    pub fn value(&self, pt: &PhasePoint) -> f64 {
        match *self {
            Self::Harmonic { stiffness } => 0.5 * stiffness * pt.q().iter().map(|x| x * x).sum::<f64>(),
        }
    }

    pub fn add_gradient(&self, pt: &PhasePoint, grad: &mut [f64; MAX_DIM]) {
        match *self {
            Self::Harmonic { stiffness } => {
                for (g, x) in grad.iter_mut().zip(pt.q()) {
                    *g += stiffness * x;
                }
            }
        }
    }
}

fn dist2(a: &PhasePoint, b: &PhasePoint) -> f64 {
    a.q().iter().zip(b.q()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn triple_spread(t: &[PhasePoint]) -> f64 {
    dist2(&t[0], &t[1]) + dist2(&t[0], &t[2]) + dist2(&t[1], &t[2])
}

/// The interaction content of the Hamiltonian
/// `H_n = Σ p_i²/2 + Σ_i Φ₁(q_i) + Σ_k Σ_{i₁<…<i_k} Φ_k(q_{i₁}, …, q_{i_k})`.
///
/// At most one potential per arity. The empty family is the free gas.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialFamily {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    external: Option<ExternalPotential>,
    #[serde(default)]
    terms: BTreeMap<usize, InteractionPotential>,
}

impl PotentialFamily {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(external: Option<ExternalPotential>, terms: Vec<InteractionPotential>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for term in terms {
            term.validate()?;
            if map.insert(term.arity(), term).is_some() {
                return Err(contract(alloc::format!(
                    "more than one {}-body potential",
                    term.arity()
                )));
            }
        }
        if let Some(ExternalPotential::Harmonic { stiffness }) = external {
            if !stiffness.is_finite() {
                return Err(contract("external stiffness must be finite"));
            }
        }
        Ok(Self { external, terms: map })
    }

    pub fn harmonic_pair(stiffness: f64) -> Self {
        Self::new(None, alloc::vec![InteractionPotential::HarmonicPair { stiffness }]).expect("finite stiffness")
    }

    pub fn gaussian_pair(amplitude: f64, width: f64) -> Result<Self> {
        Self::new(
            None,
            alloc::vec![InteractionPotential::GaussianPair { amplitude, width }],
        )
    }

    pub fn external(&self) -> Option<&ExternalPotential> {
        self.external.as_ref()
    }

    pub fn term(&self, arity: usize) -> Option<&InteractionPotential> {
        self.terms.get(&arity)
    }

    pub fn terms(&self) -> impl Iterator<Item = &InteractionPotential> {
        self.terms.values()
    }

    /// True if no force acts at all.
    pub fn is_free(&self) -> bool {
        self.external.is_none() && self.terms.is_empty()
    }

    pub fn potential_energy(&self, pts: &[PhasePoint]) -> f64 {
        let mut u = 0.0;
        if let Some(ext) = &self.external {
            u += pts.iter().map(|p| ext.value(p)).sum::<f64>();
        }
        let mut scratch = [PhasePoint::zero(1); 3];
        for term in self.terms.values() {
            for_each_tuple(pts, term.arity(), &mut scratch, |_, tuple| u += term.value(tuple));
        }
        u
    }

    pub fn hamiltonian(&self, pts: &[PhasePoint]) -> f64 {
        let kinetic: f64 = pts
            .iter()
            .map(|pt| 0.5 * pt.p().iter().map(|x| x * x).sum::<f64>())
            .sum();
        kinetic + self.potential_energy(pts)
    }

    /// `grad[i] = ∂U/∂q_i` for the total potential energy of the cluster.
    pub fn potential_gradient(&self, pts: &[PhasePoint], grad: &mut [[f64; MAX_DIM]]) {
        grad.iter_mut().for_each(|g| *g = [0.0; MAX_DIM]);
        if let Some(ext) = &self.external {
            for (pt, g) in pts.iter().zip(grad.iter_mut()) {
                ext.add_gradient(pt, g);
            }
        }
        let mut scratch = [PhasePoint::zero(1); 3];
        let mut local = [[0.0; MAX_DIM]; 3];
        for term in self.terms.values() {
            let k = term.arity();
            for_each_tuple(pts, k, &mut scratch, |idx, tuple| {
                local[..k].iter_mut().for_each(|g| *g = [0.0; MAX_DIM]);
                term.add_gradient(tuple, &mut local[..k]);
                for (slot, &i) in idx.iter().enumerate() {
                    for c in 0..MAX_DIM {
                        grad[i][c] += local[slot][c];
                    }
                }
            });
        }
    }
}

/// Calls `f(indices, points)` for every increasing `k`-tuple of `pts`
/// (k ∈ {1, 2, 3}).
fn for_each_tuple(
    pts: &[PhasePoint],
    k: usize,
    scratch: &mut [PhasePoint; 3],
    mut f: impl FnMut(&[usize], &[PhasePoint]),
) {
    let n = pts.len();
    match k {
        2 => {
            for i in 0..n {
                for j in i + 1..n {
                    scratch[0] = pts[i];
                    scratch[1] = pts[j];
                    f(&[i, j], &scratch[..2]);
                }
            }
        }
        3 => {
            for i in 0..n {
                for j in i + 1..n {
                    for l in j + 1..n {
                        scratch[0] = pts[i];
                        scratch[1] = pts[j];
                        scratch[2] = pts[l];
                        f(&[i, j, l], &scratch[..3]);
                    }
                }
            }
        }
        _ => unreachable!("interaction arities are 2 or 3"),
    }
}
