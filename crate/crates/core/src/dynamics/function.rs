use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::phase::{PhasePoint, MAX_DIM};
use crate::error::{contract, Result};

fn sq(x: f64) -> f64 {
    x * x
}

/// An evaluable function on n-particle phase space.
///
/// `eval` receives exactly `arity()` points. Implementations that know their
/// derivatives override [`PhaseFunction::gradient`]; everything else is
/// differentiated by central differences where needed.
pub trait PhaseFunction: Send + Sync {
    fn arity(&self) -> usize;

    fn eval(&self, pts: &[PhasePoint]) -> Result<f64>;

    /// Writes `(∂f/∂q_i, ∂f/∂p_i)` into `grad[i]` and returns `true`, or
    /// returns `false` when no analytic gradient is available.
    fn gradient(&self, _pts: &[PhasePoint], _grad: &mut [PhasePoint]) -> Result<bool> {
        Ok(false)
    }

    /// Whether the function is invariant under permutations of particles.
    fn is_symmetric(&self) -> bool {
        true
    }
}

pub type SharedFunction<'a> = Arc<dyn PhaseFunction + 'a>;

/// One symmetric Gaussian cluster term:
///
/// `w ∏_i N(q_i; q̄, σ_q²) N(p_i; p̄, σ_p²) · exp(−α Σ_{i<j} |q_i − q_j|² − β Σ_{i<j} |p_i − p_j|²)`
///
/// With zero couplings this is `w` times a normalized product density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub q_center: Vec<f64>,
    pub p_center: Vec<f64>,
    pub q_width: f64,
    pub p_width: f64,
    #[serde(default)]
    pub q_coupling: f64,
    #[serde(default)]
    pub p_coupling: f64,
}

impl GaussianComponent {
    /// Unit-weight standard normal density in dimension `dim`.
    pub fn standard(dim: usize) -> Self {
        Self {
            weight: 1.0,
            q_center: alloc::vec![0.0; dim],
            p_center: alloc::vec![0.0; dim],
            q_width: 1.0,
            p_width: 1.0,
            q_coupling: 0.0,
            p_coupling: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.q_center.len()
    }
}

#[derive(Clone, Copy, Debug)]
struct Compiled {
    log_prefactor: f64,
    q_center: [f64; MAX_DIM],
    p_center: [f64; MAX_DIM],
    q_prec: f64,
    p_prec: f64,
    q_coupling: f64,
    p_coupling: f64,
}

impl Compiled {
    fn new(c: &GaussianComponent, arity: usize) -> Result<Self> {
        let d = c.dim();
        if d == 0 || d > MAX_DIM || c.p_center.len() != d {
            return Err(contract("Gaussian centres must share a dimension in 1..=3"));
        }
        let finite = [c.weight, c.q_width, c.p_width, c.q_coupling, c.p_coupling]
            .iter()
            .chain(&c.q_center)
            .chain(&c.p_center)
            .all(|x| x.is_finite());
        if !finite || c.q_width <= 0.0 || c.p_width <= 0.0 {
            return Err(contract("Gaussian widths must be positive and all parameters finite"));
        }
        if c.q_coupling < 0.0 || c.p_coupling < 0.0 {
            return Err(contract("Gaussian couplings must be nonnegative"));
        }
        let mut q_center = [0.0; MAX_DIM];
        let mut p_center = [0.0; MAX_DIM];
        q_center[..d].copy_from_slice(&c.q_center);
        p_center[..d].copy_from_slice(&c.p_center);
        let log_norm = -(d as f64) * (libm::log(2.0 * PI) + libm::log(c.q_width) + libm::log(c.p_width));
        Ok(Self {
            log_prefactor: arity as f64 * log_norm,
            q_center,
            p_center,
            q_prec: 1.0 / (c.q_width * c.q_width),
            p_prec: 1.0 / (c.p_width * c.p_width),
            q_coupling: c.q_coupling,
            p_coupling: c.p_coupling,
        })
    }

    fn exponent(&self, pts: &[PhasePoint]) -> f64 {
        let n = pts.len();
        let mut e = self.log_prefactor;
        for pt in pts {
            for (c, (&q, &p)) in pt.q().iter().zip(pt.p()).enumerate() {
                e -= 0.5 * self.q_prec * sq(q - self.q_center[c]);
                e -= 0.5 * self.p_prec * sq(p - self.p_center[c]);
            }
        }
        if n > 1 && (self.q_coupling > 0.0 || self.p_coupling > 0.0) {
            for i in 0..n {
                for j in i + 1..n {
                    for c in 0..pts[i].dim() {
                        e -= self.q_coupling * sq(pts[i].q()[c] - pts[j].q()[c]);
                        e -= self.p_coupling * sq(pts[i].p()[c] - pts[j].p()[c]);
                    }
                }
            }
        }
        e
    }
}

/// A weighted sum of [`GaussianComponent`]s of a fixed arity. Symmetric,
/// integrable and smooth, with analytic gradients.
#[derive(Clone)]
pub struct GaussianMixture {
    arity: usize,
    dim: usize,
    components: Vec<GaussianComponent>,
    compiled: Vec<(f64, Compiled)>,
}

impl fmt::Debug for GaussianMixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianMixture")
            .field("arity", &self.arity)
            .field("components", &self.components)
            .finish()
    }
}

impl GaussianMixture {
    pub fn new(arity: usize, components: Vec<GaussianComponent>) -> Result<Self> {
        if arity == 0 {
            return Err(contract("arity must be positive"));
        }
        let Some(first) = components.first() else {
            return Err(contract("mixture needs at least one component"));
        };
        let dim = first.dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(contract("mixture components must share a dimension"));
        }
        let compiled = components
            .iter()
            .map(|c| Ok((c.weight, Compiled::new(c, arity)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            arity,
            dim,
            components,
            compiled,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    fn check(&self, pts: &[PhasePoint]) -> Result<()> {
        if pts.len() != self.arity || pts.iter().any(|p| p.dim() != self.dim) {
            return Err(contract(alloc::format!(
                "Gaussian mixture of arity {} / dimension {} evaluated on {} points",
                self.arity,
                self.dim,
                pts.len()
            )));
        }
        Ok(())
    }
}

impl PhaseFunction for GaussianMixture {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, pts: &[PhasePoint]) -> Result<f64> {
        self.check(pts)?;
        Ok(self.compiled.iter().map(|(w, c)| w * libm::exp(c.exponent(pts))).sum())
    }

    fn gradient(&self, pts: &[PhasePoint], grad: &mut [PhasePoint]) -> Result<bool> {
        self.check(pts)?;
        let n = pts.len();
        let d = self.dim;
        for g in grad.iter_mut().take(n) {
            *g = PhasePoint::zero(d);
        }
        let mut q_sum = [0.0; MAX_DIM];
        let mut p_sum = [0.0; MAX_DIM];
        for pt in pts {
            for c in 0..d {
                q_sum[c] += pt.q()[c];
                p_sum[c] += pt.p()[c];
            }
        }
        for (w, comp) in &self.compiled {
            let v = w * libm::exp(comp.exponent(pts));
            for (pt, g) in pts.iter().zip(grad.iter_mut()) {
                for c in 0..d {
                    let (q, p) = (pt.q()[c], pt.p()[c]);
                    // Σ_{j≠i} (x_i − x_j) = n x_i − Σ_j x_j
                    let dq = -comp.q_prec * (q - comp.q_center[c]) - 2.0 * comp.q_coupling * (n as f64 * q - q_sum[c]);
                    let dp = -comp.p_prec * (p - comp.p_center[c]) - 2.0 * comp.p_coupling * (n as f64 * p - p_sum[c]);
                    g.q_mut()[c] += v * dq;
                    g.p_mut()[c] += v * dp;
                }
            }
        }
        Ok(true)
    }
}

/// `∏_i f(x_i)` for a one-particle function `f`.
#[derive(Clone)]
pub struct IndependentProduct<'a> {
    single: SharedFunction<'a>,
    arity: usize,
}

impl fmt::Debug for IndependentProduct<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndependentProduct")
            .field("arity", &self.arity)
            .finish()
    }
}

impl<'a> IndependentProduct<'a> {
    pub fn new(single: SharedFunction<'a>, arity: usize) -> Result<Self> {
        if single.arity() != 1 || arity == 0 {
            return Err(contract(
                "independent product needs a one-particle factor and arity ≥ 1",
            ));
        }
        Ok(Self { single, arity })
    }
}

impl PhaseFunction for IndependentProduct<'_> {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, pts: &[PhasePoint]) -> Result<f64> {
        pts.iter()
            .try_fold(1.0, |acc, pt| Ok(acc * self.single.eval(core::slice::from_ref(pt))?))
    }

    fn gradient(&self, pts: &[PhasePoint], grad: &mut [PhasePoint]) -> Result<bool> {
        let n = pts.len();
        let mut values = Vec::with_capacity(n);
        for (pt, g) in pts.iter().zip(grad.iter_mut()) {
            if !self
                .single
                .gradient(core::slice::from_ref(pt), core::slice::from_mut(g))?
            {
                return Ok(false);
            }
            values.push(self.single.eval(core::slice::from_ref(pt))?);
        }
        for (i, g) in grad.iter_mut().enumerate().take(n) {
            let others: f64 = values
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v)
                .product();
            for c in 0..2 * g.dim() {
                *g.coord_mut(c) *= others;
            }
        }
        Ok(true)
    }
}

/// A phase function backed by a closure; differentiated numerically.
pub struct FnPhase<F> {
    arity: usize,
    symmetric: bool,
    f: F,
}

impl<F> fmt::Debug for FnPhase<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPhase")
            .field("arity", &self.arity)
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

impl<F> FnPhase<F>
where
    F: Fn(&[PhasePoint]) -> Result<f64> + Send + Sync,
{
    pub fn new(arity: usize, f: F) -> Self {
        Self {
            arity,
            symmetric: true,
            f,
        }
    }

    pub fn asymmetric(arity: usize, f: F) -> Self {
        Self {
            arity,
            symmetric: false,
            f,
        }
    }
}

impl<F> PhaseFunction for FnPhase<F>
where
    F: Fn(&[PhasePoint]) -> Result<f64> + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, pts: &[PhasePoint]) -> Result<f64> {
        (self.f)(pts)
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}
