use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::function::PhaseFunction;
use super::phase::{PhaseConfiguration, PhasePoint, MAX_DIM};
use super::potential::PotentialFamily;
use crate::error::{contract, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Second order, symplectic and time-reversible.
    #[default]
    VelocityVerlet,
    /// Classical fourth-order Runge-Kutta; not volume preserving.
    Rk4,
}

/// Fixed-step integrator for Hamilton's equations.
///
/// A flow over `|t|` takes `floor(|t| / step)` full steps followed by one
/// partial step for the remainder, so the numerical flow map is continuous in
/// `t` and flows over multiples of `step` compose exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSolver {
    #[serde(default)]
    pub integrator: Integrator,
    pub step: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    10_000_000
}

impl Default for FlowSolver {
    fn default() -> Self {
        Self {
            integrator: Integrator::VelocityVerlet,
            step: 1e-3,
            max_steps: default_max_steps(),
        }
    }
}

impl FlowSolver {
    pub fn new(integrator: Integrator, step: f64) -> Result<Self> {
        let solver = Self {
            integrator,
            step,
            max_steps: default_max_steps(),
        };
        solver.validate()?;
        Ok(solver)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(contract("solver step must be positive and finite"));
        }
        if self.max_steps == 0 {
            return Err(contract("solver max_steps must be positive"));
        }
        Ok(())
    }

    /// Step sizes (full steps, trailing partial step) covering `|duration|`.
    fn schedule(&self, duration: f64) -> Result<(usize, f64)> {
        let span = duration.abs();
        let full = libm::floor(span / self.step);
        let needed = full as usize + 1;
        if !full.is_finite() || needed > self.max_steps {
            return Err(Error::StepLimit {
                duration: span,
                needed,
                limit: self.max_steps,
            });
        }
        let remainder = (span - full * self.step).max(0.0);
        Ok((full as usize, remainder))
    }

    /// Integrates the cluster forward by the signed `duration` in place.
    pub fn integrate(&self, pts: &mut [PhasePoint], pot: &PotentialFamily, duration: f64) -> Result<()> {
        if duration == 0.0 || pts.is_empty() {
            return Ok(());
        }
        if !duration.is_finite() {
            return Err(contract("flow duration must be finite"));
        }
        self.validate()?;
        let (full, remainder) = self.schedule(duration)?;
        let sign = duration.signum();
        let mut work = Workspace::new(pts.len());
        let mut taken = 0;
        let mut run = |h: f64, pts: &mut [PhasePoint], taken: &mut usize| -> Result<()> {
            match self.integrator {
                Integrator::VelocityVerlet => work.verlet_step(pts, pot, h),
                Integrator::Rk4 => work.rk4_step(pts, pot, h),
            }
            *taken += 1;
            if pts.iter().all(PhasePoint::is_finite) {
                Ok(())
            } else {
                Err(Error::Divergence { steps: *taken })
            }
        };
        for _ in 0..full {
            run(sign * self.step, pts, &mut taken)?;
        }
        if remainder > 0.0 {
            run(sign * remainder, pts, &mut taken)?;
        }
        Ok(())
    }
}

struct Workspace {
    grad: Vec<[f64; MAX_DIM]>,
    grad_fresh: bool,
    k: [Vec<PhasePoint>; 4],
    stage: Vec<PhasePoint>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            grad: alloc::vec![[0.0; MAX_DIM]; n],
            grad_fresh: false,
            k: Default::default(),
            stage: Vec::new(),
        }
    }

    fn verlet_step(&mut self, pts: &mut [PhasePoint], pot: &PotentialFamily, h: f64) {
        if !self.grad_fresh {
            pot.potential_gradient(pts, &mut self.grad);
        }
        for (pt, g) in pts.iter_mut().zip(&self.grad) {
            let d = pt.dim();
            for c in 0..d {
                pt.p_mut()[c] -= 0.5 * h * g[c];
                let v = pt.p()[c];
                pt.q_mut()[c] += h * v;
            }
        }
        pot.potential_gradient(pts, &mut self.grad);
        for (pt, g) in pts.iter_mut().zip(&self.grad) {
            for (c, pc) in pt.p_mut().iter_mut().enumerate() {
                *pc -= 0.5 * h * g[c];
            }
        }
        self.grad_fresh = true;
    }

    fn rk4_step(&mut self, pts: &mut [PhasePoint], pot: &PotentialFamily, h: f64) {
        let n = pts.len();
        for k in &mut self.k {
            k.resize(n, pts[0]);
        }
        self.stage.clear();
        self.stage.extend_from_slice(pts);
        let offsets = [0.0, 0.5, 0.5, 1.0];
        for s in 0..4 {
            if s > 0 {
                for i in 0..n {
                    let d = pts[i].dim();
                    for c in 0..2 * d {
                        *self.stage[i].coord_mut(c) = pts[i].coord(c) + offsets[s] * h * self.k[s - 1][i].coord(c);
                    }
                }
            }
            pot.potential_gradient(&self.stage, &mut self.grad);
            for i in 0..n {
                let d = pts[i].dim();
                for c in 0..d {
                    self.k[s][i].q_mut()[c] = self.stage[i].p()[c];
                    self.k[s][i].p_mut()[c] = -self.grad[i][c];
                }
            }
        }
        for i in 0..n {
            let d = pts[i].dim();
            for c in 0..2 * d {
                let incr = self.k[0][i].coord(c)
                    + 2.0 * self.k[1][i].coord(c)
                    + 2.0 * self.k[2][i].coord(c)
                    + self.k[3][i].coord(c);
                *pts[i].coord_mut(c) += h / 6.0 * incr;
            }
        }
        self.grad_fresh = false;
    }
}

/// The characteristics `X(−t, x)`: the cluster's phase state after evolving
/// under its own Hamiltonian for time `−t`. Exact identity at `t = 0`.
pub fn flow_backward(
    cfg: &PhaseConfiguration,
    pot: &PotentialFamily,
    t: f64,
    solver: &FlowSolver,
) -> Result<PhaseConfiguration> {
    let mut pts = cfg.points().to_vec();
    solver.integrate(&mut pts, pot, -t)?;
    PhaseConfiguration::new(pts)
}

pub(crate) fn flow_points(
    pts: &[PhasePoint],
    pot: &PotentialFamily,
    duration: f64,
    solver: &FlowSolver,
) -> Result<Vec<PhasePoint>> {
    let mut out = pts.to_vec();
    solver.integrate(&mut out, pot, duration)?;
    Ok(out)
}

/// `(S_n(−t) f)(x) = f(X(−t, x))`: the pullback of `f` along the backward
/// characteristics of the cluster.
pub fn apply_flow_operator(
    f: &dyn PhaseFunction,
    cluster_cfg: &PhaseConfiguration,
    pot: &PotentialFamily,
    t: f64,
    solver: &FlowSolver,
) -> Result<f64> {
    if f.arity() != cluster_cfg.len() {
        return Err(contract(alloc::format!(
            "function of arity {} applied to {} particles",
            f.arity(),
            cluster_cfg.len()
        )));
    }
    let flowed = flow_points(cluster_cfg, pot, -t, solver)?;
    f.eval(&flowed)
}
