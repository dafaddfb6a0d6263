use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{PhasePoint, MAX_DIM};
use crate::error::{contract, Result};

/// Smallest sample count accepted for a reported estimate.
pub const MIN_SAMPLES: usize = 1000;

/// Axis-aligned Gaussian envelope for one particle, used independently for
/// every particle of the cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianProposal {
    pub q_center: Vec<f64>,
    pub p_center: Vec<f64>,
    pub q_scale: f64,
    pub p_scale: f64,
}

impl GaussianProposal {
    /// Centred at the origin with unit position and momentum spread.
    pub fn standard(dim: usize) -> Self {
        Self {
            q_center: alloc::vec![0.0; dim],
            p_center: alloc::vec![0.0; dim],
            q_scale: 1.0,
            p_scale: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.q_center.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || d > MAX_DIM || self.p_center.len() != d {
            return Err(contract("proposal centres must share a dimension in 1..=3"));
        }
        if self.q_center.iter().chain(&self.p_center).any(|c| !c.is_finite()) {
            return Err(contract("proposal centres must be finite"));
        }
        for s in [self.q_scale, self.p_scale] {
            if !(s.is_finite() && s > 0.0) {
                return Err(contract("degenerate proposal covariance"));
            }
        }
        Ok(())
    }

    /// Draws `n` particles into `out` and returns the log density of the draw.
    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<PhasePoint>) -> f64 {
        let d = self.dim();
        let log_norm = -0.5 * libm::log(2.0 * core::f64::consts::PI) * (2 * d) as f64
            - d as f64 * (libm::log(self.q_scale) + libm::log(self.p_scale));
        out.clear();
        let mut log_density = 0.0;
        for _ in 0..n {
            let mut pt = PhasePoint::zero(d);
            let mut zz = 0.0;
            for c in 0..d {
                let zq: f64 = rng.sample(StandardNormal);
                let zp: f64 = rng.sample(StandardNormal);
                pt.q_mut()[c] = self.q_center[c] + self.q_scale * zq;
                pt.p_mut()[c] = self.p_center[c] + self.p_scale * zp;
                zz += zq * zq + zp * zp;
            }
            log_density += log_norm - 0.5 * zz;
            out.push(pt);
        }
        log_density
    }
}

/// Importance-sampling quadrature for L¹ norms on n-particle phase space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McQuadrature {
    pub samples: usize,
    pub seed: u64,
    pub proposal: GaussianProposal,
}

impl McQuadrature {
    pub fn new(samples: usize, seed: u64, proposal: GaussianProposal) -> Result<Self> {
        let q = Self {
            samples,
            seed,
            proposal,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(contract(alloc::format!("at least {MIN_SAMPLES} samples are required")));
        }
        self.proposal.validate()
    }

    /// The same quadrature with another seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn estimate(&self) -> Estimate {
        let var = if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        };
        Estimate {
            value: self.mean,
            stderr: libm::sqrt(var / self.count as f64),
        }
    }
}

/// `∫ |f|` over `n`-particle phase space with its standard error.
pub fn mc_l1_norm<F>(f: F, n: usize, quad: &McQuadrature) -> Result<Estimate>
where
    F: FnMut(&[PhasePoint]) -> Result<f64>,
{
    let [e] = mc_l1_norms([f], n, quad)?;
    Ok(e)
}

/// Several L¹ norms sharing one sample stream, so their differences carry
/// correlated noise only.
pub fn mc_l1_norms<F, const K: usize>(mut fs: [F; K], n: usize, quad: &McQuadrature) -> Result<[Estimate; K]>
where
    F: FnMut(&[PhasePoint]) -> Result<f64>,
{
    quad.validate()?;
    if n == 0 {
        return Err(contract("norms need at least one particle"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(quad.seed);
    let mut pts = Vec::with_capacity(n);
    let mut moments: [Moments; K] = core::array::from_fn(|_| Moments::default());
    for _ in 0..quad.samples {
        let log_density = quad.proposal.sample(&mut rng, n, &mut pts);
        let inv_density = libm::exp(-log_density);
        for (f, m) in fs.iter_mut().zip(moments.iter_mut()) {
            m.push(f(&pts)?.abs() * inv_density);
        }
    }
    Ok(moments.map(|m| m.estimate()))
}

/// Random phase configurations drawn from `proposal`, reproducible from `seed`.
pub fn sample_configurations(
    proposal: &GaussianProposal,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<PhasePoint>>> {
    proposal.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut pts = Vec::with_capacity(n);
        proposal.sample(&mut rng, n, &mut pts);
        out.push(pts);
    }
    Ok(out)
}

/// SplitMix64 finalizer; derives independent sub-seeds from a base seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
