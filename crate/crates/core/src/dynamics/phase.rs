use alloc::vec::Vec;
use core::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::partitions::IndexSet;

/// Largest supported spatial dimension ν.
pub const MAX_DIM: usize = 3;

/// Position and momentum of one particle in ℝ^ν × ℝ^ν.
///
/// Also used as a tangent vector (∂/∂q, ∂/∂p) when reporting gradients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct PhasePoint {
    q: [f64; MAX_DIM],
    p: [f64; MAX_DIM],
    dim: u8,
}

impl PhasePoint {
    pub fn new(q: &[f64], p: &[f64]) -> Result<Self> {
        if q.len() != p.len() {
            return Err(contract("position and momentum must have the same dimension"));
        }
        if q.is_empty() || q.len() > MAX_DIM {
            return Err(contract(alloc::format!("dimension {} outside 1..={MAX_DIM}", q.len())));
        }
        if q.iter().chain(p).any(|x| !x.is_finite()) {
            return Err(contract("phase point components must be finite"));
        }
        let mut pt = Self::zero(q.len());
        pt.q[..q.len()].copy_from_slice(q);
        pt.p[..p.len()].copy_from_slice(p);
        Ok(pt)
    }

    /// The origin of phase space in dimension `dim` (clamped to 1..=MAX_DIM).
    pub fn zero(dim: usize) -> Self {
        Self {
            q: [0.0; MAX_DIM],
            p: [0.0; MAX_DIM],
            dim: dim.clamp(1, MAX_DIM) as u8,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn q(&self) -> &[f64] {
        &self.q[..self.dim()]
    }

    pub fn p(&self) -> &[f64] {
        &self.p[..self.dim()]
    }

    pub fn q_mut(&mut self) -> &mut [f64] {
        let d = self.dim();
        &mut self.q[..d]
    }

    pub fn p_mut(&mut self) -> &mut [f64] {
        let d = self.dim();
        &mut self.p[..d]
    }

    pub fn is_finite(&self) -> bool {
        self.q().iter().chain(self.p()).all(|x| x.is_finite())
    }

    /// Coordinate `c` of the flattened `(q, p)` vector, `c < 2ν`.
    pub fn coord(&self, c: usize) -> f64 {
        let d = self.dim();
        if c < d {
            self.q[c]
        } else {
            self.p[c - d]
        }
    }

    pub fn coord_mut(&mut self, c: usize) -> &mut f64 {
        let d = self.dim();
        if c < d {
            &mut self.q[c]
        } else {
            &mut self.p[c - d]
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl TryFrom<RawPoint> for PhasePoint {
    type Error = crate::Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        PhasePoint::new(&raw.q, &raw.p)
    }
}

impl From<PhasePoint> for RawPoint {
    fn from(pt: PhasePoint) -> Self {
        RawPoint {
            q: pt.q().to_vec(),
            p: pt.p().to_vec(),
        }
    }
}

/// Phase points of particles `0..n`, all of the same dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PhasePoint>", into = "Vec<PhasePoint>")]
pub struct PhaseConfiguration {
    points: Vec<PhasePoint>,
}

impl PhaseConfiguration {
    pub fn new(points: Vec<PhasePoint>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(contract("phase configuration must be nonempty"));
        };
        if points.iter().any(|p| p.dim() != first.dim()) {
            return Err(contract("all phase points must share one dimension"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(contract("phase configuration must be finite"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// The sub-configuration of particles in `set`, in label order.
    pub fn restrict(&self, set: IndexSet) -> Result<PhaseConfiguration> {
        Ok(Self {
            points: restrict(&self.points, set)?,
        })
    }

    pub fn into_points(self) -> Vec<PhasePoint> {
        self.points
    }
}

impl Deref for PhaseConfiguration {
    type Target = [PhasePoint];

    fn deref(&self) -> &[PhasePoint] {
        &self.points
    }
}

impl TryFrom<Vec<PhasePoint>> for PhaseConfiguration {
    type Error = crate::Error;

    fn try_from(points: Vec<PhasePoint>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<PhaseConfiguration> for Vec<PhasePoint> {
    fn from(cfg: PhaseConfiguration) -> Self {
        cfg.points
    }
}

/// Gathers the points of `set` (labels index into `points`).
pub fn restrict(points: &[PhasePoint], set: IndexSet) -> Result<Vec<PhasePoint>> {
    if set.max() >= points.len() {
        return Err(contract(alloc::format!(
            "label {} outside a configuration of {} particles",
            set.max(),
            points.len()
        )));
    }
    Ok(set.iter().map(|l| points[l]).collect())
}

/// Gathers the points of `sub` out of points laid out in the label order of
/// `outer` (`sub` must be a subset of `outer`).
pub(crate) fn restrict_within(outer_points: &[PhasePoint], outer: IndexSet, sub: IndexSet) -> Vec<PhasePoint> {
    debug_assert!(sub.is_subset(outer));
    sub.iter()
        .map(|l| outer_points[outer.rank(l).expect("subset of the outer set")])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn point_validation() {
        assert!(PhasePoint::new(&[1.0], &[1.0, 2.0]).is_err());
        assert!(PhasePoint::new(&[], &[]).is_err());
        assert!(PhasePoint::new(&[f64::NAN], &[0.0]).is_err());
        assert!(PhasePoint::new(&[0.0; 4], &[0.0; 4]).is_err());
        let pt = PhasePoint::new(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(pt.coord(1), 2.0);
        assert_eq!(pt.coord(2), 3.0);
    }

    #[test]
    fn configuration_dimension_must_agree() {
        let a = PhasePoint::new(&[1.0], &[0.0]).unwrap();
        let b = PhasePoint::new(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(PhaseConfiguration::new(vec![a, b]).is_err());
        assert!(PhaseConfiguration::new(vec![]).is_err());
    }

    #[test]
    fn restriction_follows_label_order() {
        let pts: Vec<PhasePoint> = (0..4).map(|i| PhasePoint::new(&[i as f64], &[0.0]).unwrap()).collect();
        let set = IndexSet::new(&[1, 3]).unwrap();
        let sub = restrict(&pts, set).unwrap();
        assert_eq!(sub[1].q(), &[3.0]);
        let outer = IndexSet::new(&[0, 1, 3]).unwrap();
        let outer_pts = restrict(&pts, outer).unwrap();
        assert_eq!(restrict_within(&outer_pts, outer, set), sub);
        assert!(restrict(&pts, IndexSet::new(&[4]).unwrap()).is_err());
    }
}
