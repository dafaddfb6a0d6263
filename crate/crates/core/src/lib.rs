//! Cumulant-expansion solutions of the nonlinear Liouville hierarchy for
//! few-particle classical systems.
//!
//! The crate is `no_std` and only needs an allocator. It is organised
//! bottom-up:
//!
//! - [`partitions`]: set partitions, partitions of block sets, subset
//!   selections and the signed Möbius weights of the partition lattice.
//! - [`dynamics`]: phase points, k-body potentials, numerical Hamiltonian
//!   flows and the Liouville generators acting on phase functions.
//! - [`hierarchy`]: cumulants of flow operators, the explicit solution of the
//!   hierarchy, the correlation/distribution transforms, the chaos and
//!   scattering representations and the hierarchy generator itself.
//! - [`verify`]: Monte Carlo L¹ norms and the property batteries that check
//!   all of the above, producing [`verify::PropertyReport`]s.
//!
//! Every evaluation is pointwise: a correlation function at time `t` is
//! evaluated at a given phase configuration by pulling the initial data back
//! along numerically integrated characteristics.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::needless_range_loop)]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
mod error;
pub mod hierarchy;
pub mod partitions;
pub mod verify;

pub use error::{Error, Result};
