//! Active linear regression through well-balanced sampling.
//!
//! The crate picks a small set of points to label for fitting a
//! `d`-dimensional linear family, weights them, and solves the weighted
//! least-squares problem on the labels:
//!
//! * [`family`]: bases, orthonormalization under a measure, leverage and
//!   condition numbers.
//! * [`measure`]: finite-support distributions, importance ratios, weighted
//!   sample sets.
//! * [`sampler_iid`]: i.i.d. sampling from a fixed proposal, including the
//!   leverage distribution.
//! * [`sampler_bss`]: the randomized barrier (BSS) procedure that needs only
//!   a linear number of labels.
//! * [`erm`]: design matrices, the goodness certificate and the weighted
//!   least-squares solvers.
//! * [`active`]: regression when the input distribution is only reachable
//!   through unlabeled draws.
//! * [`sparseft`]: importance weights and net-search recovery for signals
//!   with a `k`-sparse continuous Fourier transform.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod active;
pub mod erm;
pub mod error;
pub mod family;
pub mod linalg;
pub mod math;
pub mod measure;
pub mod rng;
pub mod sampler_bss;
pub mod sampler_iid;
pub mod sparseft;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use family::{orthonormalize, BasisKind, BasisSpec, CoefficientVector, CustomTable, OrthonormalFamily};
pub use measure::{density_ratio, empirical_uniform, Measure, WeightedSampleSet};
pub use rng::{TrialRng, RNG_ALGORITHM};
