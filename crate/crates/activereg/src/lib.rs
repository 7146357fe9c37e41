//! Experiment harness around [`activereg_core`]: file formats, string specs,
//! configs and seeded Monte-Carlo runs. The `activereg` binary wraps this
//! crate.

pub use activereg_core as core;

pub mod config;
pub mod experiment;
pub mod formats;
pub mod spec;

use activereg_core::sparseft::{Candidate, RecoveryProblem};
use rayon::prelude::*;

/// Exhaustive net search split over chunks of outer indices. The reduction
/// keeps the lexicographically smallest tuple on ties, so the result does not
/// depend on the number of workers.
pub fn parallel_best(problem: &RecoveryProblem, chunk: usize) -> Option<Candidate> {
    let n = problem.outer_len();
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| problem.best_in(c * chunk..((c + 1) * chunk).min(n)))
        .reduce(|| None, Candidate::merge)
}
