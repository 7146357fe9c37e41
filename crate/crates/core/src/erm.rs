//! Design matrices, the goodness certificate, and the weighted empirical
//! risk minimizer.
//!
//! For a weighted sample `(S, w)` the design matrix is
//! `A(i, j) = √w_i · v_j(x_i)` in the orthonormal basis of the family. The
//! execution is *good* when every eigenvalue of `A^*A` lies in the closed
//! interval `[0.75, 1.25]`; then `‖h‖²_{S,w}` is within those factors of
//! `‖h‖²_D` for every family member `h`, and the weighted least-squares fit
//! `α(f̃) = (A^*A)^{-1} A^* y_w` inherits the recovery guarantees.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::family::{CoefficientVector, OrthonormalFamily};
use crate::linalg::{self, cholesky, cholesky_solve, hermitian_eigenvalues, CMatrix};
use crate::math;
use crate::measure::WeightedSampleSet;
use crate::C64;

pub const GOOD_LOWER: f64 = 0.75;
pub const GOOD_UPPER: f64 = 1.25;
/// Smallest Gram eigenvalue accepted by the direct solver.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;
/// Attempts allowed when rerunning a procedure until it is good.
pub const MAX_GOOD_ATTEMPTS: usize = 50;
/// Default accuracy of the truncated Neumann-series solver.
pub const DEFAULT_TAYLOR_DELTA: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    a: CMatrix,
    sqrt_weights: Vec<f64>,
    gram: CMatrix,
    gram_eigs: Vec<f64>,
}

/// Builds `A(i, j) = √w_i · v_j(x_i)` and the spectrum of `A^*A`.
pub fn build_design(fam: &OrthonormalFamily, sample: &WeightedSampleSet) -> Result<DesignMatrix> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("weighted sample set"));
    }
    sample.validate()?;
    let d = fam.dimension();
    let m = sample.len();
    let mut a = CMatrix::zeros(m, d);
    let mut sqrt_weights = Vec::with_capacity(m);
    for (i, (&x, &w)) in sample.points.iter().zip(&sample.weights).enumerate() {
        let sw = math::sqrt(w);
        let v = fam.values(x)?;
        for (dst, z) in a.row_mut(i).iter_mut().zip(v) {
            *dst = z * sw;
        }
        sqrt_weights.push(sw);
    }
    Ok(DesignMatrix::from_parts(a, sqrt_weights))
}

impl DesignMatrix {
    /// Wraps an explicit design; `sqrt_weights[i]` scales row `i`.
    pub fn from_parts(a: CMatrix, sqrt_weights: Vec<f64>) -> Self {
        assert_eq!(a.rows(), sqrt_weights.len(), "one weight per design row");
        let gram = a.gram();
        let gram_eigs = hermitian_eigenvalues(&gram);
        Self { a, sqrt_weights, gram, gram_eigs }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// Ascending eigenvalues of `A^*A`.
    pub fn gram_eigs(&self) -> &[f64] {
        &self.gram_eigs
    }

    pub fn lambda_min(&self) -> f64 {
        self.gram_eigs[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.gram_eigs.last().unwrap()
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_weights
    }

    /// `y_w = (√w_i · y_i)_i`.
    pub fn weighted_labels(&self, labels: &[C64]) -> Result<Vec<C64>> {
        if labels.len() != self.rows() {
            return Err(Error::LabelCount { expected: self.rows(), got: labels.len() });
        }
        Ok(labels.iter().zip(&self.sqrt_weights).map(|(y, s)| y * *s).collect())
    }

    /// `max |1 − λ|` over the Gram spectrum: the contraction factor of the
    /// Neumann series.
    pub fn contraction(&self) -> f64 {
        (1.0 - self.lambda_min()).abs().max((self.lambda_max() - 1.0).abs())
    }
}

/// The closed-interval goodness test on the spectrum of `A^*A`.
pub fn is_good(dm: &DesignMatrix) -> bool {
    spectrum_is_good(dm.gram_eigs())
}

pub fn spectrum_is_good(eigs: &[f64]) -> bool {
    match (eigs.first(), eigs.last()) {
        (Some(&lo), Some(&hi)) => lo >= GOOD_LOWER && hi <= GOOD_UPPER,
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Cholesky solve of the normal equations.
    Direct,
    /// `Σ_{i=0}^{t} (I − A^*A)^i A^* y_w`.
    TaylorSeries(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmSolution {
    pub coeffs: CoefficientVector,
    /// `‖A·α − y_w‖_2`.
    pub residual: f64,
    pub good: bool,
    pub solver: Solver,
}

/// Weighted least squares `argmin_h Σ w_i |h(x_i) − y_i|²` over the family.
pub fn solve_erm(dm: &DesignMatrix, labels: &[C64], solver: Solver) -> Result<ErmSolution> {
    let y_w = dm.weighted_labels(labels)?;
    let rhs = dm.a.adjoint_matvec(&y_w);
    let good = is_good(dm);
    let coeffs = match solver {
        Solver::Direct => {
            if dm.lambda_min() < SINGULAR_TOLERANCE {
                return Err(Error::SingularGram(dm.lambda_min()));
            }
            let l = cholesky(&dm.gram).map_err(|_| Error::SingularGram(dm.lambda_min()))?;
            cholesky_solve(&l, &rhs)
        }
        Solver::TaylorSeries(terms) => {
            if !good {
                return Err(Error::NotGood { min: dm.lambda_min(), max: dm.lambda_max() });
            }
            let mut term = rhs.clone();
            let mut acc = rhs;
            for _ in 0..terms {
                let g_term = dm.gram.matvec(&term);
                for (t, g) in term.iter_mut().zip(g_term) {
                    *t -= g;
                }
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += t;
                }
            }
            acc
        }
    };
    let fitted = dm.a.matvec(&coeffs);
    let residual = math::sqrt(fitted.iter().zip(&y_w).map(|(f, y)| (f - y).norm_sqr()).sum());
    Ok(ErmSolution { coeffs: CoefficientVector(coeffs), residual, good, solver })
}

/// Number of extra Neumann terms `t` so that the truncation error is at most
/// `delta` relative to the exact solution when `‖I − A^*A‖ ≤ contraction`:
/// per eigen-direction the relative error is `|1 − λ|^{t+1}`.
pub fn taylor_terms(delta: f64, contraction: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !(0.0..1.0).contains(&contraction) {
        return Err(Error::InvalidParameter(format!("contraction = {contraction} must lie in [0, 1)")));
    }
    if contraction == 0.0 {
        return Ok(0);
    }
    let t = math::ceil(math::ln(1.0 / delta) / math::ln(1.0 / contraction));
    Ok(t.max(0.0) as usize)
}

/// `‖A^*(y_w − f_w)‖²`, the noise energy that survives projection onto the
/// family for this execution.
pub fn noise_projection_diagnostic(dm: &DesignMatrix, labels: &[C64], f_true: &[C64]) -> Result<f64> {
    if f_true.len() != labels.len() {
        return Err(Error::LabelCount { expected: labels.len(), got: f_true.len() });
    }
    let noise: Vec<C64> = labels.iter().zip(f_true).map(|(y, f)| y - f).collect();
    let g_w = dm.weighted_labels(&noise)?;
    Ok(linalg::norm_sqr(&dm.a.adjoint_matvec(&g_w)))
}

/// Least squares on an explicit weighted design: returns the coefficients
/// and the squared residual `‖A c − y_w‖²`.
pub fn least_squares(a: &CMatrix, y_w: &[C64]) -> Result<(Vec<C64>, f64)> {
    let gram = a.gram();
    let l = cholesky(&gram).map_err(Error::SingularGram)?;
    // Guard against numerically rank-deficient designs that slip past the
    // pivot check.
    let min_pivot = (0..l.rows()).map(|i| l[(i, i)].re).fold(f64::INFINITY, f64::min);
    let max_pivot = (0..l.rows()).map(|i| l[(i, i)].re).fold(0.0, f64::max);
    if min_pivot * min_pivot < SINGULAR_TOLERANCE * max_pivot * max_pivot {
        return Err(Error::SingularGram(min_pivot * min_pivot));
    }
    let rhs = a.adjoint_matvec(y_w);
    let coeffs = cholesky_solve(&l, &rhs);
    let fitted = a.matvec(&coeffs);
    let residual = fitted.iter().zip(y_w).map(|(f, y)| (f - y).norm_sqr()).sum();
    Ok((coeffs, residual))
}

/// A certified good execution of a sampling procedure.
#[derive(Debug, Clone)]
pub struct GoodExecution<T> {
    pub sample: WeightedSampleSet,
    pub design: DesignMatrix,
    /// Failed attempts before this one.
    pub retries: usize,
    /// Whatever else the procedure reported for the accepted attempt.
    pub extra: T,
}

/// Reruns `attempt` until its design is good, at most `max_attempts` times.
///
/// Goodness depends only on the sampled points and weights, so no labels are
/// spent on rejected attempts.
pub fn first_good_execution<T>(
    fam: &OrthonormalFamily,
    max_attempts: usize,
    mut attempt: impl FnMut(usize) -> Result<(WeightedSampleSet, T)>,
) -> Result<GoodExecution<T>> {
    for i in 0..max_attempts {
        let (sample, extra) = attempt(i)?;
        let design = build_design(fam, &sample)?;
        if is_good(&design) {
            return Ok(GoodExecution { sample, design, retries: i, extra });
        }
    }
    Err(Error::NoGoodExecution(max_attempts))
}
