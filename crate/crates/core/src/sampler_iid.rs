//! The i.i.d. well-balanced procedure: `m` independent draws from a fixed
//! proposal `D'`, coefficients `α_i = 1/m` and importance weights
//! `w_i = D(x_i) / (m·D'(x_i))`.
//!
//! With `D' = D_F`, the leverage distribution, the condition number is the
//! smallest possible, namely `d`.

use alloc::format;
use alloc::vec::Vec;

use crate::erm::{build_design, is_good};
use crate::error::{Error, Result};
use crate::family::OrthonormalFamily;
use crate::math;
use crate::measure::{Measure, WeightedSampleSet};
use crate::rng::TrialRng;

/// Default constant in `m = ⌈C1·(K·log d + K/ε)⌉`.
pub const DEFAULT_C1: f64 = 6.0;

/// `max(ln d, 1)`.
pub fn log_dimension(d: usize) -> f64 {
    math::ln(d as f64).max(1.0)
}

/// `D_F(x) = D(x)·Σ_i |v_i(x)|² / d` on the support of `D`.
pub fn leverage_measure(fam: &OrthonormalFamily) -> Result<Measure> {
    let d = fam.dimension() as f64;
    let masses: Vec<f64> =
        fam.measure().masses().iter().zip(fam.leverage_table()).map(|(p, lev)| p * lev / d).collect();
    let label = format!("leverage[{}]", fam.measure().label());
    Measure::new(fam.measure().support().to_vec(), masses, label)
}

/// `D(x)/D_F(x) = d / leverage(x)`.
pub fn leverage_weight(fam: &OrthonormalFamily, x: f64) -> Result<f64> {
    Ok(fam.dimension() as f64 / fam.leverage(x)?)
}

/// Two-stage sampler for `D_F`: pick `j ∈ [d]` uniformly, then draw `x` with
/// probability `D(x)·|v_j(x)|²`. Per-component CDFs are built once.
#[derive(Debug, Clone)]
pub struct DfSampler<'a> {
    fam: &'a OrthonormalFamily,
    // cdfs[j][i] = Σ_{i' ≤ i} D(x_i')·|v_j(x_i')|²
    cdfs: Vec<Vec<f64>>,
}

impl<'a> DfSampler<'a> {
    pub fn new(fam: &'a OrthonormalFamily) -> Self {
        let d = fam.dimension();
        let masses = fam.measure().masses();
        let cdfs = (0..d)
            .map(|j| {
                let mut acc = 0.0;
                masses
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        acc += p * fam.values_at_index(i)[j].norm_sqr();
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { fam, cdfs }
    }

    /// Draws `(x, d / leverage(x))`.
    pub fn draw(&self, rng: &mut TrialRng) -> (f64, f64) {
        let j = rng.index(self.cdfs.len());
        let cdf = &self.cdfs[j];
        let target = rng.uniform() * cdf[cdf.len() - 1];
        let mut i = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
        while i > 0 && cdf[i] == cdf[i - 1] {
            i -= 1;
        }
        let lev = self.fam.leverage_at_index(i);
        (self.fam.measure().support()[i], self.fam.dimension() as f64 / lev)
    }
}

/// One draw from `D_F` with its weight `d / Σ_i |v_i(x)|²`.
pub fn sample_df(fam: &OrthonormalFamily, rng: &mut TrialRng) -> (f64, f64) {
    DfSampler::new(fam).draw(rng)
}

/// Sizing of an i.i.d. run.
#[derive(Debug, Clone)]
pub struct IidPlan {
    pub d_prime: Measure,
    pub m: usize,
    /// `K_{D'}`, exact over the finite support.
    pub k_dprime: f64,
    pub epsilon: f64,
    pub c1: f64,
}

impl IidPlan {
    /// `m = ⌈C1·(K_{D'}·log d + K_{D'}/ε)⌉`.
    pub fn auto(fam: &OrthonormalFamily, d_prime: Measure, epsilon: f64, c1: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(Error::InvalidParameter(format!("C1 = {c1} must be positive")));
        }
        let k = finite_condition_number(fam, &d_prime)?;
        let m = auto_size(c1, k, fam.dimension(), epsilon);
        Ok(Self { d_prime, m, k_dprime: k, epsilon, c1 })
    }

    pub fn with_m(fam: &OrthonormalFamily, d_prime: Measure, epsilon: f64, m: usize) -> Result<Self> {
        check_epsilon(epsilon)?;
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        let k = finite_condition_number(fam, &d_prime)?;
        Ok(Self { d_prime, m, k_dprime: k, epsilon, c1: f64::NAN })
    }

    pub fn alpha(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// `α_i·K_{D_i} = K_{D'}/m`.
    pub fn balance(&self) -> f64 {
        self.k_dprime / self.m as f64
    }

    /// Second well-balanced property: `Σα = 1 ≤ 5/4` and `α·K_{D'} ≤ ε/2`.
    pub fn is_balanced(&self) -> bool {
        self.balance() <= self.epsilon / 2.0
    }

    pub fn run(&self, fam: &OrthonormalFamily, rng: &mut TrialRng) -> Result<WeightedSampleSet> {
        let m = self.m;
        let d = fam.measure();
        let alpha = self.alpha();
        let mut out = WeightedSampleSet::with_capacity(rng.seed(), m);
        for _ in 0..m {
            let i = self.d_prime.sample_index(rng);
            let x = self.d_prime.support()[i];
            let q = self.d_prime.masses()[i];
            out.push(x, d.mass_at(x) / (m as f64 * q), alpha);
        }
        Ok(out)
    }
}

pub fn auto_size(c1: f64, k: f64, d: usize, epsilon: f64) -> usize {
    let m = math::ceil(c1 * (k * log_dimension(d) + k / epsilon));
    (m as usize).max(1)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1)")))
    }
}

fn finite_condition_number(fam: &OrthonormalFamily, d_prime: &Measure) -> Result<f64> {
    let k = fam.condition_number(d_prime);
    if k.is_finite() {
        Ok(k)
    } else {
        Err(Error::InfiniteConditionNumber)
    }
}

/// Draws `m` points i.i.d. from `D'` (auto-sized with [`DEFAULT_C1`] unless
/// `m_override` is given).
pub fn run_iid_procedure(
    fam: &OrthonormalFamily,
    d_prime: &Measure,
    epsilon: f64,
    m_override: Option<usize>,
    rng: &mut TrialRng,
) -> Result<WeightedSampleSet> {
    let plan = match m_override {
        Some(m) => IidPlan::with_m(fam, d_prime.clone(), epsilon, m)?,
        None => IidPlan::auto(fam, d_prime.clone(), epsilon, DEFAULT_C1)?,
    };
    plan.run(fam, rng)
}

/// Candidate constants scanned by [`calibrate_c1`]: `0.05·1.15^i` up to 50.
pub fn c1_grid() -> Vec<f64> {
    let mut out = Vec::new();
    let mut c = 0.05;
    while c <= 50.0 {
        out.push(c);
        c *= 1.15;
    }
    out
}

/// Smallest grid value of `C1` whose empirical good-execution rate over
/// `trials` runs reaches `target_good_rate`, or `+∞` if none does.
///
/// Every candidate reuses the same per-trial random streams, and the scan
/// returns the first hit in increasing order, so a higher target never
/// yields a smaller constant.
pub fn calibrate_c1(
    fam: &OrthonormalFamily,
    d_prime: &Measure,
    epsilon: f64,
    target_good_rate: f64,
    trials: usize,
    rng: &TrialRng,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    let grid = c1_grid();
    if target_good_rate <= 0.0 {
        return Ok(grid[0]);
    }
    let k = finite_condition_number(fam, d_prime)?;
    let d = fam.dimension();
    for &c1 in &grid {
        let m = auto_size(c1, k, d, epsilon);
        let plan = IidPlan { d_prime: d_prime.clone(), m, k_dprime: k, epsilon, c1 };
        let mut good = 0usize;
        for t in 0..trials {
            let mut trial_rng = rng.split(t as u64);
            let sample = plan.run(fam, &mut trial_rng)?;
            if is_good(&build_design(fam, &sample)?) {
                good += 1;
            }
        }
        if good as f64 >= target_good_rate * trials as f64 {
            return Ok(c1);
        }
    }
    Ok(f64::INFINITY)
}
