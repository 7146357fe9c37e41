//! Regression under an unknown distribution.
//!
//! Draw `m0` unlabeled points from the true `D`, replace `D` by their
//! empirical distribution `D_0`, orthonormalize the family under `D_0`, and
//! run a well-balanced procedure at `ε/8` on `D_0`. Labels are requested only
//! for the points of the accepted (good) execution, all of which come from
//! the unlabeled pool.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::erm::{first_good_execution, solve_erm, ErmSolution, Solver, MAX_GOOD_ATTEMPTS};
use crate::error::{Error, Result};
use crate::family::{orthonormalize, BasisSpec, OrthonormalFamily};
use crate::measure::{empirical_uniform, Measure, WeightedSampleSet};
use crate::rng::TrialRng;
use crate::sampler_bss::{run_bss_procedure, BssConfig, DEFAULT_C0};
use crate::sampler_iid::{auto_size, leverage_measure, IidPlan, DEFAULT_C1};
use crate::C64;

/// Default constant in `m0 = ⌈C·(K·log d + K/ε)⌉`.
pub const DEFAULT_C: f64 = DEFAULT_C1;

/// Something that yields i.i.d. draws from the true distribution.
///
/// The pipeline only ever calls [`PointSource::draw`]; `density` exists so
/// tests can prove that it is never consulted.
pub trait PointSource {
    fn draw(&mut self, rng: &mut TrialRng) -> Result<f64>;

    fn density(&self, _x: f64) -> Result<f64> {
        Err(Error::InvalidMeasure("density of the true distribution is unknown".into()))
    }
}

impl PointSource for Measure {
    fn draw(&mut self, rng: &mut TrialRng) -> Result<f64> {
        Ok(self.sample(rng))
    }

    fn density(&self, x: f64) -> Result<f64> {
        Ok(self.mass_at(x))
    }
}

/// Label callback with an audit counter.
pub struct LabelOracle<'a> {
    label: Box<dyn FnMut(f64) -> C64 + 'a>,
    calls: usize,
}

impl<'a> LabelOracle<'a> {
    pub fn new(label: impl FnMut(f64) -> C64 + 'a) -> Self {
        Self { label: Box::new(label), calls: 0 }
    }

    pub fn query(&mut self, x: f64) -> C64 {
        self.calls += 1;
        (self.label)(x)
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl core::fmt::Debug for LabelOracle<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("LabelOracle").field("calls", &self.calls).finish_non_exhaustive()
    }
}

/// Well-balanced procedure run on `D_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerProcedure {
    Bss {
        c0: f64,
    },
    /// i.i.d. draws from the leverage distribution of `D_0`.
    Leverage {
        c1: f64,
    },
}

impl Default for InnerProcedure {
    fn default() -> Self {
        InnerProcedure::Bss { c0: DEFAULT_C0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveConfig {
    pub epsilon: f64,
    /// Condition number of the family under the true `D`.
    pub k: f64,
    pub c: f64,
    /// Fixed unlabeled budget instead of the auto-sized `m0`.
    pub m0_override: Option<usize>,
    pub inner: InnerProcedure,
    pub solver: Solver,
    pub max_good_attempts: usize,
}

impl ActiveConfig {
    pub fn new(epsilon: f64, k: f64) -> Self {
        Self {
            epsilon,
            k,
            c: DEFAULT_C,
            m0_override: None,
            inner: InnerProcedure::default(),
            solver: Solver::Direct,
            max_good_attempts: MAX_GOOD_ATTEMPTS,
        }
    }

    pub fn with_inner(mut self, inner: InnerProcedure) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_m0(mut self, m0: usize) -> Self {
        self.m0_override = Some(m0);
        self
    }
}

/// Sizes for one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivePlan {
    pub m0: usize,
    pub k: f64,
    pub epsilon: f64,
    pub inner_epsilon: f64,
    /// Filled in once the run has finished.
    pub label_budget_observed: usize,
}

impl ActivePlan {
    pub fn new(config: &ActiveConfig, d: usize) -> Result<Self> {
        if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {} must lie in (0, 1)", config.epsilon)));
        }
        if !(config.k.is_finite() && config.k >= 1.0) {
            return Err(Error::InvalidParameter(format!("condition number K = {} must be finite and ≥ 1", config.k)));
        }
        let m0 = config.m0_override.unwrap_or_else(|| auto_size(config.c, config.k, d, config.epsilon));
        if m0 == 0 {
            return Err(Error::EmptyInput("unlabeled budget"));
        }
        Ok(Self {
            m0,
            k: config.k,
            epsilon: config.epsilon,
            inner_epsilon: config.epsilon / 8.0,
            label_budget_observed: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveReport {
    pub plan: ActivePlan,
    /// Points drawn from the source.
    pub unlabeled: usize,
    /// Distinct points in `D_0`.
    pub distinct: usize,
    pub labels: usize,
    pub retries: usize,
}

#[derive(Debug, Clone)]
pub struct ActiveOutcome {
    pub solution: ErmSolution,
    /// The family orthonormalized under `D_0`; `solution.coeffs` refer to it.
    pub family: OrthonormalFamily,
    pub sample: WeightedSampleSet,
    pub report: ActiveReport,
}

impl ActiveOutcome {
    /// `f̃(x)`; errors if the basis cannot be evaluated at `x`.
    pub fn predict(&self, x: f64) -> Result<C64> {
        self.family.evaluate(&self.solution.coeffs, x)
    }
}

/// Runs the full pipeline.
pub fn run_active(
    basis: &BasisSpec,
    source: &mut dyn PointSource,
    oracle: &mut LabelOracle<'_>,
    config: &ActiveConfig,
    rng: &mut TrialRng,
) -> Result<ActiveOutcome> {
    let d = basis.dimension();
    let mut plan = ActivePlan::new(config, d)?;

    let mut draw_rng = rng.split(0);
    let points = (0..plan.m0).map(|_| source.draw(&mut draw_rng)).collect::<Result<Vec<f64>>>()?;
    let d0 = empirical_uniform(&points)?.with_label("empirical");
    let distinct = d0.len();
    let family = orthonormalize(basis, Arc::new(d0)).map_err(|e| match e {
        Error::DegenerateFamily(msg) => Error::DegenerateFamily(format!(
            "{msg}; {distinct} distinct points from m0 = {} unlabeled draws, try a larger m0",
            plan.m0
        )),
        other => other,
    })?;

    let inner_epsilon = plan.inner_epsilon;
    let leverage = match config.inner {
        InnerProcedure::Leverage { .. } => Some(leverage_measure(&family)?),
        InnerProcedure::Bss { .. } => None,
    };
    let exec = first_good_execution(&family, config.max_good_attempts, |attempt| {
        let mut attempt_rng = rng.split(1 + attempt as u64);
        match (config.inner, &leverage) {
            (InnerProcedure::Bss { c0 }, _) => {
                let cfg = BssConfig::new(inner_epsilon).with_c0(c0);
                Ok((run_bss_procedure(&family, &cfg, &mut attempt_rng)?.sample, ()))
            }
            (InnerProcedure::Leverage { c1 }, Some(df)) => {
                let plan = IidPlan::auto(&family, df.clone(), inner_epsilon, c1)?;
                Ok((plan.run(&family, &mut attempt_rng)?, ()))
            }
            (InnerProcedure::Leverage { .. }, None) => unreachable!("leverage measure is built above"),
        }
    })?;

    let before = oracle.calls();
    let labels: Vec<C64> = exec.sample.points.iter().map(|&x| oracle.query(x)).collect();
    let solution = solve_erm(&exec.design, &labels, config.solver)?;
    plan.label_budget_observed = oracle.calls() - before;

    let report = ActiveReport {
        plan,
        unlabeled: points.len(),
        distinct,
        labels: plan.label_budget_observed,
        retries: exec.retries,
    };
    Ok(ActiveOutcome { solution, family, sample: exec.sample, report })
}

/// `K = sup_x Σ_i |v_i(x)|²` of the family orthonormalized under `D`.
pub fn measure_condition_number(basis: &BasisSpec, d: &Measure) -> Result<f64> {
    let fam = orthonormalize(basis, Arc::new(d.clone()))?;
    Ok(fam.leverage_table().iter().copied().fold(0.0, f64::max))
}
