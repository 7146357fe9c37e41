//! Seeded Monte-Carlo trials and their CSV / JSON outputs.
//!
//! Trial `t` draws everything from `TrialRng::with_stream(seed, t)`, so the
//! records depend only on `(config, seed)` and not on scheduling.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use activereg_core::active::{measure_condition_number, run_active, ActiveConfig, InnerProcedure, LabelOracle};
use activereg_core::erm::{first_good_execution, solve_erm, Solver, MAX_GOOD_ATTEMPTS};
use activereg_core::family::OrthonormalFamily;
use activereg_core::sampler_bss::{run_bss_procedure, BssConfig};
use activereg_core::sampler_iid::{leverage_measure, IidPlan};
use activereg_core::sparseft::{
    fourier_weight_density, random_frequencies, FourierWeightDensity, RecoveryConfig, RecoveryProblem,
    SparseFourierSignal,
};
use activereg_core::{orthonormalize, BasisSpec, CoefficientVector, Measure, TrialRng, C64, RNG_ALGORITHM};
use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode, Validated};
use crate::spec::{MeasureSpec, NoiseModel, NoiseSpec, SamplerSpec};

/// Stream reserved for the fixed ground-truth function.
const TRUTH_STREAM: u64 = u64::MAX;
/// Child stream of a trial used for label noise.
const NOISE_CHILD: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Labels requested.
    pub labels: usize,
    /// Unlabeled draws (active mode).
    pub unlabeled: Option<usize>,
    /// `‖f̃ − f‖_D²`.
    pub err_sq: f64,
    /// `E‖g‖_D²`.
    pub noise_sq: f64,
    /// Rejected executions before the good one.
    pub retries: usize,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl TrialRecord {
    fn failed(trial: usize, err: anyhow::Error, wall_ms: f64) -> Self {
        Self {
            trial,
            labels: 0,
            unlabeled: None,
            err_sq: f64::NAN,
            noise_sq: f64::NAN,
            retries: 0,
            wall_ms,
            error: Some(format!("{err:#}")),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantiles {
    pub mean: f64,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
        Some(Self { mean: v.iter().sum::<f64>() / v.len() as f64, p10: q(0.1), median: q(0.5), p90: q(0.9) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub failures: usize,
    pub err_sq: Option<Quantiles>,
    /// `err_sq / (ε·noise_sq)` over trials with nonzero noise.
    pub normalized_err: Option<Quantiles>,
    pub labels: Option<Quantiles>,
    pub unlabeled: Option<Quantiles>,
    pub mean_retries: f64,
}

impl Summary {
    pub fn from_records(records: &[TrialRecord], epsilon: f64) -> Self {
        let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.ok()).collect();
        let err: Vec<f64> = ok.iter().map(|r| r.err_sq).collect();
        let normalized: Vec<f64> =
            ok.iter().filter(|r| r.noise_sq > 0.0).map(|r| r.err_sq / (epsilon * r.noise_sq)).collect();
        let labels: Vec<f64> = ok.iter().map(|r| r.labels as f64).collect();
        let unlabeled: Vec<f64> = ok.iter().filter_map(|r| r.unlabeled.map(|u| u as f64)).collect();
        let mean_retries =
            if ok.is_empty() { 0.0 } else { ok.iter().map(|r| r.retries as f64).sum::<f64>() / ok.len() as f64 };
        Self {
            trials: records.len(),
            failures: records.len() - ok.len(),
            err_sq: Quantiles::of(&err),
            normalized_err: Quantiles::of(&normalized),
            labels: Quantiles::of(&labels),
            unlabeled: Quantiles::of(&unlabeled),
            mean_retries,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

impl ExperimentOutput {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["trial", "labels", "unlabeled", "err_sq", "noise_sq", "retries", "status"];
        if self.config.timing {
            header.push("wall_ms");
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.trial.to_string(),
                r.labels.to_string(),
                r.unlabeled.map(|u| u.to_string()).unwrap_or_default(),
                r.err_sq.to_string(),
                r.noise_sq.to_string(),
                r.retries.to_string(),
                r.error.clone().unwrap_or_else(|| "ok".into()),
            ];
            if self.config.timing {
                row.push(format!("{:.3}", r.wall_ms));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Summary, config echo and RNG identifier.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "seed": self.config.seed,
            "rng": RNG_ALGORITHM,
            "summary": self.summary,
        })
    }
}

/// Deterministic unit-norm coefficients of the ground truth.
pub fn truth_coefficients(d: usize, seed: u64) -> CoefficientVector {
    let mut rng = TrialRng::with_stream(seed, TRUTH_STREAM);
    let v: Vec<C64> = (0..d).map(|_| C64::new(rng.gaussian(), 0.0)).collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    CoefficientVector(v.into_iter().map(|c| c / norm).collect())
}

fn noisy_label(truth: C64, index: usize, noise: &NoiseModel, rng: &mut TrialRng) -> C64 {
    match noise {
        NoiseModel::Zero => truth,
        NoiseModel::Gauss(s) => truth + C64::new(s * rng.gaussian(), 0.0),
        NoiseModel::Table(g) => truth + C64::new(g[index], 0.0),
    }
}

enum Proposal {
    Iid { d_prime: Measure },
    Bss(BssConfig),
}

struct QuerySetup {
    fam: OrthonormalFamily,
    truth: CoefficientVector,
    truth_values: Vec<C64>,
    noise: NoiseModel,
    proposal: Proposal,
}

struct ActiveSetup {
    basis: BasisSpec,
    true_d: Measure,
    truth_values: Vec<C64>,
    noise: NoiseModel,
    config: ActiveConfig,
}

struct SparseSetup {
    density: FourierWeightDensity,
    norm_measure: Measure,
    samples: usize,
    sigma: f64,
}

enum Setup {
    Query(QuerySetup),
    Active(ActiveSetup),
    Sparse(SparseSetup),
}

/// Default sample count for sparseft mode: the `k⁴ log³k + k² log²k ·
/// log(F/ε)` scaling with constant 4 and `k` floored at 2.
pub fn default_sparseft_samples(k: usize, bandlimit: f64, epsilon: f64) -> usize {
    let k = k.max(2) as f64;
    let lk = k.ln();
    let m = 4.0 * (k.powi(4) * lk.powi(3) + k * k * lk * lk * (bandlimit / epsilon).ln().max(1.0));
    (m.ceil() as usize).max(20)
}

fn reference_measure(v: &Validated, table_measure: Option<Measure>) -> Result<Measure> {
    match (&v.dist, table_measure) {
        (Some(spec), _) => spec.build(),
        (None, Some(m)) => Ok(m),
        (None, None) => MeasureSpec::UniformGrid(1001).build(),
    }
}

fn prepare(v: &Validated) -> Result<Setup> {
    let cfg = &v.config;
    match cfg.mode {
        Mode::Query => {
            let built = v.family.build(cfg.degree)?;
            let d_measure = Arc::new(reference_measure(v, built.table_measure)?);
            let fam = orthonormalize(&built.basis, d_measure.clone()).context("orthonormalizing the family")?;
            let truth = truth_coefficients(fam.dimension(), cfg.seed);
            let truth_values = fam.values_on_support(&truth)?;
            let noise = v.noise.materialize(&fam)?;
            let proposal = match &v.sampler {
                SamplerSpec::Uniform => Proposal::Iid { d_prime: (*d_measure).clone() },
                SamplerSpec::Iid(spec) => Proposal::Iid { d_prime: spec.build()? },
                SamplerSpec::Leverage => Proposal::Iid { d_prime: leverage_measure(&fam)? },
                SamplerSpec::Bss => Proposal::Bss(BssConfig::new(cfg.epsilon).with_c0(cfg.c0)),
            };
            Ok(Setup::Query(QuerySetup { fam, truth, truth_values, noise, proposal }))
        }
        Mode::Active => {
            let built = v.family.build(cfg.degree)?;
            let true_d = reference_measure(v, built.table_measure)?;
            let fam = orthonormalize(&built.basis, Arc::new(true_d.clone())).context("orthonormalizing the family")?;
            let truth = truth_coefficients(fam.dimension(), cfg.seed);
            let truth_values = fam.values_on_support(&truth)?;
            let noise = v.noise.materialize(&fam)?;
            let k = measure_condition_number(&built.basis, &true_d)?;
            let inner = match v.sampler {
                SamplerSpec::Leverage => InnerProcedure::Leverage { c1: cfg.c1 },
                _ => InnerProcedure::Bss { c0: cfg.c0 },
            };
            let mut config = ActiveConfig::new(cfg.epsilon, k).with_inner(inner);
            config.c = cfg.c1;
            config.m0_override = cfg.m0;
            Ok(Setup::Active(ActiveSetup { basis: built.basis, true_d, truth_values, noise, config }))
        }
        Mode::Sparseft => {
            let density = fourier_weight_density(cfg.k, 2001)?;
            let sigma = match v.noise {
                NoiseSpec::Gauss(s) => s,
                _ => 0.0,
            };
            Ok(Setup::Sparse(SparseSetup {
                density,
                norm_measure: Measure::uniform_grid(2001)?,
                samples: cfg.samples.unwrap_or_else(|| default_sparseft_samples(cfg.k, cfg.bandlimit, cfg.epsilon)),
                sigma,
            }))
        }
    }
}

fn query_trial(s: &QuerySetup, cfg: &ExperimentConfig, rng: &TrialRng) -> Result<(usize, f64, usize)> {
    let fam = &s.fam;
    let plan = match &s.proposal {
        Proposal::Iid { d_prime } => Some(match cfg.labels {
            Some(m) => IidPlan::with_m(fam, d_prime.clone(), cfg.epsilon, m)?,
            None => IidPlan::auto(fam, d_prime.clone(), cfg.epsilon, cfg.c1)?,
        }),
        Proposal::Bss(_) => None,
    };
    let exec = first_good_execution(fam, MAX_GOOD_ATTEMPTS, |attempt| {
        let mut r = rng.split(attempt as u64);
        let sample = match (&s.proposal, &plan) {
            (Proposal::Bss(bss), _) => run_bss_procedure(fam, bss, &mut r)?.sample,
            (_, Some(plan)) => plan.run(fam, &mut r)?,
            (Proposal::Iid { .. }, None) => unreachable!("plan is built for i.i.d. proposals"),
        };
        Ok((sample, ()))
    })?;
    let mut noise_rng = rng.split(NOISE_CHILD);
    let measure = fam.measure();
    let labels = exec
        .sample
        .points
        .iter()
        .map(|&x| {
            let i = measure.index_of(x).expect("samples lie on the support of D");
            noisy_label(s.truth_values[i], i, &s.noise, &mut noise_rng)
        })
        .collect::<Vec<_>>();
    let sol = solve_erm(&exec.design, &labels, Solver::Direct)?;
    Ok((labels.len(), sol.coeffs.distance_sqr(&s.truth), exec.retries))
}

fn active_trial(s: &ActiveSetup, rng: &TrialRng) -> Result<(usize, usize, f64, usize)> {
    let mut noise_rng = rng.split(NOISE_CHILD);
    let true_d = &s.true_d;
    let mut oracle = LabelOracle::new(|x: f64| {
        let i = true_d.index_of(x).expect("unlabeled draws lie on the support of D");
        noisy_label(s.truth_values[i], i, &s.noise, &mut noise_rng)
    });
    let mut source = true_d.clone();
    let out = run_active(&s.basis, &mut source, &mut oracle, &s.config, &mut rng.clone())?;
    let mut err = 0.0;
    for ((&x, &p), f) in true_d.support().iter().zip(true_d.masses()).zip(&s.truth_values) {
        err += p * (out.predict(x)? - f).norm_sqr();
    }
    Ok((out.report.labels, out.report.unlabeled, err, out.report.retries))
}

fn sparse_trial(s: &SparseSetup, cfg: &ExperimentConfig, rng: &TrialRng) -> Result<(usize, f64)> {
    let mut r = rng.clone();
    let freqs = random_frequencies(cfg.k, cfg.bandlimit, &mut r);
    let amps = (0..cfg.k).map(|_| C64::new(r.gaussian(), r.gaussian()) / 2f64.sqrt()).collect();
    let truth = SparseFourierSignal::new(freqs, amps, cfg.bandlimit)?;
    let sample = s.density.draw_sample(s.samples, &mut r);
    let labels: Vec<C64> =
        sample.points.iter().map(|&x| truth.eval(x) + C64::new(s.sigma * r.gaussian(), 0.0)).collect();
    let problem = RecoveryProblem::new(&sample, &labels, RecoveryConfig::new(cfg.k, cfg.bandlimit, cfg.net))?;
    let out = problem.finish(problem.best_in(0..problem.outer_len()))?;
    Ok((sample.len(), out.signal.distance_sqr(&truth, &s.norm_measure)))
}

fn run_trial(setup: &Setup, v: &Validated, trial: usize) -> TrialRecord {
    let cfg = &v.config;
    let start = Instant::now();
    let rng = TrialRng::with_stream(cfg.seed, trial as u64);
    let result: Result<TrialRecord> = (|| {
        let base = TrialRecord {
            trial,
            labels: 0,
            unlabeled: None,
            err_sq: 0.0,
            noise_sq: 0.0,
            retries: 0,
            wall_ms: 0.0,
            error: None,
        };
        Ok(match setup {
            Setup::Query(s) => {
                let (labels, err_sq, retries) = query_trial(s, cfg, &rng)?;
                TrialRecord { labels, err_sq, retries, noise_sq: s.noise.noise_sq(s.fam.measure()), ..base }
            }
            Setup::Active(s) => {
                let (labels, unlabeled, err_sq, retries) = active_trial(s, &rng)?;
                TrialRecord {
                    labels,
                    unlabeled: Some(unlabeled),
                    err_sq,
                    retries,
                    noise_sq: s.noise.noise_sq(&s.true_d),
                    ..base
                }
            }
            Setup::Sparse(s) => {
                let (labels, err_sq) = sparse_trial(s, cfg, &rng)?;
                TrialRecord { labels, err_sq, noise_sq: s.sigma * s.sigma, ..base }
            }
        })
    })();
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(r) => TrialRecord { wall_ms, ..r },
        Err(e) => TrialRecord::failed(trial, e, wall_ms),
    }
}

/// Runs every trial on a pool of `jobs` workers (0 = one per core). Records
/// come back ordered by trial id.
pub fn run_experiment(v: &Validated, jobs: usize) -> Result<ExperimentOutput> {
    let setup = prepare(v)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let records: Vec<TrialRecord> =
        pool.install(|| (0..v.config.trials).into_par_iter().map(|t| run_trial(&setup, v, t)).collect());
    let summary = Summary::from_records(&records, v.config.epsilon);
    Ok(ExperimentOutput { config: v.config.clone(), records, summary })
}
