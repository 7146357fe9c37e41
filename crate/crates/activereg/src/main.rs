use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use activereg::config::{ExperimentConfig, Mode, Validated};
use activereg::experiment::{run_experiment, ExperimentOutput};
use activereg::formats;
use activereg::parallel_best;
use activereg::spec::{FamilySpec, MeasureSpec, NoiseSpec, SamplerSpec};
use activereg_core::erm::{build_design, is_good};
use activereg_core::sampler_bss::{run_bss_procedure, BssConfig};
use activereg_core::sampler_iid::{leverage_measure, IidPlan, DEFAULT_C1};
use activereg_core::sparseft::{
    fourier_weight_density, random_frequencies, RecoveryConfig, RecoveryProblem, SparseFourierSignal,
};
use activereg_core::{orthonormalize, Measure, TrialRng, C64};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

/// Active linear regression experiments.
///
/// Without a subcommand, runs seeded Monte-Carlo trials and writes one CSV
/// row per trial plus a JSON summary.
#[derive(Debug, Parser)]
#[command(name = "activereg", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Regression under an unknown distribution (unlabeled draws, then labels).
    Active(ActiveArgs),
    /// k-sparse Fourier tools.
    Sparseft {
        #[command(subcommand)]
        command: SparseCommand,
    },
    /// Export the leverage density of a family as CSV (x, density, mass).
    Weights(WeightsArgs),
    /// Run one sampler and export the weighted sample as CSV.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// legendre | chebyshev | monomial | fourier:<f1,..> | indicator:<n> | custom:<path>
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    /// uniform-grid:<n> | chebyshev-grid:<n> | file:<path>
    #[arg(long)]
    dist: Option<String>,
    /// uniform | iid:<measure> | leverage | bss
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// zero | gauss:<sigma> | bump[:<scale>] | sinusoid[:<scale>[:<freq>]] | file:<path>
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "ACTIVE_SAMPLER_SEED")]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// CSV destination; the summary goes next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// JSON config; its fields override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fixed label count for i.i.d. samplers.
    #[arg(long)]
    labels: Option<usize>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "F")]
    bandlimit: Option<f64>,
    #[arg(long)]
    net: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Add a wall-time column.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct ActiveArgs {
    #[arg(long, default_value = "legendre")]
    family: String,
    #[arg(long, default_value_t = 9)]
    degree: usize,
    #[arg(long, default_value = "uniform-grid:1001")]
    true_dist: String,
    #[arg(long, default_value = "gauss:1")]
    noise: String,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// bss | leverage
    #[arg(long, default_value = "bss")]
    sampler: String,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long, env = "ACTIVE_SAMPLER_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SparseCommand {
    /// Recover one random k-sparse signal by exhaustive net search.
    Recover(RecoverArgs),
    /// Export the importance density D_F as CSV (x, density, mass).
    Weights {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RecoverArgs {
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long = "F", default_value_t = 10.0)]
    bandlimit: f64,
    #[arg(long, default_value_t = 1e-2)]
    net: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Sample count (default from the k⁴ log³k + k² log²k log(F/ε) scaling).
    #[arg(long)]
    samples: Option<usize>,
    /// Truth frequencies (default: uniform in [-F, F]).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    freqs: Option<Vec<f64>>,
    /// zero | gauss:<sigma>
    #[arg(long, default_value = "zero")]
    noise: String,
    #[arg(long, env = "ACTIVE_SAMPLER_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    #[arg(long, default_value = "legendre")]
    family: String,
    #[arg(long, default_value_t = 9)]
    degree: usize,
    #[arg(long, default_value = "uniform-grid:1001")]
    dist: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long, default_value = "legendre")]
    family: String,
    #[arg(long, default_value_t = 9)]
    degree: usize,
    #[arg(long, default_value = "uniform-grid:1001")]
    dist: String,
    /// uniform | iid:<measure> | leverage | bss
    #[arg(long, default_value = "bss")]
    sampler: String,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long)]
    labels: Option<usize>,
    #[arg(long, default_value_t = activereg_core::sampler_bss::DEFAULT_C0)]
    c0: f64,
    #[arg(long, env = "ACTIVE_SAMPLER_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON-lines trace of every BSS round.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn config_from_flags(a: &RunArgs) -> Result<(Validated, usize)> {
    let mut cfg = ExperimentConfig::default();
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = a.$field.clone() { cfg.$field = v; } )* };
    }
    set!(family, degree, sampler, epsilon, noise, trials, seed, mode, c0, c1, k, bandlimit, net);
    cfg.dist = a.dist.clone().or(cfg.dist);
    cfg.out = a.out.clone().or(cfg.out);
    cfg.labels = a.labels.or(cfg.labels);
    cfg.m0 = a.m0.or(cfg.m0);
    cfg.samples = a.samples.or(cfg.samples);
    cfg.timing |= a.timing;
    let validated = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let cfg = cfg.overlay_json(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            cfg.validate_against(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?
        }
        None => cfg.validate()?,
    };
    Ok((validated, a.jobs))
}

fn emit(output: &ExperimentOutput) -> Result<()> {
    let summary = serde_json::to_string_pretty(&output.summary_json())?;
    match &output.config.out {
        Some(path) => {
            output.write_csv(writer(Some(path))?)?;
            std::fs::write(path.with_extension("json"), summary + "\n")?;
        }
        None => {
            output.write_csv(writer(None)?)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn run_active_cmd(a: ActiveArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        mode: Mode::Active,
        family: a.family,
        degree: a.degree,
        dist: Some(a.true_dist),
        sampler: a.sampler,
        epsilon: a.epsilon,
        noise: a.noise,
        trials: a.trials,
        seed: a.seed,
        out: a.out,
        m0: a.m0,
        ..ExperimentConfig::default()
    };
    let output = run_experiment(&cfg.validate()?, a.jobs)?;
    if let Some(path) = &output.config.out {
        output.write_csv(writer(Some(path))?)?;
    }
    let s = &output.summary;
    let noise_sq = output.records.iter().find(|r| r.ok()).map_or(0.0, |r| r.noise_sq);
    let report = serde_json::json!({
        "m0": s.unlabeled.as_ref().map(|q| q.mean),
        "labels": s.labels,
        "retries": s.mean_retries,
        "err_sq": s.err_sq,
        "bound": output.config.epsilon * noise_sq,
        "failures": s.failures,
        "seed": output.config.seed,
        "rng": activereg_core::RNG_ALGORITHM,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    if s.failures > 0 {
        let first = output.records.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        eprintln!("{} trial(s) failed; first error: {first}", s.failures);
    }
    Ok(())
}

fn run_recover(a: RecoverArgs) -> Result<()> {
    let noise: NoiseSpec = a.noise.parse()?;
    let sigma = match noise {
        NoiseSpec::Zero => 0.0,
        NoiseSpec::Gauss(s) => s,
        _ => bail!("sparseft recover supports zero or gauss noise"),
    };
    let mut rng = TrialRng::new(a.seed);
    let freqs = a.freqs.unwrap_or_else(|| random_frequencies(a.k, a.bandlimit, &mut rng));
    let amps = (0..freqs.len()).map(|_| C64::new(rng.gaussian(), rng.gaussian()) / 2f64.sqrt()).collect();
    let truth = SparseFourierSignal::new(freqs, amps, a.bandlimit)?;
    let density = fourier_weight_density(truth.k(), 2001)?;
    let m = a.samples.unwrap_or_else(|| activereg::experiment::default_sparseft_samples(a.k, a.bandlimit, a.epsilon));
    let sample = density.draw_sample(m, &mut rng);
    let labels: Vec<C64> =
        sample.points.iter().map(|&x| truth.eval(x) + C64::new(sigma * rng.gaussian(), 0.0)).collect();
    let problem = RecoveryProblem::new(&sample, &labels, RecoveryConfig::new(a.k, a.bandlimit, a.net))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let best = pool.install(|| parallel_best(&problem, 64));
    let out = problem.finish(best)?;
    let d = Measure::uniform_grid(2001)?;
    let report = serde_json::json!({
        "truth": { "freqs": truth.freqs, "amps": truth.amps.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>() },
        "recovered": { "freqs": out.signal.freqs, "amps": out.signal.amps.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>() },
        "samples": m,
        "candidates": out.candidates.to_string(),
        "residual_sq": out.residual_sqr,
        "err_sq": out.signal.distance_sqr(&truth, &d),
        "signal_sq": truth.norm_sqr(&d),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run_sparse_weights(k: usize, grid: usize, out: Option<PathBuf>) -> Result<()> {
    let dens = fourier_weight_density(k, grid)?;
    let rows = dens.grid.support().iter().zip(dens.grid.masses()).map(|(&x, &p)| (x, dens.density(x), p));
    formats::write_density(writer(out.as_deref())?, rows)
}

fn run_weights(a: WeightsArgs) -> Result<()> {
    let family: FamilySpec = a.family.parse()?;
    let built = family.build(a.degree)?;
    let measure = match built.table_measure {
        Some(m) => m,
        None => a.dist.parse::<MeasureSpec>()?.build()?,
    };
    let fam = orthonormalize(&built.basis, Arc::new(measure))?;
    let df = leverage_measure(&fam)?;
    let d = fam.dimension() as f64;
    let rows =
        df.support().iter().zip(df.masses()).enumerate().map(|(i, (&x, &p))| (x, fam.leverage_at_index(i) / d, p));
    formats::write_density(writer(a.out.as_deref())?, rows)
}

fn run_sample(a: SampleArgs) -> Result<()> {
    let family: FamilySpec = a.family.parse()?;
    let built = family.build(a.degree)?;
    let measure = match built.table_measure {
        Some(m) => m,
        None => a.dist.parse::<MeasureSpec>()?.build()?,
    };
    let fam = orthonormalize(&built.basis, Arc::new(measure))?;
    let mut rng = TrialRng::new(a.seed);
    let sampler: SamplerSpec = a.sampler.parse()?;
    let (sample, trace) = match &sampler {
        SamplerSpec::Bss => {
            let mut cfg = BssConfig::new(a.epsilon).with_c0(a.c0);
            if a.trace.is_some() {
                cfg = cfg.recording_trace();
            }
            let run = run_bss_procedure(&fam, &cfg, &mut rng)?;
            (run.sample, run.trace)
        }
        other => {
            let d_prime = match other {
                SamplerSpec::Uniform => fam.measure().clone(),
                SamplerSpec::Iid(spec) => spec.build()?,
                _ => leverage_measure(&fam)?,
            };
            let plan = match a.labels {
                Some(m) => IidPlan::with_m(&fam, d_prime, a.epsilon, m)?,
                None => IidPlan::auto(&fam, d_prime, a.epsilon, DEFAULT_C1)?,
            };
            (plan.run(&fam, &mut rng)?, Vec::new())
        }
    };
    if let Some(path) = &a.trace {
        if trace.is_empty() {
            bail!("--trace is only available for the bss sampler");
        }
        formats::write_trace(writer(Some(path))?, &trace)?;
    }
    let dm = build_design(&fam, &sample)?;
    let report = serde_json::json!({
        "labels": sample.len(),
        "good": is_good(&dm),
        "lambda_min": dm.lambda_min(),
        "lambda_max": dm.lambda_max(),
        "alpha_sum": sample.alpha_sum(),
    });
    match &a.out {
        Some(p) => formats::write_weights(writer(Some(p))?, &sample)?,
        None => formats::write_weights(writer(None)?, &sample)?,
    }
    eprintln!("{report}");
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        None => {
            let (validated, jobs) = config_from_flags(&cli.run)?;
            let output = run_experiment(&validated, jobs)?;
            emit(&output)
        }
        Some(Command::Active(a)) => run_active_cmd(a),
        Some(Command::Sparseft { command: SparseCommand::Recover(a) }) => run_recover(a),
        Some(Command::Sparseft { command: SparseCommand::Weights { k, grid, out } }) => {
            run_sparse_weights(k, grid, out)
        }
        Some(Command::Weights(a)) => run_weights(a),
        Some(Command::Sample(a)) => run_sample(a),
    }
}
