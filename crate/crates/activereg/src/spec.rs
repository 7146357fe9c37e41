//! String specs for families, measures, samplers and noise, as accepted on
//! the command line and in config files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use activereg_core::family::OrthonormalFamily;
use activereg_core::{BasisKind, BasisSpec, Measure, C64};
use thiserror::Error;

use crate::formats;

#[derive(Debug, Error, PartialEq)]
#[error("invalid {what} spec `{input}`: {reason}")]
pub struct SpecError {
    pub what: &'static str,
    pub input: String,
    pub reason: String,
}

fn spec_err(what: &'static str, input: &str, reason: impl Into<String>) -> SpecError {
    SpecError { what, input: input.to_string(), reason: reason.into() }
}

fn parse_num<T: FromStr>(what: &'static str, input: &str, field: &str) -> Result<T, SpecError> {
    field.trim().parse().map_err(|_| spec_err(what, input, format!("`{field}` is not a valid number")))
}

/// `legendre`, `chebyshev`, `monomial` (all sized by `--degree`),
/// `fourier:<f1,f2,..>`, `indicator:<n>` or `custom:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Legendre,
    Chebyshev,
    Monomial,
    Fourier(Vec<f64>),
    Indicator(usize),
    Custom(PathBuf),
}

impl FromStr for FamilySpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("legendre", None) => Ok(FamilySpec::Legendre),
            ("chebyshev", None) => Ok(FamilySpec::Chebyshev),
            ("monomial", None) => Ok(FamilySpec::Monomial),
            ("fourier", Some(list)) => {
                let freqs = list.split(',').map(|f| parse_num("family", s, f)).collect::<Result<Vec<f64>, _>>()?;
                Ok(FamilySpec::Fourier(freqs))
            }
            ("indicator", Some(n)) => Ok(FamilySpec::Indicator(parse_num("family", s, n)?)),
            ("custom", Some(path)) if !path.is_empty() => Ok(FamilySpec::Custom(PathBuf::from(path))),
            _ => Err(spec_err(
                "family",
                s,
                "expected legendre, chebyshev, monomial, fourier:<f1,..>, indicator:<n> or custom:<path>",
            )),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Legendre => write!(f, "legendre"),
            FamilySpec::Chebyshev => write!(f, "chebyshev"),
            FamilySpec::Monomial => write!(f, "monomial"),
            FamilySpec::Fourier(fs) => {
                let list: Vec<String> = fs.iter().map(|x| x.to_string()).collect();
                write!(f, "fourier:{}", list.join(","))
            }
            FamilySpec::Indicator(n) => write!(f, "indicator:{n}"),
            FamilySpec::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

/// A basis together with the measure a custom table carries, if any.
#[derive(Debug, Clone)]
pub struct BuiltFamily {
    pub basis: BasisSpec,
    pub table_measure: Option<Measure>,
}

impl FamilySpec {
    pub fn build(&self, degree: usize) -> anyhow::Result<BuiltFamily> {
        let basis = match self {
            FamilySpec::Legendre => BasisSpec::legendre(degree),
            FamilySpec::Chebyshev => BasisSpec::chebyshev(degree),
            FamilySpec::Monomial => BasisSpec::monomial(degree),
            FamilySpec::Fourier(fs) => BasisSpec::new(BasisKind::FourierGrid(fs.clone()))?,
            FamilySpec::Indicator(n) => BasisSpec::new(BasisKind::Indicator(*n))?,
            FamilySpec::Custom(path) => {
                let (measure, table) = formats::read_custom_basis(path)?;
                return Ok(BuiltFamily {
                    basis: BasisSpec::new(BasisKind::Custom(table))?,
                    table_measure: Some(measure),
                });
            }
        };
        Ok(BuiltFamily { basis, table_measure: None })
    }
}

/// `uniform-grid:<n>`, `chebyshev-grid:<n>` or `file:<path>` (CSV `x,p`).
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    UniformGrid(usize),
    ChebyshevGrid(usize),
    File(PathBuf),
}

impl FromStr for MeasureSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        match s.split_once(':') {
            Some(("uniform-grid", n)) => Ok(MeasureSpec::UniformGrid(parse_num("measure", s, n)?)),
            Some(("chebyshev-grid", n)) => Ok(MeasureSpec::ChebyshevGrid(parse_num("measure", s, n)?)),
            Some(("file", p)) if !p.is_empty() => Ok(MeasureSpec::File(PathBuf::from(p))),
            _ => Err(spec_err("measure", s, "expected uniform-grid:<n>, chebyshev-grid:<n> or file:<path>")),
        }
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureSpec::UniformGrid(n) => write!(f, "uniform-grid:{n}"),
            MeasureSpec::ChebyshevGrid(n) => write!(f, "chebyshev-grid:{n}"),
            MeasureSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl MeasureSpec {
    pub fn build(&self) -> anyhow::Result<Measure> {
        Ok(match self {
            MeasureSpec::UniformGrid(n) => Measure::uniform_grid(*n)?,
            MeasureSpec::ChebyshevGrid(n) => Measure::chebyshev_grid(*n)?,
            MeasureSpec::File(path) => formats::read_measure(path)?,
        })
    }
}

/// `uniform` (`D' = D`), `iid:<measure>`, `leverage` (`D' = D_F`) or `bss`.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerSpec {
    Uniform,
    Iid(MeasureSpec),
    Leverage,
    Bss,
}

impl FromStr for SamplerSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        match s.split_once(':') {
            None if s == "uniform" => Ok(SamplerSpec::Uniform),
            None if s == "leverage" => Ok(SamplerSpec::Leverage),
            None if s == "bss" => Ok(SamplerSpec::Bss),
            Some(("iid", m)) => Ok(SamplerSpec::Iid(m.parse()?)),
            _ => Err(spec_err("sampler", s, "expected uniform, iid:<measure>, leverage or bss")),
        }
    }
}

impl fmt::Display for SamplerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerSpec::Uniform => write!(f, "uniform"),
            SamplerSpec::Iid(m) => write!(f, "iid:{m}"),
            SamplerSpec::Leverage => write!(f, "leverage"),
            SamplerSpec::Bss => write!(f, "bss"),
        }
    }
}

/// Label noise `g`.
///
/// * `zero`
/// * `gauss:<σ>`: fresh `σ·N(0,1)` on every label.
/// * `bump[:<scale>]`: the indicator of the highest-leverage point with its
///   projection onto the family removed, scaled to `‖g‖_D = scale`.
/// * `sinusoid[:<scale>[:<freq>]]`: `sin(2π·freq·x)` (default `freq = d`),
///   projected off the family and scaled the same way.
/// * `file:<path>`: a CSV table `x,g` covering the support of `D`.
///
/// The deterministic variants are tabulated once per experiment, before any
/// point is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Zero,
    Gauss(f64),
    Bump(f64),
    Sinusoid { scale: f64, freq: Option<f64> },
    File(PathBuf),
}

impl FromStr for NoiseSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        let body = s.strip_prefix("adversarial:").unwrap_or(s);
        let mut parts = body.splitn(3, ':');
        let head = parts.next().unwrap_or_default();
        let a = parts.next();
        let b = parts.next();
        let positive = |field: &str| -> Result<f64, SpecError> {
            let v: f64 = parse_num("noise", s, field)?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(spec_err("noise", s, "scale must be finite and nonnegative"))
            }
        };
        match (head, a, b) {
            ("zero", None, None) => Ok(NoiseSpec::Zero),
            ("gauss", Some(sigma), None) => Ok(NoiseSpec::Gauss(positive(sigma)?)),
            ("bump", None, None) => Ok(NoiseSpec::Bump(1.0)),
            ("bump", Some(scale), None) => Ok(NoiseSpec::Bump(positive(scale)?)),
            ("sinusoid", None, None) => Ok(NoiseSpec::Sinusoid { scale: 1.0, freq: None }),
            ("sinusoid", Some(scale), freq) => Ok(NoiseSpec::Sinusoid {
                scale: positive(scale)?,
                freq: freq.map(|f| parse_num("noise", s, f)).transpose()?,
            }),
            ("file", Some(path), None) if !path.is_empty() => Ok(NoiseSpec::File(PathBuf::from(path))),
            ("file", Some(path), Some(rest)) => Ok(NoiseSpec::File(PathBuf::from(format!("{path}:{rest}")))),
            _ => Err(spec_err(
                "noise",
                s,
                "expected zero, gauss:<sigma>, bump[:<scale>], sinusoid[:<scale>[:<freq>]] or file:<path>",
            )),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Zero => write!(f, "zero"),
            NoiseSpec::Gauss(s) => write!(f, "gauss:{s}"),
            NoiseSpec::Bump(s) => write!(f, "bump:{s}"),
            NoiseSpec::Sinusoid { scale, freq: None } => write!(f, "sinusoid:{scale}"),
            NoiseSpec::Sinusoid { scale, freq: Some(fr) } => write!(f, "sinusoid:{scale}:{fr}"),
            NoiseSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Noise ready to be applied to labels.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Zero,
    Gauss(f64),
    /// `g` on the support of `D`, by support index.
    Table(Arc<Vec<f64>>),
}

impl NoiseModel {
    /// `E‖g‖_D²`.
    pub fn noise_sq(&self, d: &Measure) -> f64 {
        match self {
            NoiseModel::Zero => 0.0,
            NoiseModel::Gauss(s) => s * s,
            NoiseModel::Table(g) => d.masses().iter().zip(g.iter()).map(|(p, g)| p * g * g).sum(),
        }
    }
}

impl NoiseSpec {
    /// Tabulates the noise against `fam` (orthonormal under `D`).
    pub fn materialize(&self, fam: &OrthonormalFamily) -> anyhow::Result<NoiseModel> {
        let d = fam.measure();
        let project_off = |h: Vec<f64>, scale: f64| -> anyhow::Result<NoiseModel> {
            let values: Vec<C64> = h.iter().map(|&v| C64::new(v, 0.0)).collect();
            let coeffs = fam.project(&values)?;
            let in_family = fam.values_on_support(&coeffs)?;
            let g: Vec<f64> = h.iter().zip(&in_family).map(|(a, b)| a - b.re).collect();
            let norm = d.masses().iter().zip(&g).map(|(p, g)| p * g * g).sum::<f64>().sqrt();
            anyhow::ensure!(norm > 1e-12, "noise shape lies inside the family; nothing is left after projection");
            Ok(NoiseModel::Table(Arc::new(g.iter().map(|g| g * scale / norm).collect())))
        };
        match self {
            NoiseSpec::Zero => Ok(NoiseModel::Zero),
            NoiseSpec::Gauss(s) => Ok(NoiseModel::Gauss(*s)),
            NoiseSpec::Bump(scale) => {
                let peak = (0..d.len())
                    .max_by(|&a, &b| fam.leverage_at_index(a).total_cmp(&fam.leverage_at_index(b)))
                    .ok_or_else(|| anyhow::anyhow!("empty measure"))?;
                let h = (0..d.len()).map(|i| if i == peak { 1.0 } else { 0.0 }).collect();
                project_off(h, *scale)
            }
            NoiseSpec::Sinusoid { scale, freq } => {
                let freq = freq.unwrap_or(fam.dimension() as f64);
                let h = d.support().iter().map(|&x| (std::f64::consts::TAU * freq * x).sin()).collect();
                project_off(h, *scale)
            }
            NoiseSpec::File(path) => {
                let table = formats::read_noise_table(path, d)?;
                Ok(NoiseModel::Table(Arc::new(table)))
            }
        }
    }
}
