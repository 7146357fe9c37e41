//! Finite-support probability measures and weighted sample sets.
//!
//! Continuous distributions on `[-1, 1]` are realized as grids whose masses
//! are exact, so every expectation below is a finite sum.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::family::{CoefficientVector, OrthonormalFamily};
use crate::math;
use crate::rng::TrialRng;
use crate::C64;

/// Tolerance on `Σ mass = 1`.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A probability distribution over a strictly increasing list of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    support: Vec<f64>,
    mass: Vec<f64>,
    cdf: Vec<f64>,
    label: String,
}

impl Measure {
    pub fn new(support: Vec<f64>, mass: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptyInput("measure support"));
        }
        if support.len() != mass.len() {
            return Err(Error::InvalidMeasure(format!("{} support points but {} masses", support.len(), mass.len())));
        }
        if let Some(x) = support.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite support point {x}")));
        }
        if let Some(w) = support.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMeasure(format!("support must be strictly increasing ({} then {})", w[0], w[1])));
        }
        if let Some(p) = mass.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("mass {p} is not a nonnegative real")));
        }
        let mut cdf = Vec::with_capacity(mass.len());
        let mut acc = 0.0;
        for &p in &mass {
            acc += p;
            cdf.push(acc);
        }
        if (acc - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("masses sum to {acc}, not 1")));
        }
        Ok(Self { support, mass, cdf, label: label.into() })
    }

    /// Normalizes nonnegative `weights` into a measure on `support`.
    pub fn from_weights(support: Vec<f64>, weights: &[f64], label: impl Into<String>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        let mass = weights.iter().map(|w| w / total).collect();
        Self::new(support, mass, label)
    }

    /// `n` equally spaced points on `[-1, 1]` (endpoints included), equal mass.
    pub fn uniform_grid(n: usize) -> Result<Self> {
        let support = grid_points(n)?;
        let mass = alloc::vec![1.0 / n as f64; n];
        Self::new(support, mass, format!("uniform-grid:{n}"))
    }

    /// The points of [`Measure::uniform_grid`] carrying the arcsine
    /// (Chebyshev) law `1/(π√(1-x²))`, integrated over each point's cell so
    /// the endpoint masses stay finite.
    pub fn chebyshev_grid(n: usize) -> Result<Self> {
        let support = grid_points(n)?;
        let mass = if n == 1 {
            alloc::vec![1.0]
        } else {
            let half = 1.0 / (n - 1) as f64;
            support
                .iter()
                .map(|&x| {
                    let a = (x - half).max(-1.0);
                    let b = (x + half).min(1.0);
                    (math::asin(b) - math::asin(a)) / math::PI
                })
                .collect()
        };
        Self::new(support, mass, format!("chebyshev-grid:{n}"))
    }

    pub fn point_mass(x: f64) -> Result<Self> {
        Self::new(alloc::vec![x], alloc::vec![1.0], format!("point:{x}"))
    }

    /// Equal mass on each of a set of distinct points (sorted here).
    pub fn uniform_over(points: &[f64], label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("uniform_over points"));
        }
        let mut support = points.to_vec();
        support.sort_by(f64::total_cmp);
        let n = support.len();
        Self::new(support, alloc::vec![1.0 / n as f64; n], label)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.support.binary_search_by(|p| p.total_cmp(&x)).ok()
    }

    /// `D(x)`, zero off the support.
    pub fn mass_at(&self, x: f64) -> f64 {
        self.index_of(x).map_or(0.0, |i| self.mass[i])
    }

    /// Inverse-CDF draw of a support index.
    pub fn sample_index(&self, rng: &mut TrialRng) -> usize {
        let total = *self.cdf.last().expect("measure is nonempty");
        let target = rng.uniform() * total;
        let i = self.cdf.partition_point(|&c| c <= target);
        // Rounding can push the target onto the last cumulative value.
        let mut i = i.min(self.len() - 1);
        while self.mass[i] == 0.0 && i > 0 {
            i -= 1;
        }
        i
    }

    pub fn sample(&self, rng: &mut TrialRng) -> f64 {
        self.support[self.sample_index(rng)]
    }

    /// `E_{x∼D}[f(x)]` as an exact finite sum; `f` receives `(index, x)`.
    pub fn expectation(&self, mut f: impl FnMut(usize, f64) -> f64) -> f64 {
        self.support
            .iter()
            .zip(&self.mass)
            .enumerate()
            .filter(|(_, (_, &p))| p > 0.0)
            .map(|(i, (&x, &p))| p * f(i, x))
            .sum()
    }

    /// Total-variation distance `½ Σ |D(x) − D'(x)|` over the union of supports.
    pub fn total_variation(&self, other: &Measure) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.len() || j < other.len() {
            match (self.support.get(i), other.support.get(j)) {
                (Some(a), Some(b)) if a == b => {
                    acc += (self.mass[i] - other.mass[j]).abs();
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a < b => {
                    acc += self.mass[i];
                    i += 1;
                }
                (Some(_), None) => {
                    acc += self.mass[i];
                    i += 1;
                }
                _ => {
                    acc += other.mass[j];
                    j += 1;
                }
            }
        }
        0.5 * acc
    }
}

fn grid_points(n: usize) -> Result<Vec<f64>> {
    match n {
        0 => Err(Error::EmptyInput("grid size")),
        1 => Ok(alloc::vec![0.0]),
        _ => {
            let denom = (n - 1) as f64;
            Ok((0..n).map(|i| (2.0 * i as f64 - denom) / denom).collect())
        }
    }
}

/// Draws an index with probability proportional to nonnegative `weights`.
///
/// Returns `None` when all weights vanish.
pub fn sample_weighted(weights: &[f64], rng: &mut TrialRng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if acc > target {
                return Some(i);
            }
        }
    }
    last_positive
}

/// `D(x)/D'(x)`, the importance weight that re-weights a draw from `D'`.
pub fn density_ratio(d: &Measure, d_prime: &Measure, x: f64) -> Result<f64> {
    let num = d.mass_at(x);
    let den = d_prime.mass_at(x);
    if den > 0.0 {
        Ok(num / den)
    } else if num > 0.0 {
        Err(Error::UnsupportedPoint(x))
    } else {
        Ok(0.0)
    }
}

/// The uniform distribution over a multiset of points; repeats merge with
/// summed mass.
pub fn empirical_uniform(points: &[f64]) -> Result<Measure> {
    if points.is_empty() {
        return Err(Error::EmptyInput("empirical_uniform points"));
    }
    if let Some(x) = points.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidMeasure(format!("non-finite point {x}")));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let unit = 1.0 / points.len() as f64;
    let mut support: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for x in sorted {
        match support.last() {
            Some(&last) if last == x => *counts.last_mut().unwrap() += 1,
            _ => {
                support.push(x);
                counts.push(1);
            }
        }
    }
    let mass = counts.iter().map(|&c| c as f64 * unit).collect();
    Measure::new(support, mass, format!("empirical:{}", points.len()))
}

/// The weighted sample `(S, w)` of a sampling procedure together with the
/// coefficients `α_i` that produced the weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedSampleSet {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub alphas: Vec<f64>,
    pub source_seed: u64,
}

impl WeightedSampleSet {
    pub fn new(source_seed: u64) -> Self {
        Self { source_seed, ..Self::default() }
    }

    pub fn with_capacity(source_seed: u64, m: usize) -> Self {
        Self {
            points: Vec::with_capacity(m),
            weights: Vec::with_capacity(m),
            alphas: Vec::with_capacity(m),
            source_seed,
        }
    }

    pub fn push(&mut self, x: f64, weight: f64, alpha: f64) {
        self.points.push(x);
        self.weights.push(weight);
        self.alphas.push(alpha);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alphas.iter().sum()
    }

    /// Structural checks: equal lengths and finite nonnegative weights.
    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.weights.len() || self.points.len() != self.alphas.len() {
            return Err(Error::InvalidParameter("sample set columns have different lengths".to_string()));
        }
        if self.weights.iter().chain(&self.alphas).any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("weights and coefficients must be finite and nonnegative".to_string()));
        }
        Ok(())
    }
}

/// `‖f‖²_{S,w} = Σ_j w_j |f(x_j)|²` for `f` given by orthonormal coefficients.
pub fn empirical_norm(fam: &OrthonormalFamily, coeffs: &CoefficientVector, sample: &WeightedSampleSet) -> Result<f64> {
    let mut acc = 0.0;
    for (&x, &w) in sample.points.iter().zip(&sample.weights) {
        acc += w * fam.evaluate(coeffs, x)?.norm_sqr();
    }
    Ok(acc)
}

/// `‖f‖²_{S,w}` from the values of `f` at the sample points.
pub fn empirical_norm_values(values: &[C64], sample: &WeightedSampleSet) -> f64 {
    values.iter().zip(&sample.weights).map(|(v, w)| w * v.norm_sqr()).sum()
}
