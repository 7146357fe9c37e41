//! Continuous `k`-Fourier-sparse signals `f(x) = Σ_j v_j e^{2πi f_j x}` on
//! `[−1, 1]`: the explicit importance density `D_F`, pointwise leverage for a
//! fixed frequency tuple, and net-search recovery for `k ≤ 2`.
//!
//! The density is
//!
//! ```text
//! D_F(x) = c / ((1 − |x|)·ln k)   for |x| ≤ knee = 1 − 1/(k³ ln² k)
//! D_F(x) = c · k³ · ln k           for knee < |x| ≤ 1
//! ```
//!
//! which is continuous at the knee. For `k = 1` the shape of `k = 2` is used,
//! since `ln 1 = 0`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::erm::least_squares;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, CMatrix};
use crate::math;
use crate::measure::{Measure, WeightedSampleSet};
use crate::rng::TrialRng;
use crate::C64;

/// Frequencies closer than this are merged in [`sup_ratio`].
pub const MERGE_TOLERANCE: f64 = 1e-9;
pub const MIN_GRID_SIZE: usize = 1000;
pub const DEFAULT_CANDIDATE_CAP: u128 = 10_000_000;

/// `Σ_j v_j e^{2πi f_j x}` with every `|f_j| ≤ F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFourierSignal {
    pub freqs: Vec<f64>,
    pub amps: Vec<C64>,
    pub bandlimit: f64,
}

impl SparseFourierSignal {
    pub fn new(freqs: Vec<f64>, amps: Vec<C64>, bandlimit: f64) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::InvalidK(0));
        }
        if freqs.len() != amps.len() {
            return Err(Error::InvalidParameter(format!("{} frequencies but {} amplitudes", freqs.len(), amps.len())));
        }
        if !(bandlimit >= 0.0 && bandlimit.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandlimit {bandlimit} must be finite and nonnegative")));
        }
        if let Some(f) = freqs.iter().find(|f| !(f.abs() <= bandlimit)) {
            return Err(Error::InvalidParameter(format!("frequency {f} outside [-{bandlimit}, {bandlimit}]")));
        }
        Ok(Self { freqs, amps, bandlimit })
    }

    pub fn k(&self) -> usize {
        self.freqs.len()
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.freqs.iter().zip(&self.amps).map(|(&f, &v)| v * math::cis_tau(f, x)).sum()
    }

    /// `‖f‖_D²`.
    pub fn norm_sqr(&self, d: &Measure) -> f64 {
        d.expectation(|_, x| self.eval(x).norm_sqr())
    }

    /// `‖f − g‖_D²`.
    pub fn distance_sqr(&self, other: &SparseFourierSignal, d: &Measure) -> f64 {
        d.expectation(|_, x| (self.eval(x) - other.eval(x)).norm_sqr())
    }
}

/// The two-piece importance density, realized on a grid over `[−1, 1]`.
#[derive(Debug, Clone)]
pub struct FourierWeightDensity {
    pub k: usize,
    /// Normalizer of the continuous density.
    pub c: f64,
    pub knee: f64,
    pub grid: Measure,
    /// `k` whose shape is used (`max(k, 2)`).
    shape_k: f64,
}

impl FourierWeightDensity {
    /// Continuous density at `x`; zero outside `[−1, 1]`.
    pub fn density(&self, x: f64) -> f64 {
        density_shape(self.shape_k, self.c, x)
    }

    /// `1 − knee = 1/(k³ ln² k)`.
    pub fn knee_width(&self) -> f64 {
        knee_width(self.shape_k)
    }

    /// `m` i.i.d. draws from the grid with weights `D(x)/(m·D_F(x))` for
    /// `D` uniform on `[−1, 1]`, and `α = 1/m`.
    pub fn draw_sample(&self, m: usize, rng: &mut TrialRng) -> WeightedSampleSet {
        let mut sample = WeightedSampleSet::with_capacity(rng.seed(), m);
        for _ in 0..m {
            let x = self.grid.sample(rng);
            sample.push(x, 0.5 / (m as f64 * self.density(x)), 1.0 / m as f64);
        }
        sample
    }
}

fn knee_width(k: f64) -> f64 {
    let lk = math::ln(k);
    1.0 / (k * k * k * lk * lk)
}

fn density_shape(k: f64, c: f64, x: f64) -> f64 {
    let t = 1.0 - x.abs();
    if t < 0.0 {
        0.0
    } else if t >= knee_width(k) {
        c / (t * math::ln(k))
    } else {
        c * k * k * k * math::ln(k)
    }
}

/// Builds `D_F` for `k`, discretized on `grid_size` points (rounded up to an
/// odd count) that are geometric in `1 − |x|` so the `1/(1 − |x|)` profile
/// and the flat end caps are both resolved.
pub fn fourier_weight_density(k: usize, grid_size: usize) -> Result<FourierWeightDensity> {
    if k == 0 {
        return Err(Error::InvalidK(k));
    }
    if grid_size < MIN_GRID_SIZE {
        return Err(Error::InvalidParameter(format!("grid size {grid_size} below {MIN_GRID_SIZE}")));
    }
    let shape_k = k.max(2) as f64;
    let lk = math::ln(shape_k);
    let width = knee_width(shape_k);
    // ∫ = 2c[ln(1/width)/ln k + k³ ln k · width] = 2c[ln(1/width) + 1]/ln k.
    let c = lk / (2.0 * (math::ln(1.0 / width) + 1.0));
    let knee = 1.0 - width;

    let half = grid_size / 2;
    // Distances t = 1 − |x| from 1 down to t_min, then the endpoint t = 0.
    let t_min = width * 1e-2;
    let mut ts: Vec<f64> = (0..half).map(|i| math::exp(math::ln(t_min) * i as f64 / (half - 1) as f64)).collect();
    ts.push(0.0);
    let mut points: Vec<f64> = ts.iter().rev().map(|t| -(1.0 - t)).collect();
    points.pop(); // x = 0 appears once
    points.extend(ts.iter().map(|t| 1.0 - t));
    let n = points.len();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let lo = if i == 0 { points[0] } else { 0.5 * (points[i - 1] + points[i]) };
            let hi = if i + 1 == n { points[n - 1] } else { 0.5 * (points[i] + points[i + 1]) };
            density_shape(shape_k, c, points[i]) * (hi - lo)
        })
        .collect();
    let grid = Measure::from_weights(points, &weights, format!("fourier-weights[k={k}]"))?;
    Ok(FourierWeightDensity { k, c, knee, grid, shape_k })
}

/// `sup_v |f(x)|²/‖f‖_D²` for a fixed frequency tuple, factored once so it
/// can be evaluated at many `x`.
#[derive(Debug, Clone)]
pub struct SupRatio {
    freqs: Vec<f64>,
    factor: CMatrix,
}

impl SupRatio {
    pub fn new(freqs: &[f64], d: &Measure) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::InvalidK(0));
        }
        let freqs = merge_frequencies(freqs);
        let k = freqs.len();
        let mut gram = CMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let g: C64 =
                    d.support().iter().zip(d.masses()).map(|(&x, &p)| math::cis_tau(freqs[i] - freqs[j], x) * p).sum();
                gram[(i, j)] = g;
                gram[(j, i)] = g.conj();
            }
        }
        let factor = cholesky(&gram).map_err(Error::SingularGram)?;
        Ok(Self { freqs, factor })
    }

    /// Frequencies after merging near-duplicates.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// `e(x)^* G^{-1} e(x)` with `G_ij = E_D[e^{2πi(f_i − f_j)x}]`.
    pub fn at(&self, x: f64) -> f64 {
        let e: Vec<C64> = self.freqs.iter().map(|&f| math::cis_tau(f, x)).collect();
        let sol = cholesky_solve(&self.factor, &e);
        e.iter().zip(&sol).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

fn merge_frequencies(freqs: &[f64]) -> Vec<f64> {
    let mut sorted = freqs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|b, a| (*b - *a).abs() < MERGE_TOLERANCE);
    sorted
}

/// One-shot [`SupRatio::at`].
pub fn sup_ratio(freqs: &[f64], x: f64, d: &Measure) -> Result<f64> {
    Ok(SupRatio::new(freqs, d)?.at(x))
}

/// Uniform frequency tuple in `[−F, F]^k`.
pub fn random_frequencies(k: usize, bandlimit: f64, rng: &mut TrialRng) -> Vec<f64> {
    (0..k).map(|_| rng.uniform_range(-bandlimit, bandlimit)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightBoundReport {
    pub k: usize,
    /// `max` over draws and `x` of `sup_ratio(x)·(1 − |x|)/(k ln k)`.
    pub max_ratio_constant: f64,
    /// The same maximum per frequency draw.
    pub per_draw: Vec<f64>,
}

/// Empirical constant in `sup_ratio(x) ≲ k ln k/(1 − |x|)`; `d` is the norm
/// measure and `xs` the evaluation points (those with `|x| ≥ 1` are skipped).
pub fn verify_weight_bound(
    k: usize,
    bandlimit: f64,
    num_draws: usize,
    xs: &[f64],
    d: &Measure,
    rng: &mut TrialRng,
) -> Result<WeightBoundReport> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let scale = k as f64 * math::ln(k as f64);
    let mut per_draw = Vec::with_capacity(num_draws);
    for _ in 0..num_draws {
        let freqs = random_frequencies(k, bandlimit, rng);
        let sr = match SupRatio::new(&freqs, d) {
            Ok(sr) => sr,
            // A numerically singular draw has no finite amplitude sup on the
            // grid; it carries no information about the bound.
            Err(Error::SingularGram(_)) => continue,
            Err(e) => return Err(e),
        };
        let best = xs.iter().filter(|x| x.abs() < 1.0).map(|&x| sr.at(x) * (1.0 - x.abs()) / scale).fold(0.0, f64::max);
        per_draw.push(best);
    }
    let max_ratio_constant = per_draw.iter().copied().fold(0.0, f64::max);
    Ok(WeightBoundReport { k, max_ratio_constant, per_draw })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaReport {
    pub k: usize,
    /// `E_{x∼D}[max_draws sup_ratio(x)]`, a lower bound on `κ`.
    pub estimate: f64,
    /// `estimate / (k ln² k)`.
    pub normalized: f64,
    /// `sup_x (D(x)/D_F(x))·max_draws sup_ratio(x)` over the `D_F` grid.
    pub reweighted_condition: f64,
}

/// Monte-Carlo estimate of `κ` for `D` uniform on `[−1, 1]` (realized by
/// `d`), using `num_draws` random frequency tuples in `[−F, F]^k`.
pub fn estimate_kappa(
    density: &FourierWeightDensity,
    bandlimit: f64,
    num_draws: usize,
    d: &Measure,
    rng: &mut TrialRng,
) -> Result<KappaReport> {
    let k = density.k;
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let mut on_d = vec![0.0f64; d.len()];
    let mut on_df = vec![0.0f64; density.grid.len()];
    for _ in 0..num_draws {
        let freqs = random_frequencies(k, bandlimit, rng);
        let sr = match SupRatio::new(&freqs, d) {
            Ok(sr) => sr,
            Err(Error::SingularGram(_)) => continue,
            Err(e) => return Err(e),
        };
        for (best, &x) in on_d.iter_mut().zip(d.support()) {
            *best = best.max(sr.at(x));
        }
        for (best, &x) in on_df.iter_mut().zip(density.grid.support()) {
            *best = best.max(sr.at(x));
        }
    }
    let estimate = d.expectation(|i, _| on_d[i]);
    let lk = math::ln(k as f64);
    let reweighted_condition =
        density.grid.support().iter().zip(&on_df).map(|(&x, &s)| 0.5 / density.density(x) * s).fold(0.0, f64::max);
    Ok(KappaReport { k, estimate, normalized: estimate / (k as f64 * lk * lk), reweighted_condition })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryConfig {
    pub k: usize,
    pub bandlimit: f64,
    /// Spacing of the frequency net `δ·ℤ ∩ [−F, F]`.
    pub net_spacing: f64,
    pub max_candidates: u128,
}

impl RecoveryConfig {
    pub fn new(k: usize, bandlimit: f64, net_spacing: f64) -> Self {
        Self { k, bandlimit, net_spacing, max_candidates: DEFAULT_CANDIDATE_CAP }
    }
}

/// Best candidate seen so far. Ordered by residual, ties broken by the
/// lexicographically smallest net-index tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub indices: [usize; 2],
    pub residual_sqr: f64,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        match self.residual_sqr.total_cmp(&other.residual_sqr) {
            core::cmp::Ordering::Less => true,
            core::cmp::Ordering::Greater => false,
            core::cmp::Ordering::Equal => self.indices < other.indices,
        }
    }

    /// The better of two partial results.
    pub fn merge(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
        match (a, b) {
            (Some(a), Some(b)) => Some(if b.better_than(&a) { b } else { a }),
            (a, None) => a,
            (None, b) => b,
        }
    }
}

/// Precomputed net search. The design column of net frequency `f` is
/// `c_f = (√w_j e^{2πi f x_j})_j`; Gram entries depend only on index
/// differences, so each pair costs `O(1)` after `O(N·m)` setup.
#[derive(Debug, Clone)]
pub struct RecoveryProblem {
    config: RecoveryConfig,
    net: Vec<f64>,
    points: Vec<f64>,
    sqrt_w: Vec<f64>,
    y_w: Vec<C64>,
    y_norm_sqr: f64,
    /// `⟨c_f, y_w⟩` per net frequency.
    corr: Vec<C64>,
    /// `⟨c_{f_i}, c_{f_j}⟩ = Σ w e^{2πi(f_j − f_i)x}` indexed by `j − i ≥ 0`.
    lag: Vec<C64>,
}

impl RecoveryProblem {
    pub fn new(samples: &WeightedSampleSet, labels: &[C64], config: RecoveryConfig) -> Result<Self> {
        if config.k == 0 || config.k > 2 {
            return Err(Error::InvalidK(config.k));
        }
        if !(config.net_spacing > 0.0 && config.bandlimit >= 0.0) {
            return Err(Error::InvalidParameter("net spacing must be positive and bandlimit nonnegative".into()));
        }
        if samples.is_empty() {
            return Err(Error::EmptyInput("samples"));
        }
        if labels.len() != samples.len() {
            return Err(Error::LabelCount { expected: samples.len(), got: labels.len() });
        }
        let half = math::floor(config.bandlimit / config.net_spacing + 1e-9) as i64;
        let n = (2 * half + 1) as u128;
        let count = if config.k == 1 { n } else { n * (n - 1) / 2 };
        if count > config.max_candidates {
            return Err(Error::NetTooLarge { candidates: count, cap: config.max_candidates });
        }
        let net: Vec<f64> = (-half..=half).map(|j| j as f64 * config.net_spacing).collect();
        let sqrt_w: Vec<f64> = samples.weights.iter().map(|&w| math::sqrt(w)).collect();
        let y_w: Vec<C64> = labels.iter().zip(&sqrt_w).map(|(y, s)| y * s).collect();
        let y_norm_sqr = y_w.iter().map(|y| y.norm_sqr()).sum();
        let points = samples.points.clone();
        let corr = net
            .iter()
            .map(|&f| {
                points.iter().zip(&sqrt_w).zip(&y_w).map(|((&x, &s), y)| (math::cis_tau(f, x) * s).conj() * y).sum()
            })
            .collect();
        let lag = if config.k == 2 {
            (0..net.len())
                .map(|l| {
                    let df = l as f64 * config.net_spacing;
                    points.iter().zip(&samples.weights).map(|(&x, &w)| math::cis_tau(df, x) * w).sum()
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self { config, net, points, sqrt_w, y_w, y_norm_sqr, corr, lag })
    }

    pub fn net(&self) -> &[f64] {
        &self.net
    }

    /// Number of outer indices; work is split over ranges of these.
    pub fn outer_len(&self) -> usize {
        self.net.len()
    }

    pub fn candidate_count(&self) -> u128 {
        let n = self.net.len() as u128;
        if self.config.k == 1 {
            n
        } else {
            n * (n - 1) / 2
        }
    }

    /// Weighted residual `‖h − y‖²_{S,w}` of the best fit using net indices
    /// `i` (and `j > i` when `k = 2`). `None` for a numerically singular pair.
    pub fn residual(&self, i: usize, j: Option<usize>) -> Option<f64> {
        let total = self.lag.first().map_or_else(|| self.sqrt_w.iter().map(|s| s * s).sum(), |g| g.re);
        match j {
            None => Some((self.y_norm_sqr - self.corr[i].norm_sqr() / total).max(0.0)),
            Some(j) => {
                let g = self.lag[j - i];
                let det = total * total - g.norm_sqr();
                if det <= 1e-12 * total * total {
                    return None;
                }
                let (b1, b2) = (self.corr[i], self.corr[j]);
                // b^* G^{-1} b for G = [[t, g], [ḡ, t]].
                let quad = (total * (b1.norm_sqr() + b2.norm_sqr()) - 2.0 * (b1.conj() * g * b2).re) / det;
                Some((self.y_norm_sqr - quad).max(0.0))
            }
        }
    }

    /// Best candidate whose first net index lies in `outer`.
    pub fn best_in(&self, outer: Range<usize>) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        for i in outer {
            if self.config.k == 1 {
                if let Some(r) = self.residual(i, None) {
                    best = Candidate::merge(best, Some(Candidate { indices: [i, i], residual_sqr: r }));
                }
            } else {
                for j in i + 1..self.net.len() {
                    if let Some(r) = self.residual(i, Some(j)) {
                        let cand = Candidate { indices: [i, j], residual_sqr: r };
                        if best.is_none_or(|b| cand.better_than(&b)) {
                            best = Some(cand);
                        }
                    }
                }
            }
        }
        best
    }

    /// Refits the winning tuple directly for accurate amplitudes.
    pub fn finish(&self, best: Option<Candidate>) -> Result<RecoveryOutcome> {
        let best = best.ok_or(Error::SingularGram(0.0))?;
        let freqs: Vec<f64> = if self.config.k == 1 {
            vec![self.net[best.indices[0]]]
        } else {
            vec![self.net[best.indices[0]], self.net[best.indices[1]]]
        };
        let m = self.points.len();
        let mut data = Vec::with_capacity(m * freqs.len());
        for (&x, &s) in self.points.iter().zip(&self.sqrt_w) {
            data.extend(freqs.iter().map(|&f| math::cis_tau(f, x) * s));
        }
        let a = CMatrix::from_row_major(m, freqs.len(), data);
        let (amps, residual_sqr) = least_squares(&a, &self.y_w)?;
        let signal = SparseFourierSignal::new(freqs, amps, self.config.bandlimit)?;
        Ok(RecoveryOutcome { signal, residual_sqr, candidates: self.candidate_count(), net_indices: best.indices })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutcome {
    pub signal: SparseFourierSignal,
    /// `‖f̃ − y‖²_{S,w}`.
    pub residual_sqr: f64,
    pub candidates: u128,
    pub net_indices: [usize; 2],
}

/// Exhaustive ERM over the frequency net (single-threaded).
pub fn recover_sparse_ft(
    samples: &WeightedSampleSet,
    labels: &[C64],
    config: RecoveryConfig,
) -> Result<RecoveryOutcome> {
    let problem = RecoveryProblem::new(samples, labels, config)?;
    let best = problem.best_in(0..problem.outer_len());
    problem.finish(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Measure {
        Measure::uniform_grid(n).unwrap()
    }

    #[test]
    fn density_shape_and_normalization() {
        for k in [1usize, 2, 3, 8] {
            let dens = fourier_weight_density(k, 2001).unwrap();
            let total: f64 = dens.grid.masses().iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            let pts = dens.grid.support();
            let masses = dens.grid.masses();
            let n = pts.len();
            for i in 0..n {
                assert!((pts[i] + pts[n - 1 - i]).abs() < 1e-15);
                assert!((masses[i] - masses[n - 1 - i]).abs() < 1e-15);
            }
            let kk = k.max(2) as f64;
            let lk = kk.ln();
            let ratio = dens.density(dens.knee) / dens.density(0.0);
            assert!((ratio / (kk * kk * kk * lk * lk) - 1.0).abs() < 1e-9);
            // Continuous at the knee, flat beyond it.
            assert!((dens.density(dens.knee + 1e-12) / dens.density(dens.knee) - 1.0).abs() < 1e-6);
            assert_eq!(dens.density(1.0), dens.density(0.5 * (1.0 + dens.knee)));
            assert_eq!(dens.density(1.5), 0.0);
            // Analytic normalizer: ∫ D_F = 1.
            let w = dens.knee_width();
            let integral = 2.0 * dens.c * ((1.0 / w).ln() / lk + kk * kk * kk * lk * w);
            assert!((integral - 1.0).abs() < 1e-12);
        }
        assert_eq!(fourier_weight_density(0, 2001).unwrap_err(), Error::InvalidK(0));
        assert!(fourier_weight_density(2, 999).is_err());
    }

    #[test]
    fn single_frequency_ratio_is_one() {
        let d = uniform(501);
        for f in [0.0, 0.37, -4.2] {
            let sr = SupRatio::new(&[f], &d).unwrap();
            for x in [-1.0, -0.3, 0.0, 0.9] {
                assert!((sr.at(x) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicates_merge_and_sum_over_grid_is_dimension() {
        let d = uniform(401);
        let sr = SupRatio::new(&[0.5, 0.5 + 1e-12, 1.5], &d).unwrap();
        assert_eq!(sr.freqs().len(), 2);
        // E_D[sup_ratio] = k for a fixed tuple (the leverage identity).
        let mean = d.expectation(|_, x| sr.at(x));
        assert!((mean - 2.0).abs() < 1e-9);
    }

    #[test]
    fn matches_random_amplitude_search() {
        let d = uniform(1001);
        let freqs = [0.0, 0.5];
        let exact = sup_ratio(&freqs, 1.0, &d).unwrap();
        let mut rng = TrialRng::new(17);
        let mut best: f64 = 0.0;
        for _ in 0..100_000 {
            let v = [C64::new(rng.gaussian(), rng.gaussian()), C64::new(rng.gaussian(), rng.gaussian())];
            let sig = SparseFourierSignal::new(freqs.to_vec(), v.to_vec(), 1.0).unwrap();
            // ‖f‖² = v^* G v computed in closed form from the Gram.
            let g01: C64 = d.support().iter().zip(d.masses()).map(|(&x, &p)| math::cis_tau(-0.5, x) * p).sum();
            let norm = v[0].norm_sqr() + v[1].norm_sqr() + 2.0 * (v[0].conj() * g01 * v[1]).re;
            best = best.max(sig.eval(1.0).norm_sqr() / norm);
        }
        assert!(best <= exact * (1.0 + 1e-12));
        assert!(best >= exact * 0.999, "{best} vs {exact}");
    }

    #[test]
    fn ratio_grows_toward_endpoints() {
        // Close pairs behave like low-degree polynomials.
        let d = uniform(2001);
        for gap in [0.1, 0.2, 0.4] {
            let sr = SupRatio::new(&[0.3, 0.3 + gap], &d).unwrap();
            let xs: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
            for w in xs.windows(2) {
                assert!(sr.at(w[1]) >= sr.at(w[0]) - 1e-12);
                assert!(sr.at(-w[1]) >= sr.at(-w[0]) - 1e-12);
            }
            assert!(sr.at(1.0) > 1.5 * sr.at(0.0));
        }
    }

    #[test]
    fn ratio_is_invariant_under_common_shift() {
        let d = uniform(1001);
        let a = SupRatio::new(&[0.0, 0.7, 1.9], &d).unwrap();
        let b = SupRatio::new(&[-2.5, -1.8, -0.6], &d).unwrap();
        for x in [-0.95, -0.2, 0.4, 1.0] {
            assert!((a.at(x) - b.at(x)).abs() < 1e-9 * a.at(x));
        }
    }

    fn noiseless(signal: &SparseFourierSignal, m: usize, seed: u64) -> (WeightedSampleSet, Vec<C64>) {
        let dens = fourier_weight_density(1, 2001).unwrap();
        let s = dens.draw_sample(m, &mut TrialRng::new(seed));
        let y = s.points.iter().map(|&x| signal.eval(x)).collect();
        (s, y)
    }

    #[test]
    fn on_net_single_frequency_is_exact() {
        let truth = SparseFourierSignal::new(vec![2.3], vec![C64::new(0.7, -1.1)], 5.0).unwrap();
        let (s, y) = noiseless(&truth, 60, 1);
        let out = recover_sparse_ft(&s, &y, RecoveryConfig::new(1, 5.0, 0.1)).unwrap();
        assert!((out.signal.freqs[0] - 2.3).abs() < 1e-12);
        assert!((out.signal.amps[0] - truth.amps[0]).norm() < 1e-8);
    }

    #[test]
    fn on_net_pair_is_exact_and_argmin_is_exhaustive() {
        let truth =
            SparseFourierSignal::new(vec![-1.0, 0.5], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.6)], 2.0).unwrap();
        let (s, y) = noiseless(&truth, 40, 2);
        let cfg = RecoveryConfig::new(2, 2.0, 0.25);
        let problem = RecoveryProblem::new(&s, &y, cfg).unwrap();
        let best = problem.best_in(0..problem.outer_len()).unwrap();
        for i in 0..problem.outer_len() {
            for j in i + 1..problem.outer_len() {
                if let Some(r) = problem.residual(i, Some(j)) {
                    assert!(best.residual_sqr <= r);
                }
            }
        }
        let split = Candidate::merge(problem.best_in(0..5), problem.best_in(5..problem.outer_len()));
        assert_eq!(split, Some(best));
        let out = problem.finish(Some(best)).unwrap();
        assert_eq!(out.signal.freqs, vec![-1.0, 0.5]);
        assert!((out.signal.amps[1] - truth.amps[1]).norm() < 1e-8);
        // Closed-form residuals agree with a direct least-squares fit.
        let (_, direct) = {
            let m = s.len();
            let mut data = Vec::new();
            for (&x, &w) in s.points.iter().zip(&s.weights) {
                data.push(math::cis_tau(0.0, x) * w.sqrt());
                data.push(math::cis_tau(1.25, x) * w.sqrt());
            }
            let y_w: Vec<C64> = y.iter().zip(&s.weights).map(|(y, w)| y * w.sqrt()).collect();
            least_squares(&CMatrix::from_row_major(m, 2, data), &y_w).unwrap()
        };
        let i0 = problem.net().iter().position(|&f| f == 0.0).unwrap();
        let i1 = problem.net().iter().position(|&f| f == 1.25).unwrap();
        assert!((problem.residual(i0, Some(i1)).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn off_net_error_shrinks_linearly() {
        // f* = δ0/2 + integer·δ0 sits exactly half a spacing off every net
        // δ0/3^r, so the frequency error is δ/2 at every level.
        let f_star = 3.05;
        let truth = SparseFourierSignal::new(vec![f_star], vec![C64::new(1.0, 0.0)], 5.0).unwrap();
        let (s, y) = noiseless(&truth, 80, 3);
        let d = uniform(2001);
        let mut errs = Vec::new();
        let mut delta = 0.1;
        for _ in 0..4 {
            let out = recover_sparse_ft(&s, &y, RecoveryConfig::new(1, 5.0, delta)).unwrap();
            assert!(((out.signal.freqs[0] - f_star).abs() - delta / 2.0).abs() < 1e-9);
            errs.push((delta, out.signal.distance_sqr(&truth, &d).sqrt()));
            delta /= 3.0;
        }
        let slope = (errs[3].1.ln() - errs[0].1.ln()) / (errs[3].0.ln() - errs[0].0.ln());
        assert!((slope - 1.0).abs() < 0.2, "{errs:?}");
    }

    #[test]
    fn net_cap_and_input_errors() {
        let s = {
            let mut s = WeightedSampleSet::new(0);
            s.push(0.1, 1.0, 1.0);
            s
        };
        let y = [C64::new(1.0, 0.0)];
        let cfg = RecoveryConfig { max_candidates: 100, ..RecoveryConfig::new(2, 10.0, 0.1) };
        assert!(matches!(recover_sparse_ft(&s, &y, cfg), Err(Error::NetTooLarge { .. })));
        assert_eq!(recover_sparse_ft(&s, &y, RecoveryConfig::new(3, 1.0, 0.1)).unwrap_err(), Error::InvalidK(3));
        assert!(matches!(recover_sparse_ft(&s, &[], RecoveryConfig::new(1, 1.0, 0.1)), Err(Error::LabelCount { .. })));
    }

    #[test]
    fn kappa_and_weight_bound_are_finite() {
        let d = uniform(1001);
        let dens = fourier_weight_density(2, 1001).unwrap();
        let mut rng = TrialRng::new(5);
        let rep = estimate_kappa(&dens, 2.0, 10, &d, &mut rng).unwrap();
        assert!(rep.estimate >= 2.0 - 1e-6 && rep.estimate.is_finite());
        assert!(rep.reweighted_condition.is_finite());
        let xs: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
        let wb = verify_weight_bound(2, 2.0, 10, &xs, &d, &mut rng).unwrap();
        assert_eq!(wb.per_draw.len(), 10);
        assert!(wb.max_ratio_constant > 0.0 && wb.max_ratio_constant.is_finite());
    }
}
