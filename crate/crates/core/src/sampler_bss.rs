//! Randomized BSS: a well-balanced procedure that needs only `O(d/ε)`
//! labels.
//!
//! The procedure keeps a PSD matrix `B_j = Σ s_i v(x_i) v(x_i)^*` strictly
//! between two barriers `l_j < λ(B_j) < u_j`. Each round samples
//! `x_j ∼ D_j(x) = D(x)·q_j(x)/Φ_j`, where
//!
//! ```text
//! q_j(x) = v(x)^*(u_j I − B_j)^{-1} v(x) + v(x)^*(B_j − l_j I)^{-1} v(x)
//! Φ_j    = Tr(u_j I − B_j)^{-1} + Tr(B_j − l_j I)^{-1}
//! ```
//!
//! adds `s_j v(x_j) v(x_j)^*` with `s_j = γ/q_j(x_j)`, and advances the
//! barriers by `γ/(Φ_j(1∓γ))`. It stops once `u − l ≥ 8d/γ`; the weights
//! are `w_j = s_j/mid` and the coefficients `α_j = γ/(Φ_j·mid)`.
//!
//! Both resolvents come from Cholesky factors: `(uI − B)^{-1} = C^{-*}C^{-1}`
//! with `C C^* = uI − B`, so `q_j(x) = ‖C_u^{-1} v‖² + ‖C_l^{-1} v‖²` and a
//! failed factorization is exactly a barrier violation. Sampling `D_j` uses
//! the mixture `q_j = Σ_k |r_k · v|²` over the `2d` rows `r_k` of the two
//! inverse factors: pick row `k` with probability `‖r_k‖²/Φ_j`, then `x`
//! with probability `D(x)|r_k · v(x)|²/‖r_k‖²`. That costs `O(n·d)` per
//! round instead of `O(n·d²)` for materializing `D_j`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::family::OrthonormalFamily;
use crate::linalg::{self, cholesky, hermitian_eigenvalues, lower_triangular_inverse, CMatrix};
use crate::math;
use crate::measure::{sample_weighted, Measure, WeightedSampleSet};
use crate::rng::TrialRng;
use crate::C64;

pub const DEFAULT_C0: f64 = 3.0;

/// How `α_j·K_{D_j}` is reported per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BalanceTracking {
    #[default]
    Off,
    /// Upper bound `γ(u_j − l_j)/(4·mid)`. `B_j` and both resolvents share
    /// eigenvectors, so `q_j(x) ≥ lev(x)·min_λ (1/(u−λ) + 1/(λ−l)) ≥
    /// lev(x)·4/(u−l)`. Costs nothing.
    Certified,
    /// `sup_x γ·lev(x)/(q_j(x)·mid)` over the support; `O(n·d²)` per round.
    Exact,
}
/// `C` in the round cap `⌈C·d/γ²⌉`.
pub const DEFAULT_ROUND_CONSTANT: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BssConfig {
    pub epsilon: f64,
    pub c0: f64,
    pub round_constant: f64,
    pub balance: BalanceTracking,
    /// Keep a per-round [`StepTrace`].
    pub record_trace: bool,
}

impl BssConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            c0: DEFAULT_C0,
            round_constant: DEFAULT_ROUND_CONSTANT,
            balance: BalanceTracking::Off,
            record_trace: false,
        }
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    pub fn with_round_constant(mut self, c: f64) -> Self {
        self.round_constant = c;
        self
    }

    pub fn tracking_balance(mut self, mode: BalanceTracking) -> Self {
        self.balance = mode;
        self
    }

    pub fn recording_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {} must lie in (0, 1)", self.epsilon)));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("C0 = {} must be positive", self.c0)));
        }
        let gamma = self.gamma();
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} must lie in (0, 1)")));
        }
        if !(self.round_constant > 0.0) {
            return Err(Error::InvalidParameter("round constant must be positive".into()));
        }
        Ok(())
    }

    /// `γ = √ε / C0`.
    pub fn gamma(&self) -> f64 {
        math::sqrt(self.epsilon) / self.c0
    }

    /// `mid = (4d/γ) / (1/(1−γ) − 1/(1+γ))`, algebraically `2d(1−γ²)/γ²`.
    pub fn mid(&self, d: usize) -> f64 {
        let g = self.gamma();
        4.0 * (d as f64 / g) / (1.0 / (1.0 - g) - 1.0 / (1.0 + g))
    }

    /// `⌈C·d/γ²⌉`.
    pub fn max_rounds(&self, d: usize) -> usize {
        let g = self.gamma();
        math::ceil(self.round_constant * d as f64 / (g * g)) as usize
    }

    /// The loop exits once `u − l` reaches `8d/γ`.
    pub fn exit_gap(&self, d: usize) -> f64 {
        8.0 * d as f64 / self.gamma()
    }
}

/// `B_j` with its barriers and potential at the start of round `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierState {
    pub b: CMatrix,
    pub upper: f64,
    pub lower: f64,
    pub round: usize,
    pub phi: f64,
}

impl BarrierState {
    /// `B_0 = 0`, `u_0 = 2d/γ`, `l_0 = −2d/γ`, hence `Φ_0 = γ`.
    pub fn initial(d: usize, gamma: f64) -> Self {
        let upper = 2.0 * d as f64 / gamma;
        let lower = -upper;
        let phi = d as f64 / upper + d as f64 / (-lower);
        Self { b: CMatrix::zeros(d, d), upper, lower, round: 0, phi }
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    /// Inverse Cholesky factors of both shifted matrices.
    pub fn resolvents(&self) -> Result<Resolvents> {
        let d = self.b.rows();
        let mut upper_shift = CMatrix::zeros(d, d);
        let mut lower_shift = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                upper_shift[(i, j)] = -self.b[(i, j)];
                lower_shift[(i, j)] = self.b[(i, j)];
            }
            upper_shift[(i, i)] += self.upper;
            lower_shift[(i, i)] -= self.lower;
        }
        let violation = |which: &str, pivot: f64| Error::BarrierViolation {
            round: self.round,
            detail: format!("{which} barrier: Cholesky pivot {pivot:e}"),
        };
        let cu = cholesky(&upper_shift).map_err(|p| violation("upper", p))?;
        let cl = cholesky(&lower_shift).map_err(|p| violation("lower", p))?;
        let upper_inv = lower_triangular_inverse(&cu);
        let lower_inv = lower_triangular_inverse(&cl);
        let row_mass: Vec<f64> = (0..d)
            .map(|k| linalg::norm_sqr(&upper_inv.row(k)[..=k]))
            .chain((0..d).map(|k| linalg::norm_sqr(&lower_inv.row(k)[..=k])))
            .collect();
        let phi = row_mass.iter().sum();
        Ok(Resolvents { upper_inv, lower_inv, row_mass, phi })
    }

    /// Exact spectrum of `B_j` (for invariant checks).
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.b)
    }
}

/// `C_u^{-1}` and `C_l^{-1}` for the current barriers.
#[derive(Debug, Clone)]
pub struct Resolvents {
    upper_inv: CMatrix,
    lower_inv: CMatrix,
    /// Squared row norms, upper factor first; they sum to `Φ`.
    row_mass: Vec<f64>,
    pub phi: f64,
}

impl Resolvents {
    /// `q(x) = v^*(uI − B)^{-1}v + v^*(B − lI)^{-1}v`.
    pub fn quadratic(&self, v: &[C64]) -> f64 {
        let d = v.len();
        let mut acc = 0.0;
        for k in 0..d {
            acc += linalg::dot(&self.upper_inv.row(k)[..=k], &v[..=k]).norm_sqr();
            acc += linalg::dot(&self.lower_inv.row(k)[..=k], &v[..=k]).norm_sqr();
        }
        acc
    }

    fn row(&self, k: usize) -> &[C64] {
        let d = self.upper_inv.rows();
        if k < d {
            &self.upper_inv.row(k)[..=k]
        } else {
            &self.lower_inv.row(k - d)[..=k - d]
        }
    }
}

/// `D_j` materialized over the support of `D`, renormalized, together with
/// the raw total `Σ D(x) q_j(x)/Φ_j` before renormalization.
#[derive(Debug, Clone)]
pub struct StepDistribution {
    pub measure: Measure,
    pub raw_total: f64,
}

/// `D_j(x) = D(x)·q_j(x)/Φ_j` for the given barrier state.
pub fn bss_step_distribution(state: &BarrierState, fam: &OrthonormalFamily) -> Result<StepDistribution> {
    let res = state.resolvents()?;
    let d_measure = fam.measure();
    let weights: Vec<f64> = d_measure
        .masses()
        .iter()
        .enumerate()
        .map(|(i, &p)| if p > 0.0 { p * res.quadratic(fam.values_at_index(i)) / res.phi } else { 0.0 })
        .collect();
    let raw_total = weights.iter().sum();
    let label = format!("bss-step-{}[{}]", state.round, d_measure.label());
    let measure = Measure::from_weights(d_measure.support().to_vec(), &weights, label)?;
    Ok(StepDistribution { measure, raw_total })
}

/// One accepted round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BssStep {
    pub round: usize,
    /// Support index of `x_j` in the reference measure.
    pub index: usize,
    pub point: f64,
    /// `s_j = γ/q_j(x_j) = (γ/Φ_j)·D(x_j)/D_j(x_j)`.
    pub scale: f64,
    /// `α_j = γ/(Φ_j·mid)`.
    pub alpha: f64,
    pub phi: f64,
    /// `D_j(x_j)`.
    pub step_mass: f64,
    /// `α_j·K_{D_j}` when balance tracking is on.
    pub balance: Option<f64>,
}

/// Performs round `j` on `state`, returning the round and `(B_{j+1},
/// u_{j+1}, l_{j+1})`.
pub fn bss_step(
    state: &BarrierState,
    fam: &OrthonormalFamily,
    config: &BssConfig,
    rng: &mut TrialRng,
) -> Result<(BssStep, BarrierState)> {
    let res = state.resolvents()?;
    let mut next = state.clone();
    let step = advance(&mut next, &res, fam, config, rng)?;
    Ok((step, next))
}

fn advance(
    state: &mut BarrierState,
    res: &Resolvents,
    fam: &OrthonormalFamily,
    config: &BssConfig,
    rng: &mut TrialRng,
) -> Result<BssStep> {
    let d = fam.dimension();
    let gamma = config.gamma();
    let mid = config.mid(d);
    let phi = res.phi;
    state.phi = phi;
    let measure = fam.measure();

    let component = sample_weighted(&res.row_mass, rng)
        .ok_or_else(|| Error::BarrierViolation { round: state.round, detail: "potential vanished".into() })?;
    let row = res.row(component);
    let len = row.len();
    let weights: Vec<f64> = measure
        .masses()
        .iter()
        .enumerate()
        .map(|(i, &p)| if p > 0.0 { p * linalg::dot(row, &fam.values_at_index(i)[..len]).norm_sqr() } else { 0.0 })
        .collect();
    let index = sample_weighted(&weights, rng).ok_or_else(|| Error::BarrierViolation {
        round: state.round,
        detail: format!("sampling component {component} has no mass"),
    })?;

    let v = fam.values_at_index(index);
    let q = res.quadratic(v);
    let scale = gamma / q;
    let alpha = gamma / (phi * mid);
    let step_mass = measure.masses()[index] * q / phi;

    let balance = match config.balance {
        BalanceTracking::Off => None,
        BalanceTracking::Certified => Some(gamma * state.gap() / (4.0 * mid)),
        BalanceTracking::Exact => {
            let mut sup: f64 = 0.0;
            for (i, &p) in measure.masses().iter().enumerate() {
                let lev = fam.leverage_at_index(i);
                if p > 0.0 && lev > 0.0 {
                    sup = sup.max(lev / res.quadratic(fam.values_at_index(i)));
                }
            }
            // α_j · sup_x lev(x)·D(x)/D_j(x) = (γ/(Φ·mid)) · Φ · sup lev/q.
            Some(gamma / mid * sup)
        }
    };

    linalg::accumulate_outer(&mut state.b, v, scale, false);
    linalg::symmetrize(&mut state.b);
    state.upper += gamma / (phi * (1.0 - gamma));
    state.lower += gamma / (phi * (1.0 + gamma));
    let round = state.round;
    state.round += 1;

    Ok(BssStep { round, index, point: measure.support()[index], scale, alpha, phi, step_mass, balance })
}

/// Per-round record for debugging and plotting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    pub round: usize,
    /// Barriers before the round.
    pub upper: f64,
    pub lower: f64,
    pub phi: f64,
    pub point: f64,
    pub scale: f64,
}

/// Outcome of a complete run.
#[derive(Debug, Clone)]
pub struct BssRun {
    pub sample: WeightedSampleSet,
    pub rounds: usize,
    pub gamma: f64,
    pub mid: f64,
    /// `B_m`, `u_m`, `l_m` after the last round.
    pub final_state: BarrierState,
    /// `Σ_j γ/Φ_j`.
    pub sum_gamma_over_phi: f64,
    /// `max_j α_j·K_{D_j}`, when tracked.
    pub max_balance: Option<f64>,
    pub trace: Vec<StepTrace>,
}

impl BssRun {
    pub fn sum_alpha(&self) -> f64 {
        self.sample.alpha_sum()
    }

    /// `u_m / l_m`.
    pub fn barrier_ratio(&self) -> f64 {
        self.final_state.upper / self.final_state.lower
    }

    /// Eigenvalues of `B_m / mid`, i.e. of the Gram matrix `A^*A` of the
    /// weighted sample (up to complex conjugation, which keeps the spectrum).
    pub fn gram_eigs(&self) -> Vec<f64> {
        self.final_state.eigenvalues().into_iter().map(|l| l / self.mid).collect()
    }

    /// `u_m/l_m ≤ 1 + 8γ`, under which the spectrum is
    /// guaranteed to lie in `(1 − 5γ, 1 + 5γ)`.
    pub fn well_conditioned(&self) -> bool {
        self.final_state.lower > 0.0 && self.barrier_ratio() <= 1.0 + 8.0 * self.gamma
    }

    /// The implication "well conditioned ⇒ λ(A^*A) ⊂ (1−5γ, 1+5γ)".
    pub fn spectrum_implication_holds(&self) -> bool {
        if !self.well_conditioned() {
            return true;
        }
        let lo = 1.0 - 5.0 * self.gamma;
        let hi = 1.0 + 5.0 * self.gamma;
        self.gram_eigs().iter().all(|&l| l > lo && l < hi)
    }
}

/// Runs the full procedure on the family's reference measure.
pub fn run_bss_procedure(fam: &OrthonormalFamily, config: &BssConfig, rng: &mut TrialRng) -> Result<BssRun> {
    config.validate()?;
    let d = fam.dimension();
    let gamma = config.gamma();
    let mid = config.mid(d);
    let max_rounds = config.max_rounds(d);
    let exit_gap = config.exit_gap(d);

    let mut state = BarrierState::initial(d, gamma);
    let mut sample = WeightedSampleSet::new(rng.seed());
    let mut trace = Vec::new();
    let mut sum_gamma_over_phi = 0.0;
    let mut max_balance: Option<f64> = None;

    loop {
        if state.round >= max_rounds {
            return Err(Error::RoundLimitExceeded(max_rounds));
        }
        let res = state.resolvents()?;
        let (upper, lower) = (state.upper, state.lower);
        let step = advance(&mut state, &res, fam, config, rng)?;
        sum_gamma_over_phi += gamma / step.phi;
        sample.push(step.point, step.scale / mid, step.alpha);
        if let Some(b) = step.balance {
            max_balance = Some(max_balance.map_or(b, |m| m.max(b)));
        }
        if config.record_trace {
            trace.push(StepTrace {
                round: step.round,
                upper,
                lower,
                phi: step.phi,
                point: step.point,
                scale: step.scale,
            });
        }
        if state.gap() >= exit_gap {
            break;
        }
    }
    // Certifies l_m < λ(B_m) < u_m for the final matrix.
    let final_res = state.resolvents()?;
    state.phi = final_res.phi;

    Ok(BssRun { rounds: sample.len(), sample, gamma, mid, final_state: state, sum_gamma_over_phi, max_balance, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erm::{build_design, is_good};
    use crate::family::{orthonormalize, BasisSpec};
    use crate::sampler_iid::leverage_measure;
    use alloc::sync::Arc;

    fn legendre(d: usize, n: usize) -> OrthonormalFamily {
        orthonormalize(&BasisSpec::legendre(d - 1), Arc::new(Measure::uniform_grid(n).unwrap())).unwrap()
    }

    #[test]
    fn config_constants() {
        let cfg = BssConfig::new(0.09);
        assert!((cfg.gamma() - 0.1).abs() < 1e-15);
        assert!((cfg.mid(2) - 396.0).abs() < 1e-9);
        for (eps, d) in [(0.1, 5usize), (0.25, 10), (0.5, 50)] {
            let cfg = BssConfig::new(eps);
            let g = cfg.gamma();
            let closed = 2.0 * d as f64 * (1.0 - g * g) / (g * g);
            assert!((cfg.mid(d) - closed).abs() < 1e-9 * closed);
        }
        assert!(BssConfig::new(1.0).validate().is_err());
        assert!(BssConfig::new(0.5).with_c0(0.5).validate().is_err());
    }

    #[test]
    fn initial_distribution_is_leverage_measure() {
        let fam = legendre(4, 201);
        let cfg = BssConfig::new(0.25);
        let state = BarrierState::initial(4, cfg.gamma());
        assert!((state.phi - cfg.gamma()).abs() < 1e-15);
        let res = state.resolvents().unwrap();
        assert!((res.phi - cfg.gamma()).abs() < 1e-12);
        let dist = bss_step_distribution(&state, &fam).unwrap();
        assert!((dist.raw_total - 1.0).abs() < 1e-9);
        let df = leverage_measure(&fam).unwrap();
        for (a, b) in dist.measure.masses().iter().zip(df.masses()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_case_is_deterministic() {
        // d = 1, constant family on a point mass: q = 1/(u − B) + 1/(B − l)
        // and every quantity follows a scalar recurrence.
        let fam = orthonormalize(&BasisSpec::monomial(0), Arc::new(Measure::point_mass(0.0).unwrap())).unwrap();
        let cfg = BssConfig::new(0.25);
        let g = cfg.gamma();
        let mut state = BarrierState::initial(1, g);
        let mut rng = TrialRng::new(1);
        let (mut b, mut u, mut l) = (0.0f64, 2.0 / g, -2.0 / g);
        for _ in 0..20 {
            let (step, next) = bss_step(&state, &fam, &cfg, &mut rng).unwrap();
            let phi = 1.0 / (u - b) + 1.0 / (b - l);
            assert!((step.phi - phi).abs() < 1e-12 * phi);
            assert!((step.scale - g / phi).abs() < 1e-12);
            let gap_growth = g / phi * (1.0 / (1.0 - g) - 1.0 / (1.0 + g));
            assert!((next.gap() - state.gap() - gap_growth).abs() < 1e-9);
            b += g / phi;
            u += g / (phi * (1.0 - g));
            l += g / (phi * (1.0 + g));
            assert!(
                (next.b[(0, 0)].re - b).abs() < 1e-9 && (next.upper - u).abs() < 1e-9 && (next.lower - l).abs() < 1e-9
            );
            state = next;
        }
    }

    #[test]
    fn scalar_run_matches_independent_recurrence() {
        let fam = orthonormalize(&BasisSpec::monomial(0), Arc::new(Measure::point_mass(0.0).unwrap())).unwrap();
        for eps in [0.1, 0.25, 0.5] {
            let cfg = BssConfig::new(eps);
            let g = cfg.gamma();
            let (mut b, mut u, mut l, mut m, mut wsum) = (0.0f64, 2.0 / g, -2.0 / g, 0usize, 0.0);
            let mid = 2.0 * (1.0 - g * g) / (g * g);
            loop {
                let phi = 1.0 / (u - b) + 1.0 / (b - l);
                let s = g / phi;
                b += s;
                wsum += s / mid;
                u += g / (phi * (1.0 - g));
                l += g / (phi * (1.0 + g));
                m += 1;
                if u - l >= 8.0 / g {
                    break;
                }
            }
            let run = run_bss_procedure(&fam, &cfg, &mut TrialRng::new(0)).unwrap();
            assert_eq!(run.rounds, m);
            let w: f64 = run.sample.weights.iter().sum();
            assert!((w - wsum).abs() < 1e-9);
            assert!((w - 1.0).abs() < 5.0 * g, "weights sum to {w}");
        }
    }

    #[test]
    fn run_invariants_hold() {
        let fam = legendre(6, 301);
        let cfg = BssConfig::new(0.25).tracking_balance(BalanceTracking::Exact);
        let certified = cfg.tracking_balance(BalanceTracking::Certified);
        let mut rng = TrialRng::new(42);
        for _ in 0..5 {
            let run = run_bss_procedure(&fam, &cfg, &mut rng.clone()).unwrap();
            let bound = run_bss_procedure(&fam, &certified, &mut rng).unwrap();
            assert_eq!(run.sample, bound.sample);
            assert!(run.max_balance.unwrap() <= bound.max_balance.unwrap() + 1e-12);
            assert!(bound.max_balance.unwrap() <= cfg.epsilon / 3.0);
            assert!(run.sum_alpha() <= 1.25);
            assert!(run.sum_gamma_over_phi >= run.mid);
            assert!(run.max_balance.unwrap() <= cfg.epsilon / 2.0);
            assert!(run.final_state.gap() <= 9.0 * 6.0 / cfg.gamma());
            assert!(run.spectrum_implication_holds());
            let eigs = run.final_state.eigenvalues();
            assert!(run.final_state.lower < eigs[0] && eigs[5] < run.final_state.upper);
            // The Gram spectrum of the sample equals that of B_m / mid.
            let dm = build_design(&fam, &run.sample).unwrap();
            for (a, b) in dm.gram_eigs().iter().zip(run.gram_eigs()) {
                assert!((a - b).abs() < 1e-9);
            }
            // w_j = α_j · D(x_j)/D_j(x_j) holds by construction.
            for (w, a) in run.sample.weights.iter().zip(&run.sample.alphas) {
                assert!(*w > 0.0 && *a > 0.0);
            }
        }
    }

    #[test]
    fn per_step_barrier_and_weight_identity() {
        let fam = legendre(5, 101);
        let cfg = BssConfig::new(0.25);
        let mut rng = TrialRng::new(3);
        let mut state = BarrierState::initial(5, cfg.gamma());
        let mid = cfg.mid(5);
        for _ in 0..200 {
            let dist = bss_step_distribution(&state, &fam).unwrap();
            let (step, next) = bss_step(&state, &fam, &cfg, &mut rng).unwrap();
            let d_mass = fam.measure().masses()[step.index];
            let dj = dist.measure.masses()[step.index] * dist.raw_total;
            assert!((dj - step.step_mass).abs() < 1e-12 * dj.max(1e-300));
            let w = step.scale / mid;
            assert!((w - step.alpha * d_mass / step.step_mass).abs() < 1e-12 * w);
            let eigs = next.eigenvalues();
            assert!(next.lower < eigs[0] && *eigs.last().unwrap() < next.upper);
            state = next;
        }
    }

    #[test]
    fn round_limit_is_enforced() {
        let fam = legendre(3, 51);
        let cfg = BssConfig::new(0.25).with_round_constant(0.03);
        assert_eq!(cfg.max_rounds(3), 4);
        let err = run_bss_procedure(&fam, &cfg, &mut TrialRng::new(0)).unwrap_err();
        assert_eq!(err, Error::RoundLimitExceeded(4));
    }

    #[test]
    fn trace_records_every_round() {
        let fam = legendre(3, 51);
        let cfg = BssConfig::new(0.25).recording_trace();
        let run = run_bss_procedure(&fam, &cfg, &mut TrialRng::new(5)).unwrap();
        assert_eq!(run.trace.len(), run.rounds);
        assert_eq!(run.trace[0].upper, 6.0 / cfg.gamma());
        assert!(run.trace.windows(2).all(|w| w[1].upper > w[0].upper && w[1].lower > w[0].lower));
    }

    #[test]
    fn mostly_good_at_moderate_dimension() {
        let fam = legendre(10, 501);
        let cfg = BssConfig::new(0.25);
        let mut rng = TrialRng::new(9);
        let good = (0..20)
            .filter(|_| {
                let run = run_bss_procedure(&fam, &cfg, &mut rng).unwrap();
                is_good(&build_design(&fam, &run.sample).unwrap())
            })
            .count();
        assert!(good >= 16, "{good}/20 good");
    }
}
