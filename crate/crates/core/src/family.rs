//! Linear function families, their orthonormalization under a measure, and
//! the leverage / condition-number quantities that drive every sampler.

use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, accumulate_outer, hermitian_eigen, symmetrize, CMatrix};
use crate::math;
use crate::measure::Measure;
use crate::C64;

/// Relative eigenvalue floor below which a Gram matrix counts as singular.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Bound on `‖G − I‖_max` for an orthonormalized family.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// A table of basis values on a finite domain, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomTable {
    points: Vec<f64>,
    values: CMatrix,
}

impl CustomTable {
    /// `rows[i]` holds the `d` basis values at `points[i]`; points must be
    /// distinct and are sorted here.
    pub fn new(points: Vec<f64>, rows: Vec<Vec<C64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("custom basis table"));
        }
        if points.len() != rows.len() {
            return Err(Error::InvalidBasis(format!("{} points but {} rows", points.len(), rows.len())));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidBasis("custom basis needs at least one column".to_string()));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidBasis(format!("row {r} has {} columns, expected {d}", rows[r].len())));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].total_cmp(&points[b]));
        if order.windows(2).any(|w| points[w[0]] == points[w[1]]) {
            return Err(Error::InvalidBasis("custom basis points must be distinct".to_string()));
        }
        let sorted_points = order.iter().map(|&i| points[i]).collect();
        let data = order.iter().flat_map(|&i| rows[i].iter().copied()).collect();
        Ok(Self { points: sorted_points, values: CMatrix::from_row_major(rows.len(), d, data) })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn dimension(&self) -> usize {
        self.values.cols()
    }

    fn row_at(&self, x: f64) -> Option<&[C64]> {
        self.points.binary_search_by(|p| p.total_cmp(&x)).ok().map(|i| self.values.row(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    /// `1, x, …, x^degree` on `[-1, 1]`.
    Monomial(usize),
    /// Chebyshev polynomials of the first kind up to `degree`, on `[-1, 1]`.
    Chebyshev(usize),
    /// Legendre polynomials up to `degree`, on `[-1, 1]`.
    Legendre(usize),
    /// Exponentials `e^{2πi f x}` for the listed real frequencies.
    FourierGrid(Vec<f64>),
    /// Indicators `1_{x = i}` on the domain `{1, …, size}`.
    Indicator(usize),
    Custom(CustomTable),
}

/// A `d`-dimensional span of basis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    kind: BasisKind,
    dimension: usize,
}

impl BasisSpec {
    pub fn new(kind: BasisKind) -> Result<Self> {
        let dimension = match &kind {
            BasisKind::Monomial(deg) | BasisKind::Chebyshev(deg) | BasisKind::Legendre(deg) => deg + 1,
            BasisKind::FourierGrid(freqs) => {
                if let Some(f) = freqs.iter().find(|f| !f.is_finite()) {
                    return Err(Error::InvalidBasis(format!("non-finite frequency {f}")));
                }
                freqs.len()
            }
            BasisKind::Indicator(size) => *size,
            BasisKind::Custom(table) => table.dimension(),
        };
        if dimension == 0 {
            return Err(Error::InvalidBasis("family dimension must be at least 1".to_string()));
        }
        Ok(Self { kind, dimension })
    }

    pub fn monomial(degree: usize) -> Self {
        Self { kind: BasisKind::Monomial(degree), dimension: degree + 1 }
    }

    pub fn chebyshev(degree: usize) -> Self {
        Self { kind: BasisKind::Chebyshev(degree), dimension: degree + 1 }
    }

    pub fn legendre(degree: usize) -> Self {
        Self { kind: BasisKind::Legendre(degree), dimension: degree + 1 }
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Raw basis values `b_1(x), …, b_d(x)`, written into `out`.
    pub fn evaluate_into(&self, x: f64, out: &mut [C64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.dimension);
        let outside = |reason: &str| Error::Evaluation { x, reason: reason.to_string() };
        if !x.is_finite() {
            return Err(outside("non-finite point"));
        }
        match &self.kind {
            BasisKind::Monomial(_) | BasisKind::Chebyshev(_) | BasisKind::Legendre(_) => {
                if x.abs() > 1.0 + 1e-12 {
                    return Err(outside("polynomial families live on [-1, 1]"));
                }
                polynomial_values(&self.kind, x, out);
            }
            BasisKind::FourierGrid(freqs) => {
                for (o, &f) in out.iter_mut().zip(freqs) {
                    *o = math::cis_tau(f, x);
                }
            }
            BasisKind::Indicator(size) => {
                let i = math::round(x);
                if i != x || i < 1.0 || i > *size as f64 {
                    return Err(outside("indicator domain is {1, ..., size}"));
                }
                out.fill(C64::new(0.0, 0.0));
                out[i as usize - 1] = C64::new(1.0, 0.0);
            }
            BasisKind::Custom(table) => {
                let row = table.row_at(x).ok_or_else(|| outside("point missing from custom table"))?;
                out.copy_from_slice(row);
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: f64) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); self.dimension];
        self.evaluate_into(x, &mut out)?;
        Ok(out)
    }
}

fn polynomial_values(kind: &BasisKind, x: f64, out: &mut [C64]) {
    let mut prev = 1.0;
    let mut cur = x;
    for (k, o) in out.iter_mut().enumerate() {
        let value = match (kind, k) {
            (_, 0) => 1.0,
            (BasisKind::Monomial(_), _) => math::powi(x, k as i32),
            (_, 1) => x,
            (BasisKind::Chebyshev(_), _) => {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
                next
            }
            _ => {
                let kf = k as f64;
                let next = ((2.0 * kf - 1.0) * x * cur - (kf - 1.0) * prev) / kf;
                prev = cur;
                cur = next;
                next
            }
        };
        *o = C64::new(value, 0.0);
    }
}

/// Orthonormal coefficients `α(h)` of a family member.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub Vec<C64>);

impl CoefficientVector {
    pub fn zeros(d: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); d])
    }

    /// The `i`-th standard unit vector (0-based).
    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = Self::zeros(d);
        v.0[i] = C64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    /// `‖α‖²`, which equals `‖h‖²_D` in an orthonormal basis.
    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.0)
    }

    pub fn distance_sqr(&self, other: &CoefficientVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm_sqr()).sum()
    }
}

/// A family together with an orthonormal basis `v_1, …, v_d` under its
/// reference measure `D`: `v(x) = T·b(x)` with `T = G^{-1/2}`.
///
/// Immutable after construction; values on the support of `D` are cached.
#[derive(Debug, Clone)]
pub struct OrthonormalFamily {
    basis: BasisSpec,
    measure: Arc<Measure>,
    transform: CMatrix,
    gram_residual: f64,
    table: CMatrix,
    leverage: Vec<f64>,
}

/// Finds `v = T b` orthonormal under `D` via the symmetric inverse square
/// root of the Gram matrix `G(i,j) = E_D[b_i conj(b_j)]`.
pub fn orthonormalize(basis: &BasisSpec, measure: Arc<Measure>) -> Result<OrthonormalFamily> {
    let d = basis.dimension();
    let n = measure.len();
    let effective = measure.masses().iter().filter(|&&p| p > 0.0).count();
    if d > effective {
        return Err(Error::DegenerateFamily(format!(
            "dimension {d} exceeds the {effective} support points carrying mass"
        )));
    }

    let mut raw = CMatrix::zeros(n, d);
    for (i, &x) in measure.support().iter().enumerate() {
        basis.evaluate_into(x, raw.row_mut(i))?;
    }

    let mut transform = CMatrix::identity(d);
    let mut table = raw.clone();
    // One pass is exact in real arithmetic; further passes mop up the
    // rounding left by ill-conditioned raw bases such as monomials.
    for pass in 0..3 {
        let gram = weighted_gram(&table, measure.masses());
        if gram.max_abs_diff(&CMatrix::identity(d)) <= ORTHONORMAL_TOLERANCE * 1e-2 {
            break;
        }
        let eig = hermitian_eigen(&gram);
        let lambda_max = *eig.values.last().unwrap();
        let lambda_min = eig.values[0];
        if !(lambda_max > 0.0) || lambda_min < RANK_TOLERANCE * lambda_max {
            return Err(Error::DegenerateFamily(format!(
                "Gram matrix is rank-deficient (λ_min = {lambda_min:e}, λ_max = {lambda_max:e}, pass {pass})"
            )));
        }
        let inv_sqrt = eig.apply(|l| 1.0 / math::sqrt(l));
        transform = inv_sqrt.mul(&transform);
        table = apply_rows(&raw, &transform);
    }
    let residual = weighted_gram(&table, measure.masses()).max_abs_diff(&CMatrix::identity(d));
    if residual > ORTHONORMAL_TOLERANCE {
        return Err(Error::DegenerateFamily(format!("orthonormalization stalled at ‖G − I‖_max = {residual:e}")));
    }

    let leverage = (0..n).map(|i| linalg::norm_sqr(table.row(i))).collect();
    Ok(OrthonormalFamily { basis: basis.clone(), measure, transform, gram_residual: residual, table, leverage })
}

/// `Σ_x p(x) b(x) b(x)^*`.
fn weighted_gram(table: &CMatrix, masses: &[f64]) -> CMatrix {
    let d = table.cols();
    let mut g = CMatrix::zeros(d, d);
    for (i, &p) in masses.iter().enumerate() {
        if p > 0.0 {
            accumulate_outer(&mut g, table.row(i), p, false);
        }
    }
    symmetrize(&mut g);
    g
}

/// Row `i` of the result is `T · raw.row(i)`.
fn apply_rows(raw: &CMatrix, transform: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(raw.rows(), raw.cols());
    for i in 0..raw.rows() {
        let v = transform.matvec(raw.row(i));
        out.row_mut(i).copy_from_slice(&v);
    }
    out
}

impl OrthonormalFamily {
    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn measure_arc(&self) -> &Arc<Measure> {
        &self.measure
    }

    pub fn transform(&self) -> &CMatrix {
        &self.transform
    }

    /// `‖G − I‖_max` measured after construction.
    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }

    /// Orthonormal values `v(x)` at support point `i` of the reference measure.
    pub fn values_at_index(&self, i: usize) -> &[C64] {
        self.table.row(i)
    }

    /// The `n × d` table of `v` over the reference support.
    pub fn value_table(&self) -> &CMatrix {
        &self.table
    }

    /// `Σ_i |v_i(x)|²` at support point `i`.
    pub fn leverage_at_index(&self, i: usize) -> f64 {
        self.leverage[i]
    }

    pub fn leverage_table(&self) -> &[f64] {
        &self.leverage
    }

    pub fn values(&self, x: f64) -> Result<Vec<C64>> {
        if let Some(i) = self.measure.index_of(x) {
            return Ok(self.table.row(i).to_vec());
        }
        let raw = self.basis.evaluate(x)?;
        Ok(self.transform.matvec(&raw))
    }

    /// `sup_{h∈F} |h(x)|²/‖h‖²_D = Σ_i |v_i(x)|²`.
    pub fn leverage(&self, x: f64) -> Result<f64> {
        if let Some(i) = self.measure.index_of(x) {
            return Ok(self.leverage[i]);
        }
        Ok(linalg::norm_sqr(&self.values(x)?))
    }

    /// `E_{x∼D}[leverage(x)]`; equals `d` for any family.
    pub fn expected_leverage(&self) -> f64 {
        self.measure.expectation(|i, _| self.leverage[i])
    }

    /// `sup_x D(x)/D'(x) · leverage(x)` over the support of `D`, or `+∞`
    /// when `D'` misses a point where `D` and the leverage are positive.
    pub fn condition_number(&self, d_prime: &Measure) -> f64 {
        let mut sup: f64 = 0.0;
        for (i, (&x, &p)) in self.measure.support().iter().zip(self.measure.masses()).enumerate() {
            if p == 0.0 || self.leverage[i] == 0.0 {
                continue;
            }
            let q = d_prime.mass_at(x);
            if q == 0.0 {
                return f64::INFINITY;
            }
            sup = sup.max(p / q * self.leverage[i]);
        }
        sup
    }

    /// `Σ_i α_i v_i(x)`.
    pub fn evaluate(&self, coeffs: &CoefficientVector, x: f64) -> Result<C64> {
        self.check_len(coeffs)?;
        Ok(linalg::dot(&self.values(x)?, coeffs.as_slice()))
    }

    pub fn evaluate_at_index(&self, coeffs: &CoefficientVector, i: usize) -> C64 {
        linalg::dot(self.table.row(i), coeffs.as_slice())
    }

    /// Orthogonal projection onto the family of a function given by its
    /// values on the reference support: `α_i = E_D[h(x) conj(v_i(x))]`.
    pub fn project(&self, values: &[C64]) -> Result<CoefficientVector> {
        if values.len() != self.measure.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                self.measure.len(),
                values.len()
            )));
        }
        let d = self.dimension();
        let mut alpha = vec![C64::new(0.0, 0.0); d];
        for (i, (&h, &p)) in values.iter().zip(self.measure.masses()).enumerate() {
            if p == 0.0 {
                continue;
            }
            for (a, v) in alpha.iter_mut().zip(self.table.row(i)) {
                *a += v.conj() * h * p;
            }
        }
        Ok(CoefficientVector(alpha))
    }

    /// Values of a family member on the reference support.
    pub fn values_on_support(&self, coeffs: &CoefficientVector) -> Result<Vec<C64>> {
        self.check_len(coeffs)?;
        Ok((0..self.measure.len()).map(|i| self.evaluate_at_index(coeffs, i)).collect())
    }

    /// `‖h‖²_D` for `h` given by its values on the reference support.
    pub fn norm_sqr_of_values(&self, values: &[C64]) -> f64 {
        values.iter().zip(self.measure.masses()).map(|(v, p)| p * v.norm_sqr()).sum()
    }

    fn check_len(&self, coeffs: &CoefficientVector) -> Result<()> {
        if coeffs.len() != self.dimension() {
            return Err(Error::InvalidParameter(format!(
                "coefficient vector has length {}, family dimension is {}",
                coeffs.len(),
                self.dimension()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TrialRng;

    fn uniform(n: usize) -> Arc<Measure> {
        Arc::new(Measure::uniform_grid(n).unwrap())
    }

    fn gram_residual_of(fam: &OrthonormalFamily) -> f64 {
        weighted_gram(fam.value_table(), fam.measure().masses()).max_abs_diff(&CMatrix::identity(fam.dimension()))
    }

    #[test]
    fn indicator_on_uniform_is_scaled_identity() {
        let d = 6;
        let pts: Vec<f64> = (1..=d).map(|i| i as f64).collect();
        let measure = Arc::new(Measure::uniform_over(&pts, "u").unwrap());
        let fam = orthonormalize(&BasisSpec::new(BasisKind::Indicator(d)).unwrap(), measure).unwrap();
        let root_d = (d as f64).sqrt();
        for (i, &x) in pts.iter().enumerate() {
            let v = fam.values(x).unwrap();
            for (j, z) in v.iter().enumerate() {
                let expect = if i == j { root_d } else { 0.0 };
                assert!((z.re - expect).abs() < 1e-12 && z.im.abs() < 1e-12);
            }
            assert!((fam.leverage(x).unwrap() - d as f64).abs() < 1e-12);
        }
        assert!(fam.gram_residual() <= ORTHONORMAL_TOLERANCE);
        assert!((fam.condition_number(fam.measure()) - d as f64).abs() < 1e-10);
        let e1 = CoefficientVector::unit(d, 0);
        assert!((fam.evaluate(&e1, 1.0).unwrap().re - root_d).abs() < 1e-12);
        assert_eq!(fam.evaluate(&CoefficientVector::zeros(d), 3.0).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn linear_monomials_match_legendre_normalization() {
        // Exact integration: ∫_{-1}^{1} x² dx/2 = 1/3, so v_2 = √3·x in the
        // limit. The 1001-point grid's second moment is 1002/3000, a relative
        // quadrature error of 1e-3.
        let fam = orthonormalize(&BasisSpec::monomial(1), uniform(1001)).unwrap();
        let root3 = 3f64.sqrt();
        for &x in &[-1.0, -0.3, 0.0, 0.55, 1.0] {
            let v = fam.values(x).unwrap();
            assert!((v[0].norm() - 1.0).abs() < 1e-3, "v1({x}) = {}", v[0]);
            assert!((v[1].norm() - root3 * f64::abs(x)).abs() <= 1e-3 * root3, "v2({x}) = {}", v[1]);
        }
    }

    #[test]
    fn too_many_functions_for_support_is_degenerate() {
        let err = orthonormalize(&BasisSpec::monomial(50), uniform(10)).unwrap_err();
        assert!(matches!(err, Error::DegenerateFamily(_)));
        // Two identical exponentials: rank one.
        let dup = BasisSpec::new(BasisKind::FourierGrid(vec![0.5, 0.5])).unwrap();
        assert!(matches!(orthonormalize(&dup, uniform(50)), Err(Error::DegenerateFamily(_))));
    }

    #[test]
    fn evaluation_errors() {
        let fam = orthonormalize(&BasisSpec::legendre(2), uniform(11)).unwrap();
        assert!(matches!(fam.leverage(1.5), Err(Error::Evaluation { .. })));
        let ind = BasisSpec::new(BasisKind::Indicator(3)).unwrap();
        assert!(ind.evaluate(2.5).is_err());
        assert!(ind.evaluate(4.0).is_err());
        let table = CustomTable::new(vec![0.0, 1.0], vec![vec![C64::new(1.0, 0.0)], vec![C64::new(2.0, 0.0)]]).unwrap();
        let custom = BasisSpec::new(BasisKind::Custom(table)).unwrap();
        assert!(custom.evaluate(0.5).is_err());
        assert_eq!(custom.evaluate(1.0).unwrap(), vec![C64::new(2.0, 0.0)]);
    }

    #[test]
    fn polynomial_leverage_at_endpoint_is_d_squared() {
        // Orthonormal Legendre values at 1 are √(2i+1), so Σ (2i+1) = d².
        for d in [2usize, 5, 10] {
            let fam = orthonormalize(&BasisSpec::monomial(d - 1), uniform(20_001)).unwrap();
            let lev = fam.leverage(1.0).unwrap();
            let exact = (0..d).map(|i| (2 * i + 1) as f64).sum::<f64>();
            assert_eq!(exact, (d * d) as f64);
            assert!((lev / exact - 1.0).abs() < 0.01, "d={d}: {lev}");
        }
    }

    #[test]
    fn expected_leverage_is_dimension() {
        let mut rng = TrialRng::new(3);
        for d in [1usize, 3, 8] {
            let n = 40;
            let pts: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.uniform() + 0.01).collect();
            let measure = Arc::new(Measure::from_weights(pts.clone(), &weights, "rand").unwrap());
            let rows: Vec<Vec<C64>> =
                (0..n).map(|_| (0..d).map(|_| C64::new(rng.gaussian(), rng.gaussian())).collect()).collect();
            let basis = BasisSpec::new(BasisKind::Custom(CustomTable::new(pts, rows).unwrap())).unwrap();
            let fam = orthonormalize(&basis, measure).unwrap();
            assert!((fam.expected_leverage() - d as f64).abs() < 1e-9);
            assert!(gram_residual_of(&fam) <= ORTHONORMAL_TOLERANCE);
        }
    }

    #[test]
    fn ill_conditioned_monomials_still_orthonormal() {
        let fam = orthonormalize(&BasisSpec::monomial(9), uniform(1001)).unwrap();
        assert!(gram_residual_of(&fam) <= ORTHONORMAL_TOLERANCE);
        assert!((fam.expected_leverage() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn evaluate_matches_naive_summation() {
        let fam = orthonormalize(&BasisSpec::chebyshev(6), uniform(301)).unwrap();
        let mut rng = TrialRng::new(8);
        let coeffs = CoefficientVector((0..7).map(|_| C64::new(rng.gaussian(), rng.gaussian())).collect());
        for &x in &[-0.91, -0.2, 0.0, 0.123, 0.77] {
            // Naive: raw basis by direct formula cos(k acos x), transform, sum.
            let raw: Vec<C64> = (0..7).map(|k| C64::new(libm::cos(k as f64 * libm::acos(x)), 0.0)).collect();
            let mut naive = C64::new(0.0, 0.0);
            for i in 0..7 {
                let mut vi = C64::new(0.0, 0.0);
                for j in 0..7 {
                    vi += fam.transform()[(i, j)] * raw[j];
                }
                naive += coeffs.0[i] * vi;
            }
            let fast = fam.evaluate(&coeffs, x).unwrap();
            assert!((fast - naive).norm() < 1e-12, "{fast} vs {naive}");
        }
    }

    #[test]
    fn coefficient_norm_is_function_norm() {
        let fam = orthonormalize(&BasisSpec::legendre(4), uniform(201)).unwrap();
        let coeffs = CoefficientVector(vec![
            C64::new(0.3, -1.0),
            C64::new(2.0, 0.0),
            C64::new(0.0, 0.5),
            C64::new(-1.0, 0.1),
            C64::new(0.7, 0.7),
        ]);
        let values = fam.values_on_support(&coeffs).unwrap();
        assert!((fam.norm_sqr_of_values(&values) - coeffs.norm_sqr()).abs() < 1e-10);
        let back = fam.project(&values).unwrap();
        assert!(back.distance_sqr(&coeffs) < 1e-20);
    }
}
