//! Small dense complex linear algebra.
//!
//! Every matrix in this crate is at most a few thousand rows by a few dozen
//! columns, so a row-major `Vec` with cyclic Jacobi for Hermitian spectra and
//! a plain Cholesky factorization is all that is needed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math;
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len(), "dimension mismatch in matvec");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `A^* x`.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.rows, x.len(), "dimension mismatch in adjoint matvec");
        let mut out = vec![ZERO; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    /// `A^* A`, Hermitian by construction.
    pub fn gram(&self) -> CMatrix {
        let d = self.cols;
        let mut g = Self::zeros(d, d);
        for i in 0..self.rows {
            accumulate_outer(&mut g, self.row(i), 1.0, true);
        }
        symmetrize(&mut g);
        g
    }

    /// Largest absolute entry of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &CMatrix) -> f64 {
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Unconjugated bilinear product `Σ a_i b_i`.
#[inline]
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (&x, &y)| acc + x * y)
}

/// Hermitian inner product `Σ conj(a_i) b_i`.
#[inline]
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (&x, &y)| acc + x.conj() * y)
}

#[inline]
pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `m += scale * conj(u) u^T` when `conj_left`, else `m += scale * u u^*`.
///
/// Only the lower triangle is accumulated; call [`symmetrize`] afterwards.
pub fn accumulate_outer(m: &mut CMatrix, u: &[C64], scale: f64, conj_left: bool) {
    let d = u.len();
    for i in 0..d {
        let ui = if conj_left { u[i].conj() } else { u[i] } * scale;
        let row = m.row_mut(i);
        for j in 0..=i {
            let uj = if conj_left { u[j] } else { u[j].conj() };
            row[j] += ui * uj;
        }
    }
}

/// Copies the lower triangle onto the upper one and zeroes imaginary parts
/// on the diagonal.
pub fn symmetrize(m: &mut CMatrix) {
    let n = m.rows();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in 0..i {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `V f(Λ) V^*` for a spectral function `f`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let fk = f(lambda);
            for i in 0..n {
                let vik = self.vectors[(i, k)] * fk;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        symmetrize(&mut out);
        out
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Only the Hermitian part of `a` is used. Converges quadratically; for the
/// sizes used here (d ≤ 100) a handful of sweeps suffice.
pub fn hermitian_eigen(a: &CMatrix) -> HermitianEigen {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigen-decomposition needs a square matrix");
    let mut m = a.clone();
    symmetrize_avg(&mut m);
    let mut v = CMatrix::identity(n);
    let scale = math::sqrt(m.frobenius_norm_sqr()).max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += m[(i, j)].norm_sqr();
            }
        }
        if math::sqrt(off) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 || r <= 1e-17 * scale {
                    m[(p, q)] = ZERO;
                    m[(q, p)] = ZERO;
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + math::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                // J = diag(1, conj(phase)) · [[c, s], [-s, c]] on the (p, q) plane.
                let j_pp = C64::new(c, 0.0);
                let j_pq = C64::new(s, 0.0);
                let j_qp = phase.conj() * (-s);
                let j_qq = phase.conj() * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * j_pp + mkq * j_qp;
                    m[(k, q)] = mkp * j_pq + mkq * j_qq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = j_pp.conj() * mpk + j_qp.conj() * mqk;
                    m[(q, k)] = j_pq.conj() * mpk + j_qq.conj() * mqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(app - t * r, 0.0);
                m[(q, q)] = C64::new(aqq + t * r, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * j_pp + vkq * j_qp;
                    v[(k, q)] = vkp * j_pq + vkq * j_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].re.total_cmp(&m[(y, y)].re));
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (new_k, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_k)] = v[(i, k)];
        }
    }
    HermitianEigen { values, vectors }
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    hermitian_eigen(a).values
}

fn symmetrize_avg(m: &mut CMatrix) {
    let n = m.rows();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in 0..i {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Cholesky factor `L` (lower triangular, real positive diagonal) with
/// `L L^* = a`. Fails with the offending pivot when `a` is not numerically
/// positive definite.
pub fn cholesky(a: &CMatrix) -> core::result::Result<CMatrix, f64> {
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(diag);
        }
        let ljj = math::sqrt(diag);
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = sum / ljj;
        }
    }
    Ok(l)
}

/// Solves `L L^* x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &CMatrix, b: &[C64]) -> Vec<C64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut sum = y[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)].re;
    }
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[(k, i)].conj() * y[k];
        }
        y[i] = sum / l[(i, i)].re;
    }
    y
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
pub fn lower_triangular_inverse(l: &CMatrix) -> CMatrix {
    let n = l.rows();
    let mut x = CMatrix::zeros(n, n);
    for j in 0..n {
        x[(j, j)] = ONE / l[(j, j)];
        for i in (j + 1)..n {
            let mut sum = ZERO;
            for k in j..i {
                sum += l[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = -sum / l[(i, i)];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = crate::rng::TrialRng::new(seed);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let z = if i == j { c(rng.gaussian(), 0.0) } else { c(rng.gaussian(), rng.gaussian()) };
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn jacobi_reconstructs_hermitian_matrix() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (12, 4), (30, 5)] {
            let a = random_hermitian(n, seed);
            let eig = hermitian_eigen(&a);
            let rebuilt = eig.apply(|x| x);
            assert!(rebuilt.max_abs_diff(&a) < 1e-11, "n={n}");
            let vv = eig.vectors.adjoint().mul(&eig.vectors);
            assert!(vv.max_abs_diff(&CMatrix::identity(n)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn jacobi_known_spectrum() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let a = CMatrix::from_row_major(2, 2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let vals = hermitian_eigenvalues(&a);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_solves_and_inverts() {
        let b = random_hermitian(8, 9);
        let a = b.mul(&b).mul(&CMatrix::identity(8));
        let mut spd = a.clone();
        for i in 0..8 {
            spd[(i, i)] += c(0.5, 0.0);
        }
        let l = cholesky(&spd).unwrap();
        assert!(l.mul(&l.adjoint()).max_abs_diff(&spd) < 1e-12);
        let rhs: Vec<C64> = (0..8).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let x = cholesky_solve(&l, &rhs);
        let back = spd.matvec(&x);
        for (u, v) in back.iter().zip(&rhs) {
            assert!((u - v).norm() < 1e-10);
        }
        let linv = lower_triangular_inverse(&l);
        assert!(linv.mul(&l).max_abs_diff(&CMatrix::identity(8)) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CMatrix::from_real_diagonal(&[1.0, -1e-3, 2.0]);
        assert!(cholesky(&a).is_err());
    }

    #[test]
    fn gram_matches_explicit_product() {
        let mut rng = crate::rng::TrialRng::new(11);
        let data = (0..7 * 3).map(|_| c(rng.gaussian(), rng.gaussian())).collect();
        let a = CMatrix::from_row_major(7, 3, data);
        assert!(a.gram().max_abs_diff(&a.adjoint().mul(&a)) < 1e-13);
    }
}
