//! Dense complex linear algebra.
//!
//! Everything in the crate runs through [`ComplexMatrix`], a row-major dense
//! matrix of `Complex64`. The eigensolver is a cyclic Jacobi iteration for
//! Hermitian matrices and the SVD is one-sided Jacobi; both are deterministic,
//! which keeps every downstream result reproducible bit for bit. Dimensions
//! stay small (tens, not thousands), so simplicity wins over speed.

use num_complex::Complex64;

use crate::{Error, Result};

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Build from row-major data, validating length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidData("zero dimension".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidData(format!(
                "expected {} entries for {}x{}, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Diagonal matrix from real entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Rank-one matrix `|u><v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row_major(&self) -> &[Complex64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.at(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }

    /// Frobenius norm `sqrt(Tr(A^dag A))`.
    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `A - A^dag`.
    pub fn herm_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += (self.at(i, j) - self.at(j, i).conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Hermitian part `(A + A^dag)/2`.
    pub fn herm_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self.at(i, j) + self.at(j, i).conj()) * 0.5
        })
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }
}

/// `<u|v>` with the physics convention (conjugate-linear in the first slot).
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm, exposed as a free function to mirror the matrix 2-norm.
pub fn frob_norm(a: &ComplexMatrix) -> f64 {
    a.frob_norm()
}

/// Kronecker (tensor) product.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a.at(i / br, j / bc) * b.at(i % br, j % bc)
    })
}

/// Which side of a bipartite system to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of a bipartite operator with subsystem dimensions `(d_a, d_b)`.
pub fn partial_trace(rho: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    let n = da * db;
    if !rho.is_square() || rho.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects {}x{} for dims ({},{}), got {}x{}",
            n,
            n,
            da,
            db,
            rho.rows(),
            rho.cols()
        )));
    }
    let out = match keep {
        Keep::A => ComplexMatrix::from_fn(da, da, |i, ip| {
            (0..db).map(|j| rho.at(i * db + j, ip * db + j)).sum()
        }),
        Keep::B => ComplexMatrix::from_fn(db, db, |j, jp| {
            (0..da).map(|i| rho.at(i * db + j, i * db + jp)).sum()
        }),
    };
    Ok(out)
}

/// Partial trace over an arbitrary subset of subsystems.
///
/// `keep[k]` marks whether subsystem `k` survives; the kept subsystems retain
/// their relative order.
pub fn partial_trace_multi(
    rho: &ComplexMatrix,
    dims: &[usize],
    keep: &[bool],
) -> Result<ComplexMatrix> {
    if dims.len() != keep.len() {
        return Err(Error::DimensionMismatch(
            "dims/keep length mismatch".into(),
        ));
    }
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.rows() != total {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects {}x{}, got {}x{}",
            total,
            total,
            rho.rows(),
            rho.cols()
        )));
    }
    let kept_dim: usize = dims
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(d, _)| d)
        .product();
    let n = dims.len();
    let decode = |mut idx: usize| -> Vec<usize> {
        let mut digits = vec![0usize; n];
        for k in (0..n).rev() {
            digits[k] = idx % dims[k];
            idx /= dims[k];
        }
        digits
    };
    let kept_index = |digits: &[usize]| -> usize {
        let mut idx = 0usize;
        for k in 0..n {
            if keep[k] {
                idx = idx * dims[k] + digits[k];
            }
        }
        idx
    };
    let mut out = ComplexMatrix::zeros(kept_dim.max(1), kept_dim.max(1));
    for bi in 0..total {
        let di = decode(bi);
        for bj in 0..total {
            let dj = decode(bj);
            let traced_match = (0..n).all(|k| keep[k] || di[k] == dj[k]);
            if !traced_match {
                continue;
            }
            let (i, j) = (kept_index(&di), kept_index(&dj));
            let v = out.at(i, j) + rho.at(bi, bj);
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Result of a Hermitian eigendecomposition: `A = V diag(values) V^dag`.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues, sorted descending (ties keep original order).
    pub values: Vec<f64>,
    /// Eigenvectors as columns, orthonormal.
    pub vectors: ComplexMatrix,
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// `tol` bounds the accepted Hermiticity deviation relative to
/// `max(1, ||A||_F)`.
pub fn herm_eig(a: &ComplexMatrix, tol: f64) -> Result<HermEig> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let scale = a.frob_norm().max(1.0);
    let dev = a.herm_deviation();
    if dev > tol * scale {
        return Err(Error::NotHermitian {
            deviation: dev,
            tol: tol * scale,
        });
    }
    let n = a.rows();
    let mut m = a.herm_part();
    let mut v = ComplexMatrix::identity(n);

    let off = |m: &ComplexMatrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                acc += m.at(i, j).norm_sqr();
            }
        }
        acc.sqrt()
    };

    let norm = m.frob_norm().max(f64::MIN_POSITIVE);
    let target = 1e-14 * norm;
    let max_sweeps = 80;
    let mut converged = off(&m) <= target;
    for _ in 0..max_sweeps {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
        converged = off(&m) <= target;
    }
    if !converged {
        return Err(Error::NumericalFailure(
            "Jacobi eigensolver did not converge".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.at(j, j)
            .re
            .partial_cmp(&m.at(i, i).re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| m.at(i, i).re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v.at(i, order[j]));
    Ok(HermEig { values, vectors })
}

/// One complex Jacobi rotation zeroing `m[p][q]`, accumulated into `v`.
fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m.at(p, q);
    let h = apq.norm();
    let app = m.at(p, p).re;
    let aqq = m.at(q, q).re;
    if h <= 1e-300 || h <= 1e-16 * (app.abs() + aqq.abs()) {
        return;
    }
    let phase = apq / h;
    let tau = (app - aqq) / (2.0 * h);
    let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
    let t = -sign / (tau.abs() + (1.0 + tau * tau).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = m.rows();
    // Columns: col_p <- c*col_p - s*conj(phase)*col_q; col_q <- s*phase*col_p + c*col_q.
    for r in 0..n {
        let mp = m.at(r, p);
        let mq = m.at(r, q);
        m.set(r, p, mp * c - mq * s * phase.conj());
        m.set(r, q, mp * s * phase + mq * c);
    }
    // Rows: row_p <- c*row_p - s*phase*row_q; row_q <- s*conj(phase)*row_p + c*row_q.
    for rcol in 0..n {
        let mp = m.at(p, rcol);
        let mq = m.at(q, rcol);
        m.set(p, rcol, mp * c - mq * s * phase);
        m.set(q, rcol, mp * s * phase.conj() + mq * c);
    }
    // Clean up rounding residue on the pivot pair.
    m.set(p, q, Complex64::new(0.0, 0.0));
    m.set(q, p, Complex64::new(0.0, 0.0));
    let dpp = m.at(p, p);
    let dqq = m.at(q, q);
    m.set(p, p, Complex64::new(dpp.re, 0.0));
    m.set(q, q, Complex64::new(dqq.re, 0.0));

    for r in 0..v.rows() {
        let vp = v.at(r, p);
        let vq = v.at(r, q);
        v.set(r, p, vp * c - vq * s * phase.conj());
        v.set(r, q, vp * s * phase + vq * c);
    }
}

/// Thin singular value decomposition `A = U diag(sigma) V^dag`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

/// One-sided Jacobi SVD. Handles any rectangular shape.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    if a.rows() < a.cols() {
        let t = svd_tall(&a.dagger())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    svd_tall(a)
}

fn svd_tall(a: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    let mut b = a.clone();
    let mut v = ComplexMatrix::identity(n);

    // Columns below this norm cannot influence singular values at working
    // precision; rotating them forever is the classic rank-deficient
    // livelock.
    let negligible = (1e-14 * a.frob_norm()).powi(2);

    let max_sweeps = 60;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    let bp = b.at(r, p);
                    let bq = b.at(r, q);
                    alpha += bp.norm_sqr();
                    beta += bq.norm_sqr();
                    gamma += bp.conj() * bq;
                }
                let h = gamma.norm();
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                if h <= 1e-300 || h <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / h;
                let tau = (alpha - beta) / (2.0 * h);
                let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
                let t = -sign / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..m {
                    let bp = b.at(r, p);
                    let bq = b.at(r, q);
                    b.set(r, p, bp * c - bq * s * phase.conj());
                    b.set(r, q, bp * s * phase + bq * c);
                }
                for r in 0..n {
                    let vp = v.at(r, p);
                    let vq = v.at(r, q);
                    v.set(r, p, vp * c - vq * s * phase.conj());
                    v.set(r, q, vp * s * phase + vq * c);
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(
            "one-sided Jacobi SVD did not converge".into(),
        ));
    }

    let mut sigma: Vec<f64> = (0..n).map(|j| vec_norm(&b.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    sigma = order.iter().map(|&j| sigma[j]).collect();
    let b_sorted = ComplexMatrix::from_fn(m, n, |i, j| b.at(i, order[j]));
    let v_sorted = ComplexMatrix::from_fn(n, n, |i, j| v.at(i, order[j]));

    // Normalize columns into U; complete null-space columns by Gram-Schmidt
    // against the canonical basis.
    let smax = sigma.first().copied().unwrap_or(0.0);
    let cutoff = smax * 1e-13;
    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        if sigma[j] > cutoff && sigma[j] > 0.0 {
            let col = b_sorted.column(j);
            u_cols.push(col.iter().map(|z| z / sigma[j]).collect());
        } else {
            let mut found = None;
            for k in 0..m {
                let mut cand = vec![Complex64::new(0.0, 0.0); m];
                cand[k] = Complex64::new(1.0, 0.0);
                for existing in &u_cols {
                    let ov = inner(existing, &cand);
                    for (c, e) in cand.iter_mut().zip(existing) {
                        *c -= ov * e;
                    }
                }
                let nrm = vec_norm(&cand);
                if nrm > 0.5 {
                    for c in cand.iter_mut() {
                        *c /= nrm;
                    }
                    found = Some(cand);
                    break;
                }
            }
            match found {
                Some(col) => u_cols.push(col),
                None => {
                    return Err(Error::NumericalFailure(
                        "failed to complete singular basis".into(),
                    ))
                }
            }
        }
    }
    let u = ComplexMatrix::from_fn(m, n, |i, j| u_cols[j][i]);
    Ok(Svd {
        u,
        sigma,
        v: v_sorted,
    })
}

/// Trace norm `||A||_1 = Tr sqrt(A^dag A)`, the sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(svd(a)?.sigma.iter().sum())
}

/// Unitary factor `U` of the polar decomposition `A = U P`, `P` PSD.
pub fn polar_unitary(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let s = svd(a)?;
    Ok(s.u.matmul(&s.v.dagger()))
}

/// Principal square root of a PSD Hermitian matrix.
///
/// Eigenvalues in `[-tol, 0]` are clamped to zero; anything below `-tol`
/// is an error.
pub fn matrix_sqrt_psd(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(a, tol.max(1e-9))?;
    let n = a.rows();
    let mut roots = Vec::with_capacity(n);
    for &lam in &eig.values {
        if lam < -tol {
            return Err(Error::NotPsd {
                eigenvalue: lam,
                tol,
            });
        }
        roots.push(lam.max(0.0).sqrt());
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        if roots[k] == 0.0 {
            continue;
        }
        let col = eig.vectors.column(k);
        for i in 0..n {
            for j in 0..n {
                let v = out.at(i, j) + col[i] * col[j].conj() * roots[k];
                out.set(i, j, v);
            }
        }
    }
    Ok(out)
}

/// Reconstruct `V diag(values) V^dag`.
pub fn reconstruct(eig: &HermEig) -> ComplexMatrix {
    let n = eig.values.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let col = eig.vectors.column(k);
        for i in 0..n {
            for j in 0..n {
                let v = out.at(i, j) + col[i] * col[j].conj() * eig.values[k];
                out.set(i, j, v);
            }
        }
    }
    out
}
