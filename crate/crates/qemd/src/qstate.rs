//! Quantum-state primitives.
//!
//! Density matrices carry an explicit tensor factorization (`dims`), pure
//! states are unit vectors with the same bookkeeping, and all the standard
//! comparison functionals live here: fidelity `F = Tr sqrt(sqrt(rho) sigma
//! sqrt(rho))`, trace distance `D = ||rho - sigma||_1 / 2`, swap-symmetry
//! statistics, purification, and the aligned two-ensemble decomposition that
//! realizes the fidelity as an overlap sum.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{
    herm_eig, inner, kron, matrix_sqrt_psd, partial_trace, polar_unitary, trace_norm, vec_norm,
    ComplexMatrix, Keep,
};
use crate::{Error, Result};

const DEFAULT_TOL: f64 = 1e-9;

/// Density matrix: PSD, unit trace, with declared subsystem dimensions.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validate Hermiticity, positivity and unit trace at the default 1e-9.
    pub fn new(mat: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::with_tol(mat, dims, DEFAULT_TOL)
    }

    pub fn with_tol(mat: ComplexMatrix, dims: Vec<usize>, tol: f64) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.is_empty() || !mat.is_square() || mat.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but dims {:?} give {}",
                mat.rows(),
                mat.cols(),
                dims,
                n
            )));
        }
        let dev = mat.herm_deviation();
        if dev > tol {
            return Err(Error::NotHermitian {
                deviation: dev,
                tol,
            });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidData(format!(
                "trace {} is not 1 within {tol}",
                tr.re
            )));
        }
        let eig = herm_eig(&mat, tol.max(DEFAULT_TOL))?;
        if let Some(&min) = eig.values.last() {
            if min < -tol {
                return Err(Error::NotPsd {
                    eigenvalue: min,
                    tol,
                });
            }
        }
        Ok(Self { mat, dims })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            mat: ComplexMatrix::outer(psi.vec(), psi.vec()),
            dims: psi.dims().to_vec(),
        }
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total dimension.
    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Reinterpret the same matrix with a different factorization.
    pub fn refactor(&self, dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot refactor dimension {} as {:?}",
                self.dim(),
                dims
            )));
        }
        Ok(Self {
            mat: self.mat.clone(),
            dims,
        })
    }

    /// Marginal of one side of a bipartite state.
    pub fn marginal(&self, keep: Keep) -> Result<DensityMatrix> {
        if self.dims.len() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "marginal needs a bipartite state, have dims {:?}",
                self.dims
            )));
        }
        let red = partial_trace(&self.mat, (self.dims[0], self.dims[1]), keep)?;
        let d = match keep {
            Keep::A => self.dims[0],
            Keep::B => self.dims[1],
        };
        Ok(DensityMatrix {
            mat: red,
            dims: vec![d],
        })
    }
}

/// Pure state: unit vector with declared subsystem dimensions.
#[derive(Debug, Clone)]
pub struct PureState {
    vec: Vec<Complex64>,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(vec: Vec<Complex64>, dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.is_empty() || vec.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} does not match dims {:?}",
                vec.len(),
                dims
            )));
        }
        let nrm = vec_norm(&vec);
        if (nrm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(nrm));
        }
        Ok(Self { vec, dims })
    }

    /// Computational basis state `|k>`.
    pub fn basis(dim: usize, k: usize, dims: Vec<usize>) -> Result<Self> {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[k] = Complex64::new(1.0, 0.0);
        Self::new(v, dims)
    }

    pub fn vec(&self) -> &[Complex64] {
        &self.vec
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }
}

/// Completely positive trace-preserving map given by Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validates the completeness relation `sum K^dag K = I` within 1e-9.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidData("empty Kraus list".into()));
        }
        let (din, dout) = (kraus[0].cols(), kraus[0].rows());
        if kraus.iter().any(|k| k.cols() != din || k.rows() != dout) {
            return Err(Error::DimensionMismatch(
                "inconsistent Kraus operator shapes".into(),
            ));
        }
        let mut acc = ComplexMatrix::zeros(din, din);
        for k in &kraus {
            acc = acc.add(&k.dagger().matmul(k));
        }
        let dev = acc.sub(&ComplexMatrix::identity(din)).frob_norm();
        if dev > 1e-9 {
            return Err(Error::InvalidData(format!(
                "Kraus completeness violated by {dev:.3e}"
            )));
        }
        Ok(Self { kraus })
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn dim_in(&self) -> usize {
        self.kraus[0].cols()
    }

    pub fn dim_out(&self) -> usize {
        self.kraus[0].rows()
    }
}

/// Swap-projector statistics of a bipartite state with equal local dimensions.
///
/// `p = (Tr(P_as rho), Tr(P_s rho))` and `q` is `p` reversed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryStats {
    pub p: (f64, f64),
    pub q: (f64, f64),
}

impl SymmetryStats {
    pub fn antisym(&self) -> f64 {
        self.p.0
    }

    pub fn sym(&self) -> f64 {
        self.p.1
    }

    /// Total-variation distance between `p` and `q`: `|Tr(P_as) - Tr(P_s)|`.
    pub fn stat_distance(&self) -> f64 {
        (self.p.0 - self.p.1).abs()
    }

    /// Classical fidelity between `p` and `q`: `2 sqrt(Tr(P_as) Tr(P_s))`.
    pub fn stat_fidelity(&self) -> f64 {
        2.0 * (self.p.0.max(0.0) * self.p.1.max(0.0)).sqrt()
    }
}

fn check_same_dim(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states have dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// Uhlmann fidelity `F(rho, sigma) = Tr sqrt(sqrt(rho) sigma sqrt(rho))`,
/// computed as `||sqrt(rho) sqrt(sigma)||_1`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    let sr = matrix_sqrt_psd(rho.mat(), DEFAULT_TOL)?;
    let ss = matrix_sqrt_psd(sigma.mat(), DEFAULT_TOL)?;
    let f = trace_norm(&sr.matmul(&ss))?;
    Ok(f.clamp(0.0, 1.0 + 1e-9))
}

/// Trace distance `D(rho, sigma) = ||rho - sigma||_1 / 2`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    let d = 0.5 * trace_norm(&rho.mat().sub(sigma.mat()))?;
    Ok(d.clamp(0.0, 1.0))
}

/// SWAP operator `S |i>|j> = |j>|i>` on a `d x d` bipartite space.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s.set(i * d + j, j * d + i, Complex64::new(1.0, 0.0));
        }
    }
    s
}

/// Projectors `(P_s, P_as) = ((I + S)/2, (I - S)/2)` onto the symmetric and
/// antisymmetric subspaces.
pub fn sym_projectors(d: usize) -> (ComplexMatrix, ComplexMatrix) {
    let s = swap_operator(d);
    let id = ComplexMatrix::identity(d * d);
    let ps = id.add(&s).scale_re(0.5);
    let pas = id.sub(&s).scale_re(0.5);
    (ps, pas)
}

/// Swap statistics of a bipartite state with equal local dimensions.
pub fn symmetry_stats(rho_ab: &DensityMatrix) -> Result<SymmetryStats> {
    let dims = rho_ab.dims();
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::DimensionMismatch(format!(
            "symmetry stats need equal local dimensions, have {:?}",
            dims
        )));
    }
    let d = dims[0];
    let s = swap_operator(d);
    // Tr(S rho) is real for Hermitian rho since S is Hermitian.
    let tr_swap = s.matmul(rho_ab.mat()).trace().re;
    let tr_s = 0.5 * (1.0 + tr_swap);
    let tr_as = 0.5 * (1.0 - tr_swap);
    Ok(SymmetryStats {
        p: (tr_as, tr_s),
        q: (tr_s, tr_as),
    })
}

/// Map a unit-2-norm `d x d` matrix to the bipartite pure state with
/// amplitudes `psi[i*d + j] = M[i][j]`, i.e. `(M ⊗ I)` applied to the
/// unnormalized maximally entangled vector.
pub fn vectorize(m: &ComplexMatrix) -> Result<PureState> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let nrm = m.frob_norm();
    if (nrm - 1.0).abs() > DEFAULT_TOL {
        return Err(Error::NotNormalized(nrm));
    }
    let d = m.rows();
    let mut v = m.row_major().to_vec();
    // Renormalize residual rounding so PureState validation passes cleanly.
    let exact = vec_norm(&v);
    for z in v.iter_mut() {
        *z /= exact;
    }
    PureState::new(v, vec![d, d])
}

/// Inverse of [`vectorize`]: matrix of amplitudes of a `d x d` pure state.
pub fn devectorize(psi: &PureState) -> Result<ComplexMatrix> {
    let dims = psi.dims();
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::DimensionMismatch(format!(
            "devectorize needs equal local dimensions, have {:?}",
            dims
        )));
    }
    let d = dims[0];
    ComplexMatrix::new(d, d, psi.vec().to_vec())
}

/// Split `M` into its symmetric and antisymmetric parts under transposition:
/// `E = (M + M^T)/2`, `F = (M - M^T)/2`.
pub fn ef_split(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let mt = m.transpose();
    (m.add(&mt).scale_re(0.5), m.sub(&mt).scale_re(0.5))
}

/// Purification: a pure state on `H ⊗ H` whose first marginal is `rho`.
pub fn purify(rho: &DensityMatrix) -> Result<PureState> {
    let d = rho.dim();
    let eig = herm_eig(rho.mat(), DEFAULT_TOL)?;
    let mut v = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        let w = eig.values[k].max(0.0).sqrt();
        if w == 0.0 {
            continue;
        }
        let col = eig.vectors.column(k);
        for i in 0..d {
            v[i * d + k] += col[i] * w;
        }
    }
    let nrm = vec_norm(&v);
    for z in v.iter_mut() {
        *z /= nrm;
    }
    PureState::new(v, vec![d, d])
}

/// Paired ensembles realizing the fidelity as an aligned overlap sum:
/// `rho = sum s_i |u_i><u_i|`, `sigma = sum t_i |v_i><v_i|` with `{v_i}`
/// orthonormal, `<v_i|u_i> >= 0`, and `sum sqrt(s_i t_i) <v_i|u_i> = F`.
#[derive(Debug, Clone)]
pub struct AlignedDecomposition {
    pub terms: Vec<AlignedPair>,
}

#[derive(Debug, Clone)]
pub struct AlignedPair {
    pub s: f64,
    pub u: Vec<Complex64>,
    pub t: f64,
    pub v: Vec<Complex64>,
}

impl AlignedDecomposition {
    /// `sum sqrt(s_i t_i) <v_i|u_i>` (real part; imaginary parts are rounding).
    pub fn alignment_sum(&self) -> f64 {
        self.terms
            .iter()
            .map(|p| (p.s.max(0.0) * p.t.max(0.0)).sqrt() * inner(&p.v, &p.u).re)
            .sum()
    }
}

/// Aligned decomposition via the constructive form of Uhlmann's theorem.
///
/// Eigendecomposes `sigma` for `(t_i, v_i)`, takes the polar unitary `U` of
/// `sqrt(sigma) sqrt(rho)`, and slices `u_i` out of the optimal purification
/// of `rho` as `sqrt(rho) U^dag v_i`. Each `u_i` has its global phase fixed so
/// `<v_i|u_i>` is real nonnegative; zero-weight slices reuse `v_i`.
pub fn uhlmann_aligned(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<AlignedDecomposition> {
    check_same_dim(rho, sigma)?;
    let d = rho.dim();
    let eig_sigma = herm_eig(sigma.mat(), DEFAULT_TOL)?;
    let sqrt_rho = matrix_sqrt_psd(rho.mat(), DEFAULT_TOL)?;
    let sqrt_sigma = matrix_sqrt_psd(sigma.mat(), DEFAULT_TOL)?;
    let u_polar = polar_unitary(&sqrt_sigma.matmul(&sqrt_rho))?;
    let back = sqrt_rho.matmul(&u_polar.dagger());

    let mut terms = Vec::with_capacity(d);
    for i in 0..d {
        let t = eig_sigma.values[i].max(0.0);
        let v: Vec<Complex64> = eig_sigma.vectors.column(i);
        let w = back.matvec(&v);
        let s = w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let u = if s > 1e-12 {
            let mut u: Vec<Complex64> = w.iter().map(|z| z / s.sqrt()).collect();
            let ov = inner(&v, &u);
            if ov.norm() > 1e-12 {
                let phase = ov.conj() / ov.norm();
                for z in u.iter_mut() {
                    *z *= phase;
                }
            }
            u
        } else {
            v.clone()
        };
        terms.push(AlignedPair { s, u, t, v });
    }
    Ok(AlignedDecomposition { terms })
}

/// Deterministic Haar-random unitary: QR of a complex Gaussian matrix via
/// modified Gram-Schmidt (which fixes the R diagonal real positive).
pub fn haar_unitary(d: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = complex_gaussian(d, d, &mut rng);
    let mut cols: Vec<Vec<Complex64>> = (0..d).map(|j| g.column(j)).collect();
    for j in 0..d {
        // Two orthogonalization passes for stability.
        for _ in 0..2 {
            for k in 0..j {
                let ov = inner(&cols[k], &cols[j]);
                let prev = cols[k].clone();
                for (c, e) in cols[j].iter_mut().zip(&prev) {
                    *c -= ov * e;
                }
            }
        }
        let nrm = vec_norm(&cols[j]);
        for c in cols[j].iter_mut() {
            *c /= nrm;
        }
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

fn complex_gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let (a, b) = gauss_pair(rng);
        Complex64::new(a, b)
    })
}

/// Box-Muller standard normal pair.
fn gauss_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = loop {
        let x: f64 = rng.gen();
        if x > f64::MIN_POSITIVE {
            break x;
        }
    };
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

/// Random density matrix of the given rank (Ginibre construction).
pub fn random_density(d: usize, rank: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = complex_gaussian(d, rank.clamp(1, d), &mut rng);
    let mut rho = g.matmul(&g.dagger());
    let tr = rho.trace().re;
    rho = rho.scale_re(1.0 / tr);
    DensityMatrix::with_tol(rho, vec![d], 1e-7).expect("Ginibre state is valid")
}

/// Random pure state (Gaussian direction).
pub fn random_pure(d: usize, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = complex_gaussian(d, 1, &mut rng);
    let mut v = g.column(0);
    let nrm = vec_norm(&v);
    for z in v.iter_mut() {
        *z /= nrm;
    }
    PureState::new(v, vec![d]).expect("normalized by construction")
}

/// Apply a Kraus channel to a whole state.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if ch.dim_in() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel input {} vs state {}",
            ch.dim_in(),
            rho.dim()
        )));
    }
    let dout = ch.dim_out();
    let mut out = ComplexMatrix::zeros(dout, dout);
    for k in ch.kraus() {
        out = out.add(&k.matmul(rho.mat()).matmul(&k.dagger()));
    }
    DensityMatrix::with_tol(out, vec![dout], 1e-7)
}

/// Apply a channel to one factor of a bipartite state (`which` is 0 or 1).
pub fn apply_channel_on(
    ch: &KrausChannel,
    rho: &DensityMatrix,
    which: usize,
) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if dims.len() != 2 || which > 1 {
        return Err(Error::DimensionMismatch(
            "apply_channel_on expects a bipartite state and factor 0 or 1".into(),
        ));
    }
    if ch.dim_in() != dims[which] {
        return Err(Error::DimensionMismatch(format!(
            "channel input {} vs subsystem {}",
            ch.dim_in(),
            dims[which]
        )));
    }
    let mut new_dims = dims.to_vec();
    new_dims[which] = ch.dim_out();
    let total: usize = new_dims.iter().product();
    let mut out = ComplexMatrix::zeros(total, total);
    for k in ch.kraus() {
        let lifted = if which == 0 {
            kron(k, &ComplexMatrix::identity(dims[1]))
        } else {
            kron(&ComplexMatrix::identity(dims[0]), k)
        };
        out = out.add(&lifted.matmul(rho.mat()).matmul(&lifted.dagger()));
    }
    DensityMatrix::with_tol(out, new_dims, 1e-7)
}

/// Von Neumann entropy `-Tr(rho ln rho)`, natural base, `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let eig = herm_eig(rho.mat(), DEFAULT_TOL)?;
    let mut s = 0.0;
    for &lam in &eig.values {
        if lam > 1e-15 {
            s -= lam * lam.ln();
        }
    }
    Ok(s.max(0.0))
}

/// Zero-pad one subsystem of a bipartite state up to `new_dim`.
///
/// The added levels carry no population, so all spectral and swap-statistic
/// quantities are unchanged; this is the embedding that equalizes local
/// dimensions before applying two-copy projectors.
pub fn pad_subsystem(rho: &DensityMatrix, which: usize, new_dim: usize) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if dims.len() != 2 || which > 1 {
        return Err(Error::DimensionMismatch(
            "pad_subsystem expects a bipartite state".into(),
        ));
    }
    let (da, db) = (dims[0], dims[1]);
    let old = dims[which];
    if new_dim < old {
        return Err(Error::DimensionMismatch(format!(
            "cannot shrink subsystem {which} from {old} to {new_dim}"
        )));
    }
    if new_dim == old {
        return rho.refactor(dims.to_vec());
    }
    let (na, nb) = if which == 0 {
        (new_dim, db)
    } else {
        (da, new_dim)
    };
    let padded = ComplexMatrix::from_fn(na * nb, na * nb, |r, c| {
        let (ra, rb) = (r / nb, r % nb);
        let (ca, cb) = (c / nb, c % nb);
        if ra < da && ca < da && rb < db && cb < db {
            rho.mat().at(ra * db + rb, ca * db + cb)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    DensityMatrix::with_tol(padded, vec![na, nb], 1e-7)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::partial_trace_multi;
    use proptest::prelude::*;

    pub(crate) fn example4_matrix(mu: f64) -> ComplexMatrix {
        let a = ((1.0 - mu) / 2.0).sqrt();
        let b = (mu / 2.0).sqrt();
        ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(a, 0.0),
                Complex64::new(0.0, b),
                Complex64::new(0.0, -b),
                Complex64::new(a, 0.0),
            ],
        )
        .unwrap()
    }

    pub(crate) fn example5_matrix(mu: f64) -> ComplexMatrix {
        let a = ((1.0 - mu) / 2.0).sqrt() + (mu / 2.0).sqrt();
        let b = ((1.0 - mu) / 2.0).sqrt() - (mu / 2.0).sqrt();
        ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(a, 0.0),
                Complex64::new(b, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap()
    }

    fn pure_marginals(m: &ComplexMatrix) -> (DensityMatrix, DensityMatrix) {
        let psi = vectorize(m).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        (
            rho.marginal(Keep::A).unwrap(),
            rho.marginal(Keep::B).unwrap(),
        )
    }

    #[test]
    fn fidelity_self_is_one() {
        let rho = random_density(3, 3, 1);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fidelity_pure_states_is_overlap() {
        for seed in 0..5 {
            let a = random_pure(3, 10 + seed);
            let b = random_pure(3, 20 + seed);
            let f = fidelity(&DensityMatrix::from_pure(&a), &DensityMatrix::from_pure(&b)).unwrap();
            let ov = inner(a.vec(), b.vec()).norm();
            assert!((f - ov).abs() < 1e-9, "{f} vs {ov}");
        }
    }

    #[test]
    fn fidelity_example6_diagonals() {
        let x: f64 = 0.6;
        let a = DensityMatrix::new(
            ComplexMatrix::from_diag(&[(1.0 + x) / 2.0, (1.0 - x) / 2.0]),
            vec![2],
        )
        .unwrap();
        let b = DensityMatrix::new(
            ComplexMatrix::from_diag(&[(1.0 - x) / 2.0, (1.0 + x) / 2.0]),
            vec![2],
        )
        .unwrap();
        let f = fidelity(&a, &b).unwrap();
        assert!((f - (1.0 - x * x).sqrt()).abs() < 1e-10);
        assert!((f - 0.8).abs() < 1e-10);
        // Symmetry in the arguments.
        assert!((f - fidelity(&b, &a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = random_density(2, 2, 1);
        let b = random_density(3, 3, 1);
        assert!(matches!(fidelity(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn trace_distance_basics() {
        let rho = random_density(3, 2, 5);
        assert!(trace_distance(&rho, &rho).unwrap() < 1e-12);
        let e0 = DensityMatrix::from_pure(&PureState::basis(2, 0, vec![2]).unwrap());
        let e1 = DensityMatrix::from_pure(&PureState::basis(2, 1, vec![2]).unwrap());
        assert!((trace_distance(&e0, &e1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_example5() {
        let mu = 0.2;
        let (a, b) = pure_marginals(&example5_matrix(mu));
        let d = trace_distance(&a, &b).unwrap();
        assert!((d - 2.0 * (mu * (1.0 - mu)).sqrt()).abs() < 1e-10);
        assert!((d - 0.8).abs() < 1e-10);
    }

    #[test]
    fn projectors_small_dims() {
        let (ps, pas) = sym_projectors(1);
        assert!((ps.trace().re - 1.0).abs() < 1e-12);
        assert!(pas.trace().re.abs() < 1e-12);
        let (ps, pas) = sym_projectors(2);
        assert!((ps.trace().re - 3.0).abs() < 1e-12);
        assert!((pas.trace().re - 1.0).abs() < 1e-12);
        // Idempotent, complementary.
        assert!(ps.matmul(&ps).sub(&ps).frob_norm() < 1e-12);
        assert!(pas.matmul(&pas).sub(&pas).frob_norm() < 1e-12);
        assert!(ps.add(&pas).sub(&ComplexMatrix::identity(4)).frob_norm() < 1e-12);
    }

    #[test]
    fn swap_acts_on_basis_pairs() {
        let d = 3;
        let s = swap_operator(d);
        for i in 0..d {
            for j in 0..d {
                let mut v = vec![Complex64::new(0.0, 0.0); d * d];
                v[i * d + j] = Complex64::new(1.0, 0.0);
                let w = s.matvec(&v);
                for k in 0..d {
                    for l in 0..d {
                        let expect = if (k, l) == (j, i) { 1.0 } else { 0.0 };
                        assert!((w[k * d + l].re - expect).abs() < 1e-15);
                    }
                }
            }
        }
        let (ps, pas) = sym_projectors(d);
        assert!((ps.trace().re - (d * (d + 1) / 2) as f64).abs() < 1e-12);
        assert!((pas.trace().re - (d * (d - 1) / 2) as f64).abs() < 1e-12);
    }

    #[test]
    fn symmetry_stats_example4() {
        let mu = 0.25;
        let psi = vectorize(&example4_matrix(mu)).unwrap();
        let stats = symmetry_stats(&DensityMatrix::from_pure(&psi)).unwrap();
        assert!((stats.p.0 - mu).abs() < 1e-10);
        assert!((stats.p.1 - (1.0 - mu)).abs() < 1e-10);
        assert_eq!(stats.q.0, stats.p.1);
    }

    #[test]
    fn symmetry_stats_extremes() {
        let sym = DensityMatrix::from_pure(&PureState::basis(4, 0, vec![2, 2]).unwrap());
        let stats = symmetry_stats(&sym).unwrap();
        assert!(stats.p.0.abs() < 1e-12 && (stats.p.1 - 1.0).abs() < 1e-12);

        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let singlet = PureState::new(
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(inv_sqrt2, 0.0),
                Complex64::new(-inv_sqrt2, 0.0),
                Complex64::new(0.0, 0.0),
            ],
            vec![2, 2],
        )
        .unwrap();
        let stats = symmetry_stats(&DensityMatrix::from_pure(&singlet)).unwrap();
        assert!((stats.p.0 - 1.0).abs() < 1e-12 && stats.p.1.abs() < 1e-12);
    }

    #[test]
    fn vectorize_maximally_entangled() {
        let m = ComplexMatrix::identity(2).scale_re(1.0 / 2.0_f64.sqrt());
        let psi = vectorize(&m).unwrap();
        let amp = 1.0 / 2.0_f64.sqrt();
        assert!((psi.vec()[0].re - amp).abs() < 1e-12);
        assert!((psi.vec()[3].re - amp).abs() < 1e-12);
        assert!(psi.vec()[1].norm() < 1e-12 && psi.vec()[2].norm() < 1e-12);
        let back = devectorize(&psi).unwrap();
        assert!(back.sub(&m).frob_norm() < 1e-12);
    }

    #[test]
    fn ef_split_symmetric_matrix_kills_antisymmetric_part() {
        let m = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.6, 0.1),
                Complex64::new(0.3, -0.2),
                Complex64::new(0.3, -0.2),
                Complex64::new(0.5, 0.2),
            ],
        )
        .unwrap();
        let m = m.scale_re(1.0 / m.frob_norm());
        let (_, f) = ef_split(&m);
        assert!(f.frob_norm() < 1e-12);
        let psi = vectorize(&m).unwrap();
        let stats = symmetry_stats(&DensityMatrix::from_pure(&psi)).unwrap();
        assert!(stats.p.0.abs() < 1e-9);
    }

    #[test]
    fn ef_split_example4_trace_norms() {
        let mu = 0.25;
        let m = example4_matrix(mu);
        let (e, f) = ef_split(&m);
        let ee = trace_norm(&e.matmul(&e.dagger())).unwrap();
        let ff = trace_norm(&f.matmul(&f.dagger())).unwrap();
        assert!((ee - 0.75).abs() < 1e-10);
        assert!((ff - 0.25).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn lemma_identities_on_random_m(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = complex_gaussian(3, 3, &mut rng);
            let m = g.scale_re(1.0 / g.frob_norm());
            let psi = vectorize(&m).unwrap();
            let stats = symmetry_stats(&DensityMatrix::from_pure(&psi)).unwrap();
            let (e, f) = ef_split(&m);
            let ee = trace_norm(&e.matmul(&e.dagger())).unwrap();
            let ff = trace_norm(&f.matmul(&f.dagger())).unwrap();
            prop_assert!((stats.p.1 - ee).abs() < 1e-9);
            prop_assert!((stats.p.0 - ff).abs() < 1e-9);
        }
    }

    #[test]
    fn purify_pure_state_appends_ancilla() {
        let psi = random_pure(3, 42);
        let rho = DensityMatrix::from_pure(&psi);
        let pur = purify(&rho).unwrap();
        // Expected |psi>|0>: amplitudes at ancilla index 0 only, up to phase.
        for i in 0..3 {
            for k in 1..3 {
                assert!(pur.vec()[i * 3 + k].norm() < 1e-9);
            }
        }
        let slice: Vec<Complex64> = (0..3).map(|i| pur.vec()[i * 3]).collect();
        assert!((inner(&slice, psi.vec()).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn purify_maximally_mixed_is_maximally_entangled() {
        let rho = DensityMatrix::new(ComplexMatrix::identity(2).scale_re(0.5), vec![2]).unwrap();
        let pur = purify(&rho).unwrap();
        let joint = DensityMatrix::from_pure(&pur);
        let red_b = joint.marginal(Keep::B).unwrap();
        // Ancilla marginal maximally mixed too: maximal entanglement.
        assert!(
            red_b
                .mat()
                .sub(&ComplexMatrix::identity(2).scale_re(0.5))
                .frob_norm()
                < 1e-9
        );
    }

    #[test]
    fn purify_roundtrip_random_qutrit() {
        let rho = random_density(3, 2, 77);
        let pur = purify(&rho).unwrap();
        let joint = DensityMatrix::from_pure(&pur);
        let red = joint.marginal(Keep::A).unwrap();
        assert!(red.mat().sub(rho.mat()).frob_norm() < 1e-9);
    }

    #[test]
    fn uhlmann_aligned_equal_states() {
        let rho = random_density(3, 3, 5);
        let dec = uhlmann_aligned(&rho, &rho).unwrap();
        assert!((dec.alignment_sum() - 1.0).abs() < 1e-8);
        for pair in &dec.terms {
            assert!((pair.s - pair.t).abs() < 1e-8);
            assert!((inner(&pair.v, &pair.u).norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn uhlmann_aligned_commuting_diagonals() {
        let rho = DensityMatrix::new(ComplexMatrix::from_diag(&[0.7, 0.3]), vec![2]).unwrap();
        let sigma = DensityMatrix::new(ComplexMatrix::from_diag(&[0.4, 0.6]), vec![2]).unwrap();
        let dec = uhlmann_aligned(&rho, &sigma).unwrap();
        let classical: f64 = (0.7f64 * 0.4).sqrt() + (0.3f64 * 0.6).sqrt();
        assert!((dec.alignment_sum() - classical).abs() < 1e-8);
        let f = fidelity(&rho, &sigma).unwrap();
        assert!((dec.alignment_sum() - f).abs() < 1e-8);
    }

    #[test]
    fn uhlmann_aligned_random_pairs_hit_fidelity() {
        for seed in 0..20 {
            let rho = random_density(2, 2, 1000 + seed);
            let sigma = random_density(2, 2, 2000 + seed);
            let dec = uhlmann_aligned(&rho, &sigma).unwrap();
            let f = fidelity(&rho, &sigma).unwrap();
            assert!(
                (dec.alignment_sum() - f).abs() < 1e-8,
                "seed {seed}: {} vs {f}",
                dec.alignment_sum()
            );
            // Contract: v orthonormal, overlaps real nonnegative, weights sum
            // to 1, both states reconstructed.
            let d = rho.dim();
            let mut sum_s = 0.0;
            let mut sum_t = 0.0;
            let mut rec_rho = ComplexMatrix::zeros(d, d);
            let mut rec_sigma = ComplexMatrix::zeros(d, d);
            for (i, a) in dec.terms.iter().enumerate() {
                sum_s += a.s;
                sum_t += a.t;
                let ov = inner(&a.v, &a.u);
                assert!(ov.re >= -1e-9 && ov.im.abs() < 1e-9);
                rec_rho = rec_rho.add(&ComplexMatrix::outer(&a.u, &a.u).scale_re(a.s));
                rec_sigma = rec_sigma.add(&ComplexMatrix::outer(&a.v, &a.v).scale_re(a.t));
                for b in dec.terms.iter().skip(i + 1) {
                    assert!(inner(&a.v, &b.v).norm() < 1e-9);
                }
            }
            assert!((sum_s - 1.0).abs() < 1e-9);
            assert!((sum_t - 1.0).abs() < 1e-9);
            assert!(rec_rho.sub(rho.mat()).frob_norm() < 1e-9);
            assert!(rec_sigma.sub(sigma.mat()).frob_norm() < 1e-9);
        }
    }

    #[test]
    fn haar_unitary_is_unitary_and_seeded() {
        for d in [2usize, 3, 5] {
            let u = haar_unitary(d, 9);
            let gram = u.dagger().matmul(&u);
            assert!(gram.sub(&ComplexMatrix::identity(d)).frob_norm() < 1e-10);
        }
        let a = haar_unitary(3, 4);
        let b = haar_unitary(3, 4);
        let c = haar_unitary(3, 5);
        assert!(a.sub(&b).frob_norm() == 0.0);
        assert!(c.sub(&a).frob_norm() > 1e-3);
    }

    #[test]
    fn apply_channel_unitary_preserves_spectrum() {
        let rho = random_density(3, 2, 31);
        let u = haar_unitary(3, 32);
        let ch = KrausChannel::unitary(u).unwrap();
        let out = apply_channel(&ch, &rho).unwrap();
        let before = herm_eig(rho.mat(), 1e-9).unwrap().values;
        let after = herm_eig(out.mat(), 1e-9).unwrap().values;
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn kraus_completeness_enforced() {
        let half = ComplexMatrix::identity(2).scale_re(0.5);
        assert!(KrausChannel::new(vec![half]).is_err());
    }

    #[test]
    fn entropy_values() {
        let pure = DensityMatrix::from_pure(&random_pure(3, 8));
        assert!(von_neumann_entropy(&pure).unwrap() < 1e-9);
        let mixed =
            DensityMatrix::new(ComplexMatrix::identity(4).scale_re(0.25), vec![4]).unwrap();
        assert!((von_neumann_entropy(&mixed).unwrap() - 4.0_f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn fd_tradeoff_random_small() {
        for seed in 0..50 {
            let d = 2 + (seed % 3) as usize;
            let rho = random_density(d, d, 3000 + seed);
            let sigma = random_density(d, d, 4000 + seed);
            let f = fidelity(&rho, &sigma).unwrap();
            let dist = trace_distance(&rho, &sigma).unwrap();
            assert!(f * f + dist * dist <= 1.0 + 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn strong_concavity_of_fidelity() {
        for seed in 0..20 {
            let rho1 = random_density(3, 3, 100 + seed);
            let rho2 = random_density(3, 2, 200 + seed);
            let sig1 = random_density(3, 3, 300 + seed);
            let sig2 = random_density(3, 1, 400 + seed);
            let (p1, p2) = (0.3, 0.7);
            let (q1, q2) = (0.6, 0.4);
            let mix_rho = DensityMatrix::with_tol(
                rho1.mat().scale_re(p1).add(&rho2.mat().scale_re(p2)),
                vec![3],
                1e-7,
            )
            .unwrap();
            let mix_sig = DensityMatrix::with_tol(
                sig1.mat().scale_re(q1).add(&sig2.mat().scale_re(q2)),
                vec![3],
                1e-7,
            )
            .unwrap();
            let lhs = fidelity(&mix_rho, &mix_sig).unwrap();
            let rhs = (p1 * q1).sqrt() * fidelity(&rho1, &sig1).unwrap()
                + (p2 * q2).sqrt() * fidelity(&rho2, &sig2).unwrap();
            assert!(lhs >= rhs - 1e-9);
        }
    }

    #[test]
    fn trace_distance_mixture_bound() {
        for seed in 0..20 {
            let rho1 = random_density(3, 2, 500 + seed);
            let rho2 = random_density(3, 3, 600 + seed);
            let sig1 = random_density(3, 3, 700 + seed);
            let sig2 = random_density(3, 2, 800 + seed);
            let (p1, p2) = (0.45, 0.55);
            let mix_rho = DensityMatrix::with_tol(
                rho1.mat().scale_re(p1).add(&rho2.mat().scale_re(p2)),
                vec![3],
                1e-7,
            )
            .unwrap();
            let mix_sig = DensityMatrix::with_tol(
                sig1.mat().scale_re(p1).add(&sig2.mat().scale_re(p2)),
                vec![3],
                1e-7,
            )
            .unwrap();
            let lhs = trace_distance(&mix_rho, &mix_sig).unwrap();
            let rhs = p1 * trace_distance(&rho1, &sig1).unwrap()
                + p2 * trace_distance(&rho2, &sig2).unwrap();
            assert!(lhs <= rhs + 1e-9);
        }
    }

    #[test]
    fn pad_subsystem_preserves_marginal_structure() {
        let rho = random_density(6, 4, 90).refactor(vec![2, 3]).unwrap();
        let padded = pad_subsystem(&rho, 0, 3).unwrap();
        assert_eq!(padded.dims(), &[3, 3]);
        // Trace over the first factor agrees with the original B marginal.
        let red_orig = rho.marginal(Keep::B).unwrap();
        let red_pad = partial_trace_multi(padded.mat(), &[3, 3], &[false, true]).unwrap();
        assert!(red_pad.sub(red_orig.mat()).frob_norm() < 1e-12);
    }
}
