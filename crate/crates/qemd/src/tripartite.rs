//! Necessary criteria for the tripartite marginal problem.
//!
//! Given candidate pair marginals `rho_AB`, `rho_AC`, `rho_BC` (with
//! `dim A = dim B`), a global state can exist only if the swap statistics of
//! `rho_AB` are compatible with how distinguishable `rho_AC` and `rho_BC`
//! are: the fidelity of the `AC`/`BC` pair dominates the statistic distance
//! of `rho_AB`, and their trace distance is dominated by the statistic
//! fidelity. Conjugating `B` by sampled channels turns each inequality into
//! a whole family of tests. A failed check certifies incompatibility; passing
//! everything proves nothing.
//!
//! Also here: the exact two-qubit symmetric-extension criterion, the entropy
//! inequalities, and the classical gluing construction that settles the
//! classical version.

use crate::linalg::{herm_eig, partial_trace_multi, ComplexMatrix, Keep};
use crate::qstate::{
    apply_channel_on, fidelity, haar_unitary, pad_subsystem, symmetry_stats, trace_distance,
    von_neumann_entropy, DensityMatrix, KrausChannel,
};
use crate::{Error, Result};

/// Candidate pair marginals `rho_AB` (`d1 x d1`), `rho_AC`, `rho_BC`
/// (`d1 x d2` each).
///
/// Construction validates shapes only; single-party consistency is itself a
/// checkable criterion (see [`MarginalTriple::consistency_reports`]), since a
/// mismatch already certifies incompatibility.
#[derive(Debug, Clone)]
pub struct MarginalTriple {
    rho_ab: DensityMatrix,
    rho_ac: DensityMatrix,
    rho_bc: DensityMatrix,
}

/// Verdict of one criterion evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Violated,
}

/// One evaluated criterion: `lhs >= rhs` must hold, `slack = lhs - rhs`.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub criterion: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: Verdict,
    /// The channel that witnessed a violation, for scan-style checks.
    pub witness: Option<KrausChannel>,
}

impl CriterionReport {
    fn new(criterion: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = lhs - rhs;
        Self {
            criterion: criterion.into(),
            lhs,
            rhs,
            slack,
            verdict: if slack < -tol {
                Verdict::Violated
            } else {
                Verdict::Consistent
            },
            witness: None,
        }
    }

    pub fn violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}

const CONSISTENCY_TOL: f64 = 1e-8;

impl MarginalTriple {
    pub fn new(
        rho_ab: DensityMatrix,
        rho_ac: DensityMatrix,
        rho_bc: DensityMatrix,
    ) -> Result<Self> {
        let (ab, ac, bc) = (rho_ab.dims(), rho_ac.dims(), rho_bc.dims());
        if ab.len() != 2 || ac.len() != 2 || bc.len() != 2 {
            return Err(Error::DimensionMismatch(
                "all three inputs must be bipartite".into(),
            ));
        }
        if ab[0] != ab[1] {
            return Err(Error::DimensionMismatch(format!(
                "A and B must have equal dimension, got {:?} (embed first if they differ)",
                ab
            )));
        }
        let (d1, d2) = (ab[0], ac[1]);
        if ac[0] != d1 || bc[0] != d1 || bc[1] != d2 {
            return Err(Error::DimensionMismatch(format!(
                "inconsistent shapes: AB {:?}, AC {:?}, BC {:?}",
                ab, ac, bc
            )));
        }
        Ok(Self {
            rho_ab,
            rho_ac,
            rho_bc,
        })
    }

    /// Build a triple with unequal `d_A`, `d_B` by zero-padding the smaller
    /// subsystem in the states that contain it.
    pub fn embedded(
        rho_ab: DensityMatrix,
        rho_ac: DensityMatrix,
        rho_bc: DensityMatrix,
    ) -> Result<Self> {
        let ab = rho_ab.dims().to_vec();
        if ab.len() != 2 {
            return Err(Error::DimensionMismatch("rho_AB must be bipartite".into()));
        }
        let (da, db) = (ab[0], ab[1]);
        if da == db {
            return Self::new(rho_ab, rho_ac, rho_bc);
        }
        let d = da.max(db);
        let (rho_ab, rho_ac, rho_bc) = if da < db {
            (
                pad_subsystem(&rho_ab, 0, d)?,
                pad_subsystem(&rho_ac, 0, d)?,
                rho_bc,
            )
        } else {
            (
                pad_subsystem(&rho_ab, 1, d)?,
                rho_ac,
                pad_subsystem(&rho_bc, 0, d)?,
            )
        };
        Self::new(rho_ab, rho_ac, rho_bc)
    }

    /// Extract the three pair marginals of a global state with dims
    /// `[d1, d1, d2]`.
    pub fn from_global(rho_abc: &DensityMatrix) -> Result<Self> {
        let dims = rho_abc.dims();
        if dims.len() != 3 || dims[0] != dims[1] {
            return Err(Error::DimensionMismatch(format!(
                "global state must have dims [d1, d1, d2], got {:?}",
                dims
            )));
        }
        let (d1, d2) = (dims[0], dims[2]);
        let ab = partial_trace_multi(rho_abc.mat(), dims, &[true, true, false])?;
        let ac = partial_trace_multi(rho_abc.mat(), dims, &[true, false, true])?;
        let bc = partial_trace_multi(rho_abc.mat(), dims, &[false, true, true])?;
        Self::new(
            DensityMatrix::with_tol(ab, vec![d1, d1], 1e-7)?,
            DensityMatrix::with_tol(ac, vec![d1, d2], 1e-7)?,
            DensityMatrix::with_tol(bc, vec![d1, d2], 1e-7)?,
        )
    }

    pub fn rho_ab(&self) -> &DensityMatrix {
        &self.rho_ab
    }

    pub fn rho_ac(&self) -> &DensityMatrix {
        &self.rho_ac
    }

    pub fn rho_bc(&self) -> &DensityMatrix {
        &self.rho_bc
    }

    pub fn dim_a(&self) -> usize {
        self.rho_ab.dims()[0]
    }

    pub fn dim_c(&self) -> usize {
        self.rho_ac.dims()[1]
    }

    /// Single-party consistency of the three pairs; any violation already
    /// certifies that no global state exists.
    pub fn consistency_reports(&self) -> Result<Vec<CriterionReport>> {
        let a_from_ab = self.rho_ab.marginal(Keep::A)?;
        let a_from_ac = self.rho_ac.marginal(Keep::A)?;
        let b_from_ab = self.rho_ab.marginal(Keep::B)?;
        let b_from_bc = self.rho_bc.marginal(Keep::A)?;
        let c_from_ac = self.rho_ac.marginal(Keep::B)?;
        let c_from_bc = self.rho_bc.marginal(Keep::B)?;
        let entries = [
            ("consistency-A", a_from_ab, a_from_ac),
            ("consistency-B", b_from_ab, b_from_bc),
            ("consistency-C", c_from_ac, c_from_bc),
        ];
        Ok(entries
            .into_iter()
            .map(|(name, x, y)| {
                let resid = x.mat().sub(y.mat()).frob_norm();
                CriterionReport::new(name, CONSISTENCY_TOL, resid, CONSISTENCY_TOL)
            })
            .collect())
    }
}

/// Fidelity criterion: `F(rho_AC, rho_BC) >= |Tr(P_as rho_AB) - Tr(P_s rho_AB)|`.
pub fn thm16_check(t: &MarginalTriple) -> Result<CriterionReport> {
    let stats = symmetry_stats(t.rho_ab())?;
    let f = fidelity(t.rho_ac(), t.rho_bc())?;
    Ok(CriterionReport::new(
        "fidelity-vs-swap-stats",
        f,
        stats.stat_distance(),
        1e-8,
    ))
}

/// Distance criterion: `2 sqrt(Tr(P_as rho_AB) Tr(P_s rho_AB)) >= D(rho_AC, rho_BC)`.
pub fn thm17_check(t: &MarginalTriple) -> Result<CriterionReport> {
    let stats = symmetry_stats(t.rho_ab())?;
    let d = trace_distance(t.rho_ac(), t.rho_bc())?;
    Ok(CriterionReport::new(
        "swap-stats-vs-distance",
        stats.stat_fidelity(),
        d,
        1e-8,
    ))
}

fn thm18_single(t: &MarginalTriple, ch: &KrausChannel, label: String) -> Result<CriterionReport> {
    // E_B acts on the second factor of rho_AB and the first factor of rho_BC.
    let ab = apply_channel_on(ch, t.rho_ab(), 1)?;
    let bc = apply_channel_on(ch, t.rho_bc(), 0)?;
    let stats = symmetry_stats(&ab)?;
    let f = fidelity(t.rho_ac(), &bc)?;
    let mut rep = CriterionReport::new(label, f, stats.stat_distance(), 1e-8);
    if rep.violated() {
        rep.witness = Some(ch.clone());
    }
    Ok(rep)
}

fn sample_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Channel-family scan of the fidelity criterion.
///
/// Sample 0 is always the identity channel (so the scan subsumes the plain
/// check bit for bit); the remaining `samples - 1` are Haar unitary channels
/// with per-sample seeds. The proof covers unitary channels; arbitrary
/// user-supplied Kraus channels can be appended through `extra`, labeled as
/// beyond proof scope. With `fail_fast` the scan stops at the first
/// violation; the witnessing channel is attached either way.
pub fn thm18_scan(
    t: &MarginalTriple,
    samples: usize,
    seed: u64,
    extra: &[KrausChannel],
    fail_fast: bool,
) -> Result<Vec<CriterionReport>> {
    if samples == 0 && extra.is_empty() {
        return Err(Error::ParamOutOfRange("samples must be >= 1".into()));
    }
    let d1 = t.dim_a();
    let mut reports = Vec::new();
    for k in 0..samples {
        let ch = if k == 0 {
            KrausChannel::unitary(ComplexMatrix::identity(d1))?
        } else {
            KrausChannel::unitary(haar_unitary(d1, sample_seed(seed, k as u64)))?
        };
        let label = if k == 0 {
            "channel-scan[identity]".to_string()
        } else {
            format!("channel-scan[haar {k}]")
        };
        let rep = thm18_single(t, &ch, label)?;
        let bad = rep.violated();
        reports.push(rep);
        if bad && fail_fast {
            return Ok(reports);
        }
    }
    for (k, ch) in extra.iter().enumerate() {
        if ch.dim_in() != d1 || ch.dim_out() != d1 {
            return Err(Error::DimensionMismatch(format!(
                "user channel {k} must map dimension {d1} to itself"
            )));
        }
        let rep = thm18_single(t, ch, format!("channel-scan[user {k}, beyond proof scope]"))?;
        let bad = rep.violated();
        reports.push(rep);
        if bad && fail_fast {
            break;
        }
    }
    Ok(reports)
}

/// The two entropy inequalities a compatible triple must satisfy:
/// `S(AC) + S(AB) >= S(B) + S(C)` and `S(AC) + S(AB) >= S(A)`.
pub fn entropy_criteria(t: &MarginalTriple) -> Result<Vec<CriterionReport>> {
    let s_ab = von_neumann_entropy(t.rho_ab())?;
    let s_ac = von_neumann_entropy(t.rho_ac())?;
    let s_a = von_neumann_entropy(&t.rho_ab().marginal(Keep::A)?)?;
    let s_b = von_neumann_entropy(&t.rho_ab().marginal(Keep::B)?)?;
    let s_c = von_neumann_entropy(&t.rho_ac().marginal(Keep::B)?)?;
    Ok(vec![
        CriterionReport::new("entropy-S(AC)+S(AB)>=S(B)+S(C)", s_ac + s_ab, s_b + s_c, 1e-8),
        CriterionReport::new("entropy-S(AC)+S(AB)>=S(A)", s_ac + s_ab, s_a, 1e-8),
    ])
}

/// Exact two-qubit symmetric-extension criterion:
/// extendible iff `Tr(rho_B^2) >= Tr(rho_AB^2) - 4 sqrt(det rho_AB)`.
pub fn symext_2qubit(rho_ab: &DensityMatrix) -> Result<CriterionReport> {
    if rho_ab.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "symmetric-extension criterion needs a two-qubit state, got dims {:?}",
            rho_ab.dims()
        )));
    }
    let rho_b = rho_ab.marginal(Keep::B)?;
    let purity_b = rho_b.mat().matmul(rho_b.mat()).trace().re;
    let purity_ab = rho_ab.mat().matmul(rho_ab.mat()).trace().re;
    let det: f64 = herm_eig(rho_ab.mat(), 1e-9)?
        .values
        .iter()
        .map(|l| l.max(0.0))
        .product();
    let rhs = purity_ab - 4.0 * det.sqrt();
    Ok(CriterionReport::new(
        "symmetric-extension-2qubit",
        purity_b,
        rhs,
        1e-10,
    ))
}

/// Classical joint distribution as a nonnegative table summing to one.
#[derive(Debug, Clone)]
pub struct ClassicalTable {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl ClassicalTable {
    pub fn new(rows: usize, cols: usize, p: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || p.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "table needs {} entries for {rows}x{cols}, got {}",
                rows * cols,
                p.len()
            )));
        }
        if p.iter().any(|&x| !x.is_finite() || x < -1e-12) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite entry".into(),
            ));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("sum {sum} is not 1")));
        }
        Ok(Self {
            rows,
            cols,
            p: p.into_iter().map(|x| x.max(0.0)).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.cols + j]
    }

    /// Marginal over the second index.
    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j)).sum())
            .collect()
    }
}

/// Classical tripartite distribution `p(x, y, z)`.
#[derive(Debug, Clone)]
pub struct ClassicalTripartite {
    da: usize,
    db: usize,
    dc: usize,
    p: Vec<f64>,
}

impl ClassicalTripartite {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.da, self.db, self.dc)
    }

    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p[(x * self.db + y) * self.dc + z]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Marginal on `(x, z)`.
    pub fn marginal_ac(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.da * self.dc];
        for x in 0..self.da {
            for y in 0..self.db {
                for z in 0..self.dc {
                    out[x * self.dc + z] += self.at(x, y, z);
                }
            }
        }
        out
    }

    /// Marginal on `(x, y)`.
    pub fn marginal_ab(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.da * self.db];
        for x in 0..self.da {
            for y in 0..self.db {
                for z in 0..self.dc {
                    out[x * self.db + y] += self.at(x, y, z);
                }
            }
        }
        out
    }
}

/// Classical gluing: the tripartite distribution
/// `p(x, y, z) = p_AC(x, z) p_AB(x, y) / p_A(x)`, which always reproduces
/// both input tables when their `A`-marginals agree. Rows with `p_A(x) = 0`
/// are zero.
pub fn classical_glue(
    rho_ac: &ClassicalTable,
    rho_ab: &ClassicalTable,
) -> Result<ClassicalTripartite> {
    if rho_ac.rows() != rho_ab.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A-dimension differs: {} vs {}",
            rho_ac.rows(),
            rho_ab.rows()
        )));
    }
    let da = rho_ac.rows();
    let (dc, db) = (rho_ac.cols(), rho_ab.cols());
    let a_from_ac = rho_ac.row_marginal();
    let a_from_ab = rho_ab.row_marginal();
    for x in 0..da {
        if (a_from_ac[x] - a_from_ab[x]).abs() > 1e-10 {
            return Err(Error::MarginalMismatch(format!(
                "A-marginals differ at x={x}: {} vs {}",
                a_from_ac[x], a_from_ab[x]
            )));
        }
    }
    let mut p = vec![0.0; da * db * dc];
    for x in 0..da {
        let pa = a_from_ac[x];
        if pa <= 0.0 {
            continue;
        }
        for y in 0..db {
            for z in 0..dc {
                p[(x * db + y) * dc + z] = rho_ac.at(x, z) * rho_ab.at(x, y) / pa;
            }
        }
    }
    Ok(ClassicalTripartite { da, db, dc, p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::qstate::{random_density, vectorize, PureState};
    use num_complex::Complex64;

    fn basis_density(dim: usize, k: usize, dims: Vec<usize>) -> DensityMatrix {
        DensityMatrix::from_pure(&PureState::basis(dim, k, dims).unwrap())
    }

    fn singlet() -> DensityMatrix {
        let inv = 1.0 / 2.0_f64.sqrt();
        DensityMatrix::from_pure(
            &PureState::new(
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(inv, 0.0),
                    Complex64::new(-inv, 0.0),
                    Complex64::new(0.0, 0.0),
                ],
                vec![2, 2],
            )
            .unwrap(),
        )
    }

    fn singlet_triple() -> MarginalTriple {
        MarginalTriple::new(
            singlet(),
            basis_density(4, 0, vec![2, 2]),
            basis_density(4, 3, vec![2, 2]),
        )
        .unwrap()
    }

    fn random_global(d1: usize, d2: usize, seed: u64) -> MarginalTriple {
        let rho = random_density(d1 * d1 * d2, d1 * d1 * d2, seed)
            .refactor(vec![d1, d1, d2])
            .unwrap();
        MarginalTriple::from_global(&rho).unwrap()
    }

    #[test]
    fn thm16_product_state_is_tight() {
        let triple = MarginalTriple::from_global(
            &basis_density(8, 0, vec![2, 2, 2]),
        )
        .unwrap();
        let rep = thm16_check(&triple).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-10);
        assert!((rep.rhs - 1.0).abs() < 1e-10);
        assert!(rep.slack.abs() < 1e-9);
        assert!(!rep.violated());
    }

    #[test]
    fn thm16_flags_singlet_triple() {
        let rep = thm16_check(&singlet_triple()).unwrap();
        assert!(rep.lhs.abs() < 1e-9);
        assert!((rep.rhs - 1.0).abs() < 1e-9);
        assert!((rep.slack + 1.0).abs() < 1e-9);
        assert!(rep.violated());
    }

    #[test]
    fn thm16_sound_on_compatible_triples() {
        for seed in 0..100 {
            let triple = random_global(2, 2, 100 + seed);
            let rep = thm16_check(&triple).unwrap();
            assert!(rep.slack >= -1e-8, "seed {seed}: slack {}", rep.slack);
        }
    }

    #[test]
    fn thm17_tight_on_embedded_distance_family() {
        let mu = 0.2;
        let a = ((1.0 - mu) / 2.0_f64).sqrt() + (mu / 2.0_f64).sqrt();
        let b = ((1.0 - mu) / 2.0_f64).sqrt() - (mu / 2.0_f64).sqrt();
        let m = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(a, 0.0),
                Complex64::new(b, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let psi_ab = DensityMatrix::from_pure(&vectorize(&m).unwrap());
        let gamma_c = basis_density(2, 0, vec![2]);
        let global = DensityMatrix::with_tol(
            kron(psi_ab.mat(), gamma_c.mat()),
            vec![2, 2, 2],
            1e-8,
        )
        .unwrap();
        let triple = MarginalTriple::from_global(&global).unwrap();
        let rep = thm17_check(&triple).unwrap();
        assert!((rep.lhs - 0.8).abs() < 1e-9, "lhs {}", rep.lhs);
        assert!((rep.rhs - 0.8).abs() < 1e-9, "rhs {}", rep.rhs);
        assert!(rep.slack.abs() < 1e-9);
    }

    #[test]
    fn thm16_tight_on_embedded_fidelity_family() {
        let mu = 0.25;
        let a = ((1.0 - mu) / 2.0_f64).sqrt();
        let b = (mu / 2.0_f64).sqrt();
        let m = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(a, 0.0),
                Complex64::new(0.0, b),
                Complex64::new(0.0, -b),
                Complex64::new(a, 0.0),
            ],
        )
        .unwrap();
        let psi_ab = DensityMatrix::from_pure(&vectorize(&m).unwrap());
        let gamma_c = random_density(2, 2, 5);
        let global = DensityMatrix::with_tol(
            kron(psi_ab.mat(), gamma_c.mat()),
            vec![2, 2, 2],
            1e-8,
        )
        .unwrap();
        let triple = MarginalTriple::from_global(&global).unwrap();
        let rep = thm16_check(&triple).unwrap();
        assert!(rep.slack.abs() < 1e-9, "slack {}", rep.slack);
    }

    #[test]
    fn thm17_trivial_and_sound() {
        let triple = MarginalTriple::from_global(
            &basis_density(8, 0, vec![2, 2, 2]),
        )
        .unwrap();
        let rep = thm17_check(&triple).unwrap();
        assert!(rep.lhs.abs() < 1e-10 && rep.rhs.abs() < 1e-10);
        for seed in 0..100 {
            let triple = random_global(2, 2, 300 + seed);
            let rep = thm17_check(&triple).unwrap();
            assert!(rep.slack >= -1e-8, "seed {seed}");
        }
    }

    #[test]
    fn thm18_identity_sample_matches_thm16_exactly() {
        let triple = random_global(2, 3, 7);
        let direct = thm16_check(&triple).unwrap();
        let scan = thm18_scan(&triple, 1, 99, &[], false).unwrap();
        assert_eq!(scan.len(), 1);
        assert_eq!(scan[0].lhs.to_bits(), direct.lhs.to_bits());
        assert_eq!(scan[0].rhs.to_bits(), direct.rhs.to_bits());
    }

    #[test]
    fn thm18_flags_singlet_triple_at_identity() {
        let scan = thm18_scan(&singlet_triple(), 50, 11, &[], true).unwrap();
        let first = &scan[0];
        assert!(first.violated());
        assert!(first.criterion.contains("identity"));
        assert!(first.witness.is_some());
        // fail_fast stops immediately.
        assert_eq!(scan.len(), 1);
    }

    #[test]
    fn thm18_sound_on_compatible_triples() {
        for seed in 0..10 {
            let triple = random_global(2, 2, 800 + seed);
            let scan = thm18_scan(&triple, 40, seed, &[], false).unwrap();
            assert_eq!(scan.len(), 40);
            for rep in &scan {
                assert!(rep.slack >= -1e-7, "seed {seed}: {}", rep.criterion);
            }
        }
    }

    #[test]
    fn thm18_accepts_user_channels() {
        let triple = random_global(2, 2, 900);
        // Completely depolarizing channel via four normalized Paulis.
        let half = 1.0 / 2.0_f64;
        let paulis = vec![
            ComplexMatrix::identity(2).scale_re(half),
            ComplexMatrix::new(
                2,
                2,
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(half, 0.0),
                    Complex64::new(half, 0.0),
                    Complex64::new(0.0, 0.0),
                ],
            )
            .unwrap(),
            ComplexMatrix::new(
                2,
                2,
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, -half),
                    Complex64::new(0.0, half),
                    Complex64::new(0.0, 0.0),
                ],
            )
            .unwrap(),
            ComplexMatrix::new(
                2,
                2,
                vec![
                    Complex64::new(half, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(-half, 0.0),
                ],
            )
            .unwrap(),
        ];
        let depol = KrausChannel::new(paulis).unwrap();
        let scan = thm18_scan(&triple, 1, 0, &[depol], false).unwrap();
        assert_eq!(scan.len(), 2);
        assert!(scan[1].criterion.contains("beyond proof scope"));
    }

    #[test]
    fn entropy_product_and_maximally_mixed() {
        let product = MarginalTriple::from_global(
            &basis_density(8, 0, vec![2, 2, 2]),
        )
        .unwrap();
        for rep in entropy_criteria(&product).unwrap() {
            assert!(rep.slack.abs() < 1e-9);
        }
        let mixed = DensityMatrix::new(
            ComplexMatrix::identity(8).scale_re(1.0 / 8.0),
            vec![2, 2, 2],
        )
        .unwrap();
        let triple = MarginalTriple::from_global(&mixed).unwrap();
        let reps = entropy_criteria(&triple).unwrap();
        let ln2 = 2.0_f64.ln();
        assert!((reps[0].lhs - 4.0 * ln2).abs() < 1e-9);
        assert!((reps[0].rhs - 2.0 * ln2).abs() < 1e-9);
        assert!((reps[0].slack - 2.0 * ln2).abs() < 1e-9);
    }

    #[test]
    fn entropy_sound_on_compatible_triples() {
        for seed in 0..50 {
            let triple = random_global(2, 2, 1200 + seed);
            for rep in entropy_criteria(&triple).unwrap() {
                assert!(rep.slack >= -1e-8, "seed {seed}: {}", rep.criterion);
            }
        }
    }

    #[test]
    fn symext_singlet_is_monogamous() {
        let rep = symext_2qubit(&singlet()).unwrap();
        assert!((rep.lhs - 0.5).abs() < 1e-10);
        assert!((rep.rhs - 1.0).abs() < 1e-9);
        assert!(rep.violated());
    }

    #[test]
    fn symext_maximally_mixed_and_product_extendible() {
        let mixed = DensityMatrix::new(
            ComplexMatrix::identity(4).scale_re(0.25),
            vec![2, 2],
        )
        .unwrap();
        let rep = symext_2qubit(&mixed).unwrap();
        // lhs 1/2, rhs 1/4 - 4 sqrt(1/256) = 0.
        assert!((rep.lhs - 0.5).abs() < 1e-10);
        assert!(rep.rhs.abs() < 1e-9);
        assert!(!rep.violated());

        let prod = basis_density(4, 0, vec![2, 2]);
        let rep = symext_2qubit(&prod).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-10);
        assert!((rep.rhs - 1.0).abs() < 1e-9);
        assert!(!rep.violated());
    }

    #[test]
    fn consistency_reports_flag_mismatched_triples() {
        let ok = random_global(2, 2, 33);
        assert!(ok
            .consistency_reports()
            .unwrap()
            .iter()
            .all(|r| !r.violated()));
        // The singlet triple is inconsistent at the single-party level too.
        let reports = singlet_triple().consistency_reports().unwrap();
        assert!(reports.iter().any(|r| r.violated()));
    }

    #[test]
    fn embedded_pads_unequal_local_dimensions() {
        // A has dimension 1, B dimension 2: embed A into 2 levels.
        let rho_ab = random_density(2, 2, 44).refactor(vec![1, 2]).unwrap();
        let rho_ac = random_density(3, 3, 45).refactor(vec![1, 3]).unwrap();
        let rho_bc = random_density(6, 6, 46).refactor(vec![2, 3]).unwrap();
        let triple = MarginalTriple::embedded(rho_ab, rho_ac, rho_bc).unwrap();
        assert_eq!(triple.rho_ab().dims(), &[2, 2]);
        assert_eq!(triple.rho_ac().dims(), &[2, 3]);
        let rep = thm16_check(&triple).unwrap();
        assert!(rep.lhs.is_finite() && rep.rhs.is_finite());
    }

    #[test]
    fn classical_glue_correlated_example() {
        // Uniform independent AC, perfectly correlated AB.
        let ac = ClassicalTable::new(2, 2, vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        let ab = ClassicalTable::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let glued = classical_glue(&ac, &ab).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let expect = if x == y { 0.25 } else { 0.0 };
                    assert!((glued.at(x, y, z) - expect).abs() < 1e-12);
                }
            }
        }
        assert!((glued.total() - 1.0).abs() < 1e-12);
        // Marginals reproduce the inputs.
        let mac = glued.marginal_ac();
        let mab = glued.marginal_ab();
        for x in 0..2 {
            for z in 0..2 {
                assert!((mac[x * 2 + z] - ac.at(x, z)).abs() < 1e-12);
            }
            for y in 0..2 {
                assert!((mab[x * 2 + y] - ab.at(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn classical_glue_product_factorizes() {
        let ac = ClassicalTable::new(2, 2, vec![0.12, 0.18, 0.28, 0.42]).unwrap();
        // AB independent: p(x, y) = p_A(x) q(y) with q = (0.4, 0.6).
        let ab = ClassicalTable::new(2, 2, vec![0.12, 0.18, 0.28, 0.42]).unwrap();
        let glued = classical_glue(&ac, &ab).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let pa = ac.row_marginal()[x];
                    let expect = ac.at(x, z) * ab.at(x, y) / pa;
                    assert!((glued.at(x, y, z) - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn classical_glue_point_mass_and_zero_rows() {
        let ac = ClassicalTable::new(2, 2, vec![0.7, 0.3, 0.0, 0.0]).unwrap();
        let ab = ClassicalTable::new(2, 2, vec![0.4, 0.6, 0.0, 0.0]).unwrap();
        let glued = classical_glue(&ac, &ab).unwrap();
        assert!((glued.total() - 1.0).abs() < 1e-12);
        for y in 0..2 {
            for z in 0..2 {
                assert!(glued.at(1, y, z).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn classical_glue_rejects_marginal_mismatch() {
        let ac = ClassicalTable::new(2, 2, vec![0.5, 0.0, 0.25, 0.25]).unwrap();
        let ab = ClassicalTable::new(2, 2, vec![0.3, 0.0, 0.35, 0.35]).unwrap();
        assert!(matches!(
            classical_glue(&ac, &ab),
            Err(Error::MarginalMismatch(_))
        ));
    }
}
