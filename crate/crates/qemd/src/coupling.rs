//! Coupling constructions and verification.
//!
//! A coupling of `(rho_A, rho_B)` is a joint state whose partial traces
//! reproduce both targets. This module builds them three ways — a diagonal
//! construction driven by a transport plan with a small square-root
//! asymmetry, a rank-2 construction that turns an aligned overlap sum into
//! symmetric-subspace weight, and the general construction that stitches
//! rank-2 blocks along an aligned ensemble decomposition — plus the classical
//! total-variation coupling, Caratheodory reduction of pure-state ensembles,
//! and the two bound checks tying marginal fidelity/distance to swap
//! statistics.

use num_complex::Complex64;

use crate::linalg::{inner, kron, vec_norm, ComplexMatrix, Keep};
use crate::qstate::{
    fidelity, symmetry_stats, trace_distance, uhlmann_aligned, DensityMatrix, PureState,
};
use crate::{Error, Result};

/// Joint state tagged with the two marginals it must reproduce.
#[derive(Debug, Clone)]
pub struct Coupling {
    joint: DensityMatrix,
    target_a: DensityMatrix,
    target_b: DensityMatrix,
    tol: f64,
}

impl Coupling {
    /// Validates the marginal residuals against `tol` (default 1e-8 via
    /// [`Coupling::new`]).
    pub fn with_tol(
        joint: DensityMatrix,
        target_a: DensityMatrix,
        target_b: DensityMatrix,
        tol: f64,
    ) -> Result<Self> {
        let check = is_coupling(&joint, &target_a, &target_b, tol)?;
        if !check.ok {
            return Err(Error::MarginalMismatch(format!(
                "marginal residuals ({:.3e}, {:.3e}) exceed {tol:.3e}",
                check.residual_a, check.residual_b
            )));
        }
        Ok(Self {
            joint,
            target_a,
            target_b,
            tol,
        })
    }

    pub fn new(
        joint: DensityMatrix,
        target_a: DensityMatrix,
        target_b: DensityMatrix,
    ) -> Result<Self> {
        Self::with_tol(joint, target_a, target_b, 1e-8)
    }

    pub fn joint(&self) -> &DensityMatrix {
        &self.joint
    }

    pub fn target_a(&self) -> &DensityMatrix {
        &self.target_a
    }

    pub fn target_b(&self) -> &DensityMatrix {
        &self.target_b
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `Tr(P_s joint)` when both local dimensions agree.
    pub fn sym_weight(&self) -> Result<f64> {
        Ok(symmetry_stats(&self.joint)?.sym())
    }
}

/// Outcome of a marginal check, with the Frobenius residuals always reported.
#[derive(Debug, Clone, Copy)]
pub struct CouplingCheck {
    pub ok: bool,
    pub residual_a: f64,
    pub residual_b: f64,
}

/// Does `joint` couple `rho_a` and `rho_b` within `tol`?
pub fn is_coupling(
    joint: &DensityMatrix,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    tol: f64,
) -> Result<CouplingCheck> {
    let dims = joint.dims();
    if dims.len() != 2 || dims[0] != rho_a.dim() || dims[1] != rho_b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "joint dims {:?} vs targets {} and {}",
            dims,
            rho_a.dim(),
            rho_b.dim()
        )));
    }
    let red_a = joint.marginal(Keep::A)?;
    let red_b = joint.marginal(Keep::B)?;
    let residual_a = red_a.mat().sub(rho_a.mat()).frob_norm();
    let residual_b = red_b.mat().sub(rho_b.mat()).frob_norm();
    Ok(CouplingCheck {
        ok: residual_a <= tol && residual_b <= tol,
        residual_a,
        residual_b,
    })
}

/// The product coupling `rho_A ⊗ rho_B`, always admissible.
pub fn product_coupling(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<Coupling> {
    let joint = DensityMatrix::with_tol(
        kron(rho_a.mat(), rho_b.mat()),
        vec![rho_a.dim(), rho_b.dim()],
        1e-7,
    )?;
    Coupling::new(joint, rho_a.clone(), rho_b.clone())
}

/// Probability distribution: nonnegative entries summing to one.
#[derive(Debug, Clone)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
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
        Ok(Self(p.into_iter().map(|x| x.max(0.0)).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Nonnegative square matrix with declared row/column-sum contracts.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    n: usize,
    x: Vec<f64>,
    row_contract: Option<Vec<f64>>,
    col_contract: Option<Vec<f64>>,
}

impl TransportPlan {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            x: vec![0.0; n * n],
            row_contract: None,
            col_contract: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.n + j]
    }

    fn add_entry(&mut self, i: usize, j: usize, v: f64) {
        self.x[i * self.n + j] += v;
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.entry(i, j)).sum())
            .collect()
    }

    pub fn row_contract(&self) -> Option<&[f64]> {
        self.row_contract.as_deref()
    }

    pub fn col_contract(&self) -> Option<&[f64]> {
        self.col_contract.as_deref()
    }

    /// Total off-diagonal mass.
    pub fn mismatch_mass(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    acc += self.entry(i, j);
                }
            }
        }
        acc
    }

    /// Square-root asymmetry `sum_{i>j} (sqrt(X_ij) - sqrt(X_ji))^2`.
    pub fn sqrt_asymmetry(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                let d = self.entry(i, j).max(0.0).sqrt() - self.entry(j, i).max(0.0).sqrt();
                acc += d * d;
            }
        }
        acc
    }

    /// Largest deviation from the declared contracts plus any negativity.
    pub fn max_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &v in &self.x {
            if v < 0.0 {
                worst = worst.max(-v);
            }
        }
        if let Some(rc) = &self.row_contract {
            for (got, want) in self.row_sums().iter().zip(rc) {
                worst = worst.max((got - want).abs());
            }
        }
        if let Some(cc) = &self.col_contract {
            for (got, want) in self.col_sums().iter().zip(cc) {
                worst = worst.max((got - want).abs());
            }
        }
        worst
    }
}

fn check_lengths(a: &Distribution, b: &Distribution) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.len())
}

/// Optimal coupling for the total-variation cost: diagonal keeps
/// `min(mu_i, nu_i)`, the surplus fills deficits proportionally, and the
/// off-diagonal mass equals `D(mu, nu) = sum |mu_i - nu_i| / 2`.
pub fn classical_tv_coupling(mu: &Distribution, nu: &Distribution) -> Result<TransportPlan> {
    let n = check_lengths(mu, nu)?;
    let mut plan = TransportPlan::zeros(n);
    let mut surplus = vec![0.0; n];
    let mut deficit = vec![0.0; n];
    for i in 0..n {
        let m = mu.values()[i].min(nu.values()[i]);
        plan.add_entry(i, i, m);
        surplus[i] = mu.values()[i] - m;
        deficit[i] = nu.values()[i] - m;
    }
    let tv: f64 = surplus.iter().sum();
    if tv > 0.0 {
        for i in 0..n {
            if surplus[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if deficit[j] == 0.0 {
                    continue;
                }
                plan.add_entry(i, j, surplus[i] * deficit[j] / tv);
            }
        }
    }
    plan.row_contract = Some(mu.values().to_vec());
    plan.col_contract = Some(nu.values().to_vec());
    Ok(plan)
}

/// Relative equality test for masses.
fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (a.abs() + b.abs() + 1e-300)
}

/// Transport plan with row sums `S`, column sums `T`, and square-root
/// asymmetry at most `sum_i (sqrt(S_i) - sqrt(T_i))^2` minus its smallest
/// term.
///
/// Greedy peeling: repeatedly take the index `k` with the most extreme
/// mass ratio and settle it against indices on the opposite side. All
/// comparisons are in product form (`deficit` vs `surplus`) rather than the
/// ratio form, which stays well defined when a mass hits zero.
pub fn diag_transport(s_dist: &Distribution, t_dist: &Distribution) -> Result<TransportPlan> {
    let n = check_lengths(s_dist, t_dist)?;
    let mut s = s_dist.values().to_vec();
    let mut t = t_dist.values().to_vec();
    let mut plan = TransportPlan::zeros(n);
    let mut active: Vec<usize> = (0..n).collect();

    // Degenerate masses carry no transport obligation.
    active.retain(|&i| s[i] > 1e-15 || t[i] > 1e-15);

    let mut guard = 0usize;
    while active.len() > 1 {
        guard += 1;
        if guard > 4 * n * n + 16 {
            return Err(Error::NumericalFailure(
                "transport peeling failed to terminate".into(),
            ));
        }

        // Most extreme ratio, ties to the smallest index.
        let ratio = |i: usize| -> f64 {
            if s[i] <= 0.0 || t[i] <= 0.0 {
                f64::INFINITY
            } else {
                (s[i] / t[i]).max(t[i] / s[i])
            }
        };
        let mut k = active[0];
        let mut best = ratio(k);
        for &i in active.iter().skip(1) {
            let r = ratio(i);
            if r > best {
                best = r;
                k = i;
            }
        }

        if close(s[k], t[k], 1e-12) {
            plan.add_entry(k, k, s[k]);
            active.retain(|&i| i != k);
            continue;
        }

        let forward = s[k] > t[k];
        let receivers: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&i| {
                i != k
                    && if forward {
                        t[i] > s[i] && !close(s[i], t[i], 1e-12)
                    } else {
                        s[i] > t[i] && !close(s[i], t[i], 1e-12)
                    }
            })
            .collect();
        if receivers.is_empty() {
            // Rounding leftover; settle on the diagonal.
            plan.add_entry(k, k, 0.5 * (s[k] + t[k]));
            active.retain(|&i| i != k);
            continue;
        }

        for &i in &receivers {
            // k's masses shrink as receivers absorb, so the surplus is
            // re-read every round; its ratio stays fixed.
            let surplus = if forward { s[k] - t[k] } else { t[k] - s[k] };
            if surplus <= 0.0 {
                plan.add_entry(k, k, 0.5 * (s[k] + t[k]));
                active.retain(|&j| j != k);
                break;
            }
            let deficit = if forward { t[i] - s[i] } else { s[i] - t[i] };
            if close(deficit, surplus, 1e-12) {
                if forward {
                    plan.add_entry(k, i, s[k]);
                    plan.add_entry(i, k, t[k]);
                    plan.add_entry(i, i, (s[i] - t[k]).max(0.0));
                } else {
                    plan.add_entry(i, k, t[k]);
                    plan.add_entry(k, i, s[k]);
                    plan.add_entry(i, i, (t[i] - s[k]).max(0.0));
                }
                active.retain(|&j| j != i && j != k);
                break;
            } else if deficit > surplus {
                if forward {
                    plan.add_entry(k, i, s[k]);
                    plan.add_entry(i, k, t[k]);
                    s[i] = (s[i] - t[k]).max(0.0);
                    t[i] = (t[i] - s[k]).max(0.0);
                } else {
                    plan.add_entry(i, k, t[k]);
                    plan.add_entry(k, i, s[k]);
                    t[i] = (t[i] - s[k]).max(0.0);
                    s[i] = (s[i] - t[k]).max(0.0);
                }
                active.retain(|&j| j != k);
                break;
            } else {
                // Receiver fully absorbed; k keeps its ratio and continues.
                let frac = deficit / surplus;
                if forward {
                    let xki = s[k] * frac;
                    let xik = t[k] * frac;
                    plan.add_entry(k, i, xki);
                    plan.add_entry(i, k, xik);
                    s[k] -= xki;
                    t[k] -= xik;
                    plan.add_entry(i, i, (s[i] - xik).max(0.0));
                } else {
                    let xik = t[k] * frac;
                    let xki = s[k] * frac;
                    plan.add_entry(i, k, xik);
                    plan.add_entry(k, i, xki);
                    t[k] -= xik;
                    s[k] -= xki;
                    plan.add_entry(i, i, (t[i] - xki).max(0.0));
                }
                active.retain(|&j| j != i);
            }
        }
    }
    if let Some(&i) = active.first() {
        plan.add_entry(i, i, s[i].max(0.0));
    }
    plan.row_contract = Some(s_dist.values().to_vec());
    plan.col_contract = Some(t_dist.values().to_vec());
    Ok(plan)
}

/// Coupling of two diagonal states built from [`diag_transport`]:
/// `rho = sum_i X_ii |ii><ii| + sum_{i>j} (sqrt(X_ij)|ij> + sqrt(X_ji)|ji>)(h.c.)`.
///
/// Its symmetric weight is `1 - sqrt_asymmetry/2`, which beats
/// `F(Lambda_A, Lambda_B)` by half the smallest `(sqrt(S_i)-sqrt(T_i))^2`.
pub fn diag_coupling(lam_a: &Distribution, lam_b: &Distribution) -> Result<Coupling> {
    let d = check_lengths(lam_a, lam_b)?;
    let plan = diag_transport(lam_a, lam_b)?;
    let mut joint = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        let m = plan.entry(i, i);
        if m > 0.0 {
            let idx = i * d + i;
            let v = joint.at(idx, idx) + Complex64::new(m, 0.0);
            joint.set(idx, idx, v);
        }
        for j in 0..i {
            let xij = plan.entry(i, j).max(0.0);
            let xji = plan.entry(j, i).max(0.0);
            if xij + xji <= 0.0 {
                continue;
            }
            let mut w = vec![Complex64::new(0.0, 0.0); d * d];
            w[i * d + j] = Complex64::new(xij.sqrt(), 0.0);
            w[j * d + i] = Complex64::new(xji.sqrt(), 0.0);
            joint = joint.add(&ComplexMatrix::outer(&w, &w));
        }
    }
    let tr = joint.trace().re;
    let joint = joint.scale_re(1.0 / tr);
    let rho_a = DensityMatrix::with_tol(
        ComplexMatrix::from_diag(lam_a.values()),
        vec![d],
        1e-7,
    )?;
    let rho_b = DensityMatrix::with_tol(
        ComplexMatrix::from_diag(lam_b.values()),
        vec![d],
        1e-7,
    )?;
    Coupling::new(
        DensityMatrix::with_tol(joint, vec![d, d], 1e-7)?,
        rho_a,
        rho_b,
    )
}

/// One weighted pure-state term of a rank-2 input.
#[derive(Debug, Clone)]
pub struct WeightedVector {
    pub weight: f64,
    pub vector: Vec<Complex64>,
}

impl WeightedVector {
    pub fn new(weight: f64, vector: Vec<Complex64>) -> Self {
        Self { weight, vector }
    }
}

/// Coupling of two (at most) rank-2 states from aligned decompositions,
/// with symmetric weight at least `1/2 + (sum sqrt(s_i t_i) <v_i|u_i>)^2 / 2`.
///
/// Preconditions: `<v_1|v_2> = 0`, each `<v_i|u_i>` real nonnegative, all
/// vectors unit. Weights may be subnormalized; each side is normalized
/// internally. The phase `theta` comes from `<u_1|u_2> = r e^{-i theta}`.
pub fn rank2_coupling(
    rho_pair: &[WeightedVector; 2],
    sigma_pair: &[WeightedVector; 2],
) -> Result<Coupling> {
    let d = rho_pair[0].vector.len();
    for wv in rho_pair.iter().chain(sigma_pair.iter()) {
        if wv.vector.len() != d {
            return Err(Error::DimensionMismatch(
                "rank-2 input vectors differ in dimension".into(),
            ));
        }
        if wv.weight < -1e-12 {
            return Err(Error::AlignmentViolation(format!(
                "negative weight {}",
                wv.weight
            )));
        }
        if wv.weight > 1e-12 && (vec_norm(&wv.vector) - 1.0).abs() > 1e-7 {
            return Err(Error::AlignmentViolation(format!(
                "vector norm {} is not 1",
                vec_norm(&wv.vector)
            )));
        }
    }
    let v_overlap = inner(&sigma_pair[0].vector, &sigma_pair[1].vector);
    if v_overlap.norm() > 1e-7 {
        return Err(Error::AlignmentViolation(format!(
            "<v1|v2> = {:.3e} is not 0",
            v_overlap.norm()
        )));
    }
    for (wv, wu) in sigma_pair.iter().zip(rho_pair.iter()) {
        if wv.weight <= 1e-12 || wu.weight <= 1e-12 {
            continue;
        }
        let ov = inner(&wv.vector, &wu.vector);
        if ov.im.abs() > 1e-7 || ov.re < -1e-7 {
            return Err(Error::AlignmentViolation(format!(
                "<v_i|u_i> = {ov} is not real nonnegative"
            )));
        }
    }

    let s_tot = rho_pair[0].weight + rho_pair[1].weight;
    let t_tot = sigma_pair[0].weight + sigma_pair[1].weight;
    if s_tot <= 1e-14 || t_tot <= 1e-14 {
        return Err(Error::AlignmentViolation("zero total weight".into()));
    }
    let s = [
        rho_pair[0].weight.max(0.0) / s_tot,
        rho_pair[1].weight.max(0.0) / s_tot,
    ];
    let t = [
        sigma_pair[0].weight.max(0.0) / t_tot,
        sigma_pair[1].weight.max(0.0) / t_tot,
    ];
    let (u1, u2) = (&rho_pair[0].vector, &rho_pair[1].vector);
    let (v1, v2) = (&sigma_pair[0].vector, &sigma_pair[1].vector);

    let u_overlap = inner(u1, u2);
    let theta = if u_overlap.norm() > 1e-12 {
        -u_overlap.arg()
    } else {
        0.0
    };
    let phase2 = Complex64::from_polar(1.0, 2.0 * theta);

    let kron_vec = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                out.push(x * y);
            }
        }
        out
    };

    let mut w1 = kron_vec(u1, v1);
    let c1 = Complex64::new((s[0] * t[0]).sqrt(), 0.0);
    let c2 = Complex64::new((s[1] * t[1]).sqrt(), 0.0) * phase2;
    let w1b = kron_vec(u2, v2);
    for (a, b) in w1.iter_mut().zip(&w1b) {
        *a = *a * c1 - *b * c2;
    }
    let mut w2 = kron_vec(u1, v2);
    let c3 = Complex64::new((s[0] * t[1]).sqrt(), 0.0);
    let c4 = Complex64::new((s[1] * t[0]).sqrt(), 0.0);
    let w2b = kron_vec(u2, v1);
    for (a, b) in w2.iter_mut().zip(&w2b) {
        *a = *a * c3 + *b * c4;
    }

    let mut joint = ComplexMatrix::outer(&w1, &w1);
    joint = joint.add(&ComplexMatrix::outer(&w2, &w2));
    let tr = joint.trace().re;
    let joint = joint.scale_re(1.0 / tr);

    let rho = ComplexMatrix::outer(u1, u1)
        .scale_re(s[0])
        .add(&ComplexMatrix::outer(u2, u2).scale_re(s[1]));
    let sigma = ComplexMatrix::outer(v1, v1)
        .scale_re(t[0])
        .add(&ComplexMatrix::outer(v2, v2).scale_re(t[1]));

    Coupling::new(
        DensityMatrix::with_tol(joint, vec![d, d], 1e-7)?,
        DensityMatrix::with_tol(rho, vec![d], 1e-7)?,
        DensityMatrix::with_tol(sigma, vec![d], 1e-7)?,
    )
}

/// Row-stochastic mass-splitting plan: `X >= 0`, every row sums to one, and
/// `X_ij s_i + X_ji s_j = X_ij t_i + X_ji t_j` for all `i, j`.
///
/// Indices with `s_i = t_i` keep their whole row on the diagonal; the rest
/// are paired across the surplus/deficit divide, always consuming the index
/// with the smallest remaining weighted imbalance `c_k |s_k - t_k|`.
pub fn mass_split(s_dist: &Distribution, t_dist: &Distribution) -> Result<TransportPlan> {
    let n = check_lengths(s_dist, t_dist)?;
    let s = s_dist.values();
    let t = t_dist.values();
    let mut plan = TransportPlan::zeros(n);
    let mut budget = vec![1.0f64; n];
    let mut above: Vec<usize> = Vec::new();
    let mut below: Vec<usize> = Vec::new();
    for i in 0..n {
        if (s[i] - t[i]).abs() <= 1e-12 {
            plan.add_entry(i, i, 1.0);
        } else if s[i] > t[i] {
            above.push(i);
        } else {
            below.push(i);
        }
    }

    let mut guard = 0usize;
    while !above.is_empty() && !below.is_empty() {
        guard += 1;
        if guard > 2 * n + 16 {
            return Err(Error::NumericalFailure(
                "mass splitting failed to terminate".into(),
            ));
        }
        let key = |i: usize| budget[i] * (s[i] - t[i]).abs();
        let mut k = *above.first().min(below.first()).unwrap();
        let mut best = key(k);
        for &i in above.iter().chain(below.iter()) {
            let v = key(i);
            if v < best || (v == best && i < k) {
                best = v;
                k = i;
            }
        }
        let k_above = above.contains(&k);
        let partner = if k_above { below[0] } else { above[0] };

        plan.add_entry(k, partner, budget[k]);
        let xik = budget[k] * (s[k] - t[k]).abs() / (s[partner] - t[partner]).abs();
        plan.add_entry(partner, k, xik);
        budget[partner] = (budget[partner] - xik).max(0.0);
        budget[k] = 0.0;
        above.retain(|&i| i != k);
        below.retain(|&i| i != k);
        if budget[partner] <= 1e-14 {
            // Rounding leftover goes to the diagonal; the balance error it
            // introduces is budget * |s - t|, far below tolerance.
            plan.add_entry(partner, partner, budget[partner]);
            budget[partner] = 0.0;
            above.retain(|&i| i != partner);
            below.retain(|&i| i != partner);
        }
    }
    for &i in above.iter().chain(below.iter()) {
        plan.add_entry(i, i, budget[i]);
    }
    plan.row_contract = Some(vec![1.0; n]);
    Ok(plan)
}

/// Verify the balance identity of [`mass_split`] for all index pairs.
pub fn mass_split_balance_violation(plan: &TransportPlan, s: &[f64], t: &[f64]) -> f64 {
    let n = plan.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let lhs = plan.entry(i, j) * s[i] + plan.entry(j, i) * s[j];
            let rhs = plan.entry(i, j) * t[i] + plan.entry(j, i) * t[j];
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// General coupling with symmetric weight at least `1/2 + F(rho, sigma)^2/2`.
///
/// Splits both states along an aligned ensemble decomposition, routes mass
/// with [`mass_split`], couples the diagonal blocks as product terms and the
/// off-diagonal blocks with [`rank2_coupling`], and sums the pieces.
pub fn general_coupling(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Coupling> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states have dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let d = rho.dim();
    let dec = uhlmann_aligned(rho, sigma)?;
    let s_raw: Vec<f64> = dec.terms.iter().map(|p| p.s.max(0.0)).collect();
    let t_raw: Vec<f64> = dec.terms.iter().map(|p| p.t.max(0.0)).collect();
    let s_sum: f64 = s_raw.iter().sum();
    let t_sum: f64 = t_raw.iter().sum();
    let s = Distribution::new(s_raw.iter().map(|x| x / s_sum).collect())?;
    let t = Distribution::new(t_raw.iter().map(|x| x / t_sum).collect())?;
    let plan = mass_split(&s, &t)?;

    let kron_vec = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                out.push(x * y);
            }
        }
        out
    };

    let mut joint = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        let mass = s.values()[i] * plan.entry(i, i);
        if mass > 1e-15 {
            let w = kron_vec(&dec.terms[i].u, &dec.terms[i].v);
            joint = joint.add(&ComplexMatrix::outer(&w, &w).scale_re(mass));
        }
        for j in (i + 1)..d {
            let s_mass = s.values()[i] * plan.entry(i, j) + s.values()[j] * plan.entry(j, i);
            if s_mass < 1e-12 {
                continue;
            }
            let block = rank2_coupling(
                &[
                    WeightedVector::new(s.values()[i] * plan.entry(i, j), dec.terms[i].u.clone()),
                    WeightedVector::new(s.values()[j] * plan.entry(j, i), dec.terms[j].u.clone()),
                ],
                &[
                    WeightedVector::new(t.values()[i] * plan.entry(i, j), dec.terms[i].v.clone()),
                    WeightedVector::new(t.values()[j] * plan.entry(j, i), dec.terms[j].v.clone()),
                ],
            )?;
            joint = joint.add(&block.joint().mat().scale_re(s_mass));
        }
    }
    let tr = joint.trace().re;
    if tr <= 0.0 {
        return Err(Error::NumericalFailure(
            "assembled coupling has nonpositive trace".into(),
        ));
    }
    let joint = joint.scale_re(1.0 / tr);
    Coupling::new(
        DensityMatrix::with_tol(joint, vec![d, d], 1e-7)?,
        rho.clone(),
        sigma.clone(),
    )
}

/// Finite pure-state ensemble with weights summing to one.
#[derive(Debug, Clone)]
pub struct Ensemble {
    terms: Vec<(f64, PureState)>,
}

impl Ensemble {
    pub fn new(terms: Vec<(f64, PureState)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidDistribution("empty ensemble".into()));
        }
        let dim = terms[0].1.dim();
        if terms.iter().any(|(_, psi)| psi.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "ensemble states differ in dimension".into(),
            ));
        }
        if terms.iter().any(|(w, _)| *w < -1e-12 || !w.is_finite()) {
            return Err(Error::InvalidDistribution("negative weight".into()));
        }
        let sum: f64 = terms.iter().map(|(w, _)| w).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, PureState)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }

    /// The mixed state `sum_i p_i |psi_i><psi_i|`.
    pub fn mix(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for (w, psi) in &self.terms {
            out = out.add(&ComplexMatrix::outer(psi.vec(), psi.vec()).scale_re(*w));
        }
        out
    }

    /// Average cost `sum_i p_i Tr(H |psi_i><psi_i|)`.
    pub fn average_cost(&self, h: &ComplexMatrix) -> f64 {
        self.terms
            .iter()
            .map(|(w, psi)| {
                let hv = h.matvec(psi.vec());
                w * inner(psi.vec(), &hv).re
            })
            .sum()
    }
}

/// Reduce an ensemble to at most `dim^2 + 1` elements while preserving both
/// the mixed state and the average of the linear cost `Tr(H psi)`.
///
/// Constructive Caratheodory: embed each projector (with its cost) into the
/// real affine space of Hermitian matrices, find an affine dependence among
/// the points, and shift weights along it until one vanishes. Duplicate
/// states are merged first.
pub fn caratheodory_reduce(ensemble: &Ensemble, h: &ComplexMatrix) -> Result<Ensemble> {
    let d = ensemble.dim();
    if !h.is_square() || h.rows() != d {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix is {}x{}, states have dimension {d}",
            h.rows(),
            h.cols()
        )));
    }
    if h.herm_deviation() > 1e-9 {
        return Err(Error::NotHermitian {
            deviation: h.herm_deviation(),
            tol: 1e-9,
        });
    }
    let bound = d * d + 1;

    // Merge duplicates (equal projectors, i.e. equal up to global phase).
    let mut terms: Vec<(f64, PureState)> = Vec::new();
    'outer: for (w, psi) in ensemble.terms() {
        for (wk, kept) in terms.iter_mut() {
            if inner(kept.vec(), psi.vec()).norm() >= 1.0 - 1e-12 {
                *wk += w;
                continue 'outer;
            }
        }
        terms.push((*w, psi.clone()));
    }

    // Affine embedding: independent real coordinates of the projector plus
    // the cost value.
    let coords = |psi: &PureState| -> Vec<f64> {
        let p = ComplexMatrix::outer(psi.vec(), psi.vec());
        let mut v = Vec::with_capacity(d * d + 1);
        for a in 0..d {
            for b in a..d {
                v.push(p.at(a, b).re);
            }
        }
        for a in 0..d {
            for b in (a + 1)..d {
                v.push(p.at(a, b).im);
            }
        }
        let hv = h.matvec(psi.vec());
        v.push(inner(psi.vec(), &hv).re);
        v
    };

    while terms.len() > bound {
        let n = terms.len();
        let rows = d * d + 2;
        let mut m = ComplexMatrix::zeros(rows, n);
        for (j, (_, psi)) in terms.iter().enumerate() {
            let c = coords(psi);
            for (i, &x) in c.iter().enumerate() {
                m.set(i, j, Complex64::new(x, 0.0));
            }
            m.set(rows - 1, j, Complex64::new(1.0, 0.0));
        }
        // Null vector of M from the smallest eigenvector of M^T M.
        let gram = m.dagger().matmul(&m);
        let eig = crate::linalg::herm_eig(&gram, 1e-9)?;
        let null_col = eig.vectors.column(n - 1);
        let mut c: Vec<f64> = null_col.iter().map(|z| z.re).collect();
        let cmax = c.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        if cmax <= 1e-12 {
            return Err(Error::NumericalFailure(
                "failed to find an affine dependence".into(),
            ));
        }
        if c.iter().cloned().fold(f64::MIN, f64::max) <= 0.0 {
            for x in c.iter_mut() {
                *x = -*x;
            }
        }
        let mut alpha = f64::INFINITY;
        let mut kill = usize::MAX;
        for (i, &ci) in c.iter().enumerate() {
            if ci > 1e-14 {
                let a = terms[i].0 / ci;
                if a < alpha {
                    alpha = a;
                    kill = i;
                }
            }
        }
        if kill == usize::MAX {
            return Err(Error::NumericalFailure(
                "affine dependence has no positive direction".into(),
            ));
        }
        for (i, term) in terms.iter_mut().enumerate() {
            term.0 = (term.0 - alpha * c[i]).max(0.0);
        }
        terms[kill].0 = 0.0;
        terms.retain(|(w, _)| *w > 1e-15);
    }

    let total: f64 = terms.iter().map(|(w, _)| w).sum();
    for term in terms.iter_mut() {
        term.0 /= total;
    }
    Ensemble::new(terms)
}

/// Fidelity bound report: marginal fidelity dominates the swap-statistic
/// distance.
#[derive(Debug, Clone, Copy)]
pub struct FidelityBoundReport {
    pub marginal_fidelity: f64,
    pub stat_distance: f64,
    /// `marginal_fidelity - stat_distance`, nonnegative up to rounding.
    pub slack: f64,
}

/// Distance bound report: swap-statistic fidelity dominates the marginal
/// trace distance.
#[derive(Debug, Clone, Copy)]
pub struct DistanceBoundReport {
    pub marginal_distance: f64,
    pub stat_fidelity: f64,
    /// `stat_fidelity - marginal_distance`, nonnegative up to rounding.
    pub slack: f64,
}

/// Check `F(rho_A, rho_B) >= |Tr(P_as rho) - Tr(P_s rho)|` on a bipartite
/// state with equal local dimensions.
pub fn check_fidelity_bound(rho_ab: &DensityMatrix) -> Result<FidelityBoundReport> {
    let stats = symmetry_stats(rho_ab)?;
    let a = rho_ab.marginal(Keep::A)?;
    let b = rho_ab.marginal(Keep::B)?;
    let f = fidelity(&a, &b)?;
    Ok(FidelityBoundReport {
        marginal_fidelity: f,
        stat_distance: stats.stat_distance(),
        slack: f - stats.stat_distance(),
    })
}

/// Check `D(rho_A, rho_B) <= 2 sqrt(Tr(P_as rho) Tr(P_s rho))`.
pub fn check_distance_bound(rho_ab: &DensityMatrix) -> Result<DistanceBoundReport> {
    let stats = symmetry_stats(rho_ab)?;
    let a = rho_ab.marginal(Keep::A)?;
    let b = rho_ab.marginal(Keep::B)?;
    let dist = trace_distance(&a, &b)?;
    Ok(DistanceBoundReport {
        marginal_distance: dist,
        stat_fidelity: stats.stat_fidelity(),
        slack: stats.stat_fidelity() - dist,
    })
}
