//! Extremal coupling overlaps.
//!
//! The coupling polytope of `(rho_A, rho_B)` is the intersection of the PSD
//! cone with the affine set fixing both marginals. A linear objective
//! `Tr(H rho)` is maximized by projected gradient ascent, where each iterate
//! is returned to the polytope by Dykstra's alternating projections: the PSD
//! projection clamps negative eigenvalues, the affine projection has a closed
//! form. For `H = P_s` the result carries the certificate bracket
//! `[(1 + F^2)/2, (1 + F)/2]`.
//!
//! Also here: the exact two-copy twirl (projection onto `span{P_s, P_as}`)
//! and the numerical no-go demonstration that minimal antisymmetric overlap
//! determines neither trace distance nor infidelity through any bijection.

use num_complex::Complex64;

use crate::coupling::{product_coupling, Coupling};
use crate::linalg::{herm_eig, kron, partial_trace, ComplexMatrix, Keep};
use crate::qstate::{fidelity, sym_projectors, DensityMatrix, PureState};
use crate::{Error, Result};

/// Knobs for the projected-gradient solver.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Outer gradient iterations.
    pub max_iters: usize,
    /// Initial step size; the schedule is `step0 / sqrt(k)`.
    pub step0: f64,
    /// Convergence threshold on best-objective improvement.
    pub tol: f64,
    /// Dykstra iterations per projection.
    pub dykstra_iters: usize,
    /// Seed for any randomized diagnostics.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            step0: 1.0,
            tol: 1e-8,
            dykstra_iters: 500,
            seed: 0,
        }
    }
}

/// Result of one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub value: f64,
    pub argument: Coupling,
    pub iterations: usize,
    pub converged: bool,
    /// Bracket `[(1+F^2)/2, (1+F)/2]` when the objective is `P_s` (or its
    /// image under `value -> 1 - value` for the antisymmetric minimum).
    pub certificate: Option<(f64, f64)>,
}

impl OptimizationResult {
    /// True when a certificate exists and the value escapes it by more than
    /// `slack`.
    pub fn certificate_violated(&self, slack: f64) -> bool {
        match self.certificate {
            Some((lo, hi)) => self.value < lo - slack || self.value > hi + slack,
            None => false,
        }
    }
}

fn trace_product_re(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!(a.cols(), b.rows());
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..a.cols() {
            acc += (a.at(i, j) * b.at(j, i)).re;
        }
    }
    acc
}

/// Orthogonal projection onto the affine set
/// `{X Hermitian : Tr_B X = rho_A, Tr_A X = rho_B}`.
///
/// The correction lives in the range of the constraint adjoint,
/// `Lambda_A ⊗ I + I ⊗ Lambda_B`, which makes the projected point the
/// Frobenius-nearest feasible one.
pub fn project_marginal_affine(
    x: &ComplexMatrix,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
) -> Result<ComplexMatrix> {
    let (da, db) = (rho_a.dim(), rho_b.dim());
    let n = da * db;
    if !x.is_square() || x.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected {n}x{n} joint operator, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let xh = x.herm_part();
    let r = xh.trace().re - 1.0;
    let res_a = partial_trace(&xh, (da, db), Keep::A)?.sub(rho_a.mat());
    let res_b = partial_trace(&xh, (da, db), Keep::B)?.sub(rho_b.mat());
    let lam_a = res_a
        .sub(&ComplexMatrix::identity(da).scale_re(r / (2.0 * da as f64)))
        .scale_re(1.0 / db as f64);
    let lam_b = res_b
        .sub(&ComplexMatrix::identity(db).scale_re(r / (2.0 * db as f64)))
        .scale_re(1.0 / da as f64);
    let correction = kron(&lam_a, &ComplexMatrix::identity(db))
        .add(&kron(&ComplexMatrix::identity(da), &lam_b));
    Ok(xh.sub(&correction))
}

/// Projection onto the PSD cone (within Hermitian matrices) by eigenvalue
/// clamping.
fn psd_projection(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(&x.herm_part(), 1e-6)?;
    let n = x.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lam = eig.values[k];
        if lam <= 0.0 {
            continue;
        }
        let col = eig.vectors.column(k);
        for i in 0..n {
            for j in 0..n {
                let v = out.at(i, j) + col[i] * col[j].conj() * lam;
                out.set(i, j, v);
            }
        }
    }
    Ok(out)
}

fn marginal_residual(
    x: &ComplexMatrix,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
) -> Result<f64> {
    let (da, db) = (rho_a.dim(), rho_b.dim());
    let ra = partial_trace(x, (da, db), Keep::A)?.sub(rho_a.mat()).frob_norm();
    let rb = partial_trace(x, (da, db), Keep::B)?.sub(rho_b.mat()).frob_norm();
    Ok(ra.max(rb))
}

/// Dykstra's alternating projections onto (PSD cone) ∩ (marginal affine set).
///
/// Returns the PSD-feasible iterate together with its marginal residual.
pub fn dykstra_project(
    x0: &ComplexMatrix,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    iters: usize,
    tol: f64,
) -> Result<(ComplexMatrix, f64)> {
    let n = x0.rows();
    let mut y = x0.herm_part();
    let mut p = ComplexMatrix::zeros(n, n);
    let mut q = ComplexMatrix::zeros(n, n);
    let mut best = y.clone();
    let mut best_resid = f64::INFINITY;
    for _ in 0..iters {
        let z = psd_projection(&y.add(&p))?;
        p = y.add(&p).sub(&z);
        let w = project_marginal_affine(&z.add(&q), rho_a, rho_b)?;
        q = z.add(&q).sub(&w);
        y = w;
        let resid = marginal_residual(&z, rho_a, rho_b)?;
        if resid < best_resid {
            best_resid = resid;
            best = z;
        }
        if resid <= tol {
            return Ok((best, best_resid));
        }
    }
    Ok((best, best_resid))
}

/// Exact feasibility repair: restore the marginals by affine projection,
/// then blend in just enough of the product coupling to clear any negative
/// eigenvalues (`lambda_min` is concave, so the blend is PSD by
/// construction). For pure marginals this collapses onto the unique
/// coupling; for full-rank marginals the blend weight is of the order of the
/// residual negativity.
fn repair_to_polytope(
    z: &ComplexMatrix,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
) -> Result<ComplexMatrix> {
    let w = project_marginal_affine(z, rho_a, rho_b)?;
    let eig_w = herm_eig(&w, 1e-6)?;
    let eps = -eig_w.values.last().copied().unwrap_or(0.0).min(0.0);
    if eps <= 1e-9 {
        return Ok(w);
    }
    let pi = kron(rho_a.mat(), rho_b.mat());
    let m_a = herm_eig(rho_a.mat(), 1e-6)?.values.last().copied().unwrap_or(0.0);
    let m_b = herm_eig(rho_b.mat(), 1e-6)?.values.last().copied().unwrap_or(0.0);
    let m = (m_a * m_b).max(0.0);
    let gamma = ((eps / (eps + m)) * (1.0 + 1e-9)).min(1.0);
    Ok(w.scale_re(1.0 - gamma).add(&pi.scale_re(gamma)))
}

fn is_sym_projector(h: &ComplexMatrix) -> Option<usize> {
    let n = h.rows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return None;
    }
    let (ps, _) = sym_projectors(d);
    if h.sub(&ps).frob_norm() < 1e-9 {
        Some(d)
    } else {
        None
    }
}

/// Maximize `Tr(H rho_AB)` over couplings of `(rho_A, rho_B)` by projected
/// gradient ascent with a `step0/sqrt(k)` schedule and best-iterate memory.
///
/// Starts from the product coupling, which is always feasible. Stops when the
/// best objective has not improved by `cfg.tol` for 200 consecutive
/// iterations (`converged = true`) or at `cfg.max_iters` (`converged =
/// false`, best iterate still returned).
pub fn max_overlap(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    h: &ComplexMatrix,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    let n = rho_a.dim() * rho_b.dim();
    if !h.is_square() || h.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "objective is {}x{}, joint space is {n}",
            h.rows(),
            h.cols()
        )));
    }
    if h.herm_deviation() > 1e-8 {
        return Err(Error::NotHermitian {
            deviation: h.herm_deviation(),
            tol: 1e-8,
        });
    }
    let hh = h.herm_part();

    let start = product_coupling(rho_a, rho_b)?;
    let mut current = start.joint().mat().clone();
    let mut best = current.clone();
    let mut best_val = trace_product_re(&hh, &current);
    let mut mark = best_val;
    let mut since_improve = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    const PLATEAU: usize = 200;
    for k in 1..=cfg.max_iters {
        iterations = k;
        let step = cfg.step0 / (k as f64).sqrt();
        let proposal = current.add(&hh.scale_re(step));
        let (z, _resid) = dykstra_project(&proposal, rho_a, rho_b, cfg.dykstra_iters, 1e-11)?;
        // Every iterate is repaired onto the polytope, so objective values
        // are true feasible values and the best-so-far memory is honest.
        current = repair_to_polytope(&z, rho_a, rho_b)?;
        let val = trace_product_re(&hh, &current);
        if val > best_val {
            best_val = val;
            best = current.clone();
        }
        if best_val > mark + cfg.tol {
            mark = best_val;
            since_improve = 0;
        } else {
            since_improve += 1;
            if since_improve >= PLATEAU {
                converged = true;
                break;
            }
        }
    }

    let tr = best.trace().re;
    let polished = best.scale_re(1.0 / tr);
    let value = trace_product_re(&hh, &polished);
    let joint = DensityMatrix::with_tol(polished, vec![rho_a.dim(), rho_b.dim()], 1e-7)?;
    let argument = Coupling::with_tol(joint, rho_a.clone(), rho_b.clone(), 1e-7)?;

    let certificate = match is_sym_projector(&hh) {
        Some(_) => {
            let f = fidelity(rho_a, rho_b)?;
            Some(((1.0 + f * f) / 2.0, (1.0 + f) / 2.0))
        }
        None => None,
    };

    Ok(OptimizationResult {
        value,
        argument,
        iterations,
        converged,
        certificate,
    })
}

/// Minimize `Tr(P_as rho_AB)` over couplings: `1 - max Tr(P_s rho_AB)` with
/// the same maximizing argument, since `P_s + P_as = I` and the trace is one.
pub fn min_antisym_overlap(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    if rho_a.dim() != rho_b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states have dimensions {} and {}",
            rho_a.dim(),
            rho_b.dim()
        )));
    }
    let (ps, _) = sym_projectors(rho_a.dim());
    let res = max_overlap(rho_a, rho_b, &ps, cfg)?;
    let certificate = res
        .certificate
        .map(|(lo, hi)| (1.0 - hi, 1.0 - lo));
    Ok(OptimizationResult {
        value: 1.0 - res.value,
        argument: res.argument,
        iterations: res.iterations,
        converged: res.converged,
        certificate,
    })
}

/// Exact two-copy twirl: the projection of `H` onto `span{P_s, P_as}`,
/// `(Tr(H P_s)/rank P_s) P_s + (Tr(H P_as)/rank P_as) P_as`. This equals the
/// Haar average of `(U ⊗ U)^dag H (U ⊗ U)`.
pub fn twirl(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let n = h.rows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} is not a perfect square"
        )));
    }
    let (ps, pas) = sym_projectors(d);
    let rank_s = (d * (d + 1) / 2) as f64;
    let rank_as = (d * (d - 1) / 2) as f64;
    let a = trace_product_re(h, &ps) / rank_s;
    let mut out = ps.scale_re(a);
    if rank_as > 0.0 {
        let b = trace_product_re(h, &pas) / rank_as;
        out = out.add(&pas.scale_re(b));
    }
    Ok(out)
}

/// One row of the no-go family scan: the minimum antisymmetric overlap of the
/// family at `mu` equals `mu`, while the trace distance and infidelity of the
/// corresponding marginal pairs follow the two closed forms below.
#[derive(Debug, Clone, Copy)]
pub struct NogoFamilyRow {
    pub mu: f64,
    /// Exact minimal antisymmetric overlap of both family pairs.
    pub emd_min_exact: f64,
    /// Solver value for the trace-distance family pair.
    pub emd_min_numeric: f64,
    /// `D = 2 sqrt(mu(1-mu))`, forcing `f(x) = 2 sqrt(x(1-x))`.
    pub trace_distance: f64,
    /// `1 - |1-2mu|`, forcing `f(x) = 1 - |1-2x|`.
    pub infidelity: f64,
}

/// One probe at a pure-state pair with overlap `c`: both forced forms
/// disagree with the actual distances.
#[derive(Debug, Clone, Copy)]
pub struct NogoProbe {
    pub overlap_c: f64,
    /// Exact minimal antisymmetric overlap `(1 - c^2)/2` (unique coupling).
    pub emd_min: f64,
    /// Solver value for the pure pair.
    pub emd_min_numeric: f64,
    pub trace_distance: f64,
    pub forced_trace_distance: f64,
    pub trace_distance_gap: f64,
    pub infidelity: f64,
    pub forced_infidelity: f64,
    pub infidelity_gap: f64,
}

/// Full no-go demonstration output.
#[derive(Debug, Clone)]
pub struct NogoReport {
    /// `||twirl(H) - (lambda_1 I + lambda_2 P_as)||_F` for a generic `H`.
    pub twirl_residual: f64,
    pub twirl_lambda: (f64, f64),
    pub family: Vec<NogoFamilyRow>,
    pub probes: Vec<NogoProbe>,
    /// `|sqrt(1-c^2) - 2 sqrt(x(1-x))|` at `c = 1/2`, `x = (1-c^2)/2`.
    pub trace_distance_gap: f64,
    /// `|(1-c) - (1-c^2)|` at `c = 1/2`.
    pub infidelity_gap: f64,
}

fn family_pair(mu: f64) -> Result<(DensityMatrix, DensityMatrix)> {
    let g = (mu * (1.0 - mu)).sqrt();
    let rho1 = DensityMatrix::new(ComplexMatrix::from_diag(&[0.5 - g, 0.5 + g]), vec![2])?;
    let rho2 = DensityMatrix::new(ComplexMatrix::from_diag(&[0.5 + g, 0.5 - g]), vec![2])?;
    Ok((rho1, rho2))
}

fn pure_pair_with_overlap(c: f64) -> Result<(DensityMatrix, DensityMatrix)> {
    let alpha = PureState::basis(2, 0, vec![2])?;
    let beta = PureState::new(
        vec![
            Complex64::new(c, 0.0),
            Complex64::new((1.0 - c * c).max(0.0).sqrt(), 0.0),
        ],
        vec![2],
    )?;
    Ok((
        DensityMatrix::from_pure(&alpha),
        DensityMatrix::from_pure(&beta),
    ))
}

/// Demonstrate that no Hermitian cost and bijection can express trace
/// distance (or infidelity) through the minimal coupling overlap.
///
/// Any unitarily invariant candidate cost twirls down to
/// `lambda_1 I + lambda_2 P_as`, so only `H = P_as` matters. The family scan
/// pins the would-be bijection on `[0, 1/2]` to `f(x) = 2 sqrt(x(1-x))` for
/// trace distance and `f(x) = 1 - |1-2x|` for infidelity, and the pure-state
/// probes contradict both forced forms at `c = 1/2`.
pub fn nogo_demo(cfg: &OptimizerConfig) -> Result<NogoReport> {
    // Twirl reduction on a generic seeded Hermitian operator.
    let gen = crate::qstate::haar_unitary(4, cfg.seed.wrapping_add(17));
    let generic_h = gen
        .add(&gen.dagger())
        .scale_re(0.5)
        .add(&ComplexMatrix::from_diag(&[0.9, -0.3, 0.4, 0.1]));
    let twirled = twirl(&generic_h)?;
    let (ps, pas) = sym_projectors(2);
    let lambda1 = trace_product_re(&twirled, &ps) / 3.0;
    let b = trace_product_re(&twirled, &pas) / 1.0;
    let lambda2 = b - lambda1;
    let model = ComplexMatrix::identity(4)
        .scale_re(lambda1)
        .add(&pas.scale_re(lambda2));
    let twirl_residual = twirled.sub(&model).frob_norm();

    let mut family = Vec::new();
    for &mu in &[0.0, 0.1, 0.2, 0.25, 0.4, 0.5] {
        let (rho1, rho2) = family_pair(mu)?;
        let numeric = min_antisym_overlap(&rho1, &rho2, cfg)?.value;
        family.push(NogoFamilyRow {
            mu,
            emd_min_exact: mu,
            emd_min_numeric: numeric,
            trace_distance: 2.0 * (mu * (1.0 - mu)).sqrt(),
            infidelity: 1.0 - (1.0 - 2.0 * mu).abs(),
        });
    }

    let mut probes = Vec::new();
    for &c in &[0.0, 0.25, 0.5, 1.0] {
        let x = (1.0 - c * c) / 2.0;
        let (rho1, rho2) = pure_pair_with_overlap(c)?;
        let numeric = min_antisym_overlap(&rho1, &rho2, cfg)?.value;
        let actual_d = (1.0 - c * c).sqrt();
        let forced_d = 2.0 * (x * (1.0 - x)).sqrt();
        let actual_infid = 1.0 - c;
        let forced_infid = 1.0 - (1.0 - 2.0 * x).abs();
        probes.push(NogoProbe {
            overlap_c: c,
            emd_min: x,
            emd_min_numeric: numeric,
            trace_distance: actual_d,
            forced_trace_distance: forced_d,
            trace_distance_gap: (forced_d - actual_d).abs(),
            infidelity: actual_infid,
            forced_infidelity: forced_infid,
            infidelity_gap: (forced_infid - actual_infid).abs(),
        });
    }

    let half_probe = probes
        .iter()
        .find(|p| (p.overlap_c - 0.5).abs() < 1e-12)
        .expect("c = 1/2 probe present");
    Ok(NogoReport {
        twirl_residual,
        twirl_lambda: (lambda1, lambda2),
        family,
        probes: probes.clone(),
        trace_distance_gap: half_probe.trace_distance_gap,
        infidelity_gap: half_probe.infidelity_gap,
    })
}
