use num_complex::Complex64;
use qemd::linalg::*;
use qemd::qstate::*;
use qemd::tripartite::symext_2qubit;

fn psd_proj(x: &ComplexMatrix) -> ComplexMatrix {
    let eig = herm_eig(&x.herm_part(), 1e-6).unwrap();
    let n = x.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lam = eig.values[k];
        if lam <= 0.0 { continue; }
        let col = eig.vectors.column(k);
        for i in 0..n { for j in 0..n {
            let v = out.at(i, j) + col[i] * col[j].conj() * lam;
            out.set(i, j, v);
        }}
    }
    out
}

// lift R (4x4 on AB) into ABB' at positions: which=0 -> tensor I on B' (last),
// which=1 -> insert identity on B (middle).
fn lift(r: &ComplexMatrix, which: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(8, 8, |row, col| {
        let (a, b, bp) = (row / 4, (row / 2) % 2, row % 2);
        let (a2, b2, bp2) = (col / 4, (col / 2) % 2, col % 2);
        if which == 0 {
            if bp == bp2 { r.at(a * 2 + b, a2 * 2 + b2) } else { Complex64::new(0.0, 0.0) }
        } else {
            if b == b2 { r.at(a * 2 + bp, a2 * 2 + bp2) } else { Complex64::new(0.0, 0.0) }
        }
    })
}

fn swap_bbp(x: &ComplexMatrix) -> ComplexMatrix {
    let perm = |idx: usize| -> usize {
        let (a, b, bp) = (idx / 4, (idx / 2) % 2, idx % 2);
        a * 4 + bp * 2 + b
    };
    ComplexMatrix::from_fn(8, 8, |i, j| x.at(perm(i), perm(j)))
}

fn probe(rho_ab: &DensityMatrix, iters: usize) -> f64 {
    let target = rho_ab.mat();
    let dims = [2usize, 2, 2];
    let mut x = lift(target, 0).scale_re(0.5); // rho_AB ⊗ I/2
    let n = 8;
    let mut p = vec![ComplexMatrix::zeros(n, n); 4];
    let mut best = f64::INFINITY;
    for _ in 0..iters {
        let mut resid_psd = 0.0f64;
        for set in 0..4 {
            let y = x.add(&p[set]);
            let z = match set {
                0 => psd_proj(&y),
                1 => {
                    let r = partial_trace_multi(&y, &dims, &[true, true, false]).unwrap().sub(target);
                    y.sub(&lift(&r, 0).scale_re(0.5))
                }
                2 => {
                    let r = partial_trace_multi(&y, &dims, &[true, false, true]).unwrap().sub(target);
                    y.sub(&lift(&r, 1).scale_re(0.5))
                }
                _ => y.add(&swap_bbp(&y)).scale_re(0.5),
            };
            p[set] = y.sub(&z);
            if set == 0 {
                let r1 = partial_trace_multi(&z, &dims, &[true, true, false]).unwrap().sub(target).frob_norm();
                let r2 = partial_trace_multi(&z, &dims, &[true, false, true]).unwrap().sub(target).frob_norm();
                resid_psd = r1.max(r2);
            }
            x = z;
        }
        best = best.min(resid_psd);
    }
    best
}


fn probe_curve(rho_ab: &DensityMatrix, blocks: usize, block: usize) -> Vec<f64> {
    let target = rho_ab.mat();
    let dims = [2usize, 2, 2];
    let mut x = lift(target, 0).scale_re(0.5);
    let n = 8;
    let mut p = vec![ComplexMatrix::zeros(n, n); 4];
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for b in 0..blocks {
        for _ in 0..block {
            let mut resid_psd = 0.0f64;
            for set in 0..4 {
                let y = x.add(&p[set]);
                let z = match set {
                    0 => psd_proj(&y),
                    1 => {
                        let r = partial_trace_multi(&y, &dims, &[true, true, false]).unwrap().sub(target);
                        y.sub(&lift(&r, 0).scale_re(0.5))
                    }
                    2 => {
                        let r = partial_trace_multi(&y, &dims, &[true, false, true]).unwrap().sub(target);
                        y.sub(&lift(&r, 1).scale_re(0.5))
                    }
                    _ => y.add(&swap_bbp(&y)).scale_re(0.5),
                };
                p[set] = y.sub(&z);
                if set == 0 {
                    let r1 = partial_trace_multi(&z, &dims, &[true, true, false]).unwrap().sub(target).frob_norm();
                    let r2 = partial_trace_multi(&z, &dims, &[true, false, true]).unwrap().sub(target).frob_norm();
                    resid_psd = r1.max(r2);
                }
                x = z;
            }
            best = best.min(resid_psd);
        }
        out.push(best);
        let _ = b;
    }
    out
}


fn pocs_curve(rho_ab: &DensityMatrix, blocks: usize, block: usize) -> Vec<f64> {
    let target = rho_ab.mat();
    let dims = [2usize, 2, 2];
    let mut x = lift(target, 0).scale_re(0.5);
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for _ in 0..blocks {
        for _ in 0..block {
            // cyclic: affine1, affine2, symmetrize, psd
            let r1 = partial_trace_multi(&x, &dims, &[true, true, false]).unwrap().sub(target);
            x = x.sub(&lift(&r1, 0).scale_re(0.5));
            let r2 = partial_trace_multi(&x, &dims, &[true, false, true]).unwrap().sub(target);
            x = x.sub(&lift(&r2, 1).scale_re(0.5));
            x = x.add(&swap_bbp(&x)).scale_re(0.5);
            x = psd_proj(&x);
            let q1 = partial_trace_multi(&x, &dims, &[true, true, false]).unwrap().sub(target).frob_norm();
            let q2 = partial_trace_multi(&x, &dims, &[true, false, true]).unwrap().sub(target).frob_norm();
            best = best.min(q1.max(q2));
        }
        out.push(best);
    }
    out
}

fn main() {
    // singlet and I/4 sanity
    let inv = 1.0/2.0f64.sqrt();
    let singlet = DensityMatrix::from_pure(&PureState::new(vec![
        Complex64::new(0.0,0.0), Complex64::new(inv,0.0), Complex64::new(-inv,0.0), Complex64::new(0.0,0.0)], vec![2,2]).unwrap());
    let mixed = DensityMatrix::new(ComplexMatrix::identity(4).scale_re(0.25), vec![2,2]).unwrap();
    for iters in [300usize, 800] {
        println!("iters={iters}: singlet {:.2e}  I/4 {:.2e}", probe(&singlet, iters), probe(&mixed, iters));
    }
    for eps in [0.02f64] {
    println!("smoothed survey eps={eps}:");
    let mut worst_ext2: f64 = 0.0; let mut best_next2 = f64::INFINITY;
    let mut hist: Vec<(f64, f64)> = Vec::new();
    for seed in 0..100u64 {
        let rank = 1 + (seed % 4) as usize;
        let raw = random_density(4, rank, 555000 + seed).refactor(vec![2,2]).unwrap();
        let smoothed = DensityMatrix::with_tol(
            raw.mat().scale_re(1.0 - eps).add(&ComplexMatrix::identity(4).scale_re(eps / 4.0)),
            vec![2, 2], 1e-7).unwrap();
        let rep = symext_2qubit(&smoothed).unwrap();
        if rep.slack.abs() <= 1e-4 { continue; }
        let r = {
            let c = pocs_curve(&smoothed, 1, 1500);
            c[0]
        };
        hist.push((rep.slack, r));
        if rep.slack > 0.0 { worst_ext2 = worst_ext2.max(r); } else { best_next2 = best_next2.min(r); }
    }
    println!("extendible worst {worst_ext2:.2e}; non-ext smallest {best_next2:.2e}");
    let mut pairs: Vec<&(f64,f64)> = hist.iter().collect();
    pairs.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    println!("  sorted (slack, resid) around the split:");
    for (s, r) in pairs.iter() {
        if *r > 1e-9 && *r < 1e-1 { println!("    {s:+.3e}  {r:.2e}"); }
    }
    }

    for seed in [2u64, 10, 14, 21, 29, 34] {
        let rank = 1 + (seed % 4) as usize;
        let rho = random_density(4, rank, 12345 + seed).refactor(vec![2,2]).unwrap();
        let rep = symext_2qubit(&rho).unwrap();
        let curve = pocs_curve(&rho, 8, 300);
        let tail: Vec<String> = curve.iter().map(|r| format!("{r:.1e}")).collect();
        println!("POCS seed {seed} slack {:+.3e}: {}", rep.slack, tail.join(" "));
    }
    // decay curves for problem cases
    for seed in 0..60u64 {
        let rank = 1 + (seed % 4) as usize;
        let rho = random_density(4, rank, 12345 + seed).refactor(vec![2,2]).unwrap();
        let rep = symext_2qubit(&rho).unwrap();
        let r600 = probe(&rho, 600);
        let interesting = (rep.slack > 1e-4 && r600 > 1e-3) || (rep.slack < -1e-4 && r600 < 5e-3);
        if interesting {
            let curve = probe_curve(&rho, 10, 300);
            let tail: Vec<String> = curve.iter().map(|r| format!("{r:.1e}")).collect();
            println!("seed {seed} rank {rank} slack {:+.3e}: {}", rep.slack, tail.join(" "));
        }
    }
    // survey residual vs analytic slack
    let mut worst_ext: f64 = 0.0; let mut best_next = f64::INFINITY;
    let mut n_ext = 0; let mut n_not = 0; let mut n_border = 0;
    for seed in 0..60u64 {
        let rank = 1 + (seed % 4) as usize;
        let rho = random_density(4, rank, 12345 + seed).refactor(vec![2,2]).unwrap();
        let rep = symext_2qubit(&rho).unwrap();
        if rep.slack.abs() <= 1e-4 { n_border += 1; continue; }
        let r = probe(&rho, 600);
        if rep.slack > 0.0 { n_ext += 1; worst_ext = worst_ext.max(r); }
        else { n_not += 1; best_next = best_next.min(r); }
    }
    println!("extendible n={n_ext} worst probe residual {worst_ext:.2e}");
    println!("not-ext    n={n_not} smallest probe residual {best_next:.2e}");
    println!("borderline n={n_border}");
}
