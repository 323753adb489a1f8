//! Dense eigenvalues for small complex matrices.
//!
//! The matrix is first permuted to Frobenius form along the strongly
//! connected components of its structural nonzero pattern; this step is an
//! exact similarity, so permuted-triangular inputs get their diagonal back
//! bit for bit. Each irreducible block then goes through complex Schur.
//! Defective eigenvalues come out of QR spread on a small circle; clusters
//! whose mean `mu` passes a nullity test on `(B - mu I)^m` are collapsed
//! to that mean.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;

use crate::graph::condensation_order;
use crate::{Error, Result, C64};

/// Candidate radius for clustering, relative to the block scale.
const CLUSTER_RADIUS: f64 = 1e-3;
/// Accepted size of the trailing singular values of `(B - mu I)^m`,
/// relative to `scale^m`.
const NULLITY_TOL: f64 = 1e-10;
/// Spectrum offsets tried in turn, relative to the block scale.
const RETRY_SHIFTS: [[f64; 2]; 4] = [[0.0, 0.0], [0.31, 0.17], [-0.23, 0.41], [0.57, -0.29]];

pub(crate) fn structural_blocks(a: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let graph: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| j != i && a[(i, j)] != C64::new(0.0, 0.0)).collect()).collect();
    condensation_order(&graph)
}

pub(crate) fn eigenvalues(a: &DMatrix<C64>) -> Result<Vec<C64>> {
    assert_eq!(a.nrows(), a.ncols(), "eigenvalues of a non-square matrix");
    let mut out = Vec::with_capacity(a.nrows());
    for block in structural_blocks(a) {
        if block.len() == 1 {
            out.push(a[(block[0], block[0])]);
            continue;
        }
        let sub = a.select_rows(&block).select_columns(&block);
        out.extend(irreducible_eigenvalues(sub)?);
    }
    Ok(out)
}

fn irreducible_eigenvalues(b: DMatrix<C64>) -> Result<Vec<C64>> {
    let n = b.nrows();
    if n == 2 {
        // closed form keeps nilpotent 2x2 blocks exact
        let (p, q, r, s) = (b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]);
        let half_tr = (p + s) * 0.5;
        let disc = ((p - s) * 0.5) * ((p - s) * 0.5) + q * r;
        let root = disc.sqrt();
        let (plus, minus) = (half_tr + root, half_tr - root);
        let big = if plus.norm() >= minus.norm() { plus } else { minus };
        let det = p * s - q * r;
        let small = if big.norm() == 0.0 { big } else { det / big };
        return Ok(vec![big, small]);
    }
    let iterations = 100 * n;
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // QR can stall when the spectrum is symmetric about the shift; moving
    // the whole spectrum off-centre breaks the tie
    for shift in RETRY_SHIFTS {
        let sigma = C64::new(shift[0], shift[1]) * scale;
        let shifted = &b + DMatrix::<C64>::identity(n, n) * sigma;
        let Some(schur) = Schur::try_new(shifted, f64::EPSILON, iterations) else {
            continue;
        };
        let (_, t) = schur.unpack();
        let raw: Vec<C64> = (0..n).map(|i| t[(i, i)] - sigma).collect();
        if raw.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(refine_clusters(&b, raw));
        }
    }
    Err(Error::NonConvergence { dim: n, iterations })
}

fn refine_clusters(b: &DMatrix<C64>, mut vals: Vec<C64>) -> Vec<C64> {
    let n = vals.len();
    let scale = b.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let radius = CLUSTER_RADIUS * scale;

    // single linkage
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i] - vals[j]).norm() <= radius {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                if ri != rj {
                    label[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut label, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }

    for group in groups.into_iter().filter(|g| g.len() > 1) {
        let m = group.len();
        let mean = group.iter().map(|&i| vals[i]).sum::<C64>() / m as f64;
        let shifted = b - DMatrix::<C64>::identity(n, n) * mean;
        let mut power = shifted.clone();
        for _ in 1..m {
            power = &power * &shifted;
        }
        let mut sv: Vec<f64> = power.singular_values().iter().copied().collect();
        sv.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if sv[m - 1] <= NULLITY_TOL * scale.powi(m as i32) * n as f64 {
            for &i in &group {
                vals[i] = mean;
            }
        }
    }
    vals
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> DMatrix<C64> {
        DMatrix::from_fn(rows.len(), rows.len(), |i, j| C64::new(rows[i][j], 0.0))
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn triangular_exact() {
        let a = real(&[&[0.0, 0.0, 0.0], &[1.0, 2.0, 0.0], &[3.0, 4.0, 5.0]]);
        let ev = sorted(eigenvalues(&a).unwrap());
        assert_eq!(ev, vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(5.0, 0.0)]);
    }

    #[test]
    fn rotation() {
        let a = real(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let ev = sorted(eigenvalues(&a).unwrap());
        assert!((ev[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn defective_irreducible_block_collapses() {
        // S J S^-1 for a 3x3 Jordan block J and unit lower-triangular S
        let b = real(&[&[-1.0, 1.0, 0.0], &[-1.0, 0.0, 1.0], &[-1.0, 0.0, 1.0]]);
        assert_eq!(structural_blocks(&b).len(), 1);
        let b3 = &b * &b * &b;
        assert!(b3.iter().all(|z| z.norm() < 1e-12), "fixture must be nilpotent");
        let ev = eigenvalues(&b).unwrap();
        assert!(ev.iter().all(|z| z.norm() < 1e-12), "{ev:?}");
    }

    #[test]
    fn stalling_tridiagonal_sign_matrices() {
        // every 3x3 matrix over {0, ±1}; some stall unshifted complex QR
        for code in 0..3usize.pow(9) {
            let mut c = code;
            let a = DMatrix::from_fn(3, 3, |_, _| {
                let v = (c % 3) as f64 - 1.0;
                c /= 3;
                C64::new(v, 0.0)
            });
            let ev = eigenvalues(&a).unwrap();
            let tr: C64 = ev.iter().sum();
            assert!((tr - a.trace()).norm() < 1e-9, "{a}");
        }
        let a = real(&[&[-1.0, -1.0, 0.0], &[1.0, -1.0, -1.0], &[0.0, 1.0, -1.0]]);
        let ev = eigenvalues(&a).unwrap();
        // (λ+1)^3 + 2(λ+1) = 0
        let r = 2f64.sqrt();
        for want in [C64::new(-1.0, -r), C64::new(-1.0, 0.0), C64::new(-1.0, r)] {
            assert!(ev.iter().any(|got| (got - want).norm() < 1e-12), "{ev:?}");
        }
    }

    #[test]
    fn close_distinct_eigenvalues_kept_apart() {
        let s = real(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0]]);
        let s_inv = s.clone().try_inverse().unwrap();
        let d = real(&[&[1.0, 0.0, 0.0], &[0.0, 1.0 + 1e-4, 0.0], &[0.0, 0.0, 3.0]]);
        let a = &s * d * s_inv;
        assert_eq!(structural_blocks(&a).len(), 1);
        let ev = sorted(eigenvalues(&a).unwrap());
        for (got, want) in ev.iter().zip([1.0, 1.0 + 1e-4, 3.0]) {
            assert!((got - C64::new(want, 0.0)).norm() < 1e-9, "{ev:?}");
        }
    }
}
