//! Instance generators and exact oracles shared by the integration tests.
#![allow(dead_code)]

use ideal_tri::{build_space, FiniteRankOperator, MeasureSpace, Operator, C64};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A finite-rank operator that is strictly block upper triangular with
/// respect to a hidden ordered partition, with points shuffled.
pub struct PlantedNilpotent {
    pub kfr: FiniteRankOperator,
    pub rank: usize,
    /// Planted blocks, in shuffled point labels.
    pub blocks: Vec<Vec<usize>>,
}

/// Magnitude in `[0.5, 2)`, random sign.
fn entry(rng: &mut impl Rng) -> f64 {
    let v = rng.gen_range(0.5..2.0);
    if rng.gen_bool(0.5) {
        -v
    } else {
        v
    }
}

/// Rank `n <= max_rank`, `p <= max_points` atoms. Each rank-one term
/// `f_t g_t^T` has `f_t` on blocks `<= b_t` and `g_t` on blocks `> b_t`.
pub fn planted_nilpotent(rng: &mut impl Rng, max_rank: usize, max_points: usize) -> PlantedNilpotent {
    loop {
        let n = rng.gen_range(1..=max_rank);
        let m = rng.gen_range(2..=n + 1);
        let p = rng.gen_range((n + 2).max(m)..=max_points);
        // every block non-empty
        let mut label: Vec<usize> = (0..m).chain((m..p).map(|_| rng.gen_range(0..m))).collect();
        label.shuffle(rng);
        let cut: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m - 1)).collect();
        let mut f = DMatrix::zeros(p, n);
        let mut g = DMatrix::zeros(p, n);
        for t in 0..n {
            for i in 0..p {
                if label[i] <= cut[t] && rng.gen_bool(0.8) {
                    f[(i, t)] = c(entry(rng));
                }
                if label[i] > cut[t] && rng.gen_bool(0.8) {
                    g[(i, t)] = c(entry(rng));
                }
            }
        }
        let Ok(kfr) = FiniteRankOperator::new(MeasureSpace::atomic(p).unwrap(), f, g) else {
            continue;
        };
        let blocks = (0..m).map(|b| (0..p).filter(|&i| label[i] == b).collect()).collect();
        return PlantedNilpotent { kfr, rank: n, blocks };
    }
}

/// A hybrid-space operator that is block upper triangular with zero
/// diagonal blocks and `1x1` scalar blocks on some atoms.
pub struct PlantedHybrid {
    pub k: Operator,
    /// `(point, λ)` of the scalar atoms.
    pub eigen_atoms: Vec<(usize, f64)>,
}

pub fn planted_hybrid(rng: &mut impl Rng) -> PlantedHybrid {
    let cells = *[2usize, 4, 8].choose(rng).unwrap();
    let atoms = rng.gen_range(1..=4);
    let ids: Vec<i64> = (1..=atoms as i64).collect();
    let space = build_space(cells, &ids).unwrap();
    let p = cells + atoms;

    let mut block_of = vec![0usize; p];
    let mut lambda = vec![0.0; p];
    let mut next = 0;
    let mut units: Vec<Vec<usize>> = Vec::new();
    let mut free: Vec<usize> = (0..cells).collect();
    for (a, l) in lambda.iter_mut().enumerate().skip(cells) {
        if rng.gen_bool(0.7) {
            *l = *[-2.0, -1.0, 0.5, 1.0, 1.0, 3.0].choose(rng).unwrap();
            units.push(vec![a]);
        } else {
            free.push(a);
        }
    }
    free.shuffle(rng);
    while !free.is_empty() {
        let take = rng.gen_range(1..=free.len().min(3));
        units.push(free.drain(..take).collect());
    }
    units.shuffle(rng);
    for unit in &units {
        for &i in unit {
            block_of[i] = next;
        }
        next += 1;
    }
    let mut kernel = DMatrix::zeros(p, p);
    for i in 0..p {
        kernel[(i, i)] = c(lambda[i]);
        for j in 0..p {
            if block_of[i] < block_of[j] && rng.gen_bool(0.7) {
                kernel[(i, j)] = c(rng.gen_range(-1.0..1.0));
            }
        }
    }
    let eigen_atoms = (cells..p).filter(|&a| lambda[a] != 0.0).map(|a| (a, lambda[a])).collect();
    PlantedHybrid { k: Operator::from_kernel(space, kernel).unwrap(), eigen_atoms }
}

/// Characteristic polynomial `det(xI - A)` of an integer matrix,
/// coefficients low to high, by Faddeev–LeVerrier in exact arithmetic.
pub fn charpoly(a: &[Vec<i64>]) -> Vec<i128> {
    let n = a.len();
    let mut coeffs = vec![0i128; n + 1];
    coeffs[n] = 1;
    let mul = |x: &[Vec<i128>], y: &[Vec<i128>]| -> Vec<Vec<i128>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect()).collect()
    };
    let a: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut m: Vec<Vec<i128>> = vec![vec![0; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mul(&a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coeffs[n - k + 1];
        }
        m = next;
        let am = mul(&a, &m);
        let tr: i128 = (0..n).map(|i| am[i][i]).sum();
        assert_eq!(tr % k as i128, 0);
        coeffs[n - k] = -tr / k as i128;
    }
    coeffs
}

fn poly_mul(x: &[i128], y: &[i128]) -> Vec<i128> {
    let mut out = vec![0; x.len() + y.len() - 1];
    for (i, a) in x.iter().enumerate() {
        for (j, b) in y.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// `monic | p` over the integers.
fn divides(monic: &[i128], p: &[i128]) -> bool {
    let d = monic.len() - 1;
    let mut r = p.to_vec();
    while r.len() > d {
        let lead = r.pop().unwrap();
        let shift = r.len() - d;
        for (i, m) in monic[..d].iter().enumerate() {
            r[shift + i] -= lead * m;
        }
    }
    r.iter().all(|&v| v == 0)
}

/// Every root of `p_inner` is a root of `p_outer`: `p_inner | p_outer^deg`.
pub fn roots_contained(p_inner: &[i128], p_outer: &[i128]) -> bool {
    let d = p_inner.len() - 1;
    if d == 0 {
        return true;
    }
    let mut power = vec![1i128];
    for _ in 0..d {
        power = poly_mul(&power, p_outer);
    }
    divides(p_inner, &power)
}

pub fn principal(a: &[Vec<i64>], idx: &[usize]) -> Vec<Vec<i64>> {
    idx.iter().map(|&i| idx.iter().map(|&j| a[i][j]).collect()).collect()
}

/// Increasing spectrum by exact characteristic polynomials of every
/// principal submatrix, pairs enumerated by plain bitmask loops.
pub fn exact_increasing_spectrum(a: &[Vec<i64>]) -> bool {
    let p = a.len();
    let polys: Vec<Vec<i128>> = (0..1usize << p)
        .map(|mask| charpoly(&principal(a, &(0..p).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>())))
        .collect();
    for outer in 0..1usize << p {
        let mut inner = outer;
        loop {
            if !roots_contained(&polys[inner], &polys[outer]) {
                return false;
            }
            if inner == 0 {
                break;
            }
            inner = (inner - 1) & outer;
        }
    }
    true
}

/// All ordered partitions of `0..p` into exactly `m` non-empty blocks.
pub fn ordered_partitions(p: usize, m: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let total = m.pow(p as u32);
    for code in 0..total {
        let mut label = vec![0; p];
        let mut c = code;
        for slot in label.iter_mut() {
            *slot = c % m;
            c /= m;
        }
        let blocks: Vec<Vec<usize>> = (0..m).map(|b| (0..p).filter(|&i| label[i] == b).collect()).collect();
        if blocks.iter().all(|b| !b.is_empty()) {
            out.push(blocks);
        }
    }
    out
}

/// `a` is block upper triangular along `blocks` with every diagonal block
/// zero or a single atom: the shape an increasing-spectrum certificate
/// must have.
pub fn admissible_increasing_form(a: &DMatrix<C64>, blocks: &[Vec<usize>]) -> bool {
    for (bi, rows) in blocks.iter().enumerate() {
        for (bj, cols) in blocks.iter().enumerate() {
            let nonzero = rows.iter().any(|&i| cols.iter().any(|&j| a[(i, j)].norm() != 0.0));
            if bi > bj && nonzero {
                return false;
            }
            if bi == bj && nonzero && rows.len() > 1 {
                return false;
            }
        }
    }
    true
}

/// Same kernel, different factors: `(F S, G S^{-T})` for a random
/// well-conditioned `S = I + 0.3·R`.
pub fn refactor(kfr: &FiniteRankOperator, rng: &mut impl Rng) -> FiniteRankOperator {
    let n = kfr.rank();
    loop {
        let s = DMatrix::from_fn(n, n, |i, j| c(if i == j { 1.0 } else { 0.0 } + 0.3 * rng.gen_range(-1.0..1.0)));
        let Some(inv) = s.clone().try_inverse() else { continue };
        if let Ok(out) = FiniteRankOperator::new(kfr.space().clone(), kfr.f() * &s, kfr.g() * inv.transpose()) {
            return out;
        }
    }
}
