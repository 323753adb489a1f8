//! Block upper-triangular forms with respect to chains of standard sets.
//!
//! A certificate lists an ordered partition `E_1, …, E_m` of the points.
//! The chain `F_j = E_1 ∪ … ∪ E_j` is invariant under `K` exactly when
//! every entry below the block diagonal vanishes. [`verify_certificate`]
//! re-derives every claim from the matrix alone.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::condensation_order;
use crate::measure_space::StandardSet;
use crate::operators::{compress_indices, densify, numerical_rank, FiniteRankOperator, Operator};
use crate::spectral::{eigenvalues, match_multisets};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Scc,
    NilpotentRank,
    IncreasingSpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalClass {
    Zero,
    /// A single point whose diagonal entry is the non-zero scalar `lambda`.
    Scalar,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalBlock {
    pub block: usize,
    pub class: DiagonalClass,
    #[serde(default, with = "crate::descriptor::complex_opt", skip_serializing_if = "Option::is_none")]
    pub lambda: Option<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub m: usize,
    /// `n + 1` or `2n + 1`; absent for SCC forms, which have no bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    /// Numerical rank of the operator.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangularizationCertificate {
    pub kind: CertificateKind,
    pub blocks: Vec<Vec<usize>>,
    pub diagonal: Vec<DiagonalBlock>,
    pub bound: Bound,
    /// Largest `|a_ij|` with `i` in a later block than `j`.
    pub residual: f64,
    /// Entries count as zero when `|a_ij| <= tol·scale`.
    pub tol: f64,
    pub multiplicity_free: bool,
}

impl TriangularizationCertificate {
    pub fn num_points(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// `F_j = E_1 ∪ … ∪ E_j`, `j = 1..=m`.
    pub fn chain(&self) -> Result<Vec<StandardSet>> {
        let p = self.num_points();
        let mut acc = StandardSet::empty(p);
        let mut out = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            acc = acc.union(&StandardSet::from_indices(p, block)?);
            out.push(acc.clone());
        }
        Ok(out)
    }

    /// Points listed block by block.
    pub fn order(&self) -> Vec<usize> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// Nonzero scalar diagonal blocks, in block order.
    pub fn scalars(&self) -> Vec<C64> {
        self.diagonal.iter().filter_map(|d| d.lambda).collect()
    }
}

fn block_of(blocks: &[Vec<usize>], p: usize) -> Vec<usize> {
    let mut of = vec![0; p];
    for (b, block) in blocks.iter().enumerate() {
        for &i in block {
            of[i] = b;
        }
    }
    of
}

fn max_abs(a: &DMatrix<C64>, rows: &[usize], cols: &[usize]) -> f64 {
    rows.iter().flat_map(|&i| cols.iter().map(move |&j| a[(i, j)].norm())).fold(0.0, f64::max)
}

fn certificate(k: &Operator, kind: CertificateKind, blocks: Vec<Vec<usize>>, tol: f64) -> TriangularizationCertificate {
    let a = k.entries();
    let zero = tol * k.scale();
    let of = block_of(&blocks, k.dim());
    let mut residual: f64 = 0.0;
    for i in 0..k.dim() {
        for j in 0..k.dim() {
            if of[i] > of[j] {
                residual = residual.max(a[(i, j)].norm());
            }
        }
    }
    let diagonal = blocks
        .iter()
        .enumerate()
        .map(|(b, block)| {
            if max_abs(a, block, block) <= zero {
                DiagonalBlock { block: b, class: DiagonalClass::Zero, lambda: None }
            } else if block.len() == 1 {
                DiagonalBlock { block: b, class: DiagonalClass::Scalar, lambda: Some(a[(block[0], block[0])]) }
            } else {
                DiagonalBlock { block: b, class: DiagonalClass::General, lambda: None }
            }
        })
        .collect();
    let rank = k.numerical_rank();
    let limit = match kind {
        CertificateKind::Scc => None,
        CertificateKind::NilpotentRank => Some(rank + 1),
        CertificateKind::IncreasingSpectrum => Some(2 * rank + 1),
    };
    let multiplicity_free = blocks.iter().all(|b| b.len() == 1);
    TriangularizationCertificate {
        kind,
        bound: Bound { m: blocks.len(), limit, rank },
        blocks,
        diagonal,
        residual,
        tol,
        multiplicity_free,
    }
}

/// Frobenius normal form: strongly connected components of the support of
/// `a` (entries above `tol·scale`), in topological order with ties broken by
/// the smallest point of each component. Always succeeds.
pub fn scc_triangularize(k: &Operator, tol: f64) -> TriangularizationCertificate {
    let zero = tol * k.scale();
    let a = k.entries();
    let graph: Vec<Vec<usize>> =
        (0..k.dim()).map(|i| (0..k.dim()).filter(|&j| j != i && a[(i, j)].norm() > zero).collect()).collect();
    certificate(k, CertificateKind::Scc, condensation_order(&graph), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Largest `E` with `K P_E = 0`: the points where every `g_t` vanishes.
    Right,
    /// Largest `E` with `P_E K = 0`: the points where every `f_t` vanishes.
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProjection {
    pub side: Side,
    pub set: Vec<usize>,
    /// Adding any other point makes the product non-zero.
    pub maximal: bool,
    pub tol: f64,
}

impl KernelProjection {
    pub fn to_set(&self, p: usize) -> StandardSet {
        StandardSet::from_indices(p, &self.set).expect("indices come from the space")
    }
}

/// Pointwise zero set of the `g` (right) or `f` (left) factors, with
/// `|·| <= tol·max(1, max|factor|)`. An empty set is a legal answer.
pub fn max_kernel_projection(kfr: &FiniteRankOperator, side: Side, tol: f64) -> Result<KernelProjection> {
    let factor = match side {
        Side::Right => kfr.g(),
        Side::Left => kfr.f(),
    };
    let zero = tol * factor.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let p = kfr.space().len();
    let set: Vec<usize> = (0..p).filter(|&x| factor.row(x).iter().all(|z| z.norm() <= zero)).collect();

    // maximality against the dense kernel: every other column (row) is non-zero
    let k = densify(kfr)?;
    let kzero = tol * k.scale();
    let a = k.entries();
    let all: Vec<usize> = (0..p).collect();
    let maximal = (0..p).filter(|x| !set.contains(x)).all(|x| match side {
        Side::Right => max_abs(a, &all, &[x]) > kzero,
        Side::Left => max_abs(a, &[x], &all) > kzero,
    });
    Ok(KernelProjection { side, set, maximal, tol })
}

/// Points of the largest subset that [`check_nilpotent_compressions`]
/// enumerates exhaustively.
pub const EXHAUSTIVE_NILPOTENT_POINTS: usize = 12;
const SAMPLED_SUBSETS: usize = 4096;
const SAMPLE_SEED: u64 = 0x1de4_1715;

/// Every standard compression of `k` is nilpotent: `tr(B^j) ≈ 0` for
/// `j = 1..=dim B`. A support digraph without cycles and with zero diagonal
/// settles it at once; otherwise all subsets are tried up to
/// [`EXHAUSTIVE_NILPOTENT_POINTS`] points, and a seeded sample beyond.
pub fn check_nilpotent_compressions(k: &Operator, tol: f64) -> Result<()> {
    let p = k.dim();
    let zero = tol * k.scale();
    let a = k.entries();
    let graph: Vec<Vec<usize>> =
        (0..p).map(|i| (0..p).filter(|&j| j != i && a[(i, j)].norm() > zero).collect()).collect();
    let acyclic = crate::graph::tarjan_scc(&graph).iter().all(|c| c.len() == 1);
    if acyclic && (0..p).all(|i| a[(i, i)].norm() <= zero) {
        return Ok(());
    }
    let check = |idx: &[usize]| -> Result<()> {
        let sub = compress_indices(k, idx);
        if !power_traces_vanish(sub.entries(), tol) {
            let radius = eigenvalues(&sub, tol)?.radius;
            return Err(Error::NotNilpotent { witness: idx.to_vec(), radius });
        }
        Ok(())
    };
    if p <= EXHAUSTIVE_NILPOTENT_POINTS {
        for mask in 1u64..(1 << p) {
            let idx: Vec<usize> = (0..p).filter(|&i| mask >> i & 1 == 1).collect();
            check(&idx)?;
        }
    } else {
        for end in 1..=p {
            check(&(0..end).collect::<Vec<_>>())?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        for _ in 0..SAMPLED_SUBSETS {
            let idx: Vec<usize> = (0..p).filter(|_| rng.gen_bool(0.5)).collect();
            if !idx.is_empty() {
                check(&idx)?;
            }
        }
    }
    Ok(())
}

/// Newton's identities: vanishing power sums `1..=d` force `χ(x) = x^d`.
fn power_traces_vanish(b: &DMatrix<C64>, tol: f64) -> bool {
    let d = b.nrows();
    if d == 0 {
        return true;
    }
    let norm = b.iter().map(|z| z.norm()).fold(0.0, f64::max) * d as f64;
    if norm == 0.0 {
        return true;
    }
    let unit = b / C64::new(norm, 0.0);
    let mut pow = unit.clone();
    for j in 1..=d {
        if j > 1 {
            pow = &pow * &unit;
        }
        if pow.trace().norm() > tol {
            return false;
        }
    }
    true
}

/// Greedy zero-column peeling on the points `idx`: each stage takes the
/// columns that vanish on the current compression. Returns global indices.
fn nilpotent_blocks(a: &DMatrix<C64>, idx: &[usize], zero: f64) -> Result<Vec<Vec<usize>>> {
    let mut rest = idx.to_vec();
    let mut blocks = Vec::new();
    while !rest.is_empty() {
        if max_abs(a, &rest, &rest) <= zero {
            blocks.push(rest);
            break;
        }
        let (head, tail): (Vec<usize>, Vec<usize>) = rest.iter().partition(|&&j| max_abs(a, &rest, &[j]) <= zero);
        if head.is_empty() {
            return Err(Error::TheoremViolation(format!(
                "compression to {rest:?} is non-zero but has no vanishing column"
            )));
        }
        blocks.push(head);
        rest = tail;
    }
    Ok(blocks)
}

/// Block form with zero diagonal blocks and `m <= n + 1` for an operator
/// whose standard compressions are all nilpotent.
pub fn nilpotent_block_form(kfr: &FiniteRankOperator, tol: f64) -> Result<TriangularizationCertificate> {
    nilpotent_block_form_dense(&densify(kfr)?, tol)
}

/// [`nilpotent_block_form`] for an operator given by its matrix.
pub fn nilpotent_block_form_dense(k: &Operator, tol: f64) -> Result<TriangularizationCertificate> {
    check_nilpotent_compressions(k, tol)?;
    let all: Vec<usize> = (0..k.dim()).collect();
    let blocks = nilpotent_blocks(k.entries(), &all, tol * k.scale())?;
    Ok(certificate(k, CertificateKind::NilpotentRank, blocks, tol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Peel {
    /// `(point, λ)` for every atom with `|k(j,j)| > tol·scale`.
    pub atoms: Vec<(usize, C64)>,
    /// `K` with those diagonal entries removed.
    pub g: Operator,
}

/// Split off the atomic diagonal and check it against the non-zero
/// spectrum of `K` with multiplicity.
pub fn eigenatom_peel(k: &Operator, tol: f64) -> Result<Peel> {
    let zero = tol * k.scale();
    let atoms = peel_atoms(k, &(0..k.dim()).collect::<Vec<_>>(), zero);
    let spec = eigenvalues(k, tol)?;
    let lambdas: Vec<C64> = atoms.iter().map(|&(_, l)| l).collect();
    let m = match_multisets(&lambdas, &spec.nonzero(), tol * spec.radius.max(1.0));
    if !m.matched {
        return Err(Error::TheoremViolation(format!(
            "atomic diagonal {lambdas:?} does not match the non-zero spectrum {:?}",
            spec.nonzero()
        )));
    }
    let mut entries = k.entries().clone();
    for &(j, _) in &atoms {
        entries[(j, j)] = C64::new(0.0, 0.0);
    }
    let g = match k.kernel() {
        Some(kernel) => {
            let mut kernel = kernel.clone();
            for &(j, _) in &atoms {
                kernel[(j, j)] = C64::new(0.0, 0.0);
            }
            Operator::from_kernel(k.space().clone(), kernel)?
        }
        None => Operator::from_entries(k.space().clone(), entries)?,
    };
    Ok(Peel { atoms, g })
}

fn peel_atoms(k: &Operator, idx: &[usize], zero: f64) -> Vec<(usize, C64)> {
    let a = k.entries();
    idx.iter().filter(|&&j| k.space().is_atom(j) && a[(j, j)].norm() > zero).map(|&j| (j, a[(j, j)])).collect()
}

/// Block form for an operator with increasing spectrum: zero diagonal
/// blocks plus one `1×1` block per eigen-atom, `m <= 2n + 1`.
///
/// After peeling, the remainder `G` is put in nilpotent block form; the
/// first atom `A` splits its points into the blocks before `A`'s block and
/// the rest, the order `F_1, A, F_2` is `K`-invariant, and both sides are
/// handled again.
pub fn increasing_spectrum_block_form(k: &Operator, tol: f64) -> Result<TriangularizationCertificate> {
    let peel = eigenatom_peel(k, tol)?;
    check_nilpotent_compressions(&peel.g, tol)?;
    let zero = tol * k.scale();
    let all: Vec<usize> = (0..k.dim()).collect();
    let blocks = split_on_atoms(k, &all, zero)?;
    Ok(certificate(k, CertificateKind::IncreasingSpectrum, blocks, tol))
}

fn split_on_atoms(k: &Operator, idx: &[usize], zero: f64) -> Result<Vec<Vec<usize>>> {
    if idx.is_empty() {
        return Ok(Vec::new());
    }
    let atoms = peel_atoms(k, idx, zero);
    let mut g = k.entries().clone();
    for &(j, _) in &atoms {
        g[(j, j)] = C64::new(0.0, 0.0);
    }
    let blocks = nilpotent_blocks(&g, idx, zero)?;
    let Some(&(atom, _)) = atoms.first() else {
        return Ok(blocks);
    };
    let at = blocks.iter().position(|b| b.contains(&atom)).expect("atom lies in some block");
    let before: Vec<usize> = blocks[..at].iter().flatten().copied().collect();
    let mut after: Vec<usize> = blocks[at..].iter().flatten().copied().filter(|&j| j != atom).collect();
    after.sort_unstable();
    let mut out = split_on_atoms(k, &before, zero)?;
    out.push(vec![atom]);
    out.extend(split_on_atoms(k, &after, zero)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Recheck a certificate against `k` using only the matrix entries.
/// `tol` is the caller's, not the certificate's.
pub fn verify_certificate(k: &Operator, cert: &TriangularizationCertificate, tol: f64) -> VerificationReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(CheckResult { name: name.to_string(), passed, detail });
    };
    let p = k.dim();
    let a = k.entries();
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let zero = tol * scale;

    // partition
    let mut seen = vec![0usize; p];
    let mut out_of_range = Vec::new();
    for block in &cert.blocks {
        for &i in block {
            match seen.get_mut(i) {
                Some(s) => *s += 1,
                None => out_of_range.push(i),
            }
        }
    }
    let empty_blocks = cert.blocks.iter().filter(|b| b.is_empty()).count();
    let bad: Vec<usize> = (0..p).filter(|&i| seen[i] != 1).collect();
    let partition_ok = out_of_range.is_empty() && bad.is_empty() && empty_blocks == 0;
    push(
        "partition",
        partition_ok,
        format!(
            "{} blocks; out of range {out_of_range:?}; not covered once {bad:?}; empty blocks {empty_blocks}",
            cert.blocks.len()
        ),
    );
    if !partition_ok {
        return VerificationReport { checks, passed: false };
    }
    let mut rank_of = vec![0usize; p];
    for (b, block) in cert.blocks.iter().enumerate() {
        for &i in block {
            rank_of[i] = b;
        }
    }

    // residual below the block diagonal
    let mut residual: f64 = 0.0;
    let mut worst = None;
    for j in 0..p {
        for i in 0..p {
            if rank_of[i] > rank_of[j] && a[(i, j)].norm() > residual {
                residual = a[(i, j)].norm();
                worst = Some((i, j));
            }
        }
    }
    push(
        "residual",
        residual <= zero,
        format!("recomputed {residual:e} (claimed {:e}, worst entry {worst:?}), limit {zero:e}", cert.residual),
    );

    // invariance of each F_j: nothing outside F_j is reached from inside
    let mut inside = vec![false; p];
    let mut leak: f64 = 0.0;
    let mut leak_at = None;
    for (j, block) in cert.blocks.iter().enumerate() {
        for &i in block {
            inside[i] = true;
        }
        for col in (0..p).filter(|&c| inside[c]) {
            for row in (0..p).filter(|&r| !inside[r]) {
                if a[(row, col)].norm() > leak {
                    leak = a[(row, col)].norm();
                    leak_at = Some(j);
                }
            }
        }
    }
    push("chain_invariance", leak <= zero, format!("largest leak {leak:e} at chain step {leak_at:?}"));

    // diagonal blocks
    let mut diag_problems = Vec::new();
    let mut claimed: Vec<Option<&DiagonalBlock>> = vec![None; cert.blocks.len()];
    for d in &cert.diagonal {
        match claimed.get_mut(d.block) {
            Some(slot @ None) => *slot = Some(d),
            Some(Some(_)) => diag_problems.push(format!("block {} described twice", d.block)),
            None => diag_problems.push(format!("block {} does not exist", d.block)),
        }
    }
    for (b, block) in cert.blocks.iter().enumerate() {
        let mut biggest: f64 = 0.0;
        for &i in block {
            for &j in block {
                biggest = biggest.max(a[(i, j)].norm());
            }
        }
        let Some(d) = claimed[b] else {
            diag_problems.push(format!("block {b} not described"));
            continue;
        };
        match d.class {
            DiagonalClass::Zero if biggest > zero => {
                diag_problems.push(format!("block {b} claimed zero, max {biggest:e}"))
            }
            DiagonalClass::Scalar => {
                let ok = block.len() == 1
                    && d.lambda.is_some_and(|l| l.norm() > zero && (a[(block[0], block[0])] - l).norm() <= zero);
                if !ok {
                    diag_problems.push(format!("block {b} is not the claimed scalar {:?}", d.lambda));
                }
            }
            _ => {}
        }
        let allowed = match cert.kind {
            CertificateKind::Scc => true,
            CertificateKind::NilpotentRank => d.class == DiagonalClass::Zero,
            CertificateKind::IncreasingSpectrum => {
                d.class == DiagonalClass::Zero || (d.class == DiagonalClass::Scalar && k.space().is_atom(block[0]))
            }
        };
        if !allowed {
            diag_problems.push(format!("block {b} class {:?} not allowed for {:?}", d.class, cert.kind));
        }
    }
    push("diagonal", diag_problems.is_empty(), diag_problems.join("; "));

    if cert.kind == CertificateKind::NilpotentRank {
        let weak: Vec<usize> = (1..cert.blocks.len())
            .filter(|&j| {
                let mut biggest: f64 = 0.0;
                for &r in &cert.blocks[j - 1] {
                    for &c in &cert.blocks[j] {
                        biggest = biggest.max(a[(r, c)].norm());
                    }
                }
                biggest <= zero
            })
            .collect();
        push("superdiagonal", weak.is_empty(), format!("vanishing K_(j,j+1) for j in {weak:?}"));
    }

    // block-count bound against an independently measured rank
    let source = k.kernel().cloned().unwrap_or_else(|| a.clone());
    let sv = if source.is_empty() { nalgebra::DVector::zeros(0) } else { source.singular_values() };
    let top = sv.iter().copied().fold(0.0, f64::max);
    let n = sv.iter().filter(|&&s| s > 1e-10 * top).count();
    let m = cert.blocks.len();
    let (bound_ok, limit) = match cert.kind {
        CertificateKind::Scc => (true, None),
        CertificateKind::NilpotentRank => (m <= n + 1, Some(n + 1)),
        CertificateKind::IncreasingSpectrum => (m <= 2 * n + 1, Some(2 * n + 1)),
    };
    let claims_ok = cert.bound.m == m && cert.bound.rank == n && cert.bound.limit == limit;
    push(
        "bound",
        bound_ok && claims_ok,
        format!(
            "m = {m}, rank = {n}, limit {limit:?}; claimed m = {}, rank = {}, limit {:?}",
            cert.bound.m, cert.bound.rank, cert.bound.limit
        ),
    );

    // σ(K) \ {0} equals the scalar blocks, via power sums tr(K^j) = Σ λ^j
    if cert.kind == CertificateKind::IncreasingSpectrum {
        let lambdas: Vec<C64> = cert.diagonal.iter().filter_map(|d| d.lambda).collect();
        let spectral_norm = if a.is_empty() { 0.0 } else { a.singular_values().iter().copied().fold(0.0, f64::max) };
        let mut pow = a.clone();
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for j in 1..=p.min(8) {
            if j > 1 {
                pow = &pow * a;
            }
            let lhs = pow.trace();
            let rhs: C64 = lambdas.iter().map(|l| l.powu(j as u32)).sum();
            let diff = (lhs - rhs).norm();
            worst = worst.max(diff);
            ok &= diff <= tol * p.max(1) as f64 * spectral_norm.max(1.0).powi(j as i32);
        }
        push("eigenvalues", ok, format!("largest power-sum mismatch {worst:e} over {} scalars", lambdas.len()));
    }

    let singletons = cert.blocks.iter().all(|b| b.len() == 1);
    push(
        "multiplicity_free",
        cert.multiplicity_free == singletons,
        format!("claimed {}, all blocks singletons: {singletons}", cert.multiplicity_free),
    );

    let passed = checks.iter().all(|c| c.passed);
    VerificationReport { checks, passed }
}

/// Numerical rank used for block-count bounds.
pub fn operator_rank(k: &Operator) -> usize {
    numerical_rank(&k.kernel().cloned().unwrap_or_else(|| k.entries().clone()))
}
