//! Cycle structure of a kernel, the trace identities built from it, and the
//! moment matrices `M(E) = ∫_E G(x) F(x)^T dμ` of a finite-rank kernel.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::measure_space::StandardSet;
use crate::operators::{compress_indices, densify, modulus, trace_power, FiniteRankOperator, Operator};
use crate::{Error, Result, C64, ZERO_THRESHOLD};

/// Arc `i → j` iff `|k(x_i, x_j)| > threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportDigraph {
    pub threshold: f64,
    pub adjacency: Vec<Vec<usize>>,
}

impl SupportDigraph {
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn arc_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// No cycle through distinct vertices (loops ignored).
    pub fn is_acyclic(&self) -> bool {
        crate::graph::tarjan_scc(&self.off_diagonal()).iter().all(|c| c.len() == 1)
    }

    fn off_diagonal(&self) -> Vec<Vec<usize>> {
        self.adjacency.iter().enumerate().map(|(i, a)| a.iter().copied().filter(|&j| j != i).collect()).collect()
    }
}

/// `1e-10·max|k|`.
pub fn default_threshold(k: &Operator) -> f64 {
    ZERO_THRESHOLD * k.max_kernel()
}

pub fn support_digraph(k: &Operator, threshold: f64) -> SupportDigraph {
    let p = k.dim();
    let adjacency = (0..p).map(|i| (0..p).filter(|&j| k.kernel_value(i, j).norm() > threshold).collect()).collect();
    SupportDigraph { threshold, adjacency }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub vertices: Vec<usize>,
    #[serde(with = "crate::descriptor::complex")]
    pub product: C64,
}

/// Shortest non-degenerate cycle `k(x_1,x_2)⋯k(x_n,x_1) ≠ 0` through
/// distinct points; ties go to the lexicographically smallest vertex list
/// (rotated to start at its smallest vertex).
pub fn find_nondegenerate_cycle(k: &Operator, threshold: f64) -> Option<Cycle> {
    let graph = support_digraph(k, threshold).off_diagonal();
    let p = graph.len();
    let mut best: Option<(usize, usize)> = None; // (length, start)
    for s in 0..p {
        // shortest closed walk through s inside {v >= s}
        let dist = distances_to(&graph, s);
        let len = graph[s].iter().filter(|&&v| v > s && dist[v] != usize::MAX).map(|&v| dist[v] + 1).min();
        if let Some(len) = len {
            if best.is_none_or(|(l, _)| len < l) {
                best = Some((len, s));
            }
        }
    }
    let (len, s) = best?;
    let dist = distances_to(&graph, s);
    let mut vertices = vec![s];
    let mut cur = s;
    for step in 1..len {
        let remaining = len - step;
        cur = *graph[cur]
            .iter()
            .filter(|&&v| v > s && dist[v] == remaining)
            .min()
            .expect("distance labels guarantee a successor");
        vertices.push(cur);
    }
    let product = cycle_product(k, &vertices).expect("cycle vertices are distinct");
    Some(Cycle { vertices, product })
}

/// BFS distances to `target` along arcs, restricted to vertices `>= target`.
fn distances_to(graph: &[Vec<usize>], target: usize) -> Vec<usize> {
    let p = graph.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); p];
    for (u, nbrs) in graph.iter().enumerate().skip(target) {
        for &v in nbrs.iter().filter(|&&v| v >= target) {
            reverse[v].push(u);
        }
    }
    let mut dist = vec![usize::MAX; p];
    dist[target] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        for &u in &reverse[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// `k(x_1,x_2) k(x_2,x_3) ⋯ k(x_n,x_1)` over distinct vertices.
pub fn cycle_product(k: &Operator, vertices: &[usize]) -> Result<C64> {
    if vertices.len() < 2 {
        return Err(Error::InvalidArgument("a cycle needs at least two vertices".into()));
    }
    let mut seen = vec![false; k.dim()];
    for &v in vertices {
        if v >= k.dim() {
            return Err(Error::InvalidArgument(format!("vertex {v} outside a {}-point space", k.dim())));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::RepeatedVertex(v));
        }
    }
    let n = vertices.len();
    Ok((0..n).map(|i| k.kernel_value(vertices[i], vertices[(i + 1) % n])).product())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSumReport {
    pub power: usize,
    /// `tr((PKP)^n)` by matrix powers, `P = Σ P_{E_i}`.
    #[serde(with = "crate::descriptor::complex")]
    pub closed_form: C64,
    /// `Σ_{i_1..i_n} tr(K_{i_1 i_2} ⋯ K_{i_n i_1})` over all index words.
    #[serde(with = "crate::descriptor::complex")]
    pub word_sum: C64,
    /// Words with a single repeated index.
    #[serde(with = "crate::descriptor::complex")]
    pub constant_words: C64,
    /// Words that are cyclic permutations of maximal length (only when the
    /// number of sets equals the power).
    #[serde(with = "crate::descriptor::complex")]
    pub n_cycle_words: C64,
    /// `Σ_{j atom in P} k(j,j)^n`.
    #[serde(with = "crate::descriptor::complex")]
    pub atomic_diagonal: C64,
    /// `closed_form - atomic_diagonal`.
    #[serde(with = "crate::descriptor::complex")]
    pub remainder: C64,
    /// `|closed_form - word_sum|`.
    pub identity_residual: f64,
}

/// Expand `tr((PKP)^n)` over the block decomposition given by disjoint
/// sets. Word count is `sets^n`, so both are capped at 6.
pub fn ncycle_trace_sum(k: &Operator, sets: &[StandardSet], power: usize) -> Result<TraceSumReport> {
    if !(2..=6).contains(&power) {
        return Err(Error::InvalidArgument(format!("power must be in 2..=6, got {power}")));
    }
    if sets.is_empty() || sets.len() > 6 {
        return Err(Error::InvalidArgument(format!("need 1..=6 sets, got {}", sets.len())));
    }
    let mut union = StandardSet::empty(k.dim());
    for set in sets {
        k.space().same_shape(set)?;
        if let Some(i) = union.intersection(set).indices().next() {
            return Err(Error::OverlappingSets(i));
        }
        union = union.union(set);
    }
    let idx: Vec<Vec<usize>> = sets.iter().map(StandardSet::to_indices).collect();
    let a = k.entries();
    let blocks: Vec<Vec<DMatrix<C64>>> =
        idx.iter().map(|r| idx.iter().map(|c| a.select_rows(r).select_columns(c)).collect()).collect();

    let m = sets.len();
    let total = m.pow(power as u32);
    let mut word = vec![0usize; power];
    let (mut word_sum, mut constant, mut cyc) = (C64::default(), C64::default(), C64::default());
    for code in 0..total {
        let mut c = code;
        for slot in word.iter_mut().rev() {
            *slot = c % m;
            c /= m;
        }
        let mut prod = blocks[word[0]][word[1 % power]].clone();
        for t in 1..power {
            prod = &prod * &blocks[word[t]][word[(t + 1) % power]];
        }
        let tr = prod.trace();
        word_sum += tr;
        if word.iter().all(|&w| w == word[0]) {
            constant += tr;
        }
        if m == power && is_full_cycle(&word) {
            cyc += tr;
        }
    }
    let compressed = compress_indices(k, &union.to_indices());
    let closed_form = trace_power(&compressed, power)?;
    let atomic_diagonal: C64 =
        union.indices().filter(|&j| k.space().is_atom(j)).map(|j| k.kernel_value(j, j).powu(power as u32)).sum();
    Ok(TraceSumReport {
        power,
        closed_form,
        word_sum,
        constant_words: constant,
        n_cycle_words: cyc,
        atomic_diagonal,
        remainder: closed_form - atomic_diagonal,
        identity_residual: (closed_form - word_sum).norm(),
    })
}

/// `word` read cyclically is a single cycle through all its distinct values.
fn is_full_cycle(word: &[usize]) -> bool {
    let n = word.len();
    let mut seen = vec![false; n];
    for &w in word {
        if w >= n || std::mem::replace(&mut seen[w], true) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTraceReport {
    /// `tr(|K|^n)` for `n = 1..=max_power`, by matrix powers.
    pub modulus_traces: Vec<[f64; 2]>,
    /// `Σ λ^n` over eigenvalues of `|K|`.
    pub eigen_traces: Vec<[f64; 2]>,
    pub max_discrepancy: f64,
    /// All traces vanish for `n = 1..=dim`, so `|K|` is nilpotent.
    pub quasinilpotent: bool,
}

/// Power traces of the modulus. Vanishing `tr(|K|^n)` for every `n` up to
/// the dimension forces the characteristic polynomial to be `x^p`.
pub fn modulus_power_traces(k: &Operator, max_power: usize, tol: f64) -> Result<PowerTraceReport> {
    let m = modulus(k)?;
    let spec = crate::spectral::eigenvalues(&m, tol)?;
    let p = m.dim();
    let scale = m.scale();
    let upto = max_power.max(p).max(1);
    let mut modulus_traces = Vec::new();
    let mut eigen_traces = Vec::new();
    let mut max_discrepancy: f64 = 0.0;
    let mut vanish = true;
    for n in 1..=upto {
        let direct = trace_power(&m, n)?;
        let ev: C64 = spec.eigenvalues.iter().map(|z| z.powu(n as u32)).sum();
        let bound = tol * scale.powi(n as i32) * p.max(1) as f64;
        vanish &= direct.norm() <= bound;
        if n <= max_power {
            modulus_traces.push([direct.re, direct.im]);
            eigen_traces.push([ev.re, ev.im]);
            max_discrepancy = max_discrepancy.max((direct - ev).norm());
        }
    }
    Ok(PowerTraceReport { modulus_traces, eigen_traces, max_discrepancy, quasinilpotent: vanish })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub matrix: DMatrix<C64>,
}

/// `M(E)[s][t] = Σ_{i∈E} g_s(x_i) f_t(x_i) w_i`. Requires `k(x,x) = 0` on `E`.
pub fn moment_matrix(kfr: &FiniteRankOperator, e: &StandardSet, tol: f64) -> Result<MomentMatrix> {
    kfr.space().same_shape(e)?;
    let (f, g) = (kfr.f(), kfr.g());
    let n = kfr.rank();
    let scale = f.iter().map(|z| z.norm()).fold(0.0, f64::max) * g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in e.indices() {
        let diag: C64 = (0..n).map(|t| f[(i, t)] * g[(i, t)]).sum();
        if diag.norm() > tol * scale.max(1.0) {
            return Err(Error::NonvanishingDiagonal { point: i, magnitude: diag.norm() });
        }
    }
    let mut matrix = DMatrix::zeros(n, n);
    for i in e.indices() {
        let w = kfr.space().weight(i);
        for s in 0..n {
            for t in 0..n {
                matrix[(s, t)] += g[(i, s)] * f[(i, t)] * w;
            }
        }
    }
    Ok(MomentMatrix { matrix })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// `|tr(M(E_a)^2)|` per set.
    pub self_residuals: Vec<f64>,
    /// `(a, b, |tr(M(E_a) M(E_b))|)` for `a < b`.
    pub cross_residuals: Vec<(usize, usize, f64)>,
    pub max_residual: f64,
    pub scale: f64,
    pub tol: f64,
    pub passed: bool,
}

/// The trace identities `tr(M(E)^2) = 0` and `tr(M(E) M(F)) = 0` that hold
/// for finite-rank kernels with nilpotent standard compressions.
pub fn moment_identities(kfr: &FiniteRankOperator, sets: &[StandardSet], tol: f64) -> Result<MomentReport> {
    let moments: Vec<MomentMatrix> = sets.iter().map(|e| moment_matrix(kfr, e, tol)).collect::<Result<_>>()?;
    let scale = moments.iter().flat_map(|m| m.matrix.iter()).map(|z| z.norm()).fold(0.0, f64::max).powi(2).max(1.0);
    let self_residuals: Vec<f64> = moments.iter().map(|m| (&m.matrix * &m.matrix).trace().norm()).collect();
    let mut cross_residuals = Vec::new();
    for a in 0..moments.len() {
        for b in a + 1..moments.len() {
            cross_residuals.push((a, b, (&moments[a].matrix * &moments[b].matrix).trace().norm()));
        }
    }
    let max_residual = self_residuals.iter().chain(cross_residuals.iter().map(|t| &t.2)).copied().fold(0.0, f64::max);
    Ok(MomentReport { passed: max_residual <= tol * scale, self_residuals, cross_residuals, max_residual, scale, tol })
}

/// `Σ_{x,y ∈ E} k(x,y) k(y,x) w_x w_y`, the double integral that
/// `tr(M(E)^2)` must equal.
pub fn two_cycle_integral(kfr: &FiniteRankOperator, e: &StandardSet) -> Result<C64> {
    let k = densify(kfr)?;
    let idx = e.to_indices();
    let mut sum = C64::default();
    for &x in &idx {
        for &y in &idx {
            sum += k.kernel_value(x, y) * k.kernel_value(y, x) * k.space().weight(x) * k.space().weight(y);
        }
    }
    Ok(sum)
}
