//! Spectra of operators and their compressions.

use serde::{Deserialize, Serialize};

use crate::descriptor::complex_list;
use crate::operators::Operator;
use crate::{eigen, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Eigenvalues with algebraic multiplicity.
    #[serde(with = "complex_list")]
    pub eigenvalues: Vec<C64>,
    pub radius: f64,
    pub quasinilpotent: bool,
    pub tol: f64,
    /// `max(1, max |a_ij|)` of the operator the report was computed from.
    pub scale: f64,
}

impl SpectrumReport {
    pub fn from_eigenvalues(eigenvalues: Vec<C64>, scale: f64, tol: f64) -> Self {
        let radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Self { quasinilpotent: radius <= tol * scale, eigenvalues, radius, tol, scale }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues with `|λ| > tol·scale`, multiplicity kept.
    pub fn nonzero(&self) -> Vec<C64> {
        self.eigenvalues.iter().copied().filter(|z| z.norm() > self.tol * self.scale).collect()
    }
}

pub fn eigenvalues(k: &Operator, tol: f64) -> Result<SpectrumReport> {
    let ev = eigen::eigenvalues(k.entries())?;
    Ok(SpectrumReport::from_eigenvalues(ev, k.scale(), tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub holds: bool,
    /// An eigenvalue of the inner spectrum with no partner in the outer one.
    #[serde(with = "crate::descriptor::complex_opt")]
    pub witness: Option<C64>,
}

/// `σ(inner) ⊆ σ(outer)` as sets: every inner eigenvalue lies within
/// `tol·max(1, r)` of some outer eigenvalue.
pub fn spectrum_subset(inner: &SpectrumReport, outer: &SpectrumReport, tol: f64) -> SubsetCheck {
    subset_of_values(&inner.eigenvalues, &outer.eigenvalues, tol * inner.radius.max(outer.radius).max(1.0))
}

pub(crate) fn subset_of_values(inner: &[C64], outer: &[C64], abs_tol: f64) -> SubsetCheck {
    for &z in inner {
        if !outer.iter().any(|&w| (z - w).norm() <= abs_tol) {
            return SubsetCheck { holds: false, witness: Some(z) };
        }
    }
    SubsetCheck { holds: true, witness: None }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultisetMatch {
    pub matched: bool,
    /// Largest distance over the optimal (bottleneck) pairing, when the
    /// two multisets have equal size.
    pub max_pair_distance: Option<f64>,
    #[serde(with = "complex_list")]
    pub unmatched_left: Vec<C64>,
    #[serde(with = "complex_list")]
    pub unmatched_right: Vec<C64>,
}

/// Pair `left` with `right` so that the largest pair distance is minimal.
/// `matched` iff both have the same size and that distance is `<= abs_tol`.
pub fn match_multisets(left: &[C64], right: &[C64], abs_tol: f64) -> MultisetMatch {
    let pairing = max_matching(left, right, abs_tol);
    let unmatched_left: Vec<C64> =
        (0..left.len()).filter(|i| !pairing.iter().any(|&(a, _)| a == *i)).map(|i| left[i]).collect();
    let unmatched_right: Vec<C64> =
        (0..right.len()).filter(|j| !pairing.iter().any(|&(_, b)| b == *j)).map(|j| right[j]).collect();
    let max_pair_distance = (left.len() == right.len()).then(|| bottleneck(left, right));
    MultisetMatch {
        matched: unmatched_left.is_empty() && unmatched_right.is_empty(),
        max_pair_distance,
        unmatched_left,
        unmatched_right,
    }
}

/// Maximum bipartite matching with edges `|l - r| <= abs_tol` (Kuhn).
fn max_matching(left: &[C64], right: &[C64], abs_tol: f64) -> Vec<(usize, usize)> {
    let adj: Vec<Vec<usize>> =
        left.iter().map(|&l| (0..right.len()).filter(|&j| (l - right[j]).norm() <= abs_tol).collect()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; right.len()];
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    for u in 0..left.len() {
        let mut seen = vec![false; right.len()];
        augment(u, &adj, &mut seen, &mut owner);
    }
    owner.iter().enumerate().filter_map(|(v, u)| u.map(|u| (u, v))).collect()
}

fn bottleneck(left: &[C64], right: &[C64]) -> f64 {
    if left.is_empty() {
        return 0.0;
    }
    let mut cands: Vec<f64> = left.iter().flat_map(|&l| right.iter().map(move |&r| (l - r).norm())).collect();
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands.dedup();
    let (mut lo, mut hi) = (0, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if max_matching(left, right, cands[mid]).len() == left.len() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo]
}

/// Non-zero eigenvalues of `k1` and `k2` agree with algebraic multiplicity.
/// Values with `|λ| <= tol·scale` count as zero; pairs must be within
/// `tol·max(1, r(k1), r(k2))`.
pub fn nonzero_eigen_match(k1: &Operator, k2: &Operator, tol: f64) -> Result<MultisetMatch> {
    let s1 = eigenvalues(k1, tol)?;
    let s2 = eigenvalues(k2, tol)?;
    Ok(nonzero_match_reports(&s1, &s2, tol))
}

pub(crate) fn nonzero_match_reports(s1: &SpectrumReport, s2: &SpectrumReport, tol: f64) -> MultisetMatch {
    let abs_tol = tol * s1.radius.max(s2.radius).max(1.0);
    match_multisets(&s1.nonzero(), &s2.nonzero(), abs_tol)
}
