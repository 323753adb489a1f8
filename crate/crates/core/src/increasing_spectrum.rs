//! Verification of the increasing-spectrum property
//! `σ(P_E K|_{ran P_E}) ⊆ σ(P_F K|_{ran P_F})` for `E ⊆ F`, and the
//! spectral-radius profile along nested chains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::measure_space::{enumerate_standard_pairs, StandardSet};
use crate::operators::{compress, Operator};
use crate::spectral::{eigenvalues, nonzero_match_reports, spectrum_subset, MultisetMatch, SpectrumReport};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Every pair `E ⊆ F`; refuses spaces with more than `max_points` points.
    Exhaustive { max_points: usize },
    /// Pairs along the prefix chain of points plus `random_pairs` random
    /// pairs drawn from `seed`. Never a proof.
    Sampled { random_pairs: usize, seed: u64 },
}

impl Default for CheckMode {
    fn default() -> Self {
        CheckMode::Exhaustive { max_points: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
    #[serde(with = "crate::descriptor::complex")]
    pub eigenvalue: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub verdict: bool,
    pub pairs_checked: u64,
    pub exhaustive: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    pub tol: f64,
}

#[cfg(feature = "parallel")]
fn subset_spectra(k: &Operator, p: usize, tol: f64) -> Result<Vec<SpectrumReport>> {
    use rayon::prelude::*;
    (0..1u64 << p)
        .into_par_iter()
        .map(|mask| eigenvalues(&compress(k, &StandardSet::from_mask(p, mask))?, tol))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn subset_spectra(k: &Operator, p: usize, tol: f64) -> Result<Vec<SpectrumReport>> {
    (0..1u64 << p).map(|mask| eigenvalues(&compress(k, &StandardSet::from_mask(p, mask))?, tol)).collect()
}

/// Check `σ(K_E) ⊆ σ(K_F)` for pairs `E ⊆ F`. In exhaustive mode pairs are
/// visited in lexicographic order and the first violation is reported.
pub fn check_increasing_spectrum(k: &Operator, tol: f64, mode: CheckMode) -> Result<PropertyReport> {
    match mode {
        CheckMode::Exhaustive { max_points } => exhaustive(k, tol, max_points),
        CheckMode::Sampled { random_pairs, seed } => sampled(k, tol, random_pairs, seed),
    }
}

fn exhaustive(k: &Operator, tol: f64, max_points: usize) -> Result<PropertyReport> {
    let p = k.dim();
    let pairs = enumerate_standard_pairs(k.space(), max_points)?;
    let spectra = subset_spectra(k, p, tol)?;
    let mut checked = 0;
    for (inner, outer) in pairs {
        checked += 1;
        let check = spectrum_subset(&spectra[inner as usize], &spectra[outer as usize], tol);
        if let Some(eigenvalue) = check.witness {
            return Ok(PropertyReport {
                verdict: false,
                pairs_checked: checked,
                exhaustive: true,
                witness: Some(Witness {
                    inner: StandardSet::from_mask(p, inner).to_indices(),
                    outer: StandardSet::from_mask(p, outer).to_indices(),
                    eigenvalue,
                }),
                tol,
            });
        }
    }
    Ok(PropertyReport { verdict: true, pairs_checked: checked, exhaustive: true, witness: None, tol })
}

fn sampled(k: &Operator, tol: f64, random_pairs: usize, seed: u64) -> Result<PropertyReport> {
    let p = k.dim();
    let prefix = |s: usize| StandardSet::from_flags((0..p).map(|i| i < s).collect());
    let chain: Vec<SpectrumReport> =
        (0..=p).map(|s| eigenvalues(&compress(k, &prefix(s))?, tol)).collect::<Result<_>>()?;
    let mut checked = 0;
    let fail = |inner: StandardSet, outer: StandardSet, eigenvalue, checked| PropertyReport {
        verdict: false,
        pairs_checked: checked,
        exhaustive: false,
        witness: Some(Witness { inner: inner.to_indices(), outer: outer.to_indices(), eigenvalue }),
        tol,
    };
    for a in 0..=p {
        for b in a..=p {
            checked += 1;
            if let Some(z) = spectrum_subset(&chain[a], &chain[b], tol).witness {
                return Ok(fail(prefix(a), prefix(b), z, checked));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random_pairs {
        let outer = StandardSet::from_flags((0..p).map(|_| rng.gen_bool(0.5)).collect());
        let inner = StandardSet::from_flags(outer.flags().iter().map(|&m| m && rng.gen_bool(0.5)).collect());
        checked += 1;
        let si = eigenvalues(&compress(k, &inner)?, tol)?;
        let so = eigenvalues(&compress(k, &outer)?, tol)?;
        if let Some(z) = spectrum_subset(&si, &so, tol).witness {
            return Ok(fail(inner, outer, z, checked));
        }
    }
    Ok(PropertyReport { verdict: true, pairs_checked: checked, exhaustive: false, witness: None, tol })
}

fn check_chain(k: &Operator, chain: &[StandardSet]) -> Result<()> {
    for (i, set) in chain.iter().enumerate() {
        k.space().same_shape(set)?;
        if i > 0 && !chain[i - 1].is_subset(set) {
            return Err(Error::NonIncreasingChain(i));
        }
    }
    Ok(())
}

/// `r(P_E K P_E)` for each set of an increasing chain.
pub fn radius_profile(k: &Operator, chain: &[StandardSet]) -> Result<Vec<f64>> {
    check_chain(k, chain)?;
    chain.iter().map(|e| Ok(eigenvalues(&compress(k, e)?, 0.0)?.radius)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DichotomyVerdict {
    /// Either some `σ(P_t K P_t) ⊄ σ(K)` or `K` is quasinilpotent.
    Consistent,
    /// Inclusion held along the whole chain yet `r(K) > tol`.
    Contradiction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub verdict: DichotomyVerdict,
    pub inclusion_holds: bool,
    /// First chain index where inclusion fails, with the offending eigenvalue.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_failure: Option<(usize, [f64; 2])>,
    pub radius: f64,
    pub profile: Vec<f64>,
    pub distinct_profile_values: usize,
    /// Distinct profile values that are not the modulus of any eigenvalue of `K`.
    pub profile_values_off_spectrum: usize,
    pub tol: f64,
}

/// Along a chain of cell sets, either inclusion `σ(P_t K P_t) ⊆ σ(K)` fails
/// somewhere or `K` has to be quasinilpotent: a non-zero radius would make
/// the profile sweep `[0, r(K)]` while every value stayed in `|σ(K)|`.
pub fn quasinilpotence_dichotomy(k: &Operator, chain: &[StandardSet], tol: f64) -> Result<DichotomyReport> {
    if k.space().num_atoms() > 0 {
        return Err(Error::AtomsPresent);
    }
    check_chain(k, chain)?;
    let full = eigenvalues(k, tol)?;
    let mut profile = Vec::with_capacity(chain.len());
    let mut first_failure = None;
    for (i, e) in chain.iter().enumerate() {
        let s = eigenvalues(&compress(k, e)?, tol)?;
        profile.push(s.radius);
        if first_failure.is_none() {
            if let Some(z) = spectrum_subset(&s, &full, tol).witness {
                first_failure = Some((i, [z.re, z.im]));
            }
        }
    }
    let abs_tol = tol * full.radius.max(1.0);
    let mut distinct: Vec<f64> = Vec::new();
    for &r in &profile {
        if !distinct.iter().any(|&d| (d - r).abs() <= abs_tol) {
            distinct.push(r);
        }
    }
    let moduli: Vec<f64> = full.eigenvalues.iter().map(|z| z.norm()).collect();
    let off = distinct.iter().filter(|&&r| !moduli.iter().any(|&m| (m - r).abs() <= abs_tol)).count();
    let inclusion_holds = first_failure.is_none();
    let verdict = if inclusion_holds && !full.quasinilpotent {
        DichotomyVerdict::Contradiction
    } else {
        DichotomyVerdict::Consistent
    };
    Ok(DichotomyReport {
        verdict,
        inclusion_holds,
        first_failure,
        radius: full.radius,
        profile,
        distinct_profile_values: distinct.len(),
        profile_values_off_spectrum: off,
        tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicSpectrumReport {
    /// Non-zero eigenvalues of `K` against those of `P_A K P_A`.
    pub nonzero_match: MultisetMatch,
    /// `r(P_C K P_C)`.
    pub cell_radius: f64,
    pub cells_quasinilpotent: bool,
    pub passed: bool,
}

/// `K` and `P_A K P_A` share their non-zero eigenvalues with multiplicity,
/// and `P_C K P_C` is quasinilpotent.
pub fn atomic_vs_full_spectrum(k: &Operator, tol: f64) -> Result<AtomicSpectrumReport> {
    let full = eigenvalues(k, tol)?;
    let atoms = eigenvalues(&compress(k, &k.space().atoms())?, tol)?;
    let cells = compress(k, &k.space().cells())?;
    let cell_spec = eigenvalues(&cells, tol)?;
    let nonzero_match = nonzero_match_reports(&full, &atoms, tol);
    // scale of K, not of the compression
    let cells_quasinilpotent = cell_spec.radius <= tol * k.scale();
    Ok(AtomicSpectrumReport {
        passed: nonzero_match.matched && cells_quasinilpotent,
        nonzero_match,
        cell_radius: cell_spec.radius,
        cells_quasinilpotent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::{build_space, nested_chain};
    use crate::operators::{densify, named};

    const TOL: f64 = 1e-8;

    /// Independent brute force: spectra via 2x2 closed forms only.
    fn brute_2x2(k: &Operator) -> bool {
        let a = k.entries();
        let spec = |mask: u8| -> Vec<C64> {
            match mask {
                0 => vec![],
                1 => vec![a[(0, 0)]],
                2 => vec![a[(1, 1)]],
                _ => {
                    let tr = a[(0, 0)] + a[(1, 1)];
                    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
                    let d = (tr * tr - det * 4.0).sqrt();
                    vec![(tr + d) / 2.0, (tr - d) / 2.0]
                }
            }
        };
        (0u8..4).all(|e| {
            (0u8..4)
                .filter(|f| e & !f == 0)
                .all(|f| spec(e).iter().all(|z| spec(f).iter().any(|w| (z - w).norm() <= 1e-12)))
        })
    }

    #[test]
    fn paper_example_passes() {
        let k = densify(&named::paper_example(2).unwrap()).unwrap();
        let r = check_increasing_spectrum(&k, TOL, CheckMode::default()).unwrap();
        assert!(r.verdict);
        assert_eq!(r.pairs_checked, 243);
        assert!(r.exhaustive);
    }

    #[test]
    fn diag_pm1_decided_by_brute_force() {
        let k = Operator::atomic(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let r = check_increasing_spectrum(&k, TOL, CheckMode::default()).unwrap();
        assert_eq!(r.verdict, brute_2x2(&k));
        assert!(r.verdict);
    }

    #[test]
    fn swap_fails_with_minimal_witness() {
        let k = Operator::atomic(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(!brute_2x2(&k));
        let r = check_increasing_spectrum(&k, TOL, CheckMode::default()).unwrap();
        assert!(!r.verdict);
        let w = r.witness.unwrap();
        // lexicographic: (∅,∅),(∅,{1}),(∅,{0}),(∅,X),({1},{1}),({1},X) <- first failure
        assert_eq!((w.inner, w.outer), (vec![1], vec![0, 1]));
        assert_eq!(w.eigenvalue, C64::new(0.0, 0.0));
        assert_eq!(r.pairs_checked, 6);
    }

    #[test]
    fn too_large_is_explicit() {
        let k = named::ones_kernel(13).unwrap();
        assert!(matches!(
            check_increasing_spectrum(&k, TOL, CheckMode::default()),
            Err(Error::TooLarge { points: 13, pairs: 1_594_323, .. })
        ));
        let r = check_increasing_spectrum(&k, TOL, CheckMode::Sampled { random_pairs: 50, seed: 1 }).unwrap();
        assert!(!r.exhaustive);
        assert!(!r.verdict);
    }

    #[test]
    fn profiles() {
        let v = named::volterra_linear(16).unwrap();
        let chain = nested_chain(v.space(), 16).unwrap();
        assert!(radius_profile(&v, &chain).unwrap().iter().all(|&r| r == 0.0));

        let id = Operator::from_kernel_fn(build_space(4, &[]).unwrap(), |i, j| {
            C64::new(if i == j { 4.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        let prof = radius_profile(&id, &nested_chain(id.space(), 4).unwrap()).unwrap();
        assert_eq!(prof, vec![0.0, 1.0, 1.0, 1.0, 1.0]);

        let ones = named::ones_kernel(64).unwrap();
        let prof = radius_profile(&ones, &nested_chain(ones.space(), 64).unwrap()).unwrap();
        for (s, r) in prof.iter().enumerate() {
            assert!((r - s as f64 / 64.0).abs() < 1e-12);
        }

        let mut bad = nested_chain(ones.space(), 4).unwrap();
        bad.swap(1, 2);
        assert!(matches!(radius_profile(&ones, &bad), Err(Error::NonIncreasingChain(2))));
    }

    #[test]
    fn dichotomy_cases() {
        let v = named::volterra_linear(64).unwrap();
        let r = quasinilpotence_dichotomy(&v, &nested_chain(v.space(), 64).unwrap(), TOL).unwrap();
        assert!(r.inclusion_holds);
        assert_eq!(r.verdict, DichotomyVerdict::Consistent);
        assert!(r.radius < 1e-2);

        let ones = named::ones_kernel(64).unwrap();
        let r = quasinilpotence_dichotomy(&ones, &nested_chain(ones.space(), 64).unwrap(), TOL).unwrap();
        assert!(!r.inclusion_holds);
        assert_eq!(r.verdict, DichotomyVerdict::Consistent);
        assert_eq!(r.first_failure.unwrap().0, 1);

        let zero = Operator::from_kernel_fn(build_space(8, &[]).unwrap(), |_, _| C64::new(0.0, 0.0)).unwrap();
        let r = quasinilpotence_dichotomy(&zero, &nested_chain(zero.space(), 8).unwrap(), TOL).unwrap();
        assert_eq!(r.verdict, DichotomyVerdict::Consistent);

        let hybrid = Operator::from_kernel_fn(build_space(2, &[1]).unwrap(), |_, _| C64::new(0.0, 0.0)).unwrap();
        assert!(matches!(
            quasinilpotence_dichotomy(&hybrid, &nested_chain(hybrid.space(), 2).unwrap(), TOL),
            Err(Error::AtomsPresent)
        ));
    }

    #[test]
    fn atomic_spectrum_cases() {
        let k = densify(&named::paper_example(1).unwrap()).unwrap();
        let r = atomic_vs_full_spectrum(&k, TOL).unwrap();
        assert!(r.passed);
        assert_eq!(r.cell_radius, 0.0);

        let space = build_space(2, &[2, 3]).unwrap();
        let kernel = [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 2.0, 0.0], [0.0, 0.0, 0.0, 3.0]];
        let k = Operator::from_kernel_fn(space.clone(), |i, j| C64::new(kernel[i][j], 0.0)).unwrap();
        let r = atomic_vs_full_spectrum(&k, TOL).unwrap();
        assert!(r.nonzero_match.matched && r.cells_quasinilpotent);

        let planted =
            Operator::from_kernel_fn(space, |i, j| C64::new(if i == j && i < 2 { 1.0 } else { kernel[i][j] }, 0.0))
                .unwrap();
        let r = atomic_vs_full_spectrum(&planted, TOL).unwrap();
        assert!(!r.cells_quasinilpotent);
        assert!(!r.passed);
    }
}
