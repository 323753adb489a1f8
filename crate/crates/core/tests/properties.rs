mod common;

use ideal_tri::cycles::{
    cycle_product, moment_identities, moment_matrix, ncycle_trace_sum, support_digraph, two_cycle_integral,
};
use ideal_tri::increasing_spectrum::{check_increasing_spectrum, CheckMode};
use ideal_tri::operators::{compress, densify, trace, trace_power, trace_split};
use ideal_tri::spectral::{eigenvalues, match_multisets};
use ideal_tri::triangularize::{
    increasing_spectrum_block_form, nilpotent_block_form, scc_triangularize, verify_certificate, DiagonalClass,
};
use ideal_tri::{build_space, enumerate_standard_pairs, MeasureSpace, Operator, StandardSet, C64};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn random_operator(rng: &mut ChaCha8Rng, p: usize, density: f64) -> Operator {
    let rows: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| if rng.gen_bool(density) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect())
        .collect();
    Operator::atomic(&rows).unwrap()
}

fn random_set(rng: &mut ChaCha8Rng, p: usize) -> StandardSet {
    StandardSet::from_flags((0..p).map(|_| rng.gen_bool(0.5)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cell_weights_sum_to_one(cells in 1usize..200, atoms in 0usize..5) {
        let ids: Vec<i64> = (0..atoms as i64).collect();
        let space = build_space(cells, &ids).unwrap();
        let cells = space.cells();
        let cell_mass: f64 = cells.indices().map(|i| space.weight(i)).sum();
        prop_assert!((cell_mass - 1.0).abs() < 1e-12);
        prop_assert_eq!(space.atoms().count(), atoms);
    }

    #[test]
    fn pair_enumeration_counts_and_nests(p in 1usize..8) {
        let space = MeasureSpace::atomic(p).unwrap();
        let pairs: Vec<(u64, u64)> = enumerate_standard_pairs(&space, 12).unwrap().collect();
        prop_assert_eq!(pairs.len() as u64, 3u64.pow(p as u32));
        prop_assert!(pairs.iter().all(|&(e, f)| e & !f == 0));
    }

    #[test]
    fn eigenvalues_sum_to_trace_and_survive_permutation(seed in any::<u64>(), p in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_operator(&mut rng, p, 0.6);
        let ev = eigenvalues(&k, 1e-8).unwrap();
        let sum: C64 = ev.eigenvalues.iter().sum();
        prop_assert!((sum - trace(&k)).norm() < 1e-9);
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(&mut rng);
        let permuted = eigenvalues(&k.permuted(&order), 1e-8).unwrap();
        prop_assert!(match_multisets(&ev.eigenvalues, &permuted.eigenvalues, 1e-7).matched);
    }

    #[test]
    fn compression_composes(seed in any::<u64>(), p in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_operator(&mut rng, p, 0.7);
        let f = random_set(&mut rng, p);
        let e = StandardSet::from_flags(f.flags().iter().map(|&m| m && rng.gen_bool(0.5)).collect());
        let inner = StandardSet::from_flags(f.indices().map(|i| e.contains(i)).collect());
        let twice = compress(&compress(&k, &f).unwrap(), &inner).unwrap();
        let direct = compress(&k, &e).unwrap();
        prop_assert_eq!(twice.entries(), direct.entries());
        let (cells, atoms) = trace_split(&k);
        prop_assert!((cells + atoms - trace(&k)).norm() < 1e-12);
    }

    #[test]
    fn trace_sum_identity(seed in any::<u64>(), sets in 1usize..4, power in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_operator(&mut rng, 6, 0.8);
        let label: Vec<usize> = (0..6).map(|_| rng.gen_range(0..=sets)).collect();
        let parts: Vec<StandardSet> =
            (0..sets).map(|s| StandardSet::from_flags(label.iter().map(|&l| l == s).collect())).collect();
        let r = ncycle_trace_sum(&k, &parts, power).unwrap();
        prop_assert!(r.identity_residual < 1e-8);
        let union = parts.iter().fold(StandardSet::empty(6), |acc, s| acc.union(s));
        let direct = trace_power(&compress(&k, &union).unwrap(), power).unwrap();
        prop_assert!((r.atomic_diagonal + r.remainder - direct).norm() < 1e-8);
    }

    #[test]
    fn reversed_cycle_is_transposed_product(seed in any::<u64>(), len in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_operator(&mut rng, 6, 1.0);
        let mut vertices: Vec<usize> = (0..6).collect();
        vertices.shuffle(&mut rng);
        vertices.truncate(len);
        let forward = cycle_product(&k, &vertices).unwrap();
        vertices.reverse();
        let n = vertices.len();
        let transposed: C64 = (0..n).map(|i| k.kernel_value(vertices[(i + 1) % n], vertices[i])).product();
        prop_assert!((forward - transposed).norm() < 1e-12);
    }

    #[test]
    fn moment_matrices_add_and_match_two_cycles(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = planted_nilpotent(&mut rng, 4, 10);
        let kfr = refactor(&inst.kfr, &mut rng);
        let p = kfr.space().len();
        let e = random_set(&mut rng, p);
        let f = e.complement();
        let me = moment_matrix(&kfr, &e, 1e-9).unwrap().matrix;
        let mf = moment_matrix(&kfr, &f, 1e-9).unwrap().matrix;
        let full = moment_matrix(&kfr, &StandardSet::full(p), 1e-9).unwrap().matrix;
        prop_assert!((&me + &mf - &full).norm() < 1e-10);
        let tr2 = (&me * &me).trace();
        prop_assert!((tr2 - two_cycle_integral(&kfr, &e).unwrap()).norm() < 1e-10);
        prop_assert!(moment_identities(&kfr, &[e, f], 1e-9).unwrap().passed);
    }

    #[test]
    fn support_digraph_ignores_factorization(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = planted_nilpotent(&mut rng, 4, 10);
        let a = densify(&inst.kfr).unwrap();
        let b = densify(&refactor(&inst.kfr, &mut rng)).unwrap();
        let threshold = 1e-9 * a.max_kernel();
        prop_assert_eq!(support_digraph(&a, threshold).adjacency, support_digraph(&b, threshold).adjacency);
        prop_assert!(support_digraph(&a, threshold).is_acyclic());
    }

    #[test]
    fn scc_form_keeps_spectrum(seed in any::<u64>(), p in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_operator(&mut rng, p, 0.25);
        let cert = scc_triangularize(&k, 1e-10);
        prop_assert!(cert.residual <= 1e-10 * k.scale());
        let reordered = k.permuted(&cert.order());
        let a = eigenvalues(&k, 1e-8).unwrap().eigenvalues;
        let b = eigenvalues(&reordered, 1e-8).unwrap().eigenvalues;
        prop_assert!(match_multisets(&a, &b, 1e-8).matched);
        prop_assert!(verify_certificate(&k, &cert, 1e-10).passed);
    }

    #[test]
    fn nilpotent_form_bounds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = planted_nilpotent(&mut rng, 5, 14);
        let cert = nilpotent_block_form(&inst.kfr, 1e-10).unwrap();
        prop_assert!(cert.blocks.len() <= inst.rank + 1);
        prop_assert!(cert.diagonal.iter().all(|d| d.class == DiagonalClass::Zero));
        prop_assert!(verify_certificate(&densify(&inst.kfr).unwrap(), &cert, 1e-10).passed);
    }

    #[test]
    fn increasing_form_bounds_and_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = planted_hybrid(&mut rng);
        let k = &inst.k;
        let mode = CheckMode::Exhaustive { max_points: 12 };
        let holds = check_increasing_spectrum(k, 1e-8, mode).unwrap().verdict;
        prop_assert!(holds);
        let cert = increasing_spectrum_block_form(k, 1e-8).unwrap();
        prop_assert!(cert.blocks.len() <= 2 * cert.bound.rank + 1);
        let nonzero = eigenvalues(k, 1e-8).unwrap().nonzero();
        prop_assert!(match_multisets(&cert.scalars(), &nonzero, 1e-8).matched);
        prop_assert!(verify_certificate(k, &cert, 1e-8).passed);
        for prefix in cert.chain().unwrap() {
            let sub = compress(k, &prefix).unwrap();
            let sub_cert = increasing_spectrum_block_form(&sub, 1e-8).unwrap();
            prop_assert!(sub_cert.blocks.len() <= cert.blocks.len());
        }
    }
}
