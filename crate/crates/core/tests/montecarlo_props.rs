mod common;

use proptest::prelude::*;
use rand::Rng;
use threshold_lab::fragments::{minimum_tower, TowerBudget};
use threshold_lab::instances::{edge_index, gen_perfect_matchings};
use threshold_lab::montecarlo::{
    estimate_key_lemma, estimate_pc, is_bad, isolated_vertices, sample_graph, sharpness_demo,
    union_inclusion_frequencies, McConfig,
};
use threshold_lab::rng::Streams;
use threshold_lab::solvers::{threshold_pe, SolverConfig};
use threshold_lab::{Lambdas, SetSystem, Subset};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bad_tuples_force_nonempty_towers(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=5);
        let family = common::random_family(&mut rng, n, m, n);
        let lambdas = common::random_lambdas(&mut rng, &family);
        let s = rng.gen_range(1..=2);
        let samples: Vec<Subset> = (0..s).map(|_| common::random_subset(&mut rng, n, 0.3)).collect();
        let u = samples.iter().fold(Subset::empty(), |a, w| a | *w);
        let level = 1.0 - 0.5f64.powi(s as i32);
        let direct = lambdas.iter().all(|l| l.mass(&u) < level - 1e-12);
        prop_assert_eq!(is_bad(&samples, &lambdas), direct);
        if direct {
            for h in family.members() {
                let cert = minimum_tower(&samples, h, &family, &lambdas, &TowerBudget::default()).unwrap();
                prop_assert!(cert.union().size > 0);
            }
        }
    }
}

#[test]
fn estimates_are_reproducible() {
    let family = gen_perfect_matchings(4).unwrap();
    let lambdas = Lambdas::uniform(&family).unwrap();
    let cfg = McConfig {
        trials: 2_000,
        seed: 99,
        ..McConfig::default()
    };
    let a = estimate_key_lemma(&family, &lambdas, 0.03, 2, &cfg, &TowerBudget::default()).unwrap();
    let b = estimate_key_lemma(&family, &lambdas, 0.03, 2, &cfg, &TowerBudget::default()).unwrap();
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

#[test]
fn key_lemma_rejects_large_q() {
    let family = SetSystem::from_lists(2, &[vec![0, 1]]).unwrap();
    let lambdas = Lambdas::uniform(&family).unwrap();
    let err = estimate_key_lemma(&family, &lambdas, 0.1, 1, &McConfig::default(), &TowerBudget::default())
        .unwrap_err();
    assert!(err.to_string().contains("choose p"));
}

#[test]
fn key_lemma_zero_at_zero_density() {
    let family = gen_perfect_matchings(4).unwrap();
    let lambdas = Lambdas::uniform(&family).unwrap();
    let cfg = McConfig {
        trials: 500,
        ..McConfig::default()
    };
    let r = estimate_key_lemma(&family, &lambdas, 0.0, 1, &cfg, &TowerBudget::default()).unwrap();
    assert_eq!(r.estimate, 0.0);
}

#[test]
fn union_frequencies_follow_amplified_density() {
    let cfg = McConfig {
        trials: 10_000,
        seed: 4,
        ..McConfig::default()
    };
    let (q, s) = (0.1, 3);
    let target = 1.0 - (1.0f64 - q).powi(s as i32);
    let se = (target * (1.0 - target) / cfg.trials as f64).sqrt();
    for (f, _) in union_inclusion_frequencies(8, q, s, &cfg).unwrap() {
        assert!((f - target).abs() <= 3.0 * se, "{f} vs {target}");
    }
}

#[test]
fn pc_closed_forms() {
    let cfg = McConfig {
        trials: 20_000,
        seed: 8,
        ..McConfig::default()
    };
    let single = SetSystem::from_lists(1, &[vec![0]]).unwrap();
    let est = estimate_pc(&single, &cfg, 1e-6).unwrap();
    assert!((est.threshold.value - 0.5).abs() <= 0.015, "{:?}", est);

    let pair = SetSystem::from_lists(2, &[vec![0], vec![1]]).unwrap();
    let est = estimate_pc(&pair, &cfg, 1e-6).unwrap();
    assert!((est.threshold.value - (1.0 - 0.5f64.sqrt())).abs() <= 0.015, "{:?}", est);
}

#[test]
fn pc_dominates_expectation_threshold() {
    let cfg = McConfig {
        trials: 4_000,
        seed: 21,
        ..McConfig::default()
    };
    let mut rng = common::rng(3);
    for _ in 0..10 {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=5);
        let f = common::random_family(&mut rng, n, m, n);
        let pc = estimate_pc(&f, &cfg, 1e-4).unwrap();
        let pe = threshold_pe(&f, SolverConfig::default()).unwrap();
        // Slack for Monte Carlo noise in the empirical probability.
        assert!(pc.threshold.value >= pe.value - 1e-4 - 0.03, "{} < {}", pc.threshold.value, pe.value);
    }
}

#[test]
fn sharpness_degenerate_and_coverage_bound() {
    let cfg = McConfig {
        trials: 50,
        ..McConfig::default()
    };
    let r = sharpness_demo(10, 0.0, &cfg).unwrap();
    assert_eq!(r.isolated.estimate, 10.0);

    // Each isolated vertex removes the edge covering it from every perfect
    // matching, so uniform matching weight inside the graph is at most
    // 1 - isolated/n.
    let n = 8;
    let family = gen_perfect_matchings(n).unwrap();
    let lambdas = Lambdas::uniform(&family).unwrap();
    let streams = Streams::new(5, "coverage");
    for i in 0..200 {
        let edges = sample_graph(n, 0.25, &mut streams.trial(i));
        let x: Subset = edges.iter().map(|&(a, b)| edge_index(n, a, b)).collect();
        let iso = isolated_vertices(n, &edges);
        assert!(lambdas.max_mass(&x) <= 1.0 - iso as f64 / n as f64 + 1e-12);
    }
}
