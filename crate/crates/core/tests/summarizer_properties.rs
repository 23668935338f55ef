mod common;

use common::{random_classes, random_graph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regsum::bench::experiment_config;
use regsum::refinement::{refine, RefineConfig};
use regsum::regularity::{check_partition, EquitablePartition};
use regsum::summarizer::{initial_partition, LoopMode, SummaryConfig};
use regsum::synth::{generate, GeneratorConfig};
use regsum::{summarize, Error};

fn planted(
    n: usize,
    clusters: usize,
    inter: f64,
    intra: f64,
    seed: u64,
) -> regsum::synth::Synthetic {
    generate(&GeneratorConfig {
        n,
        num_clusters: clusters,
        inter_noise: inter,
        intra_noise: intra,
        seed,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn refine_covers_every_vertex_once(
        n in 16usize..64,
        p in 0.05f64..0.95,
        seed in any::<u64>(),
        eps in 0.3f64..0.9,
    ) {
        let g = random_graph(n, p, false, seed);
        let k = 2 + (seed % 3) as usize;
        let (classes, rest) = random_classes(n, k, n / k, seed);
        let part = EquitablePartition::new(classes, rest, eps, n).unwrap();
        let verdicts = check_partition(&g, &part, eps).unwrap();
        let run = || refine(&g, &part, &verdicts, &RefineConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let out = run();
        // The constructor rejects duplicated or missing vertices.
        let again = EquitablePartition::new(
            out.partition.classes().to_vec(),
            out.partition.exceptional().clone(),
            eps,
            n,
        );
        prop_assert!(again.is_ok());
        prop_assert!(out.partition.k() <= 2 * k);
        prop_assert!(out.partition.k() + 2 * out.degenerate_splits >= 2 * k);
        prop_assert_eq!(out, run());
    }

    #[test]
    fn summary_is_the_trace_argmax(n in 40usize..120, clusters in 2usize..5, seed in any::<u64>()) {
        let s = planted(n, clusters, 0.1, 0.1, seed);
        let cfg = SummaryConfig { seed, ..experiment_config() };
        let summary = summarize(&s.graph, &cfg).unwrap();
        let best = summary
            .trace
            .iter()
            .filter(|t| t.collected)
            .map(|t| t.sze_idx)
            .fold(f64::NEG_INFINITY, f64::max);
        let r = &summary.reduced;
        if summary.trace.iter().any(|t| t.collected) {
            prop_assert_eq!(r.sze_idx, best);
        }
        prop_assert_eq!(r.k, summary.partition.k());
        let members = r.membership.iter().filter(|c| c.is_some()).count();
        prop_assert_eq!(members, n - summary.partition.exceptional().len());
        let bound = (n as f64 / cfg.initial_k as f64).log2() + 1.0;
        prop_assert!(summary.trace.len() as f64 <= bound.floor() + 1.0);
        let again = summarize(&s.graph, &cfg).unwrap();
        prop_assert_eq!(&again.reduced, r);
    }
}

#[test]
fn summaries_improve_on_the_initial_partition() {
    let mut improved = 0;
    for seed in 0..20u64 {
        let inter = 0.05 + 0.25 * (seed % 5) as f64 / 4.0;
        let intra = 0.3 - 0.25 * (seed % 4) as f64 / 3.0;
        let s = planted(300, 3 + (seed % 3) as usize, inter, intra, seed);
        let cfg = SummaryConfig {
            seed,
            ..experiment_config()
        };
        let initial = initial_partition(&s.graph, cfg.initial_k, cfg.epsilon, seed).unwrap();
        let before = regsum::regularity::sze_idx(&s.graph, &initial).unwrap();
        let after = summarize(&s.graph, &cfg).unwrap().reduced.sze_idx;
        if after >= before {
            improved += 1;
        }
    }
    assert!(improved >= 18, "improved in {improved} of 20 runs");
}

#[test]
fn strict_settings_fail_with_a_trace() {
    let s = planted(200, 4, 0.2, 0.2, 1);
    match summarize(&s.graph, &SummaryConfig::default()) {
        Err(Error::SummaryFailed { trace }) => assert!(!trace.is_empty()),
        Ok(summary) => assert!(summary.trace.iter().any(|t| t.collected)),
        Err(e) => panic!("{e}"),
    }
}

/// Fraction of each class taken by its most common planted cluster, averaged.
fn purity(classes: &[regsum::VertexSet], labels: &[Option<usize>]) -> f64 {
    let total: f64 = classes
        .iter()
        .map(|c| {
            let mut counts = std::collections::HashMap::new();
            for v in c.iter() {
                *counts.entry(labels[*v]).or_insert(0usize) += 1;
            }
            *counts.values().max().unwrap() as f64 / c.len() as f64
        })
        .sum();
    total / classes.len() as f64
}

#[test]
fn noiseless_cliques_give_pure_classes() {
    for seed in 0..10u64 {
        let s = planted(400, 4, 0.0, 0.0, seed);
        let cfg = SummaryConfig {
            epsilon: 0.3,
            c_min: 0.9,
            seed,
            loop_mode: LoopMode::Literal,
            ..SummaryConfig::default()
        };
        let summary = summarize(&s.graph, &cfg).expect("a collected partition");
        assert!(purity(summary.partition.classes(), &s.labels) >= 0.95);
    }
}
