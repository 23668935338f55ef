use regsum::bench::{
    experiment_config, run_noise_experiment, run_quality_experiment, run_scalability_experiment,
    write_noise_csv, write_quality_csv, NoiseExperiment, NoiseSweep, QualityExperiment,
    ScaleExperiment, ScaleMode,
};
use regsum::synth::{generate, GeneratorConfig};

fn small_quality() -> QualityExperiment {
    QualityExperiment {
        n: 60,
        cluster_counts: vec![2, 3, 5],
        inter: vec![0.05, 0.2],
        intra: vec![0.05, 0.2],
        k_max: 12,
        head: None,
        seed: 3,
        summary: experiment_config(),
    }
}

#[test]
fn ground_truth_is_block_diagonal_and_seeded() {
    let cfg = GeneratorConfig {
        n: 103,
        num_clusters: 4,
        inter_noise: 0.3,
        intra_noise: 0.3,
        seed: 8,
    };
    let s = generate(&cfg).unwrap();
    for (u, v, w) in s.ground_truth.edges() {
        assert_eq!(w, 1.0);
        assert!(s.labels[u].is_some() && s.labels[u] == s.labels[v]);
    }
    let clustered = s.labels.iter().filter(|l| l.is_some()).count();
    assert_eq!(clustered, 100);
    assert_eq!(s.ground_truth.edge_count(), 4 * 25 * 24 / 2);
    let again = generate(&cfg).unwrap();
    assert_eq!(again.graph.to_dense(), s.graph.to_dense());
    assert_eq!(again.labels, s.labels);
}

#[test]
fn quality_curves_cover_every_k() {
    let exp = small_quality();
    let report = run_quality_experiment(&exp).unwrap();
    assert_eq!(report.store_size, 12);
    assert_eq!(report.queries.len(), 3);
    assert_eq!(report.rows.len(), 12);
    for row in &report.rows {
        assert!((0.0..=1.0).contains(&row.two_stage) && (0.0..=1.0).contains(&row.one_stage));
    }
    // Each query finds itself first.
    let first = report.at(1).unwrap();
    assert!((first.two_stage - 0.25).abs() < 1e-12);
    assert!((first.one_stage - 0.25).abs() < 1e-12);

    let mut a = Vec::new();
    let mut b = Vec::new();
    write_quality_csv(&report, &mut a).unwrap();
    write_quality_csv(&run_quality_experiment(&exp).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8(a)
        .unwrap()
        .starts_with("k,map_two_stage,map_one_stage\n"));
}

#[test]
fn noise_sweeps_are_sorted_and_complete() {
    let exp = NoiseExperiment {
        sizes: vec![80],
        grid: vec![0.1, 0.3],
        sweep: vec![0.1, 0.3, 0.5],
        num_clusters: 4,
        seeds: 3,
        seed: 2,
        summary: experiment_config(),
    };
    let cells = run_noise_experiment(&exp).unwrap();
    assert_eq!(cells.len(), 4 + 3 + 3);
    assert_eq!(
        cells.iter().filter(|c| c.sweep == NoiseSweep::Grid).count(),
        4
    );
    for c in &cells {
        assert_eq!(c.runs, 3);
        assert_eq!(c.failures, 0);
        assert!(c.reconstructed.unwrap() >= 0.0 && c.input > 0.0);
    }
    let mut csv = Vec::new();
    write_noise_csv(&cells, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 11);
}

#[test]
fn scale_points_report_every_term() {
    let mut exp = ScaleExperiment::desk_scale(ScaleMode::StoreSize, experiment_config());
    exp.points = vec![1, 20];
    exp.fixed = 60;
    exp.base_graphs = 3;
    exp.repeats = 1;
    let points = run_scalability_experiment(&exp).unwrap();
    assert_eq!(
        points.iter().map(|p| p.store_size).collect::<Vec<_>>(),
        vec![1, 20]
    );
    for p in &points {
        assert_eq!(p.n, 60);
        assert!(p.one_stage.summarize.is_zero());
        assert!(p.ratio().is_finite());
    }
}
