use proptest::prelude::*;
use regsum::reconstruction::{blow_up, reconstruction_error, DensityMatrix};
use regsum::summarizer::ReducedGraph;

fn reduced_graph() -> impl Strategy<Value = ReducedGraph> {
    (2usize..6, 2usize..6, 0usize..4).prop_flat_map(|(k, m, extra)| {
        let n = k * m + extra;
        (
            proptest::collection::vec(0.0f64..=1.0, k * (k - 1) / 2),
            proptest::collection::vec(0.0f64..=1.0, k),
            Just((k, m, n)),
        )
            .prop_map(|(upper, internal, (k, m, n))| {
                let mut weights = vec![0.0; k * k];
                let mut it = upper.into_iter();
                for i in 0..k {
                    for j in i + 1..k {
                        let w = it.next().unwrap();
                        weights[i * k + j] = w;
                        weights[j * k + i] = w;
                    }
                }
                ReducedGraph {
                    n,
                    k,
                    m,
                    epsilon: 0.5,
                    d_prime: 0.0,
                    sze_idx: 0.0,
                    membership: (0..n).map(|v| (v < k * m).then_some(v % k)).collect(),
                    weights,
                    internal,
                }
            })
    })
}

fn matrix(n: usize) -> impl Strategy<Value = DensityMatrix> {
    proptest::collection::vec(0.0f64..=1.0, n * (n - 1) / 2).prop_map(move |upper| {
        let mut values = vec![0.0; n * n];
        let mut it = upper.into_iter();
        for i in 0..n {
            for j in i + 1..n {
                let x = it.next().unwrap();
                values[i * n + j] = x;
                values[j * n + i] = x;
            }
        }
        DensityMatrix::new(n, values).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blow_up_is_a_density_matrix(r in reduced_graph()) {
        let d = blow_up(&r).unwrap();
        prop_assert!(DensityMatrix::new(d.n(), d.values().to_vec()).is_ok());
        for (u, cu) in r.membership.iter().enumerate() {
            if cu.is_none() {
                prop_assert!((0..r.n).all(|v| d.get(u, v) == 0.0));
            }
        }
    }

    #[test]
    fn error_behaves_like_a_metric(
        (a, b, c) in (2usize..12).prop_flat_map(|n| (matrix(n), matrix(n), matrix(n))),
        p in prop_oneof![Just(1.0), Just(2.0), 1.0f64..4.0],
    ) {
        let e = |x: &DensityMatrix, y: &DensityMatrix| reconstruction_error(x, y, p, false).unwrap();
        prop_assert_eq!(e(&a, &a), 0.0);
        prop_assert_eq!(e(&a, &b) == 0.0, a == b);
        prop_assert!((e(&a, &b) - e(&b, &a)).abs() <= 1e-12 * (1.0 + e(&a, &b)));
        prop_assert!(e(&a, &c) <= e(&a, &b) + e(&b, &c) + 1e-9);
    }
}
