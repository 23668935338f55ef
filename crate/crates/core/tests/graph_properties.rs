mod common;

use common::{graph_params, random_classes, random_graph};
use proptest::prelude::*;
use regsum::graph::{bipartite_degrees, edge_density, load_edge_list, save_edge_list};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_is_symmetric_and_bounded((n, p, seed) in graph_params(), weighted in any::<bool>()) {
        let g = random_graph(n, p, weighted, seed);
        let m = n / 2;
        let (classes, _) = random_classes(n, 2, m, seed);
        let d = edge_density(&g, &classes[0], &classes[1]).unwrap();
        prop_assert_eq!(d, edge_density(&g, &classes[1], &classes[0]).unwrap());
        prop_assert!((0.0..=1.0).contains(&d));
        let deg = bipartite_degrees(&g, &classes[0], &classes[1]).unwrap();
        prop_assert!((deg.average - d * m as f64).abs() < 1e-9);
    }

    #[test]
    fn save_load_save_is_stable((n, p, seed) in graph_params(), weighted in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let (first, second) = (dir.path().join("a.el"), dir.path().join("b.el"));
        let g = random_graph(n, p, weighted, seed);
        save_edge_list(&g, &first).unwrap();
        let (loaded, _) = load_edge_list(&first, None).unwrap();
        prop_assert_eq!(loaded.n(), n);
        save_edge_list(&loaded, &second).unwrap();
        prop_assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    }
}
