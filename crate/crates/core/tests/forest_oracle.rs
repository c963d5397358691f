use proptest::prelude::*;
use usf_lab::estimators::{estimate_same_tree, multi_point_same_tree_graph};
use usf_lab::forest::{components_minus_root, wilson, wilson_wired_box};
use usf_lab::lattice::BoxGeometry;
use usf_lab::oracle::{exact_pair_correlation, exact_same_tree, fixtures, wilson_uniformity, SmallGraph};
use usf_lab::rng::{RngStream, StreamFamily};

const BUDGET: u64 = 10_000;

#[test]
fn wilson_is_uniform_on_fixtures() {
    let family = StreamFamily::new(31, 0);
    for (i, name) in ["triangle", "four_cycle", "k4", "wired_2x3"].iter().enumerate() {
        let g = fixtures::by_name(name).unwrap();
        let u = wilson_uniformity(&g, 30_000, BUDGET, &family.child(i as u32)).unwrap();
        assert!(u.test.p_value > 1e-3, "{name}: p = {}", u.test.p_value);
        assert_eq!(u.counts.iter().sum::<u64>(), 30_000);
    }
}

#[test]
fn sampled_pairs_match_enumeration() {
    let g = fixtures::wired_2x3();
    let family = StreamFamily::new(32, 0);
    for (k, (x, y)) in [(1, 2), (1, 6), (3, 4)].into_iter().enumerate() {
        let exact = exact_pair_correlation(&g, x, y, BUDGET).unwrap();
        let exact = *exact.numer() as f64 / *exact.denom() as f64;
        let est = estimate_same_tree(&g, x - 1, y - 1, 40_000, &family.child(k as u32)).unwrap();
        assert!(est.agrees_with_exact(exact, 4.0), "({x},{y}): {est} vs {exact}");
    }
}

#[test]
fn three_point_probability_matches_enumeration() {
    let g = SmallGraph::wired_grid(&[2, 3]).unwrap();
    let exact = exact_same_tree(&g, &[1, 3, 5], BUDGET).unwrap();
    let exact = *exact.numer() as f64 / *exact.denom() as f64;
    let est = multi_point_same_tree_graph(&g, &[0, 2, 4], 40_000, &StreamFamily::new(33, 0)).unwrap();
    assert!(est.all.agrees_with_exact(exact, 4.0), "{} vs {exact}", est.all);
}

#[test]
fn separated_vertices_never_share_a_tree() {
    let g = fixtures::separated_pair();
    let exact = exact_pair_correlation(&g, 1, 2, BUDGET).unwrap();
    assert_eq!(*exact.numer(), 0);
    let est = estimate_same_tree(&g, 0, 1, 2_000, &StreamFamily::new(34, 0)).unwrap();
    assert_eq!(est.value, 0.0);
}

#[test]
fn edge_list_round_trip() {
    let g = fixtures::wired_2x3();
    let back = SmallGraph::parse(&g.to_edge_list()).unwrap();
    assert_eq!(back.edges(), g.edges());
    assert!(!SmallGraph::parse("0 1\n2 3\n").map(|g| g.is_connected()).unwrap_or(false));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wired_box_forests_are_valid(seed in any::<u64>(), dim in 2usize..=5, half in 1i32..=3) {
        let geom = BoxGeometry::new(dim, half).unwrap();
        let mut rng = RngStream::new(seed, 0).rng();
        let forest = wilson_wired_box(&geom, None, &mut rng).unwrap();
        forest.validate(&geom).unwrap();
        prop_assert_eq!(forest.len() as u64, geom.site_count());
        let labels = components_minus_root(&forest);
        prop_assert_eq!(labels.len() as u64, geom.site_count());
        prop_assert!(labels.count() >= 1);
        // Sites joined by a non-root edge share a component.
        for v in 0..forest.len() {
            if let Some(p) = forest.parent(v) {
                prop_assert_eq!(labels.label_of(v as u64), labels.label_of(p as u64));
            }
        }
    }

    #[test]
    fn ordering_does_not_change_validity(seed in any::<u64>(), rot in 0usize..6) {
        let g = fixtures::wired_2x3();
        let mut order: Vec<usize> = (0..g.vertices() - 1).collect();
        order.rotate_left(rot);
        let f = wilson(&g, &order, &mut RngStream::new(seed, 1).rng()).unwrap();
        f.validate(&g).unwrap();
        prop_assert_eq!(g.tree_edges(&f).len(), g.vertices() - 1);
    }
}
