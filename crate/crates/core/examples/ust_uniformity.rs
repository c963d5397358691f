//! Wilson's algorithm against exhaustive enumeration on small graphs.

use usf_lab::estimators::estimate_same_tree;
use usf_lab::oracle::{exact_pair_correlation, fixtures, wilson_uniformity, SmallGraph, DEFAULT_TREE_BUDGET};
use usf_lab::rng::StreamFamily;

fn main() -> usf_lab::Result<()> {
    let family = StreamFamily::new(3, 0);
    for (i, name) in ["triangle", "k4", "wired_2x3"].iter().enumerate() {
        let g = fixtures::by_name(name).unwrap();
        let u = wilson_uniformity(&g, 50_000, DEFAULT_TREE_BUDGET, &family.child(i as u32))?;
        println!(
            "{name}: {} trees, chi2 = {:.1} on {} dof, p = {:.3}",
            u.tree_count, u.test.statistic, u.test.dof, u.test.p_value
        );
    }

    // A graph read from an edge list: root 0 joined to two opposite corners of a 4-cycle.
    let g = SmallGraph::parse("0 1\n0 3\n1 2\n2 3\n3 4\n4 1\n")?;
    for (x, y) in [(1, 3), (2, 4)] {
        let exact = exact_pair_correlation(&g, x, y, DEFAULT_TREE_BUDGET)?;
        let est = estimate_same_tree(&g, x - 1, y - 1, 100_000, &family.child(10 + x as u32))?;
        println!("P({x} ~ {y}) exact {exact}, sampled {est}");
    }
    Ok(())
}
