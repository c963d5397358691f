//! Probability that four separated sites share one spanning-forest component.

use usf_lab::estimators::multi_point_same_tree;
use usf_lab::lattice::{BoxGeometry, Site};
use usf_lab::rng::StreamFamily;

fn main() -> usf_lab::Result<()> {
    let geom = BoxGeometry::new(5, 16)?;
    let family = StreamFamily::new(17, 0);
    for (i, n) in [1, 2, 4].into_iter().enumerate() {
        let points: Vec<Site> = (0..4).map(|j| Site::on_axis(5, j, n)).collect();
        let m = multi_point_same_tree(&geom, &points, 100_000, &family.child(i as u32))?;
        println!("n = {n}: all four {}   first two {}", m.all, m.first_pair);
    }
    Ok(())
}
