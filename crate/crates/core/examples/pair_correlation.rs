//! Two-point function of the wired spanning forest in d = 5 and the plateau `p(0,z)|z|`.

use usf_lab::estimators::{estimate_pair_correlation, rescaled_correlation};
use usf_lab::lattice::{BoxGeometry, Site};
use usf_lab::rng::StreamFamily;

fn main() -> usf_lab::Result<()> {
    let geom = BoxGeometry::new(5, 24)?;
    let family = StreamFamily::new(5, 0);
    println!("{:>16} {:>24} {:>24}", "z", "p(0,z)", "p(0,z)|z|");
    for (i, z) in [
        Site::on_axis(5, 0, 2),
        Site::on_axis(5, 0, 4),
        Site::on_axis(5, 0, 8),
        Site::new(vec![2, 2, 2, 2, 0]),
        Site::on_axis(5, 0, 12),
    ]
    .iter()
    .enumerate()
    {
        let p = estimate_pair_correlation(&geom, z, 20_000, &family.child(i as u32))?;
        println!("{:>16} {:>24} {:>24}", z.to_string(), p.to_string(), rescaled_correlation(z, &p)?.to_string());
    }
    Ok(())
}
