//! Variance of `X_eps` divided by the whole-space integral, next to the two-point plateau.

use usf_lab::bilap::whole_space_variance;
use usf_lab::estimators::{estimate_pair_correlation, rescaled_correlation, MomentAccumulator};
use usf_lab::lattice::{BoxGeometry, Site};
use usf_lab::rng::StreamFamily;
use usf_lab::spin::{sample_pairings, PairingStencil, SpinLaw, TestFunction};

fn main() -> usf_lab::Result<()> {
    let phi = TestFunction::bump(5, 1.0);
    let w = whole_space_variance(&phi, 16)?.value;
    let family = StreamFamily::new(19, 0);
    for (i, eps) in [0.5, 0.25].into_iter().enumerate() {
        let geom = BoxGeometry::new(5, (2.0 / eps) as i32)?;
        let stencil = PairingStencil::new(&geom, &phi, eps)?;
        let s = sample_pairings(&geom, &stencil, &[SpinLaw::Rademacher], 4_000, &family.child(i as u32))?;
        let mut sq = MomentAccumulator::new();
        for x in &s.point[0] {
            sq.push(x * x);
        }
        println!("eps = {eps}: Var X_eps / W = {}", sq.mean_estimate().scaled(1.0 / w));
    }
    let z = Site::on_axis(5, 0, 8);
    let p = estimate_pair_correlation(&BoxGeometry::new(5, 24)?, &z, 50_000, &family.child(99))?;
    println!("plateau p(0,z)|z| at z = {z}: {}", rescaled_correlation(&z, &p)?);
    Ok(())
}
