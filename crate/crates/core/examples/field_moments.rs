//! Moments of the smeared spin field `X_eps = (h_eps, phi)` under two spin laws.

use usf_lab::estimators::{gaussianity_tests, moment_suite};
use usf_lab::lattice::BoxGeometry;
use usf_lab::rng::StreamFamily;
use usf_lab::spin::{sample_pairings, PairingStencil, SpinLaw, TestFunction};

fn main() -> usf_lab::Result<()> {
    let eps = 0.25;
    let phi = TestFunction::bump(5, 1.0);
    let geom = BoxGeometry::new(5, 8)?;
    let stencil = PairingStencil::new(&geom, &phi, eps)?;
    let laws = [SpinLaw::Rademacher, SpinLaw::UniformScaled];
    let s = sample_pairings(&geom, &stencil, &laws, 10_000, &StreamFamily::new(11, 0))?;
    println!("{} stencil sites, {:.1} components met on average", stencil.sites().len(), s.mean_components);
    for (k, law) in laws.iter().enumerate() {
        let m = moment_suite(&s.point[k])?;
        let g = gaussianity_tests(&s.point[k], m.m2.value)?;
        println!("{}:", law.name());
        println!("  m2 = {}", m.m2);
        println!("  m3 / m2^1.5 = {}", m.skew_ratio);
        println!("  m4 / 3 m2^2 = {}", m.kurtosis_ratio);
        println!("  m6 / 15 m2^3 = {}", m.sixth_ratio);
        println!("  KS p = {:.3}, largest characteristic function gap {:.4}", g.ks_p_value, g.max_ecf_gap);
        let cell = moment_suite(&s.cell[k])?;
        println!("  cell-average weights: m2 = {}", cell.m2);
    }
    Ok(())
}
