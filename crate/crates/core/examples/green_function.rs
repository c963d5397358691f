//! Lattice Green's function in d = 5: Fourier quadrature against walk counts,
//! and the self-convolution that enters the two-point prediction.

use usf_lab::green::{green_convolution, green_quadrature, MIN_MESH};
use usf_lab::lattice::Site;
use usf_lab::rng::StreamFamily;
use usf_lab::walk::green_mc_many;

fn main() -> usf_lab::Result<()> {
    let targets: Vec<Site> = [0, 1, 2, 3].iter().map(|&r| Site::on_axis(5, 0, r)).collect();
    let mc = green_mc_many(&targets, 20_000, 100_000, false, &StreamFamily::new(7, 0))?;
    println!("{:>14} {:>12} {:>22}", "x", "quadrature", "walk estimate");
    for (x, e) in targets.iter().zip(&mc.estimates) {
        let q = green_quadrature(x, MIN_MESH)?;
        println!("{:>14} {:>12.6} {:>22}", x.to_string(), q.value, e.visits.to_string());
    }
    println!("G(0,0) from the return frequency: {}", mc.origin_from_returns());

    println!("\n{:>4} {:>12} {:>12} {:>14}", "r", "G(0,r e1)", "r^3 G", "r * conv");
    for r in [5, 10, 20, 40] {
        let x = Site::on_axis(5, 0, r);
        let g = green_quadrature(&x, MIN_MESH)?;
        let c = green_convolution(&x, MIN_MESH)?;
        let rf = r as f64;
        println!("{r:>4} {:>12.4e} {:>12.6} {:>14.6}", g.value, g.value * rf.powi(3), c.value * rf);
    }
    Ok(())
}
