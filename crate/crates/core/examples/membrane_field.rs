//! The discrete bi-Laplacian field on a torus: sampling, exact variances and the whole-space limit.

use usf_lab::bilap::{
    exact_covariance, exact_pairing_variance, membrane_kernel_constant, whole_space_variance, BilapSampler,
    TorusTestVector,
};
use usf_lab::estimators::MomentAccumulator;
use usf_lab::lattice::TorusGeometry;
use usf_lab::rng::StreamFamily;
use usf_lab::spin::TestFunction;

fn main() -> usf_lab::Result<()> {
    let geom = TorusGeometry::spectral(5, 16)?;
    let phi = TestFunction::truncated_gaussian(5, 1.0);
    let eps = 0.25;
    let tv = TorusTestVector::new(&geom, &phi, eps)?;
    let mut sampler = BilapSampler::new(&geom)?;
    let family = StreamFamily::new(13, 0);
    let mut var = MomentAccumulator::new();
    let mut cov = vec![MomentAccumulator::new(); 5];
    for i in 0..100 {
        let (a, b) = sampler.sample_pair(&mut family.rng(i));
        for f in [a, b] {
            var.push(f.pair(&tv)?.powi(2));
            for (acc, c) in cov.iter_mut().zip(f.axis_covariance(4)) {
                acc.push(c);
            }
        }
    }
    println!("Var (h, phi_N): sampled {}, spectral {:.6}", var.mean_estimate(), exact_pairing_variance(&phi, 16, eps)?);
    for (r, acc) in cov.iter().enumerate() {
        let exact = exact_covariance(&geom, &[r as i64, 0, 0, 0, 0])?;
        println!("lag {r}: covariance {} exact {exact:.6}", acc.mean_estimate());
    }

    let w = whole_space_variance(&phi, 16)?;
    println!("\nwhole-space integral {:.6} (mesh {}, last change {:.1e})", w.value, w.mesh, w.change);
    for side in [32, 64, 128, 256] {
        let t = exact_pairing_variance(&phi, side, eps)? * eps.powi(9);
        println!("N = {side:>3}: eps^9 Var / (Gamma_5 W) = {:.4}", t / (membrane_kernel_constant(5) * w.value));
    }
    Ok(())
}
