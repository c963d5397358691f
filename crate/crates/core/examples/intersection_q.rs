//! The non-intersection constant `q` and the predicted two-point function `q (G * G)(z)`.

use usf_lab::estimators::estimate_pair_correlation;
use usf_lab::green::{green_convolution, MIN_MESH};
use usf_lab::intersection::{estimate_q, predict_pair_correlation, TripleWalkConfig};
use usf_lab::lattice::{BoxGeometry, Site};
use usf_lab::rng::StreamFamily;

fn main() -> usf_lab::Result<()> {
    let family = StreamFamily::new(9, 0);
    let mut last = None;
    for (i, r) in [10.0, 20.0, 40.0].into_iter().enumerate() {
        let q = estimate_q(&TripleWalkConfig::new(5, r)?, 20_000, &family.child(i as u32))?;
        println!("R = {r:>4}: q = {}   (third walk not erased: {})", q.q, q.q_unerased_third);
        last = Some(q.q);
    }
    let q = last.unwrap();
    let z = Site::on_axis(5, 0, 8);
    let conv = green_convolution(&z, MIN_MESH)?;
    let predicted = predict_pair_correlation(&q, conv.value);
    let direct = estimate_pair_correlation(&BoxGeometry::new(5, 24)?, &z, 50_000, &family.child(100))?;
    println!("z = {z}: predicted {predicted}, direct {direct}");
    Ok(())
}
