use proptest::prelude::*;
use usf_lab::bilap::{exact_covariance, exact_pairing_variance, sample_bilap_torus, TorusField};
use usf_lab::lattice::TorusGeometry;
use usf_lab::rng::RngStream;
use usf_lab::spin::TestFunction;

#[test]
fn double_laplacian_of_covariance_is_a_centred_delta() {
    // Delta^2 C = delta_0 - 1/N^d on the torus.
    let geom = TorusGeometry::spectral(3, 8).unwrap();
    let c = |x: &[i64]| exact_covariance(&geom, x).unwrap();
    let lap = |f: &dyn Fn(&[i64]) -> f64, x: &[i64]| {
        let mut s = -6.0 * f(x);
        for j in 0..3 {
            for d in [-1, 1] {
                let mut y = x.to_vec();
                y[j] += d;
                s += f(&y);
            }
        }
        s
    };
    let lc = |x: &[i64]| lap(&c, x);
    for x in [[0i64, 0, 0], [1, 0, 0], [2, 1, 0], [4, 4, 4]] {
        let expected = if x == [0, 0, 0] { 1.0 } else { 0.0 } - 1.0 / 512.0;
        assert!((lap(&lc, &x) - expected).abs() < 1e-9, "{x:?}");
    }
}

#[test]
fn sampled_field_has_zero_mean_and_round_trips() {
    let mut rng = RngStream::new(51, 0).rng();
    let f = sample_bilap_torus(8, 3, &mut rng).unwrap();
    assert!(f.mean().abs() < 1e-10);
    let mut buf = Vec::new();
    f.write_binary(&mut buf, 51).unwrap();
    let (g, seed) = TorusField::read_binary(buf.as_slice()).unwrap();
    assert_eq!(seed, 51);
    assert_eq!(f.values(), g.values());
    assert!(TorusField::read_binary(&buf[..20]).is_err());
}

#[test]
fn pairing_variance_grows_with_the_torus() {
    let phi = TestFunction::truncated_gaussian(5, 1.0);
    let a = exact_pairing_variance(&phi, 16, 0.25).unwrap();
    let b = exact_pairing_variance(&phi, 32, 0.25).unwrap();
    assert!(b > a && b < 2.0 * a, "{a} {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn covariance_has_lattice_symmetries(x in proptest::collection::vec(-6i64..6, 4), perm in 0usize..4) {
        let geom = TorusGeometry::spectral(4, 8).unwrap();
        let c = exact_covariance(&geom, &x).unwrap();
        let mut y: Vec<i64> = x.iter().map(|v| -v).collect();
        y.rotate_left(perm);
        prop_assert!((exact_covariance(&geom, &y).unwrap() - c).abs() < 1e-12);
        let mut z = x.clone();
        z[0] += 8;
        prop_assert!((exact_covariance(&geom, &z).unwrap() - c).abs() < 1e-12);
        prop_assert!(c <= exact_covariance(&geom, &[0, 0, 0, 0]).unwrap() + 1e-12);
    }
}
