mod oracles;

use oracles::{bessel_i_series, bessel_k_integral, rel};
use point_spectra::specfun::{bessel_i, bessel_k, ik_product, BesselOrder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ord(l: u32) -> BesselOrder {
    BesselOrder::new(l).unwrap()
}

#[test]
fn random_points_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let l = rng.random_range(0..=10u32);
        let z = 10f64.powf(rng.random_range(-3.0..50f64.log10()));
        let k = bessel_k(ord(l), z).unwrap();
        let i = bessel_i(ord(l), z).unwrap();
        assert!(rel(k, bessel_k_integral(l, z)) < 1e-10, "K_{l}({z})");
        assert!(rel(i, bessel_i_series(l, z)) < 1e-10, "I_{l}({z})");
    }
}

#[test]
fn wronskian_and_recurrence_grid() {
    for l in 0..=10u32 {
        for k in 0..60 {
            let z = 1e-3 * (5e4f64).powf(k as f64 / 59.0);
            let (il, il1) = (bessel_i(ord(l), z).unwrap(), bessel_i(ord(l + 1), z).unwrap());
            let (kl, kl1) = (bessel_k(ord(l), z).unwrap(), bessel_k(ord(l + 1), z).unwrap());
            let w = il * kl1 + il1 * kl;
            assert!((w - 1.0 / z).abs() <= 1e-11 / z, "l={l} z={z}: {}", w * z - 1.0);
            if l >= 1 {
                let km = bessel_k(ord(l - 1), z).unwrap();
                let rhs = km + 2.0 * l as f64 / z * kl;
                assert!(rel(kl1, rhs) <= 1e-10, "recurrence l={l} z={z}");
            }
        }
    }
}

#[test]
fn ik_product_is_decreasing_with_known_limits() {
    for l in 0..=10u32 {
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let z = 1e-6 * (1e9f64).powf(k as f64 / 199.0);
            let v = ik_product(ord(l), z).unwrap();
            assert!(v < prev, "l={l} z={z}");
            prev = v;
        }
        if l >= 1 {
            let v = ik_product(ord(l), 1e-6).unwrap();
            assert!(rel(v, 0.5 / l as f64) < 1e-6);
        }
    }
    let p = bessel_i_series(0, 1.0) * bessel_k_integral(0, 1.0);
    assert!(rel(ik_product(ord(0), 1.0).unwrap(), p) < 1e-13);
    assert!(ik_product(ord(2), 1.0).unwrap() > ik_product(ord(2), 2.0).unwrap());
}
