mod common;

use bernloc::sensing::{range_from_rssi, rssi_from_range, sample_measurement, ChannelParams, NoiseModel};
use bernloc::Vec2;

#[test]
fn constant_noise_statistics() {
    let p = ChannelParams::default();
    let mut r = common::rng(99);
    let (v, t) = (Vec2::new(0.0, 0.0), Vec2::new(6.0, 8.0));
    let eps: Vec<f64> = (0..10_000).map(|_| sample_measurement(v, t, 0.0, &p, &mut r).unwrap().range - 10.0).collect();
    let n = eps.len() as f64;
    let mean = eps.iter().sum::<f64>() / n;
    let std = (eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((std - 0.1).abs() < 0.005, "std {std}");
    assert!(mean.abs() < 3.0 * 0.1 / 100.0, "mean {mean}");
}

#[test]
fn distance_scaled_noise_grows_with_range() {
    let p = ChannelParams { noise_model: NoiseModel::DistanceScaled, noise_sigma0: 0.05, ..Default::default() };
    let mut r = common::rng(5);
    let spread = |d: f64, r: &mut rand_chacha::ChaCha8Rng| {
        let xs: Vec<f64> = (0..4000)
            .map(|_| sample_measurement(Vec2::ZERO, Vec2::new(d, 0.0), 0.0, &p, r).unwrap().range - d)
            .collect();
        (xs.iter().map(|e| e * e).sum::<f64>() / xs.len() as f64).sqrt()
    };
    let near = spread(10.0, &mut r);
    let far = spread(20.0, &mut r);
    assert!((near - 0.05).abs() < 0.005);
    assert!((far - 0.2).abs() < 0.02);
}

#[test]
fn same_seed_same_stream() {
    let p = ChannelParams::default();
    let draw = |seed| {
        let mut r = common::rng(seed);
        (0..50).map(|k| sample_measurement(Vec2::ZERO, Vec2::new(3.0, 1.0), k as f64, &p, &mut r).unwrap().range.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(draw(4), draw(4));
    assert_ne!(draw(4), draw(5));
}

#[test]
fn round_trip_over_six_decades() {
    let p = ChannelParams { emission_db: -52.0, path_loss_exp: 2.7, ..Default::default() };
    for k in 0..=60 {
        let r = 10f64.powf(-3.0 + k as f64 / 10.0);
        let back = range_from_rssi(rssi_from_range(r, &p).unwrap(), &p);
        assert!((back - r).abs() <= 1e-12 * r.max(1.0));
    }
}
