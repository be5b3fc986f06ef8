mod common;

use bernloc::bernstein::{integral_weight, squared_norms, BernsteinPoly, DiffMatrix};
use common::*;
use proptest::prelude::*;

fn sample_points(p: &BernsteinPoly, n: usize) -> Vec<f64> {
    (0..=n).map(|i| p.t0() + p.duration() * i as f64 / n as f64).collect()
}

#[test]
fn evaluation_matches_power_form() {
    let mut r = rng(11);
    for _ in 0..60 {
        let p = random_poly(&mut r, 1, 8);
        let c = p.flat_coeffs();
        for t in sample_points(&p, 40) {
            let got = p.eval_scalar(t).unwrap();
            assert!((got - monomial_eval(c, p.t0(), p.tf(), t)).abs() < 1e-10);
        }
    }
}

#[test]
fn derivative_matches_five_point_stencil() {
    let mut r = rng(12);
    for _ in 0..60 {
        let p = random_poly(&mut r, 1, 8);
        let d = p.derivative();
        let h = 1e-3 * p.duration();
        let scale = p.degree() as f64 / p.duration();
        let f = |t: f64| monomial_eval(p.flat_coeffs(), p.t0(), p.tf(), t);
        for t in sample_points(&p, 20) {
            let fd = (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h);
            let got = d.eval_scalar(t).unwrap();
            assert!((got - fd).abs() <= 1e-6 * got.abs().max(scale), "{got} vs {fd}");
        }
    }
}

#[test]
fn derivative_keeps_degree_and_matrix_agrees() {
    let mut r = rng(13);
    for _ in 0..20 {
        let p = random_poly(&mut r, 2, 8);
        let d = p.derivative();
        assert_eq!(d.degree(), p.degree());
        let dm = DiffMatrix::new(p.degree(), p.t0(), p.tf()).unwrap();
        let via = dm.apply(&p).unwrap();
        for (a, b) in d.flat_coeffs().iter().zip(via.flat_coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
        for i in 0..=p.degree() {
            let row: f64 = (0..=p.degree()).map(|j| dm.entry(i, j)).sum();
            assert!(row.abs() < 1e-9);
        }
    }
}

#[test]
fn integral_matches_gauss_legendre_oracle() {
    let mut r = rng(14);
    for _ in 0..60 {
        let p = random_poly(&mut r, 1, 8);
        let oracle = gw_integrate(64, p.t0(), p.tf(), |t| monomial_eval(p.flat_coeffs(), p.t0(), p.tf(), t));
        assert!((p.integrate()[0] - oracle).abs() < 1e-9);
    }
}

#[test]
fn product_matches_pointwise_product() {
    let mut r = rng(15);
    for _ in 0..60 {
        let a = random_poly(&mut r, 1, 8);
        let b = BernsteinPoly::scalar(
            random_poly(&mut r, 1, 8).flat_coeffs().to_vec(),
            a.t0(),
            a.tf(),
        )
        .unwrap();
        let ab = a.product(&b).unwrap();
        assert_eq!(ab.degree(), a.degree() + b.degree());
        for t in sample_points(&a, 30) {
            let want = a.eval_scalar(t).unwrap() * b.eval_scalar(t).unwrap();
            assert!((ab.eval_scalar(t).unwrap() - want).abs() < 1e-10);
        }
    }
}

#[test]
fn unit_coefficient_integrates_to_weight() {
    for m in 1..=20 {
        for (t0, tf) in [(0.0, 1.0), (0.0, 7.0), (-2.5, 3.25)] {
            let w = integral_weight(m, t0, tf);
            assert_eq!(w, (tf - t0) / (m + 1) as f64);
            for j in [0, m / 2, m] {
                let mut c = vec![0.0; m + 1];
                c[j] = 1.0;
                let p = BernsteinPoly::scalar(c, t0, tf).unwrap();
                assert!((p.integrate()[0] - w).abs() < 1e-15 * (tf - t0));
            }
        }
    }
}

#[test]
fn squared_norms_match_sampling() {
    let mut r = rng(16);
    for _ in 0..20 {
        let p = random_poly(&mut r, 2, 7);
        let q = [0.3, -0.7];
        let n = squared_norms(&p, Some(&q)).unwrap();
        let dp = p.derivative();
        let ddp = dp.derivative();
        for t in sample_points(&p, 15) {
            let v = dp.eval(t).unwrap();
            let a = ddp.eval(t).unwrap();
            let x = p.eval(t).unwrap();
            assert!((n.velocity.eval_scalar(t).unwrap() - (v[0] * v[0] + v[1] * v[1])).abs() < 1e-9);
            assert!((n.acceleration.eval_scalar(t).unwrap() - (a[0] * a[0] + a[1] * a[1])).abs() < 1e-8);
            let d = n.distance.as_ref().unwrap().eval_scalar(t).unwrap();
            assert!((d - ((x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2))).abs() < 1e-10);
        }
    }
}

#[test]
fn elevation_and_restriction_preserve_the_curve() {
    let mut r = rng(17);
    for _ in 0..20 {
        let p = random_poly(&mut r, 2, 8);
        let e = p.degree_elevate(3).unwrap();
        let (a, b) = (p.t0() + 0.2 * p.duration(), p.t0() + 0.7 * p.duration());
        let s = p.restrict(a, b).unwrap();
        for t in sample_points(&s, 10) {
            let want = p.eval(t).unwrap();
            for (got, w) in [e.eval(t).unwrap(), s.eval(t).unwrap()].iter().flat_map(|g| g.iter().zip(&want)) {
                assert!((got - w).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn invalid_inputs() {
    assert!(BernsteinPoly::scalar(vec![], 0.0, 1.0).is_err());
    assert!(BernsteinPoly::scalar(vec![1.0], 1.0, 1.0).is_err());
    assert!(BernsteinPoly::scalar(vec![f64::NAN, 1.0], 0.0, 1.0).is_err());
    let p = BernsteinPoly::scalar(vec![0.0, 1.0], 0.0, 1.0).unwrap();
    assert!(p.eval_scalar(1.5).is_err());
    let q = BernsteinPoly::scalar(vec![0.0, 1.0], 0.0, 2.0).unwrap();
    assert!(p.add(&q).is_err());
}

proptest! {
    #[test]
    fn values_stay_inside_coefficient_hull(c in prop::collection::vec(-5.0f64..5.0, 1..10), s in 0.0f64..=1.0) {
        let p = BernsteinPoly::scalar(c.clone(), 0.0, 2.0).unwrap();
        let v = p.eval_scalar(2.0 * s).unwrap();
        let (lo, hi) = p.coeff_bounds().unwrap();
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn endpoints_interpolate(c in prop::collection::vec(-5.0f64..5.0, 2..10)) {
        let p = BernsteinPoly::scalar(c.clone(), -1.0, 3.0).unwrap();
        prop_assert!((p.eval_scalar(-1.0).unwrap() - c[0]).abs() < 1e-12);
        prop_assert!((p.eval_scalar(3.0).unwrap() - c[c.len() - 1]).abs() < 1e-12);
    }

    #[test]
    fn sum_is_linear(a in prop::collection::vec(-5.0f64..5.0, 2..8), b in prop::collection::vec(-5.0f64..5.0, 2..8), s in 0.0f64..=1.0) {
        let pa = BernsteinPoly::scalar(a, 0.0, 1.0).unwrap();
        let pb = BernsteinPoly::scalar(b, 0.0, 1.0).unwrap();
        let sum = pa.add(&pb).unwrap();
        let want = pa.eval_scalar(s).unwrap() + pb.eval_scalar(s).unwrap();
        prop_assert!((sum.eval_scalar(s).unwrap() - want).abs() < 1e-10);
    }
}
