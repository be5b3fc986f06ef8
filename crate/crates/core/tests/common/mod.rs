//! Test-side oracles, written independently of the library code paths.
#![allow(dead_code)]

use bernloc::bernstein::BernsteinPoly;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact binomial coefficient through u128 products.
pub fn choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c as f64
}

/// Power-basis coefficients `a_k` of `sum_j c_j C(m,j) s^j (1-s)^(m-j)`.
pub fn to_monomial(c: &[f64]) -> Vec<f64> {
    let m = c.len() - 1;
    (0..=m)
        .map(|k| {
            (0..=k)
                .map(|j| {
                    let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * choose(m, k) * choose(k, j) * c[j]
                })
                .sum()
        })
        .collect()
}

/// Horner evaluation of a scalar Bernstein polynomial through its power form.
pub fn monomial_eval(c: &[f64], t0: f64, tf: f64, t: f64) -> f64 {
    let s = (t - t0) / (tf - t0);
    to_monomial(c).iter().rev().fold(0.0, |acc, a| acc * s + a)
}

/// Gauss-Legendre rule from the eigen-decomposition of the Jacobi matrix.
pub fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub fn gw_integrate<F: Fn(f64) -> f64>(n: usize, a: f64, b: f64, f: F) -> f64 {
    let (x, w) = golub_welsch(n);
    let (h, mid) = (0.5 * (b - a), 0.5 * (a + b));
    x.iter().zip(&w).map(|(xi, wi)| h * wi * f(mid + h * xi)).sum()
}

pub fn trapezoid<F: Fn(f64) -> f64>(n: usize, a: f64, b: f64, f: F) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + h * i as f64)).sum();
    h * (0.5 * f(a) + inner + 0.5 * f(b))
}

/// Random polynomial of degree `<= max_degree` with coefficients in [-1, 1]
/// on a random interval.
pub fn random_poly(r: &mut ChaCha8Rng, dim: usize, max_degree: usize) -> BernsteinPoly {
    let m = r.random_range(1..=max_degree);
    let t0 = r.random_range(-3.0..3.0);
    let tf = t0 + r.random_range(0.5..5.0);
    let coeffs = (0..=m).map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    BernsteinPoly::new(coeffs, t0, tf).unwrap()
}

/// Degree-`m` Bernstein interpolant of a planar curve at Chebyshev points.
pub fn bernstein_interpolant<F: Fn(f64) -> [f64; 2]>(f: F, m: usize, t0: f64, tf: f64) -> BernsteinPoly {
    let n = m + 1;
    let nodes: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * n) as f64).cos())
        .collect();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let s = nodes[i];
        choose(m, j) * s.powi(j as i32) * (1.0 - s).powi((m - j) as i32)
    });
    let lu = a.lu();
    let solve = |k: usize| {
        let rhs = DVector::from_iterator(n, nodes.iter().map(|s| f(t0 + s * (tf - t0))[k]));
        lu.solve(&rhs).expect("collocation matrix is invertible")
    };
    let (xs, ys) = (solve(0), solve(1));
    let coeffs = xs.iter().zip(ys.iter()).map(|(x, y)| vec![*x, *y]).collect();
    BernsteinPoly::new(coeffs, t0, tf).unwrap()
}

/// Fisher information of range readings along `path`, by dense trapezoid sums.
pub fn fim_trapezoid<F: Fn(f64) -> [f64; 2]>(path: F, t0: f64, tf: f64, target: [f64; 2], sigma: f64, n: usize) -> [f64; 3] {
    let unit = |t: f64| {
        let p = path(t);
        let (dx, dy) = (p[0] - target[0], p[1] - target[1]);
        let r2 = dx * dx + dy * dy;
        [dx * dx / r2, dx * dy / r2, dy * dy / r2]
    };
    let s2 = sigma * sigma;
    [0, 1, 2].map(|k| trapezoid(n, t0, tf, |t| unit(t)[k]) / s2)
}
