//! Vector-valued polynomials in Bernstein form on a finite interval.
//!
//! A [`BernsteinPoly`] of degree `m` over `[t0, tf]` is
//! `p(t) = sum_j c_j * b_{j,m}(t)` with
//! `b_{j,m}(t) = C(m,j) (t - t0)^j (tf - t)^(m-j) / (tf - t0)^m`.
//! Every coefficient `c_j` is a `d`-dimensional real vector; scalar
//! polynomials are the `d = 1` case.
//!
//! All operations are exact in the sense of polynomial algebra: sums,
//! products, derivatives, integrals and degree elevation return new
//! coefficient sets rather than sampled approximations.

use crate::error::{domain, Result};

/// Largest degree accepted by the binomial-based operations.
///
/// `C(1000, 500)` is about `2.7e299`, the last comfortable range for `f64`.
pub const MAX_DEGREE: usize = 1000;

/// `C(m, j)` by the multiplicative recurrence, in floating point.
pub fn binomial(m: usize, j: usize) -> Result<f64> {
    if m > MAX_DEGREE {
        return Err(domain(format!("degree {m} exceeds the supported maximum {MAX_DEGREE}")));
    }
    if j > m {
        return Err(domain(format!("binomial index {j} exceeds degree {m}")));
    }
    let k = j.min(m - j);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (m - i) as f64 / (i + 1) as f64;
    }
    Ok(c.round())
}

fn check_interval(t0: f64, tf: f64) -> Result<()> {
    if !(t0.is_finite() && tf.is_finite() && tf > t0) {
        return Err(domain(format!("invalid interval [{t0}, {tf}]")));
    }
    Ok(())
}

/// Map `t` onto `[0, 1]`, tolerating round-off at the interval ends.
fn normalize(t: f64, t0: f64, tf: f64) -> Result<f64> {
    let span = tf - t0;
    let slack = 1e-12 * span.max(t0.abs()).max(tf.abs()).max(1.0);
    if !t.is_finite() || t < t0 - slack || t > tf + slack {
        return Err(domain(format!("t = {t} outside [{t0}, {tf}]")));
    }
    Ok(((t - t0) / span).clamp(0.0, 1.0))
}

/// Single Bernstein basis function `b_{j,m}(t)` on `[t0, tf]`.
pub fn basis(j: usize, m: usize, t: f64, t0: f64, tf: f64) -> Result<f64> {
    check_interval(t0, tf)?;
    if j > m {
        return Err(domain(format!("basis index {j} exceeds degree {m}")));
    }
    let u = normalize(t, t0, tf)?;
    let c = binomial(m, j)?;
    Ok(c * u.powi(j as i32) * (1.0 - u).powi((m - j) as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinPoly {
    /// Row-major `(m + 1) x dim` coefficient storage.
    coeffs: Vec<f64>,
    dim: usize,
    t0: f64,
    tf: f64,
}

impl BernsteinPoly {
    /// Builds a polynomial from a list of coefficient vectors.
    pub fn new(coeffs: Vec<Vec<f64>>, t0: f64, tf: f64) -> Result<Self> {
        let dim = coeffs.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(domain("polynomial needs at least one coefficient of dimension >= 1"));
        }
        if coeffs.iter().any(|c| c.len() != dim) {
            return Err(domain("coefficient vectors must share one dimension"));
        }
        Self::from_flat(coeffs.concat(), dim, t0, tf)
    }

    pub fn from_flat(coeffs: Vec<f64>, dim: usize, t0: f64, tf: f64) -> Result<Self> {
        check_interval(t0, tf)?;
        if dim == 0 || coeffs.is_empty() || !coeffs.len().is_multiple_of(dim) {
            return Err(domain(format!(
                "{} values cannot be split into coefficients of dimension {dim}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(domain("coefficients must be finite"));
        }
        if coeffs.len() / dim - 1 > MAX_DEGREE {
            return Err(domain(format!("degree exceeds the supported maximum {MAX_DEGREE}")));
        }
        Ok(Self { coeffs, dim, t0, tf })
    }

    pub fn scalar(coeffs: Vec<f64>, t0: f64, tf: f64) -> Result<Self> {
        Self::from_flat(coeffs, 1, t0, tf)
    }

    /// Degree-`m` representation of the constant `value`.
    pub fn constant(value: &[f64], m: usize, t0: f64, tf: f64) -> Result<Self> {
        let coeffs = value.repeat(m + 1);
        Self::from_flat(coeffs, value.len(), t0, tf)
    }

    pub fn zero(dim: usize, m: usize, t0: f64, tf: f64) -> Result<Self> {
        Self::from_flat(vec![0.0; dim * (m + 1)], dim, t0, tf)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() / self.dim - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn duration(&self) -> f64 {
        self.tf - self.t0
    }

    pub fn coeff(&self, j: usize) -> &[f64] {
        &self.coeffs[j * self.dim..(j + 1) * self.dim]
    }

    pub fn coeffs(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.coeffs.chunks_exact(self.dim)
    }

    pub fn flat_coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Component `k` of a vector polynomial as a scalar polynomial.
    pub fn component(&self, k: usize) -> Result<Self> {
        if k >= self.dim {
            return Err(domain(format!("component {k} of a {}-dimensional polynomial", self.dim)));
        }
        let coeffs = self.coeffs().map(|c| c[k]).collect();
        Self::scalar(coeffs, self.t0, self.tf)
    }

    /// Evaluates by the de Casteljau convex-combination recursion.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let u = normalize(t, self.t0, self.tf)?;
        Ok(self.eval_normalized(u))
    }

    /// Scalar shortcut for `eval(t)[0]`.
    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        if self.dim != 1 {
            return Err(domain("eval_scalar on a vector-valued polynomial"));
        }
        Ok(self.eval(t)?[0])
    }

    fn eval_normalized(&self, u: f64) -> Vec<f64> {
        let mut work = self.coeffs.clone();
        let dim = self.dim;
        let v = 1.0 - u;
        for level in (1..=self.degree()).rev() {
            for j in 0..level {
                for k in 0..dim {
                    work[j * dim + k] = v * work[j * dim + k] + u * work[(j + 1) * dim + k];
                }
            }
        }
        work.truncate(dim);
        work
    }

    /// Restricts the polynomial to `[a, b]`, returning the same curve
    /// reparameterized over the sub-interval.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        let ua = normalize(a, self.t0, self.tf)?;
        let ub = normalize(b, self.t0, self.tf)?;
        // Right piece after splitting at a, then left piece of that at b.
        let right = split(&self.coeffs, self.dim, ua).1;
        let ub_local = if ua < 1.0 { ((ub - ua) / (1.0 - ua)).clamp(0.0, 1.0) } else { 1.0 };
        let left = split(&right, self.dim, ub_local).0;
        Self::from_flat(left, self.dim, a, b)
    }

    /// Same coefficients on a new interval.
    pub fn with_interval(&self, t0: f64, tf: f64) -> Result<Self> {
        Self::from_flat(self.coeffs.clone(), self.dim, t0, tf)
    }

    /// Derivative represented at the same degree `m` (zero polynomial for `m = 0`).
    pub fn derivative(&self) -> Self {
        let m = self.degree();
        if m == 0 {
            return Self { coeffs: vec![0.0; self.coeffs.len()], ..self.clone() };
        }
        let dim = self.dim;
        let scale = m as f64 / self.duration();
        // Hodograph of degree m - 1.
        let hodo: Vec<f64> = (0..m)
            .flat_map(|i| (0..dim).map(move |k| (i, k)))
            .map(|(i, k)| scale * (self.coeffs[(i + 1) * dim + k] - self.coeffs[i * dim + k]))
            .collect();
        Self { coeffs: elevate_once(&hodo, dim), ..self.clone() }
    }

    /// Definite integral over `[t0, tf]`: `w * sum_j c_j` with `w = (tf - t0)/(m + 1)`.
    pub fn integrate(&self) -> Vec<f64> {
        let w = integral_weight(self.degree(), self.t0, self.tf);
        let mut out = vec![0.0; self.dim];
        for c in self.coeffs() {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o *= w);
        out
    }

    /// Degree elevation by `r` levels; the curve is unchanged.
    pub fn degree_elevate(&self, r: usize) -> Result<Self> {
        if self.degree() + r > MAX_DEGREE {
            return Err(domain(format!("elevated degree exceeds {MAX_DEGREE}")));
        }
        let mut coeffs = self.coeffs.clone();
        for _ in 0..r {
            coeffs = elevate_once(&coeffs, self.dim);
        }
        Ok(Self { coeffs, ..self.clone() })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| a * c).collect(), ..self.clone() }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Pointwise sum; the lower-degree operand is elevated first.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        self.check_compatible(other)?;
        if self.dim != other.dim {
            return Err(domain(format!("dimension mismatch {} vs {}", self.dim, other.dim)));
        }
        let (a, b) = match self.degree().cmp(&other.degree()) {
            std::cmp::Ordering::Less => (self.degree_elevate(other.degree() - self.degree())?, other.clone()),
            std::cmp::Ordering::Greater => (self.clone(), other.degree_elevate(self.degree() - other.degree())?),
            std::cmp::Ordering::Equal => (self.clone(), other.clone()),
        };
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + sign * y).collect();
        Ok(Self { coeffs, ..a })
    }

    /// Pointwise product of degree `m + n`.
    ///
    /// Equal dimensions multiply componentwise; a scalar operand broadcasts
    /// over the components of the other.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let dim = match (self.dim, other.dim) {
            (a, b) if a == b => a,
            (1, b) => b,
            (a, 1) => a,
            (a, b) => return Err(domain(format!("cannot multiply dimensions {a} and {b}"))),
        };
        let (m, n) = (self.degree(), other.degree());
        let weights = product_weights(m, n)?;
        let mut coeffs = vec![0.0; (m + n + 1) * dim];
        for (j, row) in weights.iter().enumerate() {
            let f = self.coeff(j);
            for (i, w) in row.iter().enumerate() {
                let g = other.coeff(i);
                let out = &mut coeffs[(j + i) * dim..(j + i + 1) * dim];
                for (k, o) in out.iter_mut().enumerate() {
                    let fk = if self.dim == 1 { f[0] } else { f[k] };
                    let gk = if other.dim == 1 { g[0] } else { g[k] };
                    *o += w * fk * gk;
                }
            }
        }
        Self::from_flat(coeffs, dim, self.t0, self.tf)
    }

    /// Scalar polynomial `<self, other>` (componentwise product summed).
    pub fn dot(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(domain(format!("dot of dimensions {} and {}", self.dim, other.dim)));
        }
        let prod = self.product(other)?;
        let coeffs = prod.coeffs().map(|c| c.iter().sum()).collect();
        Self::scalar(coeffs, self.t0, self.tf)
    }

    /// `||self||^2` as a scalar polynomial of twice the degree.
    pub fn squared_norm(&self) -> Result<Self> {
        self.dot(self)
    }

    /// `(min_j c_j, max_j c_j)` for a scalar polynomial; encloses its range.
    pub fn coeff_bounds(&self) -> Result<(f64, f64)> {
        if self.dim != 1 {
            return Err(domain("coefficient bounds need a scalar polynomial"));
        }
        Ok(self
            .coeffs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c))))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.t0 != other.t0 || self.tf != other.tf {
            return Err(domain(format!(
                "interval mismatch [{}, {}] vs [{}, {}]",
                self.t0, self.tf, other.t0, other.tf
            )));
        }
        Ok(())
    }
}

/// Weight `w = (tf - t0) / (m + 1)` of the coefficient-sum integral.
pub fn integral_weight(m: usize, t0: f64, tf: f64) -> f64 {
    (tf - t0) / (m as f64 + 1.0)
}

/// Squared norms built from a trajectory polynomial: speed, acceleration
/// and (optionally) distance to a fixed point, each of degree `2m`.
#[derive(Debug, Clone)]
pub struct SquaredNorms {
    pub velocity: BernsteinPoly,
    pub acceleration: BernsteinPoly,
    pub distance: Option<BernsteinPoly>,
}

pub fn squared_norms(p: &BernsteinPoly, point: Option<&[f64]>) -> Result<SquaredNorms> {
    let vel = p.derivative();
    let acc = vel.derivative();
    let distance = point.map(|q| distance_squared(p, q)).transpose()?;
    Ok(SquaredNorms { velocity: vel.squared_norm()?, acceleration: acc.squared_norm()?, distance })
}

/// `||p(t) - point||^2` as a scalar polynomial of degree `2m`.
pub fn distance_squared(p: &BernsteinPoly, point: &[f64]) -> Result<BernsteinPoly> {
    if point.len() != p.dim() {
        return Err(domain(format!("point of dimension {} vs polynomial of {}", point.len(), p.dim())));
    }
    let shift = BernsteinPoly::constant(point, p.degree(), p.t0(), p.tf())?;
    p.sub(&shift)?.squared_norm()
}

/// Square matrix mapping degree-`m` coefficients to the same-degree
/// coefficients of the derivative.
///
/// Stored so that `derivative_coeffs[i] = sum_j entries[i][j] * coeffs[j]`;
/// each row sums to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMatrix {
    entries: Vec<f64>,
    size: usize,
    t0: f64,
    tf: f64,
}

impl DiffMatrix {
    pub fn new(m: usize, t0: f64, tf: f64) -> Result<Self> {
        check_interval(t0, tf)?;
        if m > MAX_DEGREE {
            return Err(domain(format!("degree {m} exceeds {MAX_DEGREE}")));
        }
        let size = m + 1;
        let mut entries = vec![0.0; size * size];
        if m > 0 {
            let scale = m as f64 / (tf - t0);
            let mf = m as f64;
            // Elevated hodograph: d_i = (i/m) h_{i-1} + (1 - i/m) h_i,
            // h_i = scale * (c_{i+1} - c_i).
            for i in 0..size {
                let a = i as f64 / mf;
                if i >= 1 {
                    entries[i * size + i] += a * scale;
                    entries[i * size + i - 1] -= a * scale;
                }
                if i < m {
                    entries[i * size + i + 1] += (1.0 - a) * scale;
                    entries[i * size + i] -= (1.0 - a) * scale;
                }
            }
        }
        Ok(Self { entries, size, t0, tf })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.tf)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn apply(&self, p: &BernsteinPoly) -> Result<BernsteinPoly> {
        if p.degree() + 1 != self.size || p.t0() != self.t0 || p.tf() != self.tf {
            return Err(domain("differentiation matrix does not match the polynomial"));
        }
        let dim = p.dim();
        let mut out = vec![0.0; self.size * dim];
        for i in 0..self.size {
            for j in 0..self.size {
                let e = self.entry(i, j);
                if e != 0.0 {
                    for k in 0..dim {
                        out[i * dim + k] += e * p.coeff(j)[k];
                    }
                }
            }
        }
        BernsteinPoly::from_flat(out, dim, self.t0, self.tf)
    }
}

fn elevate_once(coeffs: &[f64], dim: usize) -> Vec<f64> {
    let n = coeffs.len() / dim - 1;
    let nf = (n + 1) as f64;
    let mut out = vec![0.0; (n + 2) * dim];
    for i in 0..=n + 1 {
        let a = i as f64 / nf;
        for k in 0..dim {
            let prev = if i >= 1 { coeffs[(i - 1) * dim + k] } else { 0.0 };
            let cur = if i <= n { coeffs[i * dim + k] } else { 0.0 };
            out[i * dim + k] = a * prev + (1.0 - a) * cur;
        }
    }
    out
}

/// de Casteljau split at normalized parameter `u` into left and right pieces.
fn split(coeffs: &[f64], dim: usize, u: f64) -> (Vec<f64>, Vec<f64>) {
    let n = coeffs.len() / dim - 1;
    let mut work = coeffs.to_vec();
    let mut left = Vec::with_capacity(coeffs.len());
    let mut right = vec![0.0; coeffs.len()];
    left.extend_from_slice(&work[0..dim]);
    right[n * dim..].copy_from_slice(&work[n * dim..]);
    for level in 1..=n {
        for j in 0..=n - level {
            for k in 0..dim {
                work[j * dim + k] = (1.0 - u) * work[j * dim + k] + u * work[(j + 1) * dim + k];
            }
        }
        left.extend_from_slice(&work[0..dim]);
        let r = n - level;
        right[r * dim..(r + 1) * dim].copy_from_slice(&work[r * dim..(r + 1) * dim]);
    }
    (left, right)
}

/// `weights[j][i] = C(m,j) C(n,i) / C(m+n, j+i)`.
fn product_weights(m: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    if m + n > MAX_DEGREE {
        return Err(domain(format!("product degree {} exceeds {MAX_DEGREE}", m + n)));
    }
    let bm: Vec<f64> = (0..=m).map(|j| binomial(m, j)).collect::<Result<_>>()?;
    let bn: Vec<f64> = (0..=n).map(|i| binomial(n, i)).collect::<Result<_>>()?;
    let bmn: Vec<f64> = (0..=m + n).map(|k| binomial(m + n, k)).collect::<Result<_>>()?;
    Ok((0..=m)
        .map(|j| (0..=n).map(|i| bm[j] / bmn[j + i] * bn[i]).collect())
        .collect())
}
