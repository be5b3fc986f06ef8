//! Position fixes from range histories and Bernstein smoothing of the
//! estimate distribution.

use crate::bernstein::{BernsteinPoly, MAX_DEGREE};
use crate::error::{domain, Error, Result};
use crate::sensing::RangeMeasurement;
use crate::solver::{minimize_unconstrained, SolveOptions};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    pub t: f64,
    pub p_hat: Vec2,
    pub residual_rms: f64,
    pub solver_converged: bool,
    /// Fewer than three readings, or all taken from collinear positions.
    pub degraded: bool,
}

/// Sum of squared range residuals at candidate position `p`.
pub fn range_residual_cost(measurements: &[RangeMeasurement], p: Vec2) -> f64 {
    measurements
        .iter()
        .map(|m| {
            let r = m.vehicle_pos.distance(p) - m.range;
            r * r
        })
        .sum()
}

/// Centroid and principal direction of the reading positions, plus the
/// smallest-to-total spread ratio.
fn principal_axis(measurements: &[RangeMeasurement]) -> (Vec2, Vec2, f64) {
    let n = measurements.len() as f64;
    let mean = measurements.iter().fold(Vec2::ZERO, |a, m| a + m.vehicle_pos) * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for m in measurements {
        let d = m.vehicle_pos - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let tr = sxx + syy;
    if tr <= 0.0 {
        return (mean, Vec2::new(1.0, 0.0), 0.0);
    }
    let det = sxx * syy - sxy * sxy;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let lo = 0.5 * tr - disc;
    let hi = 0.5 * tr + disc;
    let dir = if sxy.abs() > 1e-300 { Vec2::new(hi - syy, sxy) } else if sxx >= syy { Vec2::new(1.0, 0.0) } else { Vec2::new(0.0, 1.0) };
    (mean, dir * (1.0 / dir.norm()), lo / tr)
}

fn collinear(measurements: &[RangeMeasurement]) -> bool {
    principal_axis(measurements).2 <= 1e-9
}

/// Reflection of `p` across the line through `origin` along unit `dir`.
fn reflect(p: Vec2, origin: Vec2, dir: Vec2) -> Vec2 {
    let d = p - origin;
    let along = dir * d.dot(dir);
    origin + along * 2.0 - d
}

/// Nonlinear least-squares fix `argmin_p sum_k (||p_k - p|| - r_k)^2`,
/// warm-started at `init`.
pub fn estimate_position(measurements: &[RangeMeasurement], init: Vec2) -> Result<PositionEstimate> {
    estimate_position_with(measurements, init, &SolveOptions::default())
}

pub fn estimate_position_with(
    measurements: &[RangeMeasurement],
    init: Vec2,
    opts: &SolveOptions,
) -> Result<PositionEstimate> {
    let last = measurements.last().ok_or_else(|| domain("no range measurements"))?;
    if !init.is_finite() {
        return Err(domain("non-finite warm start"));
    }
    let cost = |x: &[f64]| range_residual_cost(measurements, Vec2::from_slice(x));
    let mut report = minimize_unconstrained(cost, &init.to_array(), opts)?;
    // Readings taken along a nearly straight path leave a mirror-image local
    // minimum across that path; solve from the mirrored start as well.
    if measurements.len() >= 2 {
        let (origin, dir, _) = principal_axis(measurements);
        let mirrored = reflect(init, origin, dir);
        if mirrored.distance(init) > 1e-6 {
            if let Ok(alt) = minimize_unconstrained(cost, &mirrored.to_array(), opts) {
                if alt.f_opt < report.f_opt {
                    report = alt;
                }
            }
        }
    }
    let p_hat = Vec2::from_slice(&report.x_opt);
    let residual_rms = (report.f_opt / measurements.len() as f64).sqrt();
    Ok(PositionEstimate {
        t: last.t,
        p_hat,
        residual_rms,
        solver_converged: report.converged,
        degraded: measurements.len() < 3 || collinear(measurements),
    })
}

/// Right-continuous empirical distribution of samples clipped to
/// `[zeta_min, zeta_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    zeta_min: f64,
    zeta_max: f64,
}

impl EmpiricalCdf {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, zeta: f64) -> f64 {
        if zeta >= self.zeta_max {
            return 1.0;
        }
        let count = self.sorted.partition_point(|&s| s <= zeta);
        count as f64 / self.sorted.len() as f64
    }
}

fn check_area(zeta_min: f64, zeta_max: f64) -> Result<()> {
    if !(zeta_min.is_finite() && zeta_max.is_finite() && zeta_max > zeta_min) {
        return Err(domain(format!("invalid search interval [{zeta_min}, {zeta_max}]")));
    }
    Ok(())
}

pub fn empirical_cdf(samples: &[f64], zeta_min: f64, zeta_max: f64) -> Result<EmpiricalCdf> {
    check_area(zeta_min, zeta_max)?;
    if samples.is_empty() {
        return Err(domain("empirical CDF of an empty sample set"));
    }
    if samples.iter().any(|s| s.is_nan()) {
        return Err(domain("NaN sample"));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.clamp(zeta_min, zeta_max)).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalCdf { sorted, zeta_min, zeta_max })
}

/// Smallest integer `k >= n^(3/4)`.
fn ceil_three_quarter_power(n: usize) -> usize {
    let n3 = (n as u128).pow(3);
    let mut k = (n as f64).powf(0.75).floor() as u128;
    while k > 0 && k.pow(4) >= n3 {
        k -= 1;
    }
    while k.pow(4) < n3 {
        k += 1;
    }
    k as usize
}

/// Bernstein CDF order for `n` samples: `ceil(n^(3/4)) + 2`.
pub fn order_rule(n: usize) -> usize {
    ceil_three_quarter_power(n.max(1)) + 2
}

/// Per-axis smoothed CDFs and their derivative densities over the search
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    pub cdf_x: BernsteinPoly,
    pub cdf_y: BernsteinPoly,
    pub pdf_x: BernsteinPoly,
    pub pdf_y: BernsteinPoly,
    pub m: usize,
    pub n: usize,
    pub zeta_min: f64,
    pub zeta_max: f64,
}

impl DensityModel {
    pub fn cdf(&self, axis: Axis) -> &BernsteinPoly {
        match axis {
            Axis::X => &self.cdf_x,
            Axis::Y => &self.cdf_y,
        }
    }

    pub fn pdf(&self, axis: Axis) -> &BernsteinPoly {
        match axis {
            Axis::X => &self.pdf_x,
            Axis::Y => &self.pdf_y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];

    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }

    pub fn of(&self, v: Vec2) -> f64 {
        match self {
            Axis::X => v.x,
            Axis::Y => v.y,
        }
    }
}

/// Bernstein CDF of one axis: coefficient `j` is `F_n` at the `j`-th
/// uniform grid point of the search interval.
pub fn bernstein_cdf(samples: &[f64], m: usize, zeta_min: f64, zeta_max: f64) -> Result<BernsteinPoly> {
    let ecdf = empirical_cdf(samples, zeta_min, zeta_max)?;
    let span = zeta_max - zeta_min;
    let coeffs = (0..=m)
        .map(|j| {
            let zeta = if j == m { zeta_max } else { zeta_min + span * j as f64 / m as f64 };
            ecdf.eval(zeta)
        })
        .collect();
    BernsteinPoly::scalar(coeffs, zeta_min, zeta_max)
}

pub fn fit_density(estimates: &[PositionEstimate], zeta_min: f64, zeta_max: f64) -> Result<DensityModel> {
    let points: Vec<Vec2> = estimates.iter().map(|e| e.p_hat).collect();
    fit_density_points(&points, zeta_min, zeta_max)
}

pub fn fit_density_points(points: &[Vec2], zeta_min: f64, zeta_max: f64) -> Result<DensityModel> {
    check_area(zeta_min, zeta_max)?;
    let n = points.len();
    if n == 0 {
        return Err(domain("density fit needs at least one estimate"));
    }
    // Moments multiply the density by zeta^2, so leave two degrees of headroom.
    let m = order_rule(n).min(MAX_DEGREE - 2);
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let cdf_x = bernstein_cdf(&xs, m, zeta_min, zeta_max)?;
    let cdf_y = bernstein_cdf(&ys, m, zeta_min, zeta_max)?;
    Ok(DensityModel {
        pdf_x: cdf_x.derivative(),
        pdf_y: cdf_y.derivative(),
        cdf_x,
        cdf_y,
        m,
        n,
        zeta_min,
        zeta_max,
    })
}

/// `[M0, M1, M2]` with `M_k = integral of zeta^k * pdf` over the interval,
/// computed exactly in Bernstein form.
pub fn pdf_moments(pdf: &BernsteinPoly, clamp_negative: bool) -> Result<[f64; 3]> {
    let pdf = if clamp_negative {
        let c = pdf.flat_coeffs().iter().map(|v| v.max(0.0)).collect();
        BernsteinPoly::scalar(c, pdf.t0(), pdf.tf())?
    } else {
        pdf.clone()
    };
    let zeta = BernsteinPoly::scalar(vec![pdf.t0(), pdf.tf()], pdf.t0(), pdf.tf())?;
    let first = zeta.product(&pdf)?;
    let second = zeta.product(&first)?;
    Ok([pdf.integrate()[0], first.integrate()[0], second.integrate()[0]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisStats {
    pub mean: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityStats {
    pub x: AxisStats,
    pub y: AxisStats,
}

impl DensityStats {
    pub fn axis(&self, axis: Axis) -> AxisStats {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
        }
    }

    pub fn mean(&self) -> Vec2 {
        Vec2::new(self.x.mean, self.y.mean)
    }
}

pub(crate) const DEGENERATE_MASS: f64 = 1e-12;

fn axis_stats(pdf: &BernsteinPoly) -> Result<AxisStats> {
    let [m0, m1, m2] = pdf_moments(pdf, true)?;
    if !(m0 > DEGENERATE_MASS) {
        return Err(Error::DegenerateDensity(format!("density mass {m0} is too small")));
    }
    let mean = m1 / m0;
    let var = (m2 / m0 - mean * mean).max(0.0);
    Ok(AxisStats { mean, sigma: var.sqrt() })
}

/// Mean and standard deviation of each axis density.
pub fn density_stats(d: &DensityModel) -> Result<DensityStats> {
    Ok(DensityStats { x: axis_stats(&d.pdf_x)?, y: axis_stats(&d.pdf_y)? })
}

/// Plain sample mean and standard deviation of the clipped estimates, for
/// comparison with the smoothed-density moments.
pub fn sample_stats(points: &[Vec2], zeta_min: f64, zeta_max: f64) -> Option<DensityStats> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let stats = |vals: Vec<f64>| {
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        AxisStats { mean, sigma: var.sqrt() }
    };
    let clip = |v: f64| v.clamp(zeta_min, zeta_max);
    Some(DensityStats {
        x: stats(points.iter().map(|p| clip(p.x)).collect()),
        y: stats(points.iter().map(|p| clip(p.y)).collect()),
    })
}
