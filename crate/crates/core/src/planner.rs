//! Trajectory program over Bernstein coefficients.
//!
//! A plan is a degree-`d` planar Bernstein polynomial on `[t_i, t_f]`. The
//! first coefficient is pinned to the current position and the second is
//! eliminated through the current velocity, so the decision vector is
//! `c_2 .. c_d` plus the final time. The cost is
//!
//! ```text
//! J = w1 (t_f - t_i) + w2 * int ||p''||^2 + w3 * terminal(p(t_f)) - w4 * log det(FIM + eps I)
//! ```
//!
//! and speed limits are enforced on the Bernstein coefficients of
//! `||p'||^2`, which bound the speed for every `t` on the interval.

use crate::bernstein::{distance_squared, BernsteinPoly};
use crate::error::{domain, Error, Result};
use crate::estimator::{pdf_moments, Axis, DensityModel, DEGENERATE_MASS};
use crate::quadrature::GaussLegendre;
use crate::solver::{constraint_violation, minimize_constrained, Bound, SolveOptions};
use crate::Vec2;

/// Gauss–Legendre nodes used for the information integral.
pub const FIM_NODES: usize = 30;

/// Relative slack kept below `v_max^2` inside the optimizer so that
/// round-off never pushes a returned plan over the limit.
const SPEED_MARGIN: f64 = 1e-3;

/// Accepted positive residual on returned plans.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Symmetric 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let half = 0.5 * (self.xx - self.yy);
        let r = half.hypot(self.xy);
        let mid = 0.5 * self.trace();
        [mid - r, mid + r]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { xx: s * self.xx, xy: s * self.xy, yy: s * self.yy }
    }

    /// `log det(self + eps I)` with `eps = 1e-9 * trace`.
    pub fn regularized_log_det(&self) -> f64 {
        let eps = 1e-9 * self.trace().max(f64::MIN_POSITIVE);
        let reg = Self { xx: self.xx + eps, xy: self.xy, yy: self.yy + eps };
        reg.det().ln()
    }
}

/// Fisher information of range readings along an arbitrary path.
pub fn fim_of_path<P>(path: P, t_i: f64, t_f: f64, p_hat: Vec2, sigma: f64, rule: &GaussLegendre) -> Result<Sym2>
where
    P: Fn(f64) -> Result<Vec2>,
{
    if !(sigma > 0.0) {
        return Err(domain(format!("measurement sigma must be positive, got {sigma}")));
    }
    let mut acc = Sym2::default();
    for (t, w) in rule.on_interval(t_i, t_f) {
        let d = path(t)? - p_hat;
        let r2 = d.dot(d);
        if !(r2.sqrt() >= 1e-9) {
            return Err(Error::SingularGeometry(format!("path passes through the estimate at t = {t}")));
        }
        acc.xx += w * d.x * d.x / r2;
        acc.xy += w * d.x * d.y / r2;
        acc.yy += w * d.y * d.y / r2;
    }
    Ok(acc.scaled(1.0 / (sigma * sigma)))
}

/// Fisher information of a planar trajectory with respect to `p_hat`.
pub fn fim(traj: &BernsteinPoly, p_hat: Vec2, sigma: f64) -> Result<Sym2> {
    fim_with_rule(traj, p_hat, sigma, &GaussLegendre::new(FIM_NODES))
}

pub fn fim_with_rule(traj: &BernsteinPoly, p_hat: Vec2, sigma: f64, rule: &GaussLegendre) -> Result<Sym2> {
    if traj.dim() != 2 {
        return Err(domain("information needs a planar trajectory"));
    }
    fim_of_path(|t| traj.eval(t).map(|v| Vec2::from_slice(&v)), traj.t0(), traj.tf(), p_hat, sigma, rule)
}

/// Per-axis moments `[M0, M1, M2]` of the estimate densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalMoments {
    pub x: [f64; 3],
    pub y: [f64; 3],
}

impl TerminalMoments {
    pub fn new(density: &DensityModel) -> Result<Self> {
        let x = pdf_moments(density.pdf(Axis::X), false)?;
        let y = pdf_moments(density.pdf(Axis::Y), false)?;
        if !(x[0] > DEGENERATE_MASS && y[0] > DEGENERATE_MASS) {
            return Err(Error::DegenerateDensity(format!("density masses {} / {} are too small", x[0], y[0])));
        }
        Ok(Self { x, y })
    }

    /// `sum over axes of e^2 M0 - 2 e M1 + M2`.
    pub fn cost(&self, endpoint: Vec2) -> f64 {
        let axis = |e: f64, m: &[f64; 3]| e * e * m[0] - 2.0 * e * m[1] + m[2];
        axis(endpoint.x, &self.x) + axis(endpoint.y, &self.y)
    }
}

/// Density-weighted squared distance from `endpoint` over the search area.
pub fn terminal_cost(endpoint: Vec2, density: &DensityModel) -> Result<f64> {
    Ok(TerminalMoments::new(density)?.cost(endpoint))
}

/// `v_j - v_max^2` for every Bernstein coefficient `v_j` of `||p'||^2`.
pub fn velocity_residuals(traj: &BernsteinPoly, v_max: f64) -> Result<Vec<f64>> {
    let speed2 = traj.derivative().squared_norm()?;
    let limit = v_max * v_max;
    Ok(speed2.flat_coeffs().iter().map(|v| v - limit).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanWeights {
    pub time: f64,
    pub effort: f64,
    pub terminal: f64,
    pub information: f64,
}

impl PlanWeights {
    pub fn as_array(&self) -> [f64; 4] {
        [self.time, self.effort, self.terminal, self.information]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { time: s * self.time, effort: s * self.effort, terminal: s * self.terminal, information: s * self.information }
    }
}

impl Default for PlanWeights {
    fn default() -> Self {
        Self { time: 1.0, effort: 1.0, terminal: 1.0, information: 1.0 }
    }
}

/// Circular keep-out region, enforced on the coefficients of
/// `||p - center||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
}

/// Raw (unweighted) cost terms of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub time: f64,
    pub effort: f64,
    pub terminal: f64,
    /// `-log det(FIM + eps I)`; zero when the information term is unused.
    pub information: f64,
}

impl CostBreakdown {
    pub fn weighted_sum(&self, w: &PlanWeights) -> f64 {
        w.time * self.time + w.effort * self.effort + w.terminal * self.terminal + w.information * self.information
    }
}

#[derive(Debug, Clone)]
pub struct PlanContext {
    pub t_i: f64,
    pub p_ti: Vec2,
    pub v_ti: Vec2,
    pub p_hat: Vec2,
    pub density: DensityModel,
    /// Range noise std used in the information matrix.
    pub sigma: f64,
    pub weights: PlanWeights,
    pub v_max: f64,
    pub degree: usize,
    pub tf_bounds: (f64, f64),
    pub tf_max_mission: f64,
    pub obstacles: Vec<Obstacle>,
    /// Previous plan, used as a warm start.
    pub previous: Option<BernsteinPoly>,
    pub solve_options: SolveOptions,
}

impl PlanContext {
    pub fn validate(&self) -> Result<()> {
        if self.weights.as_array().iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(domain("plan weights must be finite and non-negative"));
        }
        if !(self.v_max > 0.0) {
            return Err(domain("v_max must be positive"));
        }
        if self.degree < 3 {
            return Err(domain(format!("trajectory degree must be at least 3, got {}", self.degree)));
        }
        let (lo, hi) = self.tf_bounds;
        if !(lo > self.t_i && hi >= lo && hi <= self.tf_max_mission) {
            return Err(domain(format!(
                "final-time bounds [{lo}, {hi}] must lie in ({}, {}]",
                self.t_i, self.tf_max_mission
            )));
        }
        if !(self.p_ti.is_finite() && self.v_ti.is_finite() && self.p_hat.is_finite()) {
            return Err(domain("non-finite boundary data"));
        }
        if !(self.sigma > 0.0) {
            return Err(domain("measurement sigma must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub poly: BernsteinPoly,
    pub cost: CostBreakdown,
    /// `cost.weighted_sum(weights)`.
    pub objective: f64,
    pub converged: bool,
    /// The optimizer failed and the plan is a braking fallback.
    pub planner_fault: bool,
}

/// Builds the trajectory polynomial for a decision vector.
fn assemble(ctx: &PlanContext, x: &[f64]) -> Result<BernsteinPoly> {
    let d = ctx.degree;
    let tf = x[2 * (d - 1)];
    let span = tf - ctx.t_i;
    let c1 = ctx.p_ti + ctx.v_ti * (span / d as f64);
    let mut flat = Vec::with_capacity(2 * (d + 1));
    flat.extend_from_slice(&ctx.p_ti.to_array());
    flat.extend_from_slice(&c1.to_array());
    flat.extend_from_slice(&x[..2 * (d - 1)]);
    BernsteinPoly::from_flat(flat, 2, ctx.t_i, tf)
}

fn decision_vector(poly: &BernsteinPoly) -> Vec<f64> {
    let mut x: Vec<f64> = poly.coeffs().skip(2).flatten().copied().collect();
    x.push(poly.tf());
    x
}

/// Straight line from the current position toward the estimate at
/// 0.8 `v_max`, with the second coefficient set by the current velocity.
pub fn straight_line_seed(ctx: &PlanContext) -> Result<BernsteinPoly> {
    let (lo, hi) = ctx.tf_bounds;
    let delta = ctx.p_hat - ctx.p_ti;
    let span = (delta.norm() / (0.8 * ctx.v_max)).clamp(lo - ctx.t_i, hi - ctx.t_i);
    let d = ctx.degree;
    let mut x = Vec::with_capacity(2 * d - 1);
    for j in 2..=d {
        let c = ctx.p_ti + delta * (j as f64 / d as f64);
        x.extend_from_slice(&c.to_array());
    }
    x.push(ctx.t_i + span);
    assemble(ctx, &x)
}

/// Decelerates from the current velocity and holds position.
pub fn braking_trajectory(ctx: &PlanContext) -> Result<BernsteinPoly> {
    let (lo, _) = ctx.tf_bounds;
    let d = ctx.degree;
    let c1 = ctx.p_ti + ctx.v_ti * ((lo - ctx.t_i) / d as f64);
    let mut x = Vec::with_capacity(2 * d - 1);
    for _ in 2..=d {
        x.extend_from_slice(&c1.to_array());
    }
    x.push(lo);
    assemble(ctx, &x)
}

fn warm_seed(ctx: &PlanContext, prev: &BernsteinPoly) -> Result<BernsteinPoly> {
    let (lo, hi) = ctx.tf_bounds;
    let elevated;
    let prev = if prev.degree() < ctx.degree {
        elevated = prev.degree_elevate(ctx.degree - prev.degree())?;
        &elevated
    } else {
        prev
    };
    if prev.degree() != ctx.degree {
        return Err(domain("previous plan has a higher degree than the planner"));
    }
    if prev.t0() < ctx.t_i && prev.tf() >= lo {
        let rest = prev.restrict(ctx.t_i, prev.tf())?;
        let mut x = decision_vector(&rest);
        let last = x.len() - 1;
        x[last] = x[last].clamp(lo, hi);
        return assemble(ctx, &x);
    }
    // Keep the old shape ahead of the vehicle over the shortest allowed span.
    let mut x = decision_vector(prev);
    let last = x.len() - 1;
    x[last] = (ctx.t_i + prev.duration()).clamp(lo, hi);
    assemble(ctx, &x)
}

/// Everything needed to evaluate candidate plans quickly.
struct Evaluator<'a> {
    ctx: &'a PlanContext,
    moments: TerminalMoments,
    rule: GaussLegendre,
    use_information: bool,
}

impl<'a> Evaluator<'a> {
    fn new(ctx: &'a PlanContext) -> Result<Self> {
        Ok(Self {
            ctx,
            moments: TerminalMoments::new(&ctx.density)?,
            rule: GaussLegendre::new(FIM_NODES),
            use_information: ctx.weights.information > 0.0,
        })
    }

    fn breakdown(&self, poly: &BernsteinPoly) -> Result<CostBreakdown> {
        let acc = poly.derivative().derivative();
        let effort = acc.squared_norm()?.integrate()[0];
        let endpoint = Vec2::from_slice(poly.coeff(poly.degree()));
        let information = if self.use_information {
            let info = fim_with_rule(poly, self.ctx.p_hat, self.ctx.sigma, &self.rule)?;
            -info.regularized_log_det()
        } else {
            0.0
        };
        Ok(CostBreakdown { time: poly.duration(), effort, terminal: self.moments.cost(endpoint), information })
    }

    /// Normalized constraint values, feasible when `<= 0`.
    fn constraints(&self, poly: &BernsteinPoly) -> Result<Vec<f64>> {
        let limit = self.ctx.v_max * self.ctx.v_max;
        let speed2 = poly.derivative().squared_norm()?;
        // The first coefficient is |v_ti|^2 and cannot be changed by the plan.
        let mut g: Vec<f64> = speed2.flat_coeffs()[1..].iter().map(|v| v / limit - (1.0 - SPEED_MARGIN)).collect();
        for ob in &self.ctx.obstacles {
            let r2 = ob.radius * ob.radius;
            let dist = distance_squared(poly, &ob.center.to_array())?;
            g.extend(dist.flat_coeffs().iter().map(|v| 1.0 - v / r2));
        }
        Ok(g)
    }
}

/// Solves the trajectory program for one replanning instant.
pub fn plan(ctx: &PlanContext) -> Result<Trajectory> {
    ctx.validate()?;
    let eval = Evaluator::new(ctx)?;
    let weights = ctx.weights;
    // Uniform weight scaling must not move the minimizer.
    let norm = weights.as_array().into_iter().fold(0.0, f64::max);
    let unit = if norm > 0.0 { weights.scaled(1.0 / norm) } else { weights };
    let scale = if norm > 0.0 { norm } else { 1.0 };

    let objective = |x: &[f64]| -> f64 {
        match assemble(ctx, x).and_then(|p| eval.breakdown(&p)) {
            Ok(b) => b.weighted_sum(&unit),
            Err(_) => f64::INFINITY,
        }
    };
    let inequality = |x: &[f64]| -> Vec<f64> {
        match assemble(ctx, x).and_then(|p| eval.constraints(&p)) {
            Ok(g) => g,
            Err(_) => vec![f64::INFINITY],
        }
    };

    let mut seeds = vec![straight_line_seed(ctx)?];
    if let Some(prev) = &ctx.previous {
        if let Ok(s) = warm_seed(ctx, prev) {
            seeds.push(s);
        }
    }
    let brake = braking_trajectory(ctx)?;
    seeds.push(brake.clone());

    // Best seed: feasible first, then lowest objective, then least violation.
    let feas_tol = ctx.solve_options.feasibility_tol;
    let score = |p: &BernsteinPoly| {
        let x = decision_vector(p);
        (constraint_violation(&inequality(&x), &[]), objective(&x))
    };
    let seed = seeds
        .iter()
        .map(|s| (score(s), s))
        .filter(|((_, f), _)| f.is_finite())
        .min_by(|((va, fa), _), ((vb, fb), _)| {
            let (a_ok, b_ok) = (*va <= feas_tol, *vb <= feas_tol);
            b_ok.cmp(&a_ok).then(if a_ok && b_ok { fa.total_cmp(fb) } else { va.total_cmp(vb) })
        })
        .map(|(_, s)| s.clone());

    let mut bounds = vec![Bound::FREE; 2 * (ctx.degree - 1)];
    bounds.push(Bound::new(ctx.tf_bounds.0, ctx.tf_bounds.1));

    let solved = seed.and_then(|s| {
        minimize_constrained(objective, inequality, |_: &[f64]| Vec::new(), &decision_vector(&s), &bounds, &ctx.solve_options)
            .ok()
    });

    if let Some(report) = solved {
        if let Ok(poly) = assemble(ctx, &report.x_opt) {
            let residual_ok = velocity_residuals(&poly, ctx.v_max)?
                .iter()
                .skip(1)
                .all(|r| *r <= RESIDUAL_TOL);
            let obstacles_ok = eval.constraints(&poly)?.iter().all(|g| *g <= feas_tol);
            if let (true, true, Ok(cost)) = (residual_ok, obstacles_ok, eval.breakdown(&poly)) {
                debug_assert!((cost.weighted_sum(&unit) * scale - cost.weighted_sum(&weights)).abs()
                    <= 1e-8 * cost.weighted_sum(&weights).abs().max(1.0));
                return Ok(Trajectory {
                    objective: cost.weighted_sum(&weights),
                    cost,
                    poly,
                    converged: report.converged,
                    planner_fault: false,
                });
            }
        }
    }

    let cost = eval.breakdown(&brake).unwrap_or_default();
    Ok(Trajectory { objective: cost.weighted_sum(&weights), cost, poly: brake, converged: false, planner_fault: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::fit_density_points;

    fn line(a: Vec2, b: Vec2, t0: f64, tf: f64) -> BernsteinPoly {
        BernsteinPoly::new(vec![a.to_array().to_vec(), b.to_array().to_vec()], t0, tf).unwrap()
    }

    #[test]
    fn radial_path_has_rank_one_information() {
        let p = line(Vec2::new(10.0, 0.0), Vec2::new(2.0, 0.0), 0.0, 8.0);
        let f = fim(&p, Vec2::ZERO, 1.0).unwrap();
        assert!(f.xy.abs() < 1e-12 && f.yy.abs() < 1e-12);
        assert!((f.xx - 8.0).abs() < 1e-10);
        assert!(f.det().abs() < 1e-10);
    }

    #[test]
    fn doubling_sigma_quarters_information() {
        let p = BernsteinPoly::new(vec![vec![3.0, 1.0], vec![0.0, 5.0], vec![-2.0, 2.0]], 0.0, 4.0).unwrap();
        let a = fim(&p, Vec2::new(0.5, 0.5), 0.3).unwrap();
        let b = fim(&p, Vec2::new(0.5, 0.5), 0.6).unwrap();
        assert!((a.xx / 4.0 - b.xx).abs() < 1e-12 * a.xx.abs());
        assert!((a.xy / 4.0 - b.xy).abs() < 1e-12 * a.xx.abs());
        assert!((a.yy / 4.0 - b.yy).abs() < 1e-12 * a.yy.abs());
    }

    #[test]
    fn path_through_estimate_is_singular() {
        let p = BernsteinPoly::constant(&[1.0, 1.0], 3, 0.0, 2.0).unwrap();
        assert!(matches!(fim(&p, Vec2::new(1.0, 1.0), 1.0), Err(Error::SingularGeometry(_))));
    }

    #[test]
    fn stationary_and_tight_velocity_residuals() {
        let still = BernsteinPoly::constant(&[2.0, 3.0], 5, 0.0, 10.0).unwrap();
        assert!(velocity_residuals(&still, 1.5).unwrap().iter().all(|r| (r + 2.25).abs() < 1e-15));
        let l = line(Vec2::ZERO, Vec2::new(6.0, 8.0), 0.0, 5.0).degree_elevate(4).unwrap();
        let res = velocity_residuals(&l, 2.0).unwrap();
        let max = res.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        assert!(max.abs() < 1e-9);
    }

    #[test]
    fn terminal_cost_is_minimized_at_the_mean() {
        let pts: Vec<Vec2> = (0..40).map(|i| Vec2::new(3.0 + 0.1 * i as f64, 6.0 - 0.05 * i as f64)).collect();
        let d = fit_density_points(&pts, 0.0, 10.0).unwrap();
        let m = TerminalMoments::new(&d).unwrap();
        let mean = Vec2::new(m.x[1] / m.x[0], m.y[1] / m.y[0]);
        let at_mean = m.cost(mean);
        let var_sum = (m.x[2] - mean.x * mean.x * m.x[0]) + (m.y[2] - mean.y * mean.y * m.y[0]);
        assert!((at_mean - var_sum).abs() < 1e-9);
        for off in [Vec2::new(0.1, 0.0), Vec2::new(0.0, -0.2), Vec2::new(1.0, 1.0)] {
            assert!(m.cost(mean + off) > at_mean);
        }
    }
}
