//! Derivative-free-interface nonlinear optimizers.
//!
//! [`minimize_unconstrained`] is a BFGS quasi-Newton method with a
//! backtracking Armijo line search and central finite-difference
//! gradients. [`minimize_constrained`] wraps it in an augmented-Lagrangian
//! outer loop with box bounds handled by projection.
//!
//! Everything here is deterministic: identical inputs give identical
//! reports.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Iteration cap of each inner quasi-Newton solve.
    pub max_iters: usize,
    /// Stop once `||grad||_inf <= grad_tol * max(1, |f|)`.
    pub grad_tol: f64,
    /// Stop once the accepted step is below `step_tol * max(1, ||x||_inf)`.
    pub step_tol: f64,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    /// Relative finite-difference step.
    pub finite_diff_step: f64,
    pub max_outer_iters: usize,
    /// Constraint violation accepted as feasible.
    pub feasibility_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-8,
            step_tol: 1e-12,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            finite_diff_step: 1e-6,
            max_outer_iters: 15,
            feasibility_tol: 1e-4,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("step_tol", self.step_tol),
            ("penalty_init", self.penalty_init),
            ("finite_diff_step", self.finite_diff_step),
            ("feasibility_tol", self.feasibility_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.penalty_growth > 1.0) {
            return Err(Error::Domain(format!("penalty_growth must exceed 1, got {}", self.penalty_growth)));
        }
        Ok(())
    }
}

/// Merit values around one outer (penalty) iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterStep {
    pub penalty: f64,
    /// Penalized objective at the warm start of this iteration.
    pub merit_start: f64,
    /// Penalized objective at the inner solution.
    pub merit_end: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_constraint_violation: f64,
    pub outer_steps: Vec<OuterStep>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Central-difference gradient, falling back to one-sided differences
/// where a probe is non-finite.
pub fn numerical_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], fx: f64, rel_step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = rel_step * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let fp = f(&probe);
            probe[i] = x[i] - h;
            let fm = f(&probe);
            probe[i] = x[i];
            match (fp.is_finite(), fm.is_finite()) {
                (true, true) => (fp - fm) / (2.0 * h),
                (true, false) => (fp - fx) / h,
                (false, true) => (fx - fm) / h,
                (false, false) => 0.0,
            }
        })
        .collect()
}

/// BFGS with backtracking line search on a black-box objective.
///
/// Non-finite values met during the line search count as `+inf`; a
/// non-finite value at `x0` is an error.
pub fn minimize_unconstrained<F>(objective: F, x0: &[f64], opts: &SolveOptions) -> Result<SolveReport>
where
    F: Fn(&[f64]) -> f64,
{
    opts.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = objective(&x);
    if !fx.is_finite() {
        return Err(Error::NonFinite(format!("objective is {fx} at the initial point")));
    }
    if n == 0 {
        return Ok(SolveReport {
            x_opt: x,
            f_opt: fx,
            iterations: 0,
            converged: true,
            max_constraint_violation: 0.0,
            outer_steps: Vec::new(),
        });
    }

    let identity = |n: usize| {
        let mut h = vec![0.0; n * n];
        (0..n).for_each(|i| h[i * n + i] = 1.0);
        h
    };
    let mut hinv = identity(n);
    let mut fresh = true;
    let mut g = numerical_gradient(&objective, &x, fx, opts.finite_diff_step);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        if inf_norm(&g) <= opts.grad_tol * fx.abs().max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut d: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hinv = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            let ft = finite_or_inf(objective(&trial));
            if ft <= fx + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }

        let Some((x_new, f_new)) = accepted else {
            if fresh {
                // Steepest descent cannot make progress: numerical floor.
                break;
            }
            hinv = identity(n);
            fresh = true;
            continue;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let step_small = inf_norm(&s) <= opts.step_tol * inf_norm(&x).max(1.0);
        let g_new = numerical_gradient(&objective, &x_new, f_new, opts.finite_diff_step);
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if fresh {
                // Rescale the initial inverse Hessian to the observed curvature.
                let gamma = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|h| *h *= gamma);
            }
            bfgs_update(&mut hinv, &s, &y, sy);
            fresh = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        if step_small {
            converged = true;
            break;
        }
    }

    if !converged {
        converged = inf_norm(&g) <= opts.grad_tol * fx.abs().max(1.0);
    }
    Ok(SolveReport {
        x_opt: x,
        f_opt: fx,
        iterations,
        converged,
        max_constraint_violation: 0.0,
        outer_steps: Vec::new(),
    })
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Per-variable box bound; infinite ends are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub const FREE: Bound = Bound { lower: f64::NEG_INFINITY, upper: f64::INFINITY };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }
}

fn project(x: &[f64], bounds: &[Bound]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| match bounds.get(i) {
            Some(b) => v.max(b.lower).min(b.upper),
            None => v,
        })
        .collect()
}

/// Largest violation of `g(x) <= 0` and `h(x) = 0`.
pub fn constraint_violation(ineq: &[f64], eq: &[f64]) -> f64 {
    let a = ineq.iter().fold(0.0_f64, |m, &g| m.max(g));
    let b = eq.iter().fold(0.0_f64, |m, &h| m.max(h.abs()));
    let v = a.max(b);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `objective` subject to `inequality(x) <= 0`, `equality(x) = 0`
/// and box `bounds` (one per variable, or empty for none).
///
/// Bounds are enforced exactly: callables only ever see projected points
/// and the returned `x_opt` lies inside the box.
pub fn minimize_constrained<F, G, H>(
    objective: F,
    inequality: G,
    equality: H,
    x0: &[f64],
    bounds: &[Bound],
    opts: &SolveOptions,
) -> Result<SolveReport>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
    H: Fn(&[f64]) -> Vec<f64>,
{
    opts.validate()?;
    if !bounds.is_empty() && bounds.len() != x0.len() {
        return Err(Error::Domain(format!("{} bounds for {} variables", bounds.len(), x0.len())));
    }
    if bounds.iter().any(|b| !(b.lower <= b.upper)) {
        return Err(Error::Domain("bound with lower > upper".into()));
    }

    let mut x = project(x0, bounds);
    let f0 = objective(&x);
    if !f0.is_finite() {
        return Err(Error::NonFinite(format!("objective is {f0} at the initial point")));
    }
    let mut lambda_eq = vec![0.0; equality(&x).len()];
    let mut lambda_in = vec![0.0; inequality(&x).len()];
    let mut mu = opts.penalty_init;
    let mut prev_violation = f64::INFINITY;
    let mut outer_steps = Vec::new();
    let mut iterations = 0;
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut converged = false;

    for _ in 0..opts.max_outer_iters.max(1) {
        let merit = |z: &[f64]| -> f64 {
            let pz = project(z, bounds);
            let fz = objective(&pz);
            if !fz.is_finite() {
                return f64::INFINITY;
            }
            let mut total = fz;
            for (h, l) in equality(&pz).iter().zip(&lambda_eq) {
                total += l * h + 0.5 * mu * h * h;
            }
            for (g, l) in inequality(&pz).iter().zip(&lambda_in) {
                let shifted = (l + mu * g).max(0.0);
                total += (shifted * shifted - l * l) / (2.0 * mu);
            }
            let outside: f64 = z.iter().zip(&pz).map(|(a, b)| (a - b) * (a - b)).sum();
            total + 0.5 * mu * outside
        };

        let merit_start = merit(&x);
        let inner = match minimize_unconstrained(merit, &x, opts) {
            Ok(r) => r,
            Err(Error::NonFinite(_)) => break,
            Err(e) => return Err(e),
        };
        iterations += inner.iterations;
        x = project(&inner.x_opt, bounds);
        let g = inequality(&x);
        let h = equality(&x);
        let violation = constraint_violation(&g, &h);
        outer_steps.push(OuterStep { penalty: mu, merit_start, merit_end: inner.f_opt, violation });

        let fx = objective(&x);
        let better = match &best {
            None => true,
            Some((bv, bf, _)) => {
                let feasible = violation <= opts.feasibility_tol;
                let best_feasible = *bv <= opts.feasibility_tol;
                (feasible && !best_feasible) || (feasible == best_feasible && (if feasible { fx < *bf } else { violation < *bv }))
            }
        };
        if better && fx.is_finite() {
            best = Some((violation, fx, x.clone()));
        }

        if violation <= opts.feasibility_tol && inner.converged {
            converged = true;
            best = Some((violation, fx, x.clone()));
            break;
        }
        for (l, hv) in lambda_eq.iter_mut().zip(&h) {
            *l += mu * hv;
        }
        for (l, gv) in lambda_in.iter_mut().zip(&g) {
            *l = (*l + mu * gv).max(0.0);
        }
        if violation > 0.25 * prev_violation || violation > opts.feasibility_tol {
            mu *= opts.penalty_growth;
        }
        prev_violation = violation;
    }

    let (violation, f_opt, x_opt) = best.unwrap_or_else(|| {
        let v = constraint_violation(&inequality(&x), &equality(&x));
        (v, objective(&x), x.clone())
    });
    Ok(SolveReport {
        converged: converged && violation <= opts.feasibility_tol,
        x_opt,
        f_opt,
        iterations,
        max_constraint_violation: violation,
        outer_steps,
    })
}
