use bernloc::solver::{constraint_violation, minimize_constrained, minimize_unconstrained, Bound, SolveOptions};

fn no_constraints(_: &[f64]) -> Vec<f64> {
    Vec::new()
}

#[test]
fn quadratic_bowl() {
    let a = [3.0, -2.0, 0.5];
    let f = |x: &[f64]| x.iter().zip(&a).map(|(xi, ai)| (xi - ai).powi(2)).sum::<f64>();
    let r = minimize_unconstrained(f, &[0.0; 3], &SolveOptions::default()).unwrap();
    assert!(r.converged);
    for (x, ai) in r.x_opt.iter().zip(&a) {
        assert!((x - ai).abs() < 1e-6);
    }
}

#[test]
fn rosenbrock() {
    let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let opts = SolveOptions { max_iters: 5000, ..Default::default() };
    let r = minimize_unconstrained(f, &[-1.2, 1.0], &opts).unwrap();
    assert!(r.f_opt < 1e-8, "f = {}", r.f_opt);
    assert!((r.x_opt[0] - 1.0).abs() < 1e-4 && (r.x_opt[1] - 1.0).abs() < 1e-4);
}

#[test]
fn never_worse_than_the_start() {
    let f = |x: &[f64]| (x[0] - 1.0).abs().sqrt() + (x[1] * 3.0).sin();
    let x0 = [0.3, 0.2];
    let r = minimize_unconstrained(f, &x0, &SolveOptions::default()).unwrap();
    assert!(r.f_opt <= f(&x0));
}

#[test]
fn lagrange_disc_oracle() {
    let f = |x: &[f64]| x[0] + x[1];
    let g = |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 1.0];
    let r = minimize_constrained(f, g, no_constraints, &[0.0, 0.0], &[], &SolveOptions::default()).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!(r.converged);
    assert!((r.x_opt[0] + h).abs() < 1e-3 && (r.x_opt[1] + h).abs() < 1e-3);
    // Lagrange condition: grad f = -lambda grad g with lambda > 0, so x is parallel to (-1, -1).
    assert!((r.x_opt[0] - r.x_opt[1]).abs() < 1e-3);
    assert!(constraint_violation(&g(&r.x_opt), &[]) <= 1e-4);
}

#[test]
fn reported_violation_is_rechecked() {
    let f = |x: &[f64]| (x[0] - 4.0).powi(2) + (x[1] - 4.0).powi(2);
    let g = |x: &[f64]| vec![x[0] + x[1] - 2.0, -x[0]];
    let h = |x: &[f64]| vec![x[0] - 2.0 * x[1]];
    let r = minimize_constrained(f, g, h, &[0.0, 0.0], &[], &SolveOptions::default()).unwrap();
    assert!(r.converged);
    let v = constraint_violation(&g(&r.x_opt), &h(&r.x_opt));
    assert!(v <= 1e-4);
    assert!((v - r.max_constraint_violation).abs() < 1e-12);
    assert!((r.x_opt[0] - 4.0 / 3.0).abs() < 1e-3 && (r.x_opt[1] - 2.0 / 3.0).abs() < 1e-3);
}

#[test]
fn outer_loop_merit_is_monotone() {
    let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2);
    let g = |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 2.0];
    let r = minimize_constrained(f, g, no_constraints, &[0.1, 0.1], &[], &SolveOptions::default()).unwrap();
    assert!(!r.outer_steps.is_empty());
    for s in &r.outer_steps {
        assert!(s.merit_end <= s.merit_start + 1e-12, "{s:?}");
    }
}

#[test]
fn bounds_hold_exactly() {
    let f = |x: &[f64]| -(x[0] + 2.0 * x[1]);
    let bounds = [Bound::new(-1.0, 0.5), Bound::new(0.0, 2.0)];
    let r = minimize_constrained(f, no_constraints, no_constraints, &[0.0, 1.0], &bounds, &SolveOptions::default()).unwrap();
    assert_eq!(r.x_opt, vec![0.5, 2.0]);
}

#[test]
fn identical_inputs_identical_reports() {
    let f = |x: &[f64]| (x[0] - 1.0).powi(4) + (x[0] * x[1] - 2.0).powi(2);
    let g = |x: &[f64]| vec![x[1] - 1.5];
    let a = minimize_constrained(f, g, no_constraints, &[0.0, 0.0], &[], &SolveOptions::default()).unwrap();
    let b = minimize_constrained(f, g, no_constraints, &[0.0, 0.0], &[], &SolveOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn non_finite_start_is_rejected() {
    let f = |_: &[f64]| f64::NAN;
    assert!(minimize_unconstrained(f, &[0.0], &SolveOptions::default()).is_err());
}
