use contact_split_web::{hertz_profile, solve_hertz_impl, sweep_rho_impl};

#[test]
fn hertz_run_matches_analytic_peak() {
    let run = solve_hertz_impl(16, 3e-4, 1e8, "cs").unwrap();
    assert_eq!(run.status(), "converged");
    assert_eq!(run.x().len(), 17);
    assert_eq!(run.residuals().len(), run.iterations());
    assert!(run.resultant() > 0.0);
    assert!((run.p_max() - run.p_max_analytic()).abs() / run.p_max_analytic() < 0.15);
    let peak = run.analytic().iter().cloned().fold(0.0, f64::max);
    assert!((peak - run.p_max_analytic()).abs() <= 1e-12 * peak);
}

#[test]
fn hertz_run_rejects_bad_input() {
    assert!(solve_hertz_impl(2, 3e-4, 1e8, "cs").is_err());
    assert!(solve_hertz_impl(8, 3e-4, 1e8, "warp").is_err());
    assert!(solve_hertz_impl(8, 3e-4, -1.0, "none").is_err());
}

#[test]
fn no_indentation_no_pressure() {
    let run = solve_hertz_impl(8, 0.0, 1e8, "cs").unwrap();
    assert_eq!(run.resultant(), 0.0);
    assert!(run.pressure().iter().all(|p| *p == 0.0));
}

#[test]
fn sweep_marks_failures() {
    let it = sweep_rho_impl(8, "cs", &[1e4, 1e12], 2000).unwrap();
    assert!(it.iter().all(|v| *v > 0.0), "{it:?}");
    let it = sweep_rho_impl(8, "none", &[1e16], 300).unwrap();
    assert_eq!(it, vec![-1.0]);
}

#[test]
fn profile_endpoints() {
    let v = hertz_profile(1000.0, 2e-2, 2.1e11, 0.3, 2.1e9, 0.3, false, 61);
    let (a, p_max) = (v[0], v[1]);
    assert_eq!(v.len(), 2 + 2 * 61);
    assert_eq!(v[2], 0.0);
    assert_eq!(v[3], p_max);
    // sample 50 of 60 sits at r = a
    assert!((v[2 + 2 * 50] - a).abs() <= 1e-15 * a);
    assert!(v[3 + 2 * 50].abs() <= 1e-6 * p_max);
    assert_eq!(v[3 + 2 * 60], 0.0);
    assert_eq!(hertz_profile(-1.0, 2e-2, 1.0, 0.3, 1.0, 0.3, true, 5), vec![0.0, 0.0]);
}
