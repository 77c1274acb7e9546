use toric_spin7::cli::{r22_manufactured, r31_quartic};
use toric_spin7::pde_grid::{
    grid_residual_diagonal, solve_dirichlet, solve_r22, solve_r31, GridField, GridSpec, PdeError, SampledDiagonal, SorOptions,
};
use toric_spin7::poly::{nu, Poly};

fn opts() -> SorOptions {
    SorOptions::default()
}

#[test]
fn maximum_principle() {
    let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, 13).unwrap();
    let bc = |p: &[f64; 4]| (3.0 * p[1]).sin() * (p[2] - p[3]).cos() + p[1] * p[1];
    let (u, _) = solve_r31(&spec, bc, &opts()).unwrap();
    let (lo, hi) = u.boundary_range();
    for (i, x) in u.values.iter().enumerate() {
        if !spec.is_boundary(i) {
            assert!(*x >= lo - 1e-12 && *x <= hi + 1e-12, "{x} outside [{lo}, {hi}]");
        }
    }
}

#[test]
fn solution_is_linear_in_boundary_data() {
    let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, 9).unwrap();
    let f = |p: &[f64; 4]| p[1] * p[2] * p[3];
    let g = |p: &[f64; 4]| (p[1] - p[3]).exp();
    let (uf, _) = solve_r31(&spec, f, &opts()).unwrap();
    let (ug, _) = solve_r31(&spec, g, &opts()).unwrap();
    let (us, _) = solve_r31(&spec, |p| 2.0 * f(p) - 3.0 * g(p), &opts()).unwrap();
    let worst = (0..spec.len()).map(|i| (us.values[i] - 2.0 * uf.values[i] + 3.0 * ug.values[i]).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn perturbation_moves_the_reduced_residual() {
    // adding ε ν₁²ν₂ to V₀ changes the first reduced equation by 2εν₂²
    let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, 9).unwrap();
    let trilinear = &(&nu(1) * &nu(2)) * &nu(3);
    let eps = 1e-3;
    let base = GridField::from_poly(&spec, &trilinear);
    let bumped = GridField::from_fn(&spec, |p| trilinear.eval_f64(p) + eps * p[1] * p[1] * p[2]);
    let r0 = grid_residual_diagonal(&SampledDiagonal::with_v0(base, [&nu(2), &nu(3), &nu(1)]));
    let r1 = grid_residual_diagonal(&SampledDiagonal::with_v0(bumped, [&nu(2), &nu(3), &nu(1)]));
    let l0 = r0.get("l_red_0").unwrap().max;
    let l1 = r1.get("l_red_0").unwrap().max;
    assert!(l0 < 1e-10, "{l0}");
    // max of 2εν₂² over interior points with ν₂ ≤ 2 − h
    let h = spec.h(0);
    let expected = 2.0 * eps * (2.0 - h) * (2.0 - h);
    assert!((l1 - expected).abs() < 1e-9, "{l1} vs {expected}");
}

#[test]
fn solved_field_satisfies_the_reduced_system() {
    let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, 17).unwrap();
    let quartic = r31_quartic();
    let (u, _) = solve_r31(&spec, |p| quartic.eval_f64(p), &opts()).unwrap();
    let r = grid_residual_diagonal(&SampledDiagonal::with_v0(u, [&nu(2), &nu(3), &nu(1)]));
    assert!(r.get("l_red_0").unwrap().max < 1e-7, "{:?}", r.get("l_red_0"));
    for e in &r.equations {
        if e.equation.starts_with("divergence") {
            assert!(e.max < 1e-12, "{e:?}");
        }
    }
}

#[test]
fn r22_linear_data_is_reproduced() {
    let spec = GridSpec::cube(&[1, 2], 0.0, 1.0, 21).unwrap();
    let lin = &(&nu(1) + &nu(2).scale(&toric_spin7::poly::q(2))) + &Poly::one();
    let (u, _) = solve_r22(&spec, 1.0, 0.5, |p| lin.eval_f64(p), &opts()).unwrap();
    assert!(u.interior_max_error(|p| lin.eval_f64(p)) < 1e-10);
}

#[test]
fn r22_manufactured_is_second_order() {
    let exact = r22_manufactured();
    let err = |n| {
        let spec = GridSpec::cube(&[1, 2], 0.0, 1.0, n).unwrap();
        let (u, _) = solve_r22(&spec, 1.0, 1.0, |p| exact.eval_f64(p), &opts()).unwrap();
        u.interior_max_error(|p| exact.eval_f64(p))
    };
    let (a, b) = (err(17), err(33));
    assert!((3.5..=4.5).contains(&(a / b)), "{a} {b}");
}

#[test]
fn non_elliptic_coefficients_are_rejected() {
    let spec = GridSpec::cube(&[1, 2, 3], -1.0, 1.0, 9).unwrap();
    assert!(matches!(solve_r31(&spec, |_| 0.0, &opts()), Err(PdeError::NonElliptic { .. })));
    let spec = GridSpec::cube(&[1, 2], 0.0, 1.0, 9).unwrap();
    assert!(matches!(solve_r22(&spec, -1.0, 0.0, |_| 0.0, &opts()), Err(PdeError::NonElliptic { .. })));
}

#[test]
fn iteration_cap_is_reported() {
    let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, 17).unwrap();
    let o = SorOptions { max_iter: 3, ..opts() };
    match solve_r31(&spec, |p| p[1] * p[2] * p[3], &o) {
        Err(PdeError::NotConverged { iterations, history, .. }) => {
            assert_eq!(iterations, 3);
            assert_eq!(history.len(), 3);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn serial_and_parallel_agree() {
    let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, 11).unwrap();
    let one = |_: &[f64; 4]| 1.0;
    let bc = |p: &[f64; 4]| p[1].powi(3) - p[2] * p[3];
    let (a, ra) = solve_dirichlet(&spec, &[&one, &one, &one], bc, &opts()).unwrap();
    let (b, rb) = solve_dirichlet(&spec, &[&one, &one, &one], bc, &SorOptions { parallel: false, ..opts() }).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(ra.iterations, rb.iterations);
}

#[test]
fn csv_round_trip() {
    let spec = GridSpec::cube(&[1, 2], 0.0, 1.0, 5).unwrap();
    let u = GridField::from_fn(&spec, |p| p[1] - 0.25 * p[2]);
    let back = GridField::from_csv(&u.to_csv()).unwrap();
    assert_eq!(back.spec, u.spec);
    assert_eq!(back.values, u.values);
}
