use num_complex::Complex64;

use dzk_core::solver::{mass, picard_map, reconstruct_n, reference_step, solve_picard, InitialData, SolverConfig};
use dzk_core::{FieldSeries, Grid3, ScalarField};

fn bump(g: &Grid3, amp: f64, c: [f64; 3]) -> ScalarField {
    ScalarField::from_fn(g, |x, y, z| {
        let r2 = (x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2);
        Complex64::new(amp * (-0.5 * r2).exp(), 0.0)
    })
    .unwrap()
}

fn data(g: &Grid3) -> InitialData {
    InitialData::new(bump(g, 0.1, [0.2, 0.0, 0.0]), bump(g, 0.1, [0.0, 0.3, 0.0]), bump(g, 0.05, [0.0, 0.0, 0.4])).unwrap()
}

fn cfg() -> SolverConfig {
    SolverConfig {
        t_end: 0.1,
        nt: 9,
        ..Default::default()
    }
}

#[test]
fn fixed_point_matches_split_step_and_conserves_mass() {
    let g = Grid3::cube(16, 12.0).unwrap();
    let d = data(&g);
    let sol = solve_picard(&d, &cfg()).unwrap();
    let diag = &sol.diagnostics;
    assert!(diag.converged);
    assert!(diag.residual <= 2.0 * cfg().picard_tol);
    assert!(diag.mass_drift < 1e-6);
    assert!(diag.ratios.iter().all(|r| *r < 0.5));
    let reference = reference_step(&d, &cfg()).unwrap();
    let err = (sol.e.last() - reference.last()).l2_norm() / reference.last().l2_norm();
    assert!(err < 1e-4, "{err}");
    assert!((mass(sol.e.last()) / mass(&d.e0) - 1.0).abs() < 1e-6);
}

#[test]
fn picard_map_keeps_initial_frame_and_density_is_real() {
    let g = Grid3::cube(16, 12.0).unwrap();
    let d = data(&g);
    let time = cfg().time_grid().unwrap();
    let e = FieldSeries::from_fn(time.clone(), |_| Ok(d.e0.clone())).unwrap();
    let psi = picard_map(&e, &d, &cfg()).unwrap();
    assert_eq!(psi.frame(0), &d.e0);
    let n = reconstruct_n(&e, &d, time.t_end()).unwrap();
    assert!(n.max_imag() < 1e-10);
    assert!(reconstruct_n(&e, &d, 0.0).unwrap().max_abs_diff(&d.n0) < 1e-14);
}

#[test]
fn swapped_data_give_swapped_solution() {
    let g = Grid3::cube(16, 12.0).unwrap();
    let d = data(&g);
    let a = solve_picard(&d, &cfg()).unwrap();
    let b = solve_picard(&d.swap_xy().unwrap(), &cfg()).unwrap();
    let sa = a.e.swap_xy().unwrap();
    for (x, y) in sa.frames().iter().zip(b.e.frames()) {
        assert!(x.max_abs_diff(y) < 1e-10);
    }
}
