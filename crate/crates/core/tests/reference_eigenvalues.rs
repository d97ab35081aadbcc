use std::f64::consts::PI;
use std::time::Instant;

use eigenbound::bounds::unit_ball_dirichlet;
use eigenbound::eigensolver::{
    extrapolated_eigenvalue, robin_reference_box, smallest_eigenvalue, GridOperator, OperatorKind, SolverOptions,
};
use eigenbound::geometry::Domain;
use eigenbound::heisenberg::HDomain;

fn square() -> Domain {
    Domain::cube(2, 1.0).unwrap()
}

#[test]
fn square_dirichlet_extrapolated() {
    let t = Instant::now();
    let e = extrapolated_eigenvalue(&square(), OperatorKind::DirichletLaplace, 1.0 / 128.0, &SolverOptions::default())
        .unwrap();
    let exact = 2.0 * PI * PI;
    assert!((e.extrapolated.unwrap() - exact).abs() < 5e-3 * exact);
    assert!(e.residual <= 1e-8 * e.value);
    assert!(t.elapsed().as_secs() < 60);
}

#[test]
fn disk_dirichlet() {
    let disk = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
    let op = GridOperator::dirichlet(&disk, 1.0 / 256.0).unwrap();
    let e = smallest_eigenvalue(&op, &SolverOptions::default()).unwrap();
    let exact = unit_ball_dirichlet(2).unwrap();
    assert!((e.value - exact).abs() < 1e-2 * exact, "{} vs {exact}", e.value);
}

#[test]
fn robin_square_fine_grid() {
    for sigma in [0.5, 1.0, 2.0] {
        let op = GridOperator::robin(&square(), sigma, 1.0 / 256.0).unwrap();
        let e = smallest_eigenvalue(&op, &SolverOptions::default()).unwrap();
        let exact = robin_reference_box(&[1.0, 1.0], sigma).unwrap();
        assert!((e.value - exact).abs() < 1e-2 * exact, "sigma {sigma}: {} vs {exact}", e.value);
    }
}

#[test]
fn clamped_plate_extrapolated() {
    let e = extrapolated_eigenvalue(&square(), OperatorKind::BilaplaceClamped, 1.0 / 32.0, &SolverOptions::default())
        .unwrap();
    let x = e.extrapolated.unwrap();
    assert!((x - 1295.0).abs() < 0.02 * 1295.0, "{x}");
}

#[test]
fn heisenberg_cube() {
    let hd = HDomain::new(Domain::open_box(vec![-1.0; 3], vec![1.0; 3]).unwrap(), 1).unwrap();
    let coarse = smallest_eigenvalue(&GridOperator::heisenberg(&hd, 2.0 / 16.0).unwrap(), &SolverOptions::default())
        .unwrap();
    let fine = smallest_eigenvalue(&GridOperator::heisenberg(&hd, 2.0 / 32.0).unwrap(), &SolverOptions::default())
        .unwrap();
    assert!(fine.value > PI * PI / 2.0);
    assert!((fine.value - coarse.value).abs() < 0.1 * fine.value, "{} {}", coarse.value, fine.value);
}
