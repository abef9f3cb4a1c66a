mod common;

use std::sync::Arc;

use common::c;
use subwave::fd::{compare_with_spectral, Leapfrog, SpatialOperator, StencilOperator};
use subwave::propagator::evolve_linear;
use subwave::spectral::{build_grid, SpectralField, SymbolProvider};
use subwave::transform::{transform_plan, SpatialGrid};

#[test]
fn manufactured_solution_converges_at_second_order() {
    let (order, runs) = common::manufactured_order();
    assert!((order - 2.0).abs() <= 0.3, "order {order}, errors {runs:?}");
}

#[test]
fn stencil_on_synthesized_mode_matches_eigenvalue() {
    let check = common::ModeCheck::new();
    for (node, k, l) in [(4, 1, 0), (5, 0, 2), (6, 2, 1)] {
        let rel = check.defect(node, k, l);
        assert!(rel <= 1e-2, "mode ({node},{k},{l}): relative error {rel:e}");
    }
}

#[test]
fn spectral_and_fd_agree_on_reference_run() {
    let coarse = common::reference_comparison(64);
    assert_eq!(coarse.times.len(), 5);
    assert!((coarse.times[4] - 1.0).abs() < 1e-12);
    assert!(coarse.passes(1e-2), "{coarse:?}");
    let fine = common::reference_comparison(128);
    let ratio = coarse.relative_errors[4] / fine.relative_errors[4];
    assert!((3.0..=5.0).contains(&ratio), "refinement ratio {ratio}");
}

#[test]
fn identical_zero_runs_agree() {
    let grid = Arc::new(build_grid(0.5, 2.0, 4, 3.0, 1).unwrap());
    let spatial = Arc::new(SpatialGrid::new([3.0; 3], [9; 3]).unwrap());
    let plan = transform_plan(&grid, &spatial).unwrap();
    let z = SpectralField::zeros(grid.clone());
    let op = SpatialOperator::SubLaplacian(StencilOperator::new(spatial.clone()).unwrap());
    let dt = 0.5 * Leapfrog::cfl_limit(&op, 1.0);
    let lf = Leapfrog::new(op, dt, 1.0, 1.0).unwrap();
    let zeros = vec![c(0.0); spatial.len()];
    let fd = lf.run(&zeros, &zeros, 4, 1, None).unwrap();
    let st = evolve_linear(&z, &z, 1.0, 1.0, &SymbolProvider::sub_laplacian(), &fd.times).unwrap();
    let rep = compare_with_spectral(&st, &fd, &plan, &spatial).unwrap();
    assert_eq!(rep.max_relative_error, 0.0);
}
