#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64;
use subwave::fd::{compare_with_spectral, ComparisonReport, Leapfrog, SpatialOperator, StencilOperator};
use subwave::propagator::{evolve_linear, fit_line};
use subwave::semilinear::{
    AdmissibilityBackend, HeisenbergBackend, Nonlinearity, SemilinearProblem, ZNormConfig,
};
use subwave::spectral::{build_grid, ModeGrid, SpectralField, SymbolProvider};
use subwave::transform::{calibrate_plancherel, transform_plan, SpatialField, SpatialGrid};

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Calibrates `grid` against `e^{−(x²+y²)/2 − t²/18} e^{iωt}`, whose
/// spectrum sits near `|λ| = ω`.
pub fn calibrated(grid: ModeGrid, omega: f64) -> Arc<ModeGrid> {
    let spatial = Arc::new(SpatialGrid::new([7.0, 7.0, 19.0], [57, 57, 153]).unwrap());
    let reference = SpatialField::from_fn(spatial, |x, y, t| {
        Complex64::from_polar((-(x * x + y * y) / 2.0 - t * t / 18.0).exp(), omega * t)
    })
    .unwrap();
    let (_, g) = calibrate_plancherel(&reference, &Arc::new(grid)).unwrap();
    Arc::new(g)
}

/// `Σ_λ g(λ) E_00` with `g` a Gaussian of mean `l0` and variance `var`.
pub fn profile_field(grid: &Arc<ModeGrid>, l0: f64, var: f64) -> SpectralField {
    let mut u = SpectralField::zeros(grid.clone());
    for (i, &lam) in grid.lambda_nodes().iter().enumerate() {
        u.set(i, 0, 0, c((-(lam - l0).powi(2) / (2.0 * var)).exp()));
    }
    u
}

/// `p = 2`, `μ = 1`, `b = m = 2` on `H^1`; data `g(λ)E_00` around λ = 4
/// rescaled so that `‖u0‖_{H^1} + ‖u1‖_{L²} = eps`, sampled on `[0, 4]` with step `dt`.
pub fn standard_semilinear(eps: f64, dt: f64) -> (SemilinearProblem, HeisenbergBackend) {
    let grid = calibrated(build_grid(1.0, 8.0, 84, 15.0, 1).unwrap(), 4.0);
    let spatial = Arc::new(SpatialGrid::new([5.0, 5.0, 7.5], [41, 41, 61]).unwrap());
    let backend = HeisenbergBackend::new(grid.clone(), spatial).unwrap();
    let provider = SymbolProvider::sub_laplacian();
    let u0 = profile_field(&grid, 4.0, 0.5);
    let u1 = SpectralField::zeros(grid);
    let steps = (4.0 / dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    let problem = SemilinearProblem {
        u0,
        u1,
        nonlinearity: Nonlinearity::power(c(1.0), 2.0).unwrap(),
        b: 2.0,
        m: 2.0,
        provider: provider.clone(),
        znorm: ZNormConfig::standard(2.0, 2.0, &provider, times),
        tol: 1e-8,
        max_iter: 30,
        admissibility_backend: Some(AdmissibilityBackend::Heisenberg { n: 1 }),
    };
    (problem.scaled_to(eps).unwrap(), backend)
}

/// Grid shared by the dilation checks: covers profiles around λ = 1 and λ = 4.
pub fn gn_grid() -> Arc<ModeGrid> {
    calibrated(build_grid(0.02, 10.0, 256, 7.0, 1).unwrap(), 2.0)
}

/// `u∘δ_r` for the λ-profile field around 1: coefficients `r^{−4} g(λ/r²)`,
/// with a box shrunk by `r` in x, y and `r²` in t.
pub fn gn_dilated(grid: &Arc<ModeGrid>, r: f64) -> (SpectralField, HeisenbergBackend) {
    let mut u = SpectralField::zeros(grid.clone());
    for (i, &lam) in grid.lambda_nodes().iter().enumerate() {
        let g = (-(lam / (r * r) - 1.0).powi(2) / (2.0 * 0.09)).exp();
        u.set(i, 0, 0, c(r.powi(-4) * g));
    }
    let spatial =
        Arc::new(SpatialGrid::new([12.0 / r, 12.0 / r, 24.0 / (r * r)], [64, 64, 64]).unwrap());
    (u, HeisenbergBackend::new(grid.clone(), spatial).unwrap())
}

// u = cos(2s)·φ with φ = exp(−(x²+y²+τ²)); Lφ = [4(x²+y²) − 4 + (x²+y²)(τ² − ½)]φ
pub fn manufactured_error(points: usize) -> (f64, f64) {
    let (b, m, t_end) = (2.0, 2.0, 0.5);
    let g = Arc::new(SpatialGrid::new([4.0; 3], [points; 3]).unwrap());
    let phi = SpatialField::from_fn(g.clone(), |x, y, t| c((-(x * x + y * y + t * t)).exp())).unwrap();
    let lphi = SpatialField::from_fn(g.clone(), |x, y, t| {
        let r2 = x * x + y * y;
        c((4.0 * r2 - 4.0 + r2 * (t * t - 0.5)) * (-(r2 + t * t)).exp())
    })
    .unwrap();
    let op = SpatialOperator::SubLaplacian(StencilOperator::new(g.clone()).unwrap());
    let steps = (t_end / (0.5 * Leapfrog::cfl_limit(&op, m))).ceil() as usize;
    let dt = t_end / steps as f64;
    let lf = Leapfrog::new(op, dt, b, m).unwrap();
    let source = |s: f64| -> Vec<Complex64> {
        let (cs, sn) = ((2.0 * s).cos(), (2.0 * s).sin());
        let a = -4.0 * cs - 2.0 * b * sn + m * cs;
        phi.values()
            .iter()
            .zip(lphi.values())
            .map(|(p, l)| a * p - cs * l)
            .collect()
    };
    let u1 = vec![c(0.0); g.len()];
    let tr = lf.run(phi.values(), &u1, steps, steps, Some(&source)).unwrap();
    let last = tr.values.last().unwrap();
    let exact = phi.scale(c((2.0 * t_end).cos()));
    let diff: Vec<Complex64> = last.iter().zip(exact.values()).map(|(a, b)| a - b).collect();
    let err = SpatialField::from_values(g.clone(), diff).unwrap().l2_norm() / exact.l2_norm();
    (g.spacing(0), err)
}


/// Linear run with `b = m = 2` from data `g(λ)E_00`, `g` Gaussian around λ = 1,
/// evolved to `T = 1` spectrally (K = 16) and by leapfrog on a `points³` box.
pub fn reference_comparison(points: usize) -> ComparisonReport {
    let (b, m) = (2.0, 2.0);
    let grid = Arc::new(build_grid(0.05, 2.5, 64, 31.0, 1).unwrap());
    assert_eq!(grid.hermite_count(), 16);
    let mut u0 = SpectralField::zeros(grid.clone());
    for (i, &lam) in grid.lambda_nodes().iter().enumerate() {
        u0.set(i, 0, 0, c((-(lam - 1.0).powi(2) / 0.18).exp()));
    }
    let u1 = u0.scale(Complex64::new(0.0, -0.5));
    let spatial = Arc::new(SpatialGrid::new([8.0, 8.0, 14.0], [points; 3]).unwrap());
    let plan = transform_plan(&grid, &spatial).unwrap();
    let f0 = plan.synthesize(&u0, &spatial).unwrap();
    let f1 = plan.synthesize(&u1, &spatial).unwrap();
    let op = SpatialOperator::SubLaplacian(StencilOperator::new(spatial.clone()).unwrap());
    let quarter = (0.25 / (0.5 * Leapfrog::cfl_limit(&op, m))).ceil() as usize;
    let steps = 4 * quarter;
    let lf = Leapfrog::new(op, 1.0 / steps as f64, b, m).unwrap();
    let fd = lf.run(f0.values(), f1.values(), steps, quarter, None).unwrap();
    assert!(fd.max_boundary_ratio < 1e-3, "boundary ratio {}", fd.max_boundary_ratio);
    let spectral = evolve_linear(&u0, &u1, b, m, &SymbolProvider::sub_laplacian(), &fd.times).unwrap();
    compare_with_spectral(&spectral, &fd, &plan, &spatial).unwrap()
}


/// Fitted order of [`manufactured_error`] over `n = 33, 65, 129`.
pub fn manufactured_order() -> (f64, Vec<(f64, f64)>) {
    let runs: Vec<(f64, f64)> = [33, 65, 129].iter().map(|&n| manufactured_error(n)).collect();
    let x: Vec<f64> = runs.iter().map(|r| r.0.ln()).collect();
    let y: Vec<f64> = runs.iter().map(|r| r.1.ln()).collect();
    (fit_line(&x, &y).0, runs)
}

/// Stencil `−L` against `|λ|μ_k` on synthesized single modes.
pub struct ModeCheck {
    pub grid: Arc<ModeGrid>,
    spatial: Arc<SpatialGrid>,
    plan: Arc<subwave::transform::TransformPlan>,
    op: StencilOperator,
}

impl ModeCheck {
    pub fn new() -> Self {
        let grid = Arc::new(build_grid(0.5, 4.0, 8, 15.0, 1).unwrap());
        let spatial = Arc::new(SpatialGrid::new([6.0, 6.0, 1.0], [161, 161, 81]).unwrap());
        let plan = transform_plan(&grid, &spatial).unwrap();
        let op = StencilOperator::new(spatial.clone()).unwrap();
        Self {
            grid,
            spatial,
            plan,
            op,
        }
    }

    /// Relative interior defect of `L e + |λ|μ_k e`, skipping two t-layers at each end.
    pub fn defect(&self, node: usize, k: usize, l: usize) -> f64 {
        let mut e = SpectralField::zeros(self.grid.clone());
        e.set(node, k, l, c(1.0));
        let eig = self.grid.lambda_nodes()[node].abs() * self.grid.mus()[k];
        let f = self.plan.synthesize(&e, &self.spatial).unwrap();
        let lf = self.op.apply(&f).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..self.spatial.len() {
            let [_, _, it] = self.spatial.unravel(i);
            if self.spatial.is_boundary(i) || it < 2 || it + 2 >= self.spatial.shape()[2] {
                continue;
            }
            num += (lf.values()[i] + eig * f.values()[i]).norm_sqr();
            den += (eig * f.values()[i]).norm_sqr();
        }
        (num / den).sqrt()
    }
}
