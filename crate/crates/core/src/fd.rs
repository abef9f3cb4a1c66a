//! Finite-difference reference solver on a truncated box in `H^1 ≅ R^3`.
//!
//! The sub-Laplacian is discretized in expanded form
//! `∂xx + ∂yy + ¼(x²+y²)∂ττ + (x∂y − y∂x)∂τ` with second-order centred
//! differences and zero values outside the box.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::Trajectory;
use crate::transform::{SpatialField, SpatialGrid, TransformPlan};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Minimum points per axis.
pub const MIN_POINTS: usize = 5;

#[derive(Debug, Clone)]
pub struct StencilOperator {
    grid: Arc<SpatialGrid>,
    h: [f64; 3],
}

impl StencilOperator {
    pub fn new(grid: Arc<SpatialGrid>) -> Result<Self> {
        let shape = grid.shape();
        if shape.iter().any(|&s| s < MIN_POINTS) {
            return Err(Error::GridTooSmall(format!(
                "stencil needs ≥ {MIN_POINTS} points per axis, got {shape:?}"
            )));
        }
        let h = [grid.spacing(0), grid.spacing(1), grid.spacing(2)];
        Ok(Self { grid, h })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    /// Applies the discrete operator to raw samples in grid order.
    pub fn apply_values(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let [nx, ny, nt] = self.grid.shape();
        if v.len() != nx * ny * nt {
            return Err(Error::DimensionMismatch {
                expected: nx * ny * nt,
                got: v.len(),
            });
        }
        let [hx, hy, ht] = self.h;
        let (cxx, cyy, ctt) = (1.0 / (hx * hx), 1.0 / (hy * hy), 1.0 / (ht * ht));
        let (cxt, cyt) = (1.0 / (4.0 * hx * ht), 1.0 / (4.0 * hy * ht));
        let at = |ix: isize, iy: isize, it: isize| -> Complex64 {
            if ix < 0 || iy < 0 || it < 0 || ix >= nx as isize || iy >= ny as isize || it >= nt as isize {
                ZERO
            } else {
                v[(ix as usize * ny + iy as usize) * nt + it as usize]
            }
        };
        let mut out = vec![ZERO; v.len()];
        out.par_chunks_mut(ny * nt).enumerate().for_each(|(ix, slab)| {
            let x = self.grid.coordinate(0, ix);
            let i = ix as isize;
            for iy in 0..ny {
                let y = self.grid.coordinate(1, iy);
                let j = iy as isize;
                let c_tt = 0.25 * (x * x + y * y) * ctt;
                for it in 0..nt {
                    let k = it as isize;
                    let u = at(i, j, k);
                    let dxx = (at(i + 1, j, k) - 2.0 * u + at(i - 1, j, k)) * cxx;
                    let dyy = (at(i, j + 1, k) - 2.0 * u + at(i, j - 1, k)) * cyy;
                    let dtt = (at(i, j, k + 1) - 2.0 * u + at(i, j, k - 1)) * c_tt;
                    let dyt = (at(i, j + 1, k + 1) - at(i, j + 1, k - 1) - at(i, j - 1, k + 1)
                        + at(i, j - 1, k - 1))
                        * cyt;
                    let dxt = (at(i + 1, j, k + 1) - at(i + 1, j, k - 1) - at(i - 1, j, k + 1)
                        + at(i - 1, j, k - 1))
                        * cxt;
                    slab[iy * nt + it] = dxx + dyy + dtt + x * dyt - y * dxt;
                }
            }
        });
        Ok(out)
    }

    pub fn apply(&self, f: &SpatialField) -> Result<SpatialField> {
        if f.grid().stamp() != self.grid.stamp() {
            return Err(Error::GridMismatch);
        }
        SpatialField::from_values(self.grid.clone(), self.apply_values(f.values())?)
    }

    /// Gershgorin bound on the spectral radius, taken at the box corner.
    pub fn gershgorin_bound(&self) -> f64 {
        let [hx, hy, ht] = self.h;
        let [rx, ry, _] = self.grid.half_widths();
        let c = 0.25 * (rx * rx + ry * ry);
        4.0 / (hx * hx) + 4.0 / (hy * hy) + 4.0 * c / (ht * ht) + rx / (hy * ht) + ry / (hx * ht)
    }
}

pub fn apply_sub_laplacian(f: &SpatialField) -> Result<SpatialField> {
    StencilOperator::new(f.grid().clone())?.apply(f)
}

#[derive(Debug, Clone)]
pub enum SpatialOperator {
    SubLaplacian(StencilOperator),
    /// Drops the spatial term; used to isolate the time stencil.
    Zero(Arc<SpatialGrid>),
}

impl SpatialOperator {
    pub fn grid(&self) -> &Arc<SpatialGrid> {
        match self {
            SpatialOperator::SubLaplacian(op) => op.grid(),
            SpatialOperator::Zero(g) => g,
        }
    }

    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            SpatialOperator::SubLaplacian(op) => op.apply_values(v),
            SpatialOperator::Zero(_) => Ok(vec![ZERO; v.len()]),
        }
    }

    fn radius(&self) -> f64 {
        match self {
            SpatialOperator::SubLaplacian(op) => op.gershgorin_bound(),
            SpatialOperator::Zero(_) => 0.0,
        }
    }
}

/// Time-centred leapfrog for `u_tt − Lu + b u_t + m u = source`.
#[derive(Debug, Clone)]
pub struct Leapfrog {
    op: SpatialOperator,
    dt: f64,
    b: f64,
    m: f64,
}

impl Leapfrog {
    /// Largest stable step, `2/√(ρ + m)` with `ρ` the Gershgorin bound.
    pub fn cfl_limit(op: &SpatialOperator, m: f64) -> f64 {
        let r = op.radius() + m.max(0.0);
        if r == 0.0 {
            f64::INFINITY
        } else {
            2.0 / r.sqrt()
        }
    }

    pub fn new(op: SpatialOperator, dt: f64, b: f64, m: f64) -> Result<Self> {
        if !(dt > 0.0) || b < 0.0 || m < 0.0 {
            return Err(Error::Constraint(format!("need dt > 0, b ≥ 0, m ≥ 0; got {dt}, {b}, {m}")));
        }
        let limit = Self::cfl_limit(&op, m);
        if dt > limit {
            return Err(Error::CflViolation { dt, limit });
        }
        Ok(Self { op, dt, b, m })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        self.op.grid()
    }

    fn check(&self, v: &[Complex64]) -> Result<()> {
        let n = self.grid().len();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `u_next = [2u − (1 − b dt/2) u_prev + dt²(Lu − m u + source)] / (1 + b dt/2)`.
    pub fn step(
        &self,
        prev: &[Complex64],
        curr: &[Complex64],
        source: Option<&[Complex64]>,
    ) -> Result<Vec<Complex64>> {
        self.check(prev)?;
        self.check(curr)?;
        if let Some(s) = source {
            self.check(s)?;
        }
        let lu = self.op.apply(curr)?;
        let (dt2, hb) = (self.dt * self.dt, 0.5 * self.b * self.dt);
        let out: Vec<Complex64> = (0..curr.len())
            .into_par_iter()
            .map(|i| {
                let src = source.map_or(ZERO, |s| s[i]);
                (2.0 * curr[i] - (1.0 - hb) * prev[i] + dt2 * (lu[i] - self.m * curr[i] + src))
                    / (1.0 + hb)
            })
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("leapfrog step"));
        }
        Ok(out)
    }

    /// Second-order Taylor start `u(dt) ≈ u0 + dt u1 + ½dt² u_tt(0)`.
    pub fn first_step(
        &self,
        u0: &[Complex64],
        u1: &[Complex64],
        source: Option<&[Complex64]>,
    ) -> Result<Vec<Complex64>> {
        self.check(u0)?;
        self.check(u1)?;
        let lu = self.op.apply(u0)?;
        let dt = self.dt;
        Ok((0..u0.len())
            .into_par_iter()
            .map(|i| {
                let src = source.map_or(ZERO, |s| s[i]);
                let acc = lu[i] - self.b * u1[i] - self.m * u0[i] + src;
                u0[i] + dt * u1[i] + 0.5 * dt * dt * acc
            })
            .collect())
    }

    /// Discrete energy `‖(u_n − u_{n−1})/dt‖² + Re⟨(m − L_h)u_n, u_{n−1}⟩` on cells.
    /// Non-increasing for `b ≥ 0` without source and positive under the step bound.
    pub fn energy(&self, prev: &[Complex64], curr: &[Complex64]) -> Result<f64> {
        self.check(prev)?;
        self.check(curr)?;
        let lu = self.op.apply(curr)?;
        let inv = 1.0 / self.dt;
        let s: f64 = (0..curr.len())
            .map(|i| {
                let v = (curr[i] - prev[i]) * inv;
                let a = self.m * curr[i] - lu[i];
                v.norm_sqr() + (a * prev[i].conj()).re
            })
            .sum();
        Ok(s * self.grid().cell_volume())
    }

    /// Runs `steps` steps, recording every `every`-th state. `source(t)` is
    /// evaluated at the current time.
    pub fn run(
        &self,
        u0: &[Complex64],
        u1: &[Complex64],
        steps: usize,
        every: usize,
        source: Option<&(dyn Fn(f64) -> Vec<Complex64> + Sync)>,
    ) -> Result<FdTrajectory> {
        let every = every.max(1);
        let grid = self.grid().clone();
        let edge = |v: &[Complex64]| -> f64 {
            let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if peak == 0.0 {
                return 0.0;
            }
            v.iter()
                .enumerate()
                .filter(|(i, _)| grid.is_boundary(*i))
                .map(|(_, z)| z.norm())
                .fold(0.0, f64::max)
                / peak
        };
        let mut traj = FdTrajectory {
            times: vec![0.0],
            values: vec![u0.to_vec()],
            energies: Vec::new(),
            max_boundary_ratio: edge(u0),
        };
        if steps == 0 {
            return Ok(traj);
        }
        let src0 = source.map(|f| f(0.0));
        let mut prev = u0.to_vec();
        let mut curr = self.first_step(u0, u1, src0.as_deref())?;
        traj.energies.push(self.energy(&prev, &curr)?);
        for n in 1..=steps {
            if n % every == 0 {
                traj.times.push(n as f64 * self.dt);
                traj.values.push(curr.clone());
                traj.max_boundary_ratio = traj.max_boundary_ratio.max(edge(&curr));
            }
            if n == steps {
                break;
            }
            let src = source.map(|f| f(n as f64 * self.dt));
            let next = self.step(&prev, &curr, src.as_deref())?;
            prev = std::mem::replace(&mut curr, next);
            traj.energies.push(self.energy(&prev, &curr)?);
        }
        Ok(traj)
    }
}

#[derive(Debug, Clone)]
pub struct FdTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
    /// Energy after each step, starting with the interval `[0, dt]`.
    pub energies: Vec<f64>,
    /// Largest edge/peak magnitude over the recorded states.
    pub max_boundary_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
}

impl ComparisonReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative_error <= tol
    }
}

/// Relative L² gap between a spectral trajectory synthesized to the fd grid
/// and the fd states at matching times.
pub fn compare_with_spectral(
    spectral: &Trajectory,
    fd: &FdTrajectory,
    plan: &TransformPlan,
    grid: &Arc<SpatialGrid>,
) -> Result<ComparisonReport> {
    let mut times = Vec::new();
    let mut errs = Vec::new();
    for (t, vals) in fd.times.iter().zip(&fd.values) {
        let Some(j) = spectral.times.iter().position(|s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
        else {
            continue;
        };
        let reference = plan.synthesize(&spectral.values[j], grid)?;
        let diff: Vec<Complex64> = reference
            .values()
            .iter()
            .zip(vals)
            .map(|(a, b)| a - b)
            .collect();
        let d = SpatialField::from_values(grid.clone(), diff)?.l2_norm();
        let r = reference.l2_norm();
        times.push(*t);
        errs.push(if r == 0.0 { d } else { d / r });
    }
    if times.is_empty() {
        return Err(Error::InsufficientSamples(
            "no common sample times between the runs".into(),
        ));
    }
    let max = errs.iter().copied().fold(0.0, f64::max);
    Ok(ComparisonReport {
        times,
        relative_errors: errs,
        max_relative_error: max,
    })
}

/// Relative residual `‖u_tt − Lu + b u_t + m u − f‖ / (‖u_tt‖ + ‖Lu‖ + b‖u_t‖ + m‖u‖ + ‖f‖)`
/// over the interior, with `L` from the stencil.
pub fn relative_residual(
    op: &StencilOperator,
    u_tt: &SpatialField,
    u_t: &SpatialField,
    u: &SpatialField,
    f: &SpatialField,
    b: f64,
    m: f64,
) -> Result<f64> {
    let lu = op.apply(u)?;
    let grid = op.grid();
    let mut res = 0.0;
    let mut scale = [0.0f64; 5];
    for i in 0..grid.len() {
        if grid.is_boundary(i) {
            continue;
        }
        let (a, l, v, w, s) = (
            u_tt.values()[i],
            lu.values()[i],
            u_t.values()[i],
            u.values()[i],
            f.values()[i],
        );
        res += (a - l + b * v + m * w - s).norm_sqr();
        for (acc, z) in scale.iter_mut().zip([a, l, b * v, m * w, s]) {
            *acc += z.norm_sqr();
        }
    }
    let denom: f64 = scale.iter().map(|s| s.sqrt()).sum();
    Ok(if denom == 0.0 { res.sqrt() } else { res.sqrt() / denom })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn grid(r: [f64; 3], n: [usize; 3]) -> Arc<SpatialGrid> {
        Arc::new(SpatialGrid::new(r, n).unwrap())
    }

    fn interior(g: &SpatialGrid, i: usize) -> bool {
        let c = g.unravel(i);
        let s = g.shape();
        (0..3).all(|a| c[a] >= 2 && c[a] + 2 < s[a])
    }

    #[test]
    fn polynomials_and_constants() {
        let g = grid([1.0, 1.5, 2.0], [9, 11, 13]);
        let op = StencilOperator::new(g.clone()).unwrap();
        // (f, Lf) pairs on polynomials of degree ≤ 2 per variable
        type Pair = (fn(f64, f64, f64) -> f64, fn(f64, f64, f64) -> f64);
        let cases: [Pair; 5] = [
            (|_, _, _| 3.0, |_, _, _| 0.0),
            (|x, _, _| x * x, |_, _, _| 2.0),
            (|_, _, t| t * t, |x, y, _| 0.5 * (x * x + y * y)),
            (|_, y, t| y * t, |x, _, _| x),
            (|x, y, t| x * t + y * y * t * t, |x, y, t| {
                2.0 * t * t + 0.5 * (x * x + y * y) * y * y + x * 4.0 * y * t - y
            }),
        ];
        for (f, lf) in cases {
            let field = SpatialField::from_fn(g.clone(), |x, y, t| c(f(x, y, t))).unwrap();
            let out = op.apply(&field).unwrap();
            for i in 0..g.len() {
                if !interior(&g, i) {
                    continue;
                }
                let p = g.point(i);
                let (x, y, t) = (p.x[0], p.y[0], p.t);
                assert!((out.values()[i] - lf(x, y, t)).norm() < 1e-10, "at {x},{y},{t}");
            }
        }
    }

    #[test]
    fn too_small_grid() {
        let g = grid([1.0; 3], [5, 4, 5]);
        assert!(matches!(StencilOperator::new(g), Err(Error::GridTooSmall(_))));
    }

    #[test]
    fn assembled_matrix_is_symmetric_negative_semidefinite() {
        let g = grid([1.3, 0.9, 1.1], [5, 6, 5]);
        let op = StencilOperator::new(g.clone()).unwrap();
        let n = g.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut e = vec![ZERO; n];
            e[j] = c(1.0);
            let col = op.apply_values(&e).unwrap();
            for i in 0..n {
                assert_eq!(col[i].im, 0.0);
                a[(i, j)] = col[i].re;
            }
        }
        assert!((&a - a.transpose()).amax() < 1e-12);
        let eig = a.symmetric_eigenvalues();
        let top = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(top <= 1e-10, "largest eigenvalue {top}");
        let radius = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(radius <= op.gershgorin_bound());
    }

    #[test]
    fn free_motion_and_zero_state() {
        let g = grid([1.0; 3], [5, 5, 5]);
        let lf = Leapfrog::new(SpatialOperator::Zero(g.clone()), 0.1, 0.0, 0.0).unwrap();
        let prev: Vec<Complex64> = (0..g.len()).map(|i| c(i as f64)).collect();
        let curr: Vec<Complex64> = (0..g.len()).map(|i| c((i * i) as f64 * 0.01)).collect();
        let next = lf.step(&prev, &curr, None).unwrap();
        for i in 0..g.len() {
            assert_eq!(next[i], 2.0 * curr[i] - prev[i]);
        }
        let op = SpatialOperator::SubLaplacian(StencilOperator::new(g.clone()).unwrap());
        let lf = Leapfrog::new(op, 0.01, 2.0, 2.0).unwrap();
        let z = vec![ZERO; g.len()];
        assert!(lf.step(&z, &z, None).unwrap().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let g = grid([2.0; 3], [9, 9, 9]);
        let op = SpatialOperator::SubLaplacian(StencilOperator::new(g).unwrap());
        let limit = Leapfrog::cfl_limit(&op, 1.0);
        assert!(Leapfrog::new(op.clone(), limit * 0.99, 1.0, 1.0).is_ok());
        assert!(matches!(
            Leapfrog::new(op, limit * 1.01, 1.0, 1.0),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn damped_energy_decreases_every_step() {
        let g = grid([4.0, 4.0, 4.0], [25, 25, 25]);
        let op = SpatialOperator::SubLaplacian(StencilOperator::new(g.clone()).unwrap());
        let dt = 0.9 * Leapfrog::cfl_limit(&op, 2.0);
        let lf = Leapfrog::new(op, dt, 1.0, 2.0).unwrap();
        let u0 = SpatialField::from_fn(g.clone(), |x, y, t| {
            Complex64::new((-(x * x + y * y + t * t)).exp(), 0.3 * (-(x * x + 2.0 * t * t)).exp() * y)
        })
        .unwrap();
        let u1 = u0.scale(Complex64::new(0.0, 0.5));
        let tr = lf.run(u0.values(), u1.values(), 60, 10, None).unwrap();
        assert!(tr.energies[0] > 0.0);
        for w in tr.energies.windows(2) {
            assert!(w[1] < w[0], "{} !< {}", w[1], w[0]);
        }
        // conservative without damping
        let op = SpatialOperator::SubLaplacian(StencilOperator::new(g.clone()).unwrap());
        let lf = Leapfrog::new(op, dt, 0.0, 2.0).unwrap();
        let tr = lf.run(u0.values(), u1.values(), 60, 10, None).unwrap();
        let e0 = tr.energies[0];
        assert!(tr.energies.iter().all(|e| (e / e0 - 1.0).abs() < 1e-10));
    }
}
