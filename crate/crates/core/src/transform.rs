//! Group Fourier transform on `H^1` in the Hermite basis.
//!
//! The representation used throughout is, with `s = sgn λ` and `a = √|λ|`,
//!
//! ```text
//! (π_λ(x, y, t) h)(w) = exp(i[λt + s a y·w + λ x·y/2]) · h(w + a x)
//! ```
//!
//! for which `dπ(X) = a ∂_w`, `dπ(Y) = i s a w` and `−dπ(L) = |λ| (−∂_w² + w²)`.
//! Shifting `w = v − X/2` (`X = a x`, `Y = a y`) removes the `x·y` phase:
//!
//! ```text
//! (π_λ(g) ψ_k, ψ_l) = e^{iλt} ∫ e^{i s Y v} ψ_k(v + X/2) ψ_l(v − X/2) dv
//! ```
//!
//! The Gauss–Hermite nodes in `v` do not depend on `x` or `y`, so forward and
//! inverse transforms factor into a `t` sum, a `y` sum and an `x` sum.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{GroupElement, MultiIndex};
use crate::hermite::{gauss_hermite, hermite_functions_into, GaussHermite};
use crate::spectral::{next_stamp, ModeGrid, ModeSpace, SpectralField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default edge-to-peak ratio tolerated by [`SpatialField::check_boundary_decay`].
pub const BOUNDARY_DECAY_LIMIT: f64 = 1e-8;

/// Uniform grid on `[−R_x, R_x] × [−R_y, R_y] × [−R_t, R_t]`, endpoints included.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    half_widths: [f64; 3],
    shape: [usize; 3],
    stamp: u64,
}

impl SpatialGrid {
    pub fn new(half_widths: [f64; 3], shape: [usize; 3]) -> Result<Self> {
        if half_widths.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidGrid(format!("half widths {half_widths:?}")));
        }
        if shape.iter().any(|&n| n < 3) {
            return Err(Error::InvalidGrid(format!("need ≥ 3 points per axis, got {shape:?}")));
        }
        Ok(Self {
            half_widths,
            shape,
            stamp: next_stamp(),
        })
    }

    pub fn half_widths(&self) -> [f64; 3] {
        self.half_widths
    }
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }
    pub fn stamp(&self) -> u64 {
        self.stamp
    }
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_widths[axis] / (self.shape[axis] - 1) as f64
    }

    pub fn coordinate(&self, axis: usize, j: usize) -> f64 {
        -self.half_widths[axis] + j as f64 * self.spacing(axis)
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        (0..self.shape[axis]).map(|j| self.coordinate(axis, j)).collect()
    }

    /// Trapezoid weights along one axis.
    pub fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        let n = self.shape[axis];
        (0..n)
            .map(|j| if j == 0 || j == n - 1 { 0.5 * h } else { h })
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..3).map(|a| self.spacing(a)).product()
    }

    /// Flat index, `t` fastest.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize, it: usize) -> usize {
        (ix * self.shape[1] + iy) * self.shape[2] + it
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let it = idx % self.shape[2];
        let rest = idx / self.shape[2];
        [rest / self.shape[1], rest % self.shape[1], it]
    }

    pub fn point(&self, idx: usize) -> GroupElement {
        let [ix, iy, it] = self.unravel(idx);
        GroupElement::h1(
            self.coordinate(0, ix),
            self.coordinate(1, iy),
            self.coordinate(2, it),
        )
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let c = self.unravel(idx);
        (0..3).any(|a| c[a] == 0 || c[a] == self.shape[a] - 1)
    }
}

/// Complex samples of a function on `H^1` over a [`SpatialGrid`].
#[derive(Debug, Clone)]
pub struct SpatialField {
    grid: Arc<SpatialGrid>,
    values: Vec<Complex64>,
}

impl SpatialField {
    pub fn zeros(grid: Arc<SpatialGrid>) -> Self {
        let values = vec![ZERO; grid.len()];
        Self { grid, values }
    }

    pub fn from_values(grid: Arc<SpatialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spatial field construction"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F>(grid: Arc<SpatialGrid>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> Complex64 + Sync,
    {
        let [nx, ny, nt] = grid.shape();
        let (xs, ys, ts) = (grid.axis(0), grid.axis(1), grid.axis(2));
        let values: Vec<Complex64> = (0..nx)
            .into_par_iter()
            .flat_map_iter(|ix| {
                let mut row = Vec::with_capacity(ny * nt);
                for &y in &ys {
                    for &t in &ts {
                        row.push(f(xs[ix], y, t));
                    }
                }
                row
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, ix: usize, iy: usize, it: usize) -> Complex64 {
        self.values[self.grid.index(ix, iy, it)]
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// Trapezoid `(∫ |f|^p)^{1/p}`; `p = ∞` gives the max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let [wx, wy, wt] = [0, 1, 2].map(|a| self.grid.axis_weights(a));
        let mut s = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let [ix, iy, it] = self.grid.unravel(idx);
            s += wx[ix] * wy[iy] * wt[it] * v.norm().powf(p);
        }
        s.powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let [wx, wy, wt] = [0, 1, 2].map(|a| self.grid.axis_weights(a));
        let mut s = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let [ix, iy, it] = self.grid.unravel(idx);
            s += wx[ix] * wy[iy] * wt[it] * v.norm_sqr();
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest boundary magnitude relative to the peak (0 for the zero field).
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let edge = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_boundary(*i))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        edge / peak
    }

    pub fn check_boundary_decay(&self, limit: f64) -> Result<()> {
        let ratio = self.boundary_ratio();
        if ratio > limit {
            Err(Error::BoundaryDecay { ratio, limit })
        } else {
            Ok(())
        }
    }
}

/// `M_{kl} = (π_λ(g) ψ_l, ψ_k)` on a retained index set, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix {
    pub lambda: f64,
    pub size: usize,
    pub entries: Vec<Complex64>,
}

impl RepresentationMatrix {
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.entries[k * self.size + l]
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.size != other.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                got: other.size,
            });
        }
        let n = self.size;
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            for m in 0..n {
                let a = self.entries[i * n + m];
                for j in 0..n {
                    entries[i * n + j] += a * other.entries[m * n + j];
                }
            }
        }
        Ok(Self {
            lambda: self.lambda,
            size: n,
            entries,
        })
    }

    /// `max |(M* M − I)_{kl}|` over `k, l < block`.
    pub fn unitarity_defect(&self, block: usize) -> f64 {
        let n = self.size;
        let block = block.min(n);
        let mut worst: f64 = 0.0;
        for k in 0..block {
            for l in 0..block {
                let s: Complex64 = (0..n)
                    .map(|m| self.entries[m * n + k].conj() * self.entries[m * n + l])
                    .sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    /// `max |A_{kl} − B_{kl}|` over `k, l < block`.
    pub fn block_distance(&self, other: &Self, block: usize) -> f64 {
        let block = block.min(self.size).min(other.size);
        let mut worst: f64 = 0.0;
        for k in 0..block {
            for l in 0..block {
                worst = worst.max((self.get(k, l) - other.get(k, l)).norm());
            }
        }
        worst
    }
}

/// Gauss–Hermite size that resolves `e^{iYv}` against polynomials of order `< 2K`.
fn quadrature_size(orders: usize, max_y: f64) -> usize {
    let oscillation = (0.7 * max_y * max_y).ceil() as usize + 16;
    (2 * orders + 32).max(oscillation)
}

// m[l][k] = ∫ e^{i s Y v} ψ_k(v + X/2) ψ_l(v − X/2) dv for k, l < orders
fn one_axis_matrix(orders: usize, sign: f64, big_x: f64, big_y: f64) -> Vec<Complex64> {
    let gh = gauss_hermite(quadrature_size(orders, big_y.abs()));
    let mut plus = vec![0.0; orders];
    let mut minus = vec![0.0; orders];
    let mut m = vec![ZERO; orders * orders];
    for (&v, &w) in gh.nodes.iter().zip(&gh.scaled_weights) {
        hermite_functions_into(v + 0.5 * big_x, &mut plus);
        hermite_functions_into(v - 0.5 * big_x, &mut minus);
        let phase = Complex64::from_polar(w, sign * big_y * v);
        for l in 0..orders {
            let pl = phase * minus[l];
            for k in 0..orders {
                m[l * orders + k] += pl * plus[k];
            }
        }
    }
    m
}

/// Matrix coefficients of `π_λ(g)` on the tensor Hermite functions `indices`.
pub fn representation_matrix(
    lambda: f64,
    g: &GroupElement,
    indices: &[MultiIndex],
) -> Result<RepresentationMatrix> {
    if lambda == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    if let Some(k) = indices.iter().find(|k| k.dim() != g.dim()) {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: k.dim(),
        });
    }
    let n = g.dim();
    let orders = indices
        .iter()
        .flat_map(|k| k.0.iter())
        .copied()
        .max()
        .map_or(1, |m| m as usize + 1);
    let sign = lambda.signum();
    let a = lambda.abs().sqrt();
    let axes: Vec<Vec<Complex64>> = (0..n)
        .map(|j| one_axis_matrix(orders, sign, a * g.x[j], a * g.y[j]))
        .collect();
    let centre = Complex64::from_polar(1.0, lambda * g.t);
    let size = indices.len();
    let mut entries = vec![ZERO; size * size];
    for (r, kr) in indices.iter().enumerate() {
        for (c, kc) in indices.iter().enumerate() {
            let mut v = centre;
            for (j, ax) in axes.iter().enumerate() {
                v *= ax[kr.0[j] as usize * orders + kc.0[j] as usize];
            }
            entries[r * size + c] = v;
        }
    }
    Ok(RepresentationMatrix {
        lambda,
        size,
        entries,
    })
}

/// Per-node tables shared by forward and inverse transforms.
#[derive(Debug)]
struct NodePlan {
    lambda: f64,
    sign: f64,
    root: f64,
    gh: Arc<GaussHermite>,
    /// `e^{−i s a y_m v_j}`, `[y][j]`
    phase_y: Vec<Complex64>,
}

/// Quadrature tables for one `(ModeGrid, SpatialGrid)` pair.
#[derive(Debug)]
pub struct TransformPlan {
    grid_stamp: u64,
    spatial_stamp: u64,
    orders: usize,
    nodes: Vec<NodePlan>,
}

impl TransformPlan {
    pub fn new(grid: &ModeGrid, spatial: &SpatialGrid) -> Result<Self> {
        if grid.n() != 1 {
            return Err(Error::Unsupported(format!(
                "spatial transforms are implemented for n = 1, got n = {}",
                grid.n()
            )));
        }
        let orders = grid.hermite_count();
        let ys = spatial.axis(1);
        let ry = spatial.half_widths()[1];
        let nodes = grid
            .lambda_nodes()
            .par_iter()
            .map(|&lambda| {
                let sign = lambda.signum();
                let root = lambda.abs().sqrt();
                let gh = gauss_hermite(quadrature_size(orders, root * ry));
                let mut phase_y = Vec::with_capacity(ys.len() * gh.len());
                for &y in &ys {
                    for &v in &gh.nodes {
                        phase_y.push(Complex64::from_polar(1.0, -sign * root * y * v));
                    }
                }
                NodePlan {
                    lambda,
                    sign,
                    root,
                    gh,
                    phase_y,
                }
            })
            .collect();
        Ok(Self {
            grid_stamp: grid.stamp(),
            spatial_stamp: spatial.stamp(),
            orders,
            nodes,
        })
    }

    fn check(&self, grid: &ModeGrid, spatial: &SpatialGrid) -> Result<()> {
        if grid.stamp() != self.grid_stamp || spatial.stamp() != self.spatial_stamp {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn forward(&self, f: &SpatialField, grid: &Arc<ModeGrid>) -> Result<SpectralField> {
        // the coefficients do not involve the Plancherel constant, so a
        // recalibrated copy of the planned grid is accepted
        if grid.node_count() != self.nodes.len()
            || grid.hermite_count() != self.orders
            || f.grid().stamp() != self.spatial_stamp
        {
            return Err(Error::GridMismatch);
        }
        let sp = f.grid();
        let [nx, ny, nt] = sp.shape();
        let (xs, ts) = (sp.axis(0), sp.axis(2));
        let [wx, wy, wt] = [0, 1, 2].map(|a| sp.axis_weights(a));
        let kk = self.orders;
        let values = f.values();
        let blocks: Vec<Vec<Complex64>> = self
            .nodes
            .par_iter()
            .map(|node| {
                let phase_t: Vec<Complex64> = ts
                    .iter()
                    .zip(&wt)
                    .map(|(&t, &w)| Complex64::from_polar(w, -node.lambda * t))
                    .collect();
                // t sum
                let mut ft = vec![ZERO; nx * ny];
                for (cell, slot) in ft.iter_mut().enumerate() {
                    let row = &values[cell * nt..(cell + 1) * nt];
                    *slot = row.iter().zip(&phase_t).map(|(a, b)| a * b).sum();
                }
                // y sum
                let jn = node.gh.len();
                let mut gx = vec![ZERO; nx * jn];
                for ix in 0..nx {
                    let out = &mut gx[ix * jn..(ix + 1) * jn];
                    for iy in 0..ny {
                        let c = ft[ix * ny + iy] * wy[iy];
                        if c == ZERO {
                            continue;
                        }
                        let ph = &node.phase_y[iy * jn..(iy + 1) * jn];
                        for (o, p) in out.iter_mut().zip(ph) {
                            *o += c * p;
                        }
                    }
                }
                // x and v sums
                let mut block = vec![ZERO; kk * kk];
                let mut plus = vec![0.0; kk];
                let mut minus = vec![0.0; kk];
                for ix in 0..nx {
                    let half = 0.5 * node.root * xs[ix];
                    for (j, (&v, &w)) in node.gh.nodes.iter().zip(&node.gh.scaled_weights).enumerate() {
                        let c = gx[ix * jn + j] * (w * wx[ix]);
                        if c == ZERO {
                            continue;
                        }
                        hermite_functions_into(v + half, &mut plus);
                        hermite_functions_into(v - half, &mut minus);
                        for k in 0..kk {
                            let ck = c * plus[k];
                            let row = &mut block[k * kk..(k + 1) * kk];
                            for (r, m) in row.iter_mut().zip(&minus) {
                                *r += ck * m;
                            }
                        }
                    }
                }
                block
            })
            .collect();
        SpectralField::from_coeffs(grid.clone(), blocks.concat())
    }

    // Σ_{kl} F_kl ψ_k(v_j + X/2) ψ_l(v_j − X/2), times the v weight
    fn contract(&self, node: &NodePlan, block: &[Complex64], x: f64, out: &mut [Complex64]) {
        let kk = self.orders;
        let half = 0.5 * node.root * x;
        let mut plus = vec![0.0; kk];
        let mut minus = vec![0.0; kk];
        for (j, (&v, &w)) in node.gh.nodes.iter().zip(&node.gh.scaled_weights).enumerate() {
            hermite_functions_into(v + half, &mut plus);
            hermite_functions_into(v - half, &mut minus);
            let mut s = ZERO;
            for k in 0..kk {
                if plus[k] == 0.0 {
                    continue;
                }
                let row = &block[k * kk..(k + 1) * kk];
                let inner: Complex64 = row.iter().zip(&minus).map(|(a, b)| a * b).sum();
                s += inner * plus[k];
            }
            out[j] = s * w;
        }
    }

    /// Samples `Σ_i W_i Tr[F(λ_i) π_{λ_i}(g)]` on every point of `spatial`.
    pub fn synthesize(&self, field: &SpectralField, spatial: &Arc<SpatialGrid>) -> Result<SpatialField> {
        self.check(field.grid(), spatial)?;
        let [nx, ny, nt] = spatial.shape();
        let (xs, ts) = (spatial.axis(0), spatial.axis(2));
        let weights = field.grid().weights();
        // per node: P_i(x, y)
        let planes: Vec<Vec<Complex64>> = self
            .nodes
            .par_iter()
            .enumerate()
            .map(|(i, node)| {
                let block = field.block(i);
                let jn = node.gh.len();
                let mut plane = vec![ZERO; nx * ny];
                if block.iter().all(|c| *c == ZERO) {
                    return plane;
                }
                let mut h = vec![ZERO; jn];
                for ix in 0..nx {
                    self.contract(node, block, xs[ix], &mut h);
                    for iy in 0..ny {
                        let ph = &node.phase_y[iy * jn..(iy + 1) * jn];
                        // phase_y holds e^{−i s a y v}; synthesis needs the conjugate
                        plane[ix * ny + iy] =
                            h.iter().zip(ph).map(|(a, p)| a * p.conj()).sum::<Complex64>() * weights[i];
                    }
                }
                plane
            })
            .collect();
        let active: Vec<usize> = (0..planes.len())
            .filter(|&i| planes[i].iter().any(|c| *c != ZERO))
            .collect();
        let phase_t: Vec<Vec<Complex64>> = active
            .iter()
            .map(|&i| ts.iter().map(|&t| Complex64::from_polar(1.0, self.nodes[i].lambda * t)).collect())
            .collect();
        let values: Vec<Complex64> = (0..nx * ny)
            .into_par_iter()
            .flat_map_iter(|cell| {
                let mut row = vec![ZERO; nt];
                for (a, &i) in active.iter().enumerate() {
                    let p = planes[i][cell];
                    for (r, e) in row.iter_mut().zip(&phase_t[a]) {
                        *r += p * e;
                    }
                }
                row
            })
            .collect();
        SpatialField::from_values(spatial.clone(), values)
    }

    /// `Σ_i W_i Tr[F(λ_i) π_{λ_i}(g)]` at arbitrary points of `H^1`.
    pub fn evaluate(&self, field: &SpectralField, points: &[GroupElement]) -> Result<Vec<Complex64>> {
        if field.grid().stamp() != self.grid_stamp {
            return Err(Error::GridMismatch);
        }
        evaluate_points(self, field, points)
    }
}

fn evaluate_points(
    plan: &TransformPlan,
    field: &SpectralField,
    points: &[GroupElement],
) -> Result<Vec<Complex64>> {
    if let Some(p) = points.iter().find(|p| p.dim() != 1) {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: p.dim(),
        });
    }
    let weights = field.grid().weights();
    Ok(points
        .par_iter()
        .map(|g| {
            let (x, y, t) = (g.x[0], g.y[0], g.t);
            let mut total = ZERO;
            for (i, node) in plan.nodes.iter().enumerate() {
                let block = field.block(i);
                if block.iter().all(|c| *c == ZERO) {
                    continue;
                }
                let mut h = vec![ZERO; node.gh.len()];
                plan.contract(node, block, x, &mut h);
                let s: Complex64 = h
                    .iter()
                    .zip(&node.gh.nodes)
                    .map(|(a, &v)| a * Complex64::from_polar(1.0, node.sign * node.root * y * v))
                    .sum();
                total += s * Complex64::from_polar(weights[i], node.lambda * t);
            }
            total
        })
        .collect())
}

type PlanKey = (u64, u64);

fn plan_cache() -> &'static Mutex<HashMap<PlanKey, Arc<TransformPlan>>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<TransformPlan>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

const PLAN_CACHE_LIMIT: usize = 8;

/// Cached plan for a grid pair; built once, then shared read-only.
pub fn transform_plan(grid: &ModeGrid, spatial: &SpatialGrid) -> Result<Arc<TransformPlan>> {
    let key = (grid.stamp(), spatial.stamp());
    if let Some(p) = plan_cache().lock().unwrap().get(&key) {
        return Ok(p.clone());
    }
    let plan = Arc::new(TransformPlan::new(grid, spatial)?);
    let mut cache = plan_cache().lock().unwrap();
    if cache.len() >= PLAN_CACHE_LIMIT {
        cache.clear();
    }
    Ok(cache.entry(key).or_insert(plan).clone())
}

/// `f̂(λ_i)_{kl} = ∫ f(g) conj((π_{λ_i}(g) ψ_k, ψ_l)) dg` by trapezoid and Gauss–Hermite.
///
/// Data that has not decayed at the box edge is transformed anyway, with a
/// logged warning.
pub fn forward_transform(f: &SpatialField, grid: &Arc<ModeGrid>) -> Result<SpectralField> {
    let ratio = f.boundary_ratio();
    if ratio > BOUNDARY_DECAY_LIMIT {
        log::warn!("forward transform: edge/peak ratio {ratio:e} exceeds {BOUNDARY_DECAY_LIMIT:e}");
    }
    transform_plan(grid, f.grid())?.forward(f, grid)
}

pub fn inverse_transform(field: &SpectralField, points: &[GroupElement]) -> Result<Vec<Complex64>> {
    let grid = field.grid();
    if grid.n() != 1 {
        return Err(Error::Unsupported(format!(
            "spatial transforms are implemented for n = 1, got n = {}",
            grid.n()
        )));
    }
    // point evaluation only needs the quadrature rules, not the y tables
    let probe = SpatialGrid::new([1.0, 1.0, 1.0], [3, 3, 3])?;
    let plan = TransformPlan::new(grid, &probe)?;
    evaluate_points(&plan, field, points)
}

/// Inverse transform sampled on a whole spatial grid.
pub fn synthesize(field: &SpectralField, spatial: &Arc<SpatialGrid>) -> Result<SpatialField> {
    transform_plan(field.grid(), spatial)?.synthesize(field, spatial)
}

/// Plancherel constant `c` with `c Σ_i raw_i ‖f̂(λ_i)‖²_HS = ‖f‖²_{L²}`.
///
/// Returns the constant and a copy of `grid` carrying it.
pub fn calibrate_plancherel(reference: &SpatialField, grid: &Arc<ModeGrid>) -> Result<(f64, ModeGrid)> {
    let spatial = reference.l2_norm();
    if !(spatial > 0.0) {
        return Err(Error::DegenerateReference("reference has zero norm".into()));
    }
    let fhat = forward_transform(reference, grid)?;
    let kk = grid.hermite_count() * grid.hermite_count();
    let raw: f64 = fhat
        .coeffs()
        .chunks(kk)
        .zip(grid.raw_weights())
        .map(|(b, w)| w * b.iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sum();
    if !(raw > 0.0) {
        return Err(Error::DegenerateReference(
            "reference has no spectral mass on the grid".into(),
        ));
    }
    let c = spatial * spatial / raw;
    Ok((c, grid.with_plancherel_constant(c)))
}
