//! Frequency-space representation of functions.
//!
//! A [`ModeGrid`] discretizes the unitary dual of `H^n`: a symmetric set of
//! nonzero `λ` nodes carrying Plancherel weights `c_n |λ|^n dλ`, together
//! with a Hermite truncation `{k : μ_k ≤ μ_max}`. A [`SpectralField`] holds
//! the matrix coefficients `û(λ_i)_{kl}` laid out row-major in `(i, k, l)`.
//!
//! The same field type is reused for the Euclidean backend
//! ([`crate::abelian::AbelianGrid`]) through the [`ModeSpace`] trait, which
//! only needs per-mode weights and per-mode symbol values.

use std::ops::{Add, Mul, Sub};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{enumerate_multi_indices, oscillator_eigenvalue, MultiIndex};

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

pub(crate) fn next_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}

/// Positive operator whose symbol drives the evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolProvider {
    /// `(-L)^power` on `H^n`, symbol `(|λ| μ_k)^power`.
    SubLaplacian { power: u32 },
    /// `(-1)^m Σ_j a_j ∂_j^{2m}` on `R^d`, symbol `Σ_j a_j ξ_j^{2m}`.
    AbelianHomogeneous { coefficients: Vec<f64>, half_order: u32 },
    /// `(-Δ)^m` on `R^d`, symbol `|ξ|^{2m}`.
    LaplacianPower { dim: usize, half_order: u32 },
}

/// A point of the frequency set at which a symbol is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum Frequency<'a> {
    Heisenberg { lambda: f64, k: &'a MultiIndex },
    Abelian(&'a [f64]),
}

impl SymbolProvider {
    pub fn sub_laplacian() -> Self {
        SymbolProvider::SubLaplacian { power: 1 }
    }

    /// Homogeneous degree `ν`.
    pub fn degree(&self) -> f64 {
        match self {
            SymbolProvider::SubLaplacian { power } => 2.0 * *power as f64,
            SymbolProvider::AbelianHomogeneous { half_order, .. }
            | SymbolProvider::LaplacianPower { half_order, .. } => 2.0 * *half_order as f64,
        }
    }

    pub fn is_heisenberg(&self) -> bool {
        matches!(self, SymbolProvider::SubLaplacian { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SymbolProvider::SubLaplacian { power } if *power == 0 => {
                Err(Error::Constraint("sub-Laplacian power must be ≥ 1".into()))
            }
            SymbolProvider::AbelianHomogeneous {
                coefficients,
                half_order,
            } => {
                if *half_order == 0 {
                    return Err(Error::Constraint("operator order must be ≥ 2".into()));
                }
                if coefficients.is_empty() || coefficients.iter().any(|a| !(*a > 0.0)) {
                    return Err(Error::Constraint(
                        "homogeneous coefficients must be positive".into(),
                    ));
                }
                Ok(())
            }
            SymbolProvider::LaplacianPower { dim, half_order } => {
                if *half_order == 0 || *dim == 0 {
                    return Err(Error::Constraint(
                        "Laplacian power needs dim ≥ 1 and order ≥ 2".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Symbol at `λ` and `μ_k` without building a multi-index.
    pub fn heisenberg_symbol(&self, lambda: f64, mu: f64) -> Result<f64> {
        match self {
            SymbolProvider::SubLaplacian { power } => {
                if lambda == 0.0 {
                    return Err(Error::ZeroFrequency);
                }
                Ok((lambda.abs() * mu).powi(*power as i32))
            }
            _ => Err(Error::Unsupported(
                "Euclidean symbol evaluated on a Heisenberg frequency".into(),
            )),
        }
    }

    pub fn abelian_symbol(&self, xi: &[f64]) -> Result<f64> {
        match self {
            SymbolProvider::AbelianHomogeneous {
                coefficients,
                half_order,
            } => {
                if coefficients.len() != xi.len() {
                    return Err(Error::DimensionMismatch {
                        expected: coefficients.len(),
                        got: xi.len(),
                    });
                }
                let e = 2 * *half_order as i32;
                Ok(coefficients.iter().zip(xi).map(|(a, x)| a * x.powi(e)).sum())
            }
            SymbolProvider::LaplacianPower { dim, half_order } => {
                if *dim != xi.len() {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: xi.len(),
                    });
                }
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                Ok(r2.powi(*half_order as i32))
            }
            SymbolProvider::SubLaplacian { .. } => Err(Error::Unsupported(
                "sub-Laplacian symbol needs a Heisenberg frequency".into(),
            )),
        }
    }
}

pub fn symbol_value(provider: &SymbolProvider, at: Frequency<'_>) -> Result<f64> {
    match at {
        Frequency::Heisenberg { lambda, k } => {
            provider.heisenberg_symbol(lambda, oscillator_eigenvalue(k))
        }
        Frequency::Abelian(xi) => provider.abelian_symbol(xi),
    }
}

/// A discretized frequency set: anything that can weight and symbolize modes.
pub trait ModeSpace: std::fmt::Debug + Clone + Send + Sync {
    fn mode_count(&self) -> usize;

    /// Plancherel quadrature weight of every mode.
    fn mode_weights(&self) -> &[f64];

    /// Symbol of `provider` on every mode.
    fn mode_symbols(&self, provider: &SymbolProvider) -> Result<Vec<f64>>;

    /// Generation stamp; equal stamps mean interchangeable grids.
    fn stamp(&self) -> u64;
}

/// Discretization of `{(λ, k, l)}` for `H^n`.
#[derive(Debug, Clone)]
pub struct ModeGrid {
    n: usize,
    lambda_min: f64,
    lambda_max: f64,
    mu_max: f64,
    lambda_nodes: Vec<f64>,
    raw_weights: Vec<f64>,
    weights: Vec<f64>,
    plancherel_constant: f64,
    hermite: Vec<MultiIndex>,
    mus: Vec<f64>,
    per_mode_weights: Vec<f64>,
    stamp: u64,
}

/// Symmetric log-spaced trapezoid grid on `±[lambda_min, lambda_max]`.
///
/// `node_count` counts both signs and must be even. The Plancherel
/// constant starts at 1 until [`ModeGrid::with_plancherel_constant`] sets it.
pub fn build_grid(
    lambda_min: f64,
    lambda_max: f64,
    node_count: usize,
    mu_max: f64,
    n: usize,
) -> Result<ModeGrid> {
    if !(lambda_min > 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "need 0 < lambda_min < lambda_max, got [{lambda_min}, {lambda_max}]"
        )));
    }
    if node_count < 2 || node_count % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "node_count must be even and ≥ 2, got {node_count}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidGrid("dimension n must be ≥ 1".into()));
    }
    let hermite = enumerate_multi_indices(n, mu_max);
    if hermite.is_empty() {
        return Err(Error::InvalidGrid(format!(
            "no multi-index satisfies μ_k ≤ {mu_max} for n = {n}"
        )));
    }
    let per_side = node_count / 2;
    let nf = n as i32;
    let (mags, mag_weights): (Vec<f64>, Vec<f64>) = if per_side == 1 {
        let mid = (lambda_min * lambda_max).sqrt();
        let exact = (lambda_max.powi(nf + 1) - lambda_min.powi(nf + 1)) / (nf + 1) as f64;
        (vec![mid], vec![exact])
    } else {
        let du = (lambda_max / lambda_min).ln() / (per_side - 1) as f64;
        (0..per_side)
            .map(|j| {
                let lam = lambda_min * (j as f64 * du).exp();
                let end = if j == 0 || j == per_side - 1 { 0.5 } else { 1.0 };
                // dλ = λ du on the log axis
                (lam, end * du * lam.powi(nf + 1))
            })
            .unzip()
    };
    let mut lambda_nodes = Vec::with_capacity(node_count);
    let mut raw_weights = Vec::with_capacity(node_count);
    for j in (0..per_side).rev() {
        lambda_nodes.push(-mags[j]);
        raw_weights.push(mag_weights[j]);
    }
    for j in 0..per_side {
        lambda_nodes.push(mags[j]);
        raw_weights.push(mag_weights[j]);
    }
    let mus = hermite.iter().map(oscillator_eigenvalue).collect();
    let mut grid = ModeGrid {
        n,
        lambda_min,
        lambda_max,
        mu_max,
        lambda_nodes,
        weights: raw_weights.clone(),
        raw_weights,
        plancherel_constant: 1.0,
        hermite,
        mus,
        per_mode_weights: Vec::new(),
        stamp: next_stamp(),
    };
    grid.refresh_mode_weights();
    Ok(grid)
}

impl ModeGrid {
    fn refresh_mode_weights(&mut self) {
        let kk = self.hermite.len() * self.hermite.len();
        self.per_mode_weights = self
            .weights
            .iter()
            .flat_map(|&w| std::iter::repeat(w).take(kk))
            .collect();
    }

    /// Rebuild a grid from explicit nodes and weights (used by deserialization).
    pub fn from_parts(
        n: usize,
        lambda_nodes: Vec<f64>,
        weights: Vec<f64>,
        plancherel_constant: f64,
        hermite: Vec<MultiIndex>,
    ) -> Result<Self> {
        if lambda_nodes.len() != weights.len() || lambda_nodes.is_empty() {
            return Err(Error::InvalidGrid("node/weight length mismatch".into()));
        }
        if lambda_nodes.iter().any(|&l| l == 0.0 || !l.is_finite()) {
            return Err(Error::ZeroFrequency);
        }
        if weights.iter().any(|&w| !(w > 0.0)) || !(plancherel_constant > 0.0) {
            return Err(Error::InvalidGrid("weights must be positive".into()));
        }
        if hermite.is_empty() || hermite.iter().any(|k| k.dim() != n) {
            return Err(Error::InvalidGrid("bad Hermite index list".into()));
        }
        let mags = lambda_nodes.iter().map(|l| l.abs());
        let lambda_min = mags.clone().fold(f64::INFINITY, f64::min);
        let lambda_max = mags.fold(0.0, f64::max);
        let mus: Vec<f64> = hermite.iter().map(oscillator_eigenvalue).collect();
        let mu_max = mus.iter().copied().fold(0.0, f64::max);
        let raw_weights = weights.iter().map(|w| w / plancherel_constant).collect();
        let mut grid = ModeGrid {
            n,
            lambda_min,
            lambda_max,
            mu_max,
            lambda_nodes,
            raw_weights,
            weights,
            plancherel_constant,
            hermite,
            mus,
            per_mode_weights: Vec::new(),
            stamp: next_stamp(),
        };
        grid.refresh_mode_weights();
        Ok(grid)
    }

    /// Same nodes with a new Plancherel constant; gets a fresh stamp.
    pub fn with_plancherel_constant(&self, c: f64) -> ModeGrid {
        let mut g = self.clone();
        g.plancherel_constant = c;
        g.weights = g.raw_weights.iter().map(|w| w * c).collect();
        g.refresh_mode_weights();
        g.stamp = next_stamp();
        g
    }

    /// Same grid with every quadrature weight multiplied by `factor`.
    pub fn with_scaled_weights(&self, factor: f64) -> ModeGrid {
        let mut g = self.clone();
        g.raw_weights.iter_mut().for_each(|w| *w *= factor);
        g.weights = g.raw_weights.iter().map(|w| w * g.plancherel_constant).collect();
        g.refresh_mode_weights();
        g.stamp = next_stamp();
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }
    pub fn mu_max(&self) -> f64 {
        self.mu_max
    }
    pub fn lambda_nodes(&self) -> &[f64] {
        &self.lambda_nodes
    }
    /// Per-node weights including the Plancherel constant.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// Per-node weights without the Plancherel constant.
    pub fn raw_weights(&self) -> &[f64] {
        &self.raw_weights
    }
    pub fn plancherel_constant(&self) -> f64 {
        self.plancherel_constant
    }
    pub fn hermite_indices(&self) -> &[MultiIndex] {
        &self.hermite
    }
    pub fn hermite_count(&self) -> usize {
        self.hermite.len()
    }
    pub fn mus(&self) -> &[f64] {
        &self.mus
    }
    pub fn node_count(&self) -> usize {
        self.lambda_nodes.len()
    }

    #[inline]
    pub fn index(&self, node: usize, k: usize, l: usize) -> usize {
        let kk = self.hermite.len();
        (node * kk + k) * kk + l
    }

    /// Largest one-dimensional Hermite order appearing in the truncation.
    pub fn max_hermite_order(&self) -> usize {
        self.hermite
            .iter()
            .flat_map(|k| k.0.iter())
            .copied()
            .max()
            .unwrap_or(0) as usize
    }
}

impl ModeSpace for ModeGrid {
    fn mode_count(&self) -> usize {
        self.lambda_nodes.len() * self.hermite.len() * self.hermite.len()
    }

    fn mode_weights(&self) -> &[f64] {
        &self.per_mode_weights
    }

    fn mode_symbols(&self, provider: &SymbolProvider) -> Result<Vec<f64>> {
        provider.validate()?;
        let kk = self.hermite.len();
        let mut out = Vec::with_capacity(self.mode_count());
        for &lam in &self.lambda_nodes {
            for &mu in &self.mus {
                let s = provider.heisenberg_symbol(lam, mu)?;
                out.extend(std::iter::repeat(s).take(kk));
            }
        }
        Ok(out)
    }

    fn stamp(&self) -> u64 {
        self.stamp
    }
}

/// Coefficients of a function in frequency space.
#[derive(Debug, Clone)]
pub struct SpectralField<G: ModeSpace = ModeGrid> {
    grid: Arc<G>,
    coeffs: Vec<Complex64>,
}

impl<G: ModeSpace> SpectralField<G> {
    pub fn zeros(grid: Arc<G>) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); grid.mode_count()];
        Self { grid, coeffs }
    }

    pub fn from_coeffs(grid: Arc<G>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.mode_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.mode_count(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("spectral field construction"));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Arc<G> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.stamp() == other.grid.stamp()
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * alpha).collect(),
        }
    }

    /// `self + alpha · other`.
    pub fn axpy(&self, alpha: Complex64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    /// `√(Σ_modes w · m · |c|²)` for a per-mode multiplier `m`.
    pub fn weighted_norm(&self, multiplier: &[f64]) -> f64 {
        self.weighted_norm_sq(multiplier).sqrt()
    }

    pub fn weighted_norm_sq(&self, multiplier: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.mode_weights())
            .zip(multiplier)
            .map(|((c, w), m)| w * m * c.norm_sqr())
            .sum()
    }

    /// Plancherel-weighted inner product `Σ w f conj(g)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_grid(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(self.grid.mode_weights())
            .map(|((a, b), w)| a * b.conj() * *w)
            .sum())
    }
}

impl SpectralField<ModeGrid> {
    pub fn get(&self, node: usize, k: usize, l: usize) -> Complex64 {
        self.coeffs[self.grid.index(node, k, l)]
    }

    pub fn set(&mut self, node: usize, k: usize, l: usize, v: Complex64) {
        let i = self.grid.index(node, k, l);
        self.coeffs[i] = v;
    }

    /// The `K × K` block at node `i`, row-major.
    pub fn block(&self, node: usize) -> &[Complex64] {
        let kk = self.grid.hermite_count();
        &self.coeffs[node * kk * kk..(node + 1) * kk * kk]
    }
}

impl<G: ModeSpace> Add for &SpectralField<G> {
    type Output = SpectralField<G>;
    fn add(self, rhs: Self) -> SpectralField<G> {
        self.axpy(Complex64::new(1.0, 0.0), rhs)
            .expect("adding fields on different grids")
    }
}

impl<G: ModeSpace> Sub for &SpectralField<G> {
    type Output = SpectralField<G>;
    fn sub(self, rhs: Self) -> SpectralField<G> {
        self.axpy(Complex64::new(-1.0, 0.0), rhs)
            .expect("subtracting fields on different grids")
    }
}

impl<G: ModeSpace> Mul<Complex64> for &SpectralField<G> {
    type Output = SpectralField<G>;
    fn mul(self, rhs: Complex64) -> SpectralField<G> {
        self.scale(rhs)
    }
}

pub fn l2_norm<G: ModeSpace>(field: &SpectralField<G>) -> f64 {
    field
        .coeffs
        .iter()
        .zip(field.grid.mode_weights())
        .map(|(c, w)| w * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Per-mode multiplier `(mass + σ)^{2s/ν}` applied to squared coefficients.
pub fn sobolev_multiplier(symbols: &[f64], degree: f64, s: f64, mass: f64) -> Vec<f64> {
    let e = 2.0 * s / degree;
    symbols.iter().map(|&sig| (mass + sig).powf(e)).collect()
}

/// `‖(mass + R)^{s/ν} u‖_{L²}`; `mass = 1` gives the usual `H^s` norm.
pub fn sobolev_norm<G: ModeSpace>(
    field: &SpectralField<G>,
    provider: &SymbolProvider,
    s: f64,
    mass: f64,
) -> Result<f64> {
    if s == 0.0 {
        return Ok(l2_norm(field));
    }
    let symbols = field.grid.mode_symbols(provider)?;
    let mult = sobolev_multiplier(&symbols, provider.degree(), s, mass);
    Ok(field.weighted_norm(&mult))
}

/// `‖R^{a/ν} u‖_{L²}`.
pub fn homogeneous_sobolev_norm<G: ModeSpace>(
    field: &SpectralField<G>,
    provider: &SymbolProvider,
    a: f64,
) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Constraint(format!("order a must be positive, got {a}")));
    }
    sobolev_norm(field, provider, a, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn small_grid() -> Arc<ModeGrid> {
        Arc::new(build_grid(0.25, 8.0, 16, 7.0, 1).unwrap())
    }

    fn random_field(grid: &Arc<ModeGrid>, rng: &mut impl Rng) -> SpectralField {
        let coeffs = (0..grid.mode_count())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralField::from_coeffs(grid.clone(), coeffs).unwrap()
    }

    #[test]
    fn grid_shape_and_symmetry() {
        let g = build_grid(0.25, 8.0, 128, 31.0, 1).unwrap();
        assert_eq!(g.hermite_count(), 16);
        assert_eq!(g.node_count(), 128);
        let nodes = g.lambda_nodes();
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(nodes.iter().all(|&l| l != 0.0));
        for (a, b) in nodes.iter().zip(nodes.iter().rev()) {
            assert!((a + b).abs() < 1e-15);
        }
        assert!(g.weights().iter().all(|&w| w > 0.0));
        assert!((nodes[64] - 0.25).abs() < 1e-15 && (nodes[127] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_grids_rejected() {
        assert!(build_grid(0.25, 8.0, 1, 31.0, 1).is_err());
        assert!(build_grid(0.25, 8.0, 7, 31.0, 1).is_err());
        assert!(build_grid(0.0, 8.0, 16, 31.0, 1).is_err());
        assert!(build_grid(2.0, 1.0, 16, 31.0, 1).is_err());
        assert!(matches!(
            build_grid(0.25, 8.0, 16, 0.5, 1),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn interior_weight_is_lambda_power_times_spacing() {
        let g = build_grid(0.25, 8.0, 128, 31.0, 1).unwrap();
        let nodes = g.lambda_nodes();
        let i = 100;
        let dl = 0.5 * (nodes[i + 1] - nodes[i - 1]);
        let approx = nodes[i].abs() * dl;
        assert!((g.weights()[i] / approx - 1.0).abs() < 1e-3);
        // rule edge carries half weight
        let e = 127;
        let dl_edge = nodes[e] - nodes[e - 1];
        assert!((g.weights()[e] / (0.5 * nodes[e] * dl_edge) - 1.0).abs() < 0.05);
    }

    #[test]
    fn weights_reproduce_plancherel_measure() {
        // ∫ |λ| φ(λ) dλ for a smooth bump supported well inside the grid
        let g = build_grid(0.05, 20.0, 256, 1.0, 1).unwrap();
        let phi = |l: f64| (-(l.abs() - 3.0).powi(2)).exp();
        let quad: f64 = g
            .lambda_nodes()
            .iter()
            .zip(g.weights())
            .map(|(&l, &w)| w * phi(l))
            .sum();
        // exact: 2 ∫_0^∞ λ e^{-(λ-3)²} dλ
        let exact = 2.0 * (0.5 * (-9.0f64).exp() + 3.0 * std::f64::consts::PI.sqrt() / 2.0
            * (1.0 + erf(3.0)));
        assert!((quad / exact - 1.0).abs() < 1e-6, "{quad} vs {exact}");
    }

    fn erf(x: f64) -> f64 {
        // Abramowitz–Stegun 7.1.26 is too coarse here; integrate instead
        let n = 20_000;
        let h = x / n as f64;
        let f = |t: f64| (-t * t).exp();
        let s: f64 = (0..=n)
            .map(|j| {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                w * f(j as f64 * h)
            })
            .sum();
        2.0 / std::f64::consts::PI.sqrt() * s * h
    }

    #[test]
    fn symbol_examples() {
        let k = MultiIndex(vec![1]);
        let s1 = SymbolProvider::sub_laplacian();
        let s2 = SymbolProvider::SubLaplacian { power: 2 };
        let at = Frequency::Heisenberg { lambda: 2.0, k: &k };
        assert_eq!(symbol_value(&s1, at).unwrap(), 6.0);
        assert_eq!(symbol_value(&s2, at).unwrap(), 36.0);
        assert_eq!(
            symbol_value(&s1, Frequency::Heisenberg { lambda: 0.0, k: &k }),
            Err(Error::ZeroFrequency)
        );
        let ab = SymbolProvider::AbelianHomogeneous {
            coefficients: vec![1.0, 2.0],
            half_order: 2,
        };
        assert_eq!(symbol_value(&ab, Frequency::Abelian(&[1.0, 2.0])).unwrap(), 33.0);
        let lap2 = SymbolProvider::LaplacianPower { dim: 2, half_order: 2 };
        assert_eq!(symbol_value(&lap2, Frequency::Abelian(&[1.0, 2.0])).unwrap(), 25.0);
    }

    #[test]
    fn symbol_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = SymbolProvider::sub_laplacian();
        for _ in 0..1000 {
            let lam = rng.gen_range(-10.0..10.0);
            let r = rng.gen_range(0.1..10.0);
            let k = MultiIndex(vec![rng.gen_range(0..20)]);
            let a = symbol_value(&s, Frequency::Heisenberg { lambda: r * lam, k: &k }).unwrap();
            let b = r * symbol_value(&s, Frequency::Heisenberg { lambda: lam, k: &k }).unwrap();
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs());
        }
        let ab = SymbolProvider::AbelianHomogeneous {
            coefficients: vec![1.0, 0.5, 3.0],
            half_order: 2,
        };
        let xi = [0.3, -1.2, 0.7];
        let r = 1.9;
        let xr: Vec<f64> = xi.iter().map(|x| r * x).collect();
        let a = ab.abelian_symbol(&xr).unwrap();
        let b = r.powi(4) * ab.abelian_symbol(&xi).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn l2_norm_examples() {
        let g = small_grid();
        let z = SpectralField::zeros(g.clone());
        assert_eq!(l2_norm(&z), 0.0);
        let mut f = z.clone();
        f.set(3, 1, 2, c(1.0, 0.0));
        assert!((l2_norm(&f) - g.weights()[3].sqrt()).abs() < 1e-15);
        let mut h = z.clone();
        h.set(5, 0, 0, c(0.0, 2.0));
        let sum = &f + &h;
        assert!((l2_norm(&sum).powi(2) - l2_norm(&f).powi(2) - l2_norm(&h).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn parallelogram_law() {
        let g = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let f = random_field(&g, &mut rng);
            let h = random_field(&g, &mut rng);
            let a = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let b = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let af = f.scale(a);
            let bh = h.scale(b);
            let lhs = l2_norm(&(&af + &bh)).powi(2) + l2_norm(&(&af - &bh)).powi(2);
            let rhs = 2.0 * (l2_norm(&af).powi(2) + l2_norm(&bh).powi(2));
            assert!((lhs - rhs).abs() < 1e-12 * rhs);
        }
    }

    #[test]
    fn sobolev_examples() {
        let g = small_grid();
        let s = SymbolProvider::sub_laplacian();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_field(&g, &mut rng);
        assert_eq!(sobolev_norm(&f, &s, 0.0, 1.0).unwrap(), l2_norm(&f));

        // symbol 6 at λ = 2, μ = 3
        let g2 = Arc::new(build_grid(2.0, 4.0, 4, 3.0, 1).unwrap());
        let mut e = SpectralField::zeros(g2.clone());
        let node = 2; // +2.0
        assert!((g2.lambda_nodes()[node] - 2.0).abs() < 1e-15);
        e.set(node, 1, 0, c(1.0, 0.0));
        let w = g2.weights()[node];
        assert!((sobolev_norm(&e, &s, 1.0, 1.0).unwrap() - (7.0 * w).sqrt()).abs() < 1e-14);
        assert!((homogeneous_sobolev_norm(&e, &s, 1.0).unwrap() - (6.0 * w).sqrt()).abs() < 1e-14);
        assert!(homogeneous_sobolev_norm(&e, &s, 0.0).is_err());

        let mut prev = 0.0;
        for s_ord in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
            let v = sobolev_norm(&f, &s, s_ord, 1.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        for a in [0.5, 1.0, 2.0] {
            assert!(
                homogeneous_sobolev_norm(&f, &s, a).unwrap()
                    <= sobolev_norm(&f, &s, a, 1.0).unwrap()
            );
        }
    }

    #[test]
    fn sobolev_duality_bound() {
        let g = small_grid();
        let s = SymbolProvider::sub_laplacian();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = random_field(&g, &mut rng);
            let h = random_field(&g, &mut rng);
            let ord = rng.gen_range(-2.0..2.0);
            let ip = f.inner(&h).unwrap().norm();
            let bound = sobolev_norm(&f, &s, ord, 1.0).unwrap()
                * sobolev_norm(&h, &s, -ord, 1.0).unwrap();
            assert!(ip <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = SpectralField::zeros(small_grid());
        let b = SpectralField::zeros(small_grid());
        assert_eq!(a.axpy(c(1.0, 0.0), &b).unwrap_err(), Error::GridMismatch);
        assert!(a.axpy(c(1.0, 0.0), &a).is_ok());
    }

    #[test]
    fn calibrated_constant_scales_weights() {
        let g = build_grid(0.25, 8.0, 16, 7.0, 1).unwrap();
        let h = g.with_plancherel_constant(0.5);
        assert_ne!(g.stamp(), h.stamp());
        for (a, b) in g.weights().iter().zip(h.weights()) {
            assert!((0.5 * a - b).abs() < 1e-15);
        }
        let d = g.with_scaled_weights(2.0);
        assert!((d.weights()[0] - 2.0 * g.weights()[0]).abs() < 1e-15);
    }
}
