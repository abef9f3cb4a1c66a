//! Semilinear damped waves `u_tt − Ru + b u_t + m u = f(u)` (with `R` the
//! positive operator given by a [`SymbolProvider`]) solved by Picard
//! iteration on the Duhamel map
//!
//! ```text
//! Γ[u](t) = u_lin(t) + ∫₀ᵗ K(t − τ) f(u(τ)) dτ
//! ```
//!
//! where `K` is the per-mode zero-displacement propagator. Nonlinearities are
//! applied pointwise in physical space through a [`FieldBackend`].

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::abelian::{self, AbelianGrid};
use crate::error::{Error, Result};
use crate::propagator::{damped_pair, decay_rate, evolve_with_symbols, fit_log_slope, Trajectory};
use crate::spectral::{sobolev_multiplier, ModeGrid, ModeSpace, SpectralField, SymbolProvider};
use crate::transform::{
    transform_plan, SpatialField, SpatialGrid, TransformPlan,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Edge/peak limit for `f(u)` on the synthesis grid.
pub const NONLINEAR_DECAY_LIMIT: f64 = 1e-4;

/// Callback receiving `U = (u, R^{1/ν}u, …)` at one point.
pub type PointwiseMap = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum Nonlinearity {
    /// `f(u) = μ |u|^{p−1} u`.
    PowerType { mu: Complex64, p: f64 },
    /// `f(U)` with `U = (R^{j/ν} u)_{j < components}`.
    GeneralF {
        f: PointwiseMap,
        p: f64,
        lipschitz: f64,
        components: usize,
    },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::PowerType { mu, p } => {
                fm.debug_struct("PowerType").field("mu", mu).field("p", p).finish()
            }
            Nonlinearity::GeneralF {
                p,
                lipschitz,
                components,
                ..
            } => fm
                .debug_struct("GeneralF")
                .field("p", p)
                .field("lipschitz", lipschitz)
                .field("components", components)
                .finish_non_exhaustive(),
        }
    }
}

impl Nonlinearity {
    pub fn power(mu: Complex64, p: f64) -> Result<Self> {
        if !(p >= 1.0) || !mu.is_finite() {
            return Err(Error::Constraint(format!("power nonlinearity needs p ≥ 1, got {p}")));
        }
        Ok(Nonlinearity::PowerType { mu, p })
    }

    pub fn exponent(&self) -> f64 {
        match self {
            Nonlinearity::PowerType { p, .. } | Nonlinearity::GeneralF { p, .. } => *p,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::PowerType { mu, .. } if *mu == ZERO)
    }

    /// Number of `R^{j/ν}u` components the map reads.
    pub fn components(&self) -> usize {
        match self {
            Nonlinearity::PowerType { .. } => 1,
            Nonlinearity::GeneralF { components, .. } => *components,
        }
    }

    #[inline]
    pub fn eval(&self, u: &[Complex64]) -> Complex64 {
        match self {
            Nonlinearity::PowerType { mu, p } => {
                let r = u[0].norm();
                if r == 0.0 {
                    ZERO
                } else {
                    mu * u[0] * r.powf(p - 1.0)
                }
            }
            Nonlinearity::GeneralF { f, .. } => f(u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AdmissibilityBackend {
    Heisenberg { n: usize },
    /// Graded group of homogeneous dimension `Q`.
    Graded { q_dim: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub bound: f64,
}

/// `p ≤ 1 + 1/n` on `H^n`, `p ≤ 1 + 2/(Q − 2)` on a graded group with `Q ≥ 3`.
pub fn check_admissible(p: f64, backend: AdmissibilityBackend) -> Result<Admissibility> {
    if !(p > 1.0) {
        return Err(Error::Constraint(format!("exponent must exceed 1, got {p}")));
    }
    let bound = match backend {
        AdmissibilityBackend::Heisenberg { n } => {
            if n == 0 {
                return Err(Error::Constraint("n must be ≥ 1".into()));
            }
            1.0 + 1.0 / n as f64
        }
        AdmissibilityBackend::Graded { q_dim } => {
            if !(q_dim >= 3.0) {
                return Err(Error::Constraint(format!(
                    "homogeneous dimension must be ≥ 3, got {q_dim}"
                )));
            }
            1.0 + 2.0 / (q_dim - 2.0)
        }
    };
    Ok(Admissibility {
        admissible: p <= bound,
        bound,
    })
}

/// Moves fields between frequency space and physical samples.
pub trait FieldBackend<G: ModeSpace>: Send + Sync {
    fn grid(&self) -> &Arc<G>;
    fn synthesize(&self, field: &SpectralField<G>) -> Result<Vec<Complex64>>;
    fn analyze(&self, values: Vec<Complex64>) -> Result<SpectralField<G>>;
    /// Largest edge magnitude relative to the peak.
    fn boundary_ratio(&self, values: &[Complex64]) -> f64;
}

#[derive(Debug, Clone)]
pub struct HeisenbergBackend {
    grid: Arc<ModeGrid>,
    spatial: Arc<SpatialGrid>,
    plan: Arc<TransformPlan>,
}

impl HeisenbergBackend {
    pub fn new(grid: Arc<ModeGrid>, spatial: Arc<SpatialGrid>) -> Result<Self> {
        let plan = transform_plan(&grid, &spatial)?;
        Ok(Self {
            grid,
            spatial,
            plan,
        })
    }

    pub fn spatial(&self) -> &Arc<SpatialGrid> {
        &self.spatial
    }

    pub fn synthesize_field(&self, field: &SpectralField) -> Result<SpatialField> {
        self.plan.synthesize(field, &self.spatial)
    }
}

impl FieldBackend<ModeGrid> for HeisenbergBackend {
    fn grid(&self) -> &Arc<ModeGrid> {
        &self.grid
    }

    fn synthesize(&self, field: &SpectralField) -> Result<Vec<Complex64>> {
        Ok(self.synthesize_field(field)?.into_values())
    }

    fn analyze(&self, values: Vec<Complex64>) -> Result<SpectralField> {
        let f = SpatialField::from_values(self.spatial.clone(), values)?;
        self.plan.forward(&f, &self.grid)
    }

    fn boundary_ratio(&self, values: &[Complex64]) -> f64 {
        edge_ratio(values, |i| self.spatial.is_boundary(i))
    }
}

#[derive(Debug, Clone)]
pub struct AbelianBackend {
    grid: Arc<AbelianGrid>,
}

impl AbelianBackend {
    pub fn new(grid: Arc<AbelianGrid>) -> Self {
        Self { grid }
    }
}

impl FieldBackend<AbelianGrid> for AbelianBackend {
    fn grid(&self) -> &Arc<AbelianGrid> {
        &self.grid
    }

    fn synthesize(&self, field: &SpectralField<AbelianGrid>) -> Result<Vec<Complex64>> {
        Ok(abelian::synthesize(field))
    }

    fn analyze(&self, values: Vec<Complex64>) -> Result<SpectralField<AbelianGrid>> {
        abelian::analyze(&self.grid, &values)
    }

    fn boundary_ratio(&self, values: &[Complex64]) -> f64 {
        let n = self.grid.points();
        edge_ratio(values, |i| {
            self.grid.unravel(i).iter().any(|&j| j == 0 || j == n - 1)
        })
    }
}

fn edge_ratio(values: &[Complex64], is_edge: impl Fn(usize) -> bool) -> f64 {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let edge = values
        .iter()
        .enumerate()
        .filter(|(i, _)| is_edge(*i))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    edge / peak
}

/// `f(u)` evaluated in physical space and transformed back.
pub fn apply_nonlinearity<G: ModeSpace, B: FieldBackend<G>>(
    u: &SpectralField<G>,
    nl: &Nonlinearity,
    provider: &SymbolProvider,
    backend: &B,
) -> Result<SpectralField<G>> {
    if nl.is_zero() || u.is_zero() {
        return Ok(SpectralField::zeros(u.grid().clone()));
    }
    let comps = nl.components();
    let mut samples = Vec::with_capacity(comps);
    samples.push(backend.synthesize(u)?);
    if comps > 1 {
        let symbols = u.grid().mode_symbols(provider)?;
        let nu = provider.degree();
        for j in 1..comps {
            let e = j as f64 / nu;
            let coeffs: Vec<Complex64> = u
                .coeffs()
                .iter()
                .zip(&symbols)
                .map(|(c, s)| c * s.powf(e))
                .collect();
            let field = SpectralField::from_coeffs(u.grid().clone(), coeffs)?;
            samples.push(backend.synthesize(&field)?);
        }
    }
    let len = samples[0].len();
    let values: Vec<Complex64> = (0..len)
        .into_par_iter()
        .map_init(
            || vec![ZERO; comps],
            |buf, i| {
                for (b, s) in buf.iter_mut().zip(&samples) {
                    *b = s[i];
                }
                nl.eval(buf)
            },
        )
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nonlinearity"));
    }
    let ratio = backend.boundary_ratio(&values);
    if ratio > NONLINEAR_DECAY_LIMIT {
        return Err(Error::BoundaryDecay {
            ratio,
            limit: NONLINEAR_DECAY_LIMIT,
        });
    }
    backend.analyze(values)
}

/// Uniform step of a time grid starting at 0, if it is one.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 || times[0] != 0.0 {
        return Err(Error::InsufficientSamples(
            "time grid must start at 0 and hold ≥ 2 samples".into(),
        ));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Constraint("time step must be positive".into()));
    }
    for (j, &t) in times.iter().enumerate() {
        if (t - j as f64 * dt).abs() > 1e-9 * dt.max(t.abs()) {
            return Err(Error::Constraint("time grid must be uniform".into()));
        }
    }
    Ok(dt)
}

/// Per-mode kernel samples `e^{−βs}S(s)` and `e^{−βs}(C(s) − βS(s))` at `s = q·dt`.
struct KernelTable {
    modes: usize,
    value: Vec<f64>,
    derivative: Vec<f64>,
}

impl KernelTable {
    fn new(symbols: &[f64], b: f64, m: f64, dt: f64, steps: usize) -> Self {
        let modes = symbols.len();
        let beta = 0.5 * b;
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..=steps)
            .into_par_iter()
            .map(|q| {
                let s = q as f64 * dt;
                symbols
                    .iter()
                    .map(|&sig| {
                        let (ec, es) = damped_pair(b, sig + m, s);
                        (es, ec - beta * es)
                    })
                    .unzip()
            })
            .collect();
        let (value, derivative): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
        Self {
            modes,
            value: value.concat(),
            derivative: derivative.concat(),
        }
    }
}

/// Duhamel integral at one time sample.
#[derive(Debug, Clone)]
pub struct DuhamelValue<G: ModeSpace> {
    pub value: SpectralField<G>,
    pub derivative: SpectralField<G>,
    /// `|D_dt − D_2dt| / 3` in L², or `None` when `n` is odd.
    pub richardson_error: Option<f64>,
}

fn duhamel_sum<G: ModeSpace>(
    history: &[SpectralField<G>],
    table: &KernelTable,
    n: usize,
    stride: usize,
    dt: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let modes = table.modes;
    let mut v = vec![ZERO; modes];
    let mut d = vec![ZERO; modes];
    let h = dt * stride as f64;
    for m in (0..=n).step_by(stride) {
        let w = if m == 0 || m == n { 0.5 * h } else { h };
        let q = n - m;
        let kv = &table.value[q * modes..(q + 1) * modes];
        let kd = &table.derivative[q * modes..(q + 1) * modes];
        for (j, c) in history[m].coeffs().iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            v[j] += c * (w * kv[j]);
            d[j] += c * (w * kd[j]);
        }
    }
    (v, d)
}

/// Trapezoid Duhamel integral `∫₀^{t_n} K(t_n − τ) F(τ) dτ` from a uniformly sampled history.
pub fn duhamel_step<G: ModeSpace>(
    history: &[SpectralField<G>],
    dt: f64,
    b: f64,
    m: f64,
    symbols: &[f64],
    n: usize,
) -> Result<DuhamelValue<G>> {
    if n >= history.len() {
        return Err(Error::InsufficientSamples(format!(
            "history holds {} samples, need index {n}",
            history.len()
        )));
    }
    let table = KernelTable::new(symbols, b, m, dt, n);
    duhamel_at(history, &table, dt, n)
}

fn duhamel_at<G: ModeSpace>(
    history: &[SpectralField<G>],
    table: &KernelTable,
    dt: f64,
    n: usize,
) -> Result<DuhamelValue<G>> {
    let grid = history[0].grid().clone();
    let (v, d) = duhamel_sum(history, table, n, 1, dt);
    let value = SpectralField::from_coeffs(grid.clone(), v)?;
    let richardson_error = if n % 2 == 0 && n > 0 {
        let (v2, _) = duhamel_sum(history, table, n, 2, dt);
        let coarse = SpectralField::from_coeffs(grid.clone(), v2)?;
        Some(crate::spectral::l2_norm(&value.axpy(Complex64::new(-1.0, 0.0), &coarse)?) / 3.0)
    } else {
        None
    };
    Ok(DuhamelValue {
        value,
        derivative: SpectralField::from_coeffs(grid, d)?,
        richardson_error,
    })
}

/// Duhamel integral at every history sample; the Richardson estimate is the
/// largest one over even indices.
pub fn duhamel_trajectory<G: ModeSpace>(
    history: &[SpectralField<G>],
    times: &[f64],
    b: f64,
    m: f64,
    symbols: &[f64],
) -> Result<(Trajectory<G>, f64)> {
    let dt = uniform_step(times)?;
    if history.len() != times.len() {
        return Err(Error::InsufficientSamples(format!(
            "{} history samples for {} times",
            history.len(),
            times.len()
        )));
    }
    let steps = times.len() - 1;
    let table = KernelTable::new(symbols, b, m, dt, steps);
    let parts: Vec<DuhamelValue<G>> = (0..=steps)
        .into_par_iter()
        .map(|n| duhamel_at(history, &table, dt, n))
        .collect::<Result<_>>()?;
    let richardson = parts
        .iter()
        .filter_map(|p| p.richardson_error)
        .fold(0.0, f64::max);
    let (values, derivatives) = parts.into_iter().map(|p| (p.value, p.derivative)).unzip();
    Ok((
        Trajectory {
            times: times.to_vec(),
            values,
            derivatives,
        },
        richardson,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct ZNormConfig {
    pub delta: f64,
    /// Exponent of `(1 + t)` in the weight.
    pub weight_exponent: f64,
    pub times: Vec<f64>,
    pub include_l2: bool,
    pub include_time_derivative: bool,
    /// Orders `j` of the `‖R^{j/ν}u‖` terms.
    pub powers: Vec<u32>,
}

/// Relative margin of the default `δ` below the linear rate.
pub const DEFAULT_DELTA_MARGIN: f64 = 1e-3;

impl ZNormConfig {
    /// All seminorms, weight `(1+t)^{−1/2} e^{δt}` with `δ = δ0 (1 − 10⁻³)`.
    pub fn standard(b: f64, m: f64, provider: &SymbolProvider, times: Vec<f64>) -> Self {
        let top = (provider.degree() / 2.0).floor() as u32;
        Self {
            delta: decay_rate(b, m) * (1.0 - DEFAULT_DELTA_MARGIN),
            weight_exponent: -0.5,
            times,
            include_l2: true,
            include_time_derivative: true,
            powers: (1..=top).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::Constraint(format!("δ must be positive, got {}", self.delta)));
        }
        if self.times.len() < 2 || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InsufficientSamples(
                "Z-norm needs ≥ 2 increasing sample times".into(),
            ));
        }
        Ok(())
    }

    pub fn weight(&self, t: f64) -> f64 {
        (1.0 + t).powf(self.weight_exponent) * (self.delta * t).exp()
    }
}

/// Sum of the configured seminorms at one sample.
pub fn seminorm_sum<G: ModeSpace>(
    value: &SpectralField<G>,
    derivative: &SpectralField<G>,
    config: &ZNormConfig,
    symbols: &[f64],
    degree: f64,
) -> f64 {
    let mut s = 0.0;
    if config.include_l2 {
        s += crate::spectral::l2_norm(value);
    }
    if config.include_time_derivative {
        s += crate::spectral::l2_norm(derivative);
    }
    for &j in &config.powers {
        let mult = sobolev_multiplier(symbols, degree, j as f64, 0.0);
        s += value.weighted_norm(&mult);
    }
    s
}

/// `sup_t w(t) · Σ seminorms(u(t))` over the trajectory samples.
pub fn z_norm<G: ModeSpace>(
    trajectory: &Trajectory<G>,
    config: &ZNormConfig,
    provider: &SymbolProvider,
) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::InsufficientSamples("empty trajectory".into()));
    }
    let symbols = trajectory.values[0].grid().mode_symbols(provider)?;
    let degree = provider.degree();
    let vals: Vec<f64> = (0..trajectory.len())
        .into_par_iter()
        .map(|i| {
            config.weight(trajectory.times[i])
                * seminorm_sum(
                    &trajectory.values[i],
                    &trajectory.derivatives[i],
                    config,
                    &symbols,
                    degree,
                )
        })
        .collect();
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PicardStatus {
    Converged,
    Diverged,
    MaxIter,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    /// `‖u^{(j)}‖_Z` for each iterate, starting with `u_lin`.
    pub z_norms: Vec<f64>,
    /// `‖u^{(j+1)} − u^{(j)}‖_Z`.
    pub increments: Vec<f64>,
    /// Successive increment ratios.
    pub ratios: Vec<f64>,
    pub status: PicardStatus,
    pub data_norm: f64,
    /// `‖u_lin‖_Z / data_norm`.
    pub c1: f64,
    /// `2 C₁ · data_norm`.
    pub l_bound: f64,
    pub divergence_threshold: f64,
    pub richardson_error: f64,
    pub admissibility: Option<Admissibility>,
}

#[derive(Debug, Clone)]
pub struct SemilinearProblem<G: ModeSpace = ModeGrid> {
    pub u0: SpectralField<G>,
    pub u1: SpectralField<G>,
    pub nonlinearity: Nonlinearity,
    pub b: f64,
    pub m: f64,
    pub provider: SymbolProvider,
    pub znorm: ZNormConfig,
    pub tol: f64,
    pub max_iter: usize,
    pub admissibility_backend: Option<AdmissibilityBackend>,
}

impl<G: ModeSpace> SemilinearProblem<G> {
    /// `‖u0‖_{H^{ν/2}} + ‖u1‖_{L²}`.
    pub fn data_norm(&self) -> Result<f64> {
        data_norm(&self.u0, &self.u1, &self.provider)
    }

    /// Copy with the data rescaled to `data_norm = eps`.
    pub fn scaled_to(&self, eps: f64) -> Result<Self> {
        let n = self.data_norm()?;
        if !(n > 0.0) {
            return Err(Error::DegenerateReference("template data is zero".into()));
        }
        let k = Complex64::new(eps / n, 0.0);
        Ok(Self {
            u0: self.u0.scale(k),
            u1: self.u1.scale(k),
            ..self.clone()
        })
    }
}

pub fn data_norm<G: ModeSpace>(
    u0: &SpectralField<G>,
    u1: &SpectralField<G>,
    provider: &SymbolProvider,
) -> Result<f64> {
    let s = provider.degree() / 2.0;
    Ok(crate::spectral::sobolev_norm(u0, provider, s, 1.0)?
        + crate::spectral::l2_norm(u1))
}

/// Iterates `u ↦ u_lin + Duhamel(f(u))` on the Z-norm time grid.
pub fn picard_solve<G: ModeSpace, B: FieldBackend<G>>(
    problem: &SemilinearProblem<G>,
    backend: &B,
) -> Result<(Trajectory<G>, PicardDiagnostics)> {
    let cfg = &problem.znorm;
    cfg.validate()?;
    let times = &cfg.times;
    uniform_step(times)?;
    problem.u0.check_same_grid(&problem.u1)?;
    let admissibility = match problem.admissibility_backend {
        Some(ab) => {
            let a = check_admissible(problem.nonlinearity.exponent(), ab)?;
            if !a.admissible {
                log::warn!(
                    "exponent {} exceeds the admissible bound {}",
                    problem.nonlinearity.exponent(),
                    a.bound
                );
            }
            Some(a)
        }
        None => None,
    };
    let symbols = problem.u0.grid().mode_symbols(&problem.provider)?;
    let linear = evolve_with_symbols(&problem.u0, &problem.u1, problem.b, problem.m, &symbols, times)?;
    let lin_z = z_norm(&linear, cfg, &problem.provider)?;
    let dn = problem.data_norm()?;
    let c1 = if dn > 0.0 { lin_z / dn } else { 0.0 };
    let l_bound = 2.0 * c1 * dn;
    let threshold = 2.0 * l_bound;
    let mut diag = PicardDiagnostics {
        iterations: 0,
        z_norms: vec![lin_z],
        increments: Vec::new(),
        ratios: Vec::new(),
        status: PicardStatus::MaxIter,
        data_norm: dn,
        c1,
        l_bound,
        divergence_threshold: threshold,
        richardson_error: 0.0,
        admissibility,
    };
    let mut current = linear.clone();
    for iter in 1..=problem.max_iter {
        diag.iterations = iter;
        let sources: Vec<SpectralField<G>> = current
            .values
            .iter()
            .map(|u| apply_nonlinearity(u, &problem.nonlinearity, &problem.provider, backend))
            .collect::<Result<_>>()?;
        let (duh, rich) = duhamel_trajectory(&sources, times, problem.b, problem.m, &symbols)?;
        diag.richardson_error = rich;
        let mut values = Vec::with_capacity(times.len());
        let mut derivatives = Vec::with_capacity(times.len());
        for i in 0..times.len() {
            values.push(linear.values[i].axpy(Complex64::new(1.0, 0.0), &duh.values[i])?);
            derivatives.push(linear.derivatives[i].axpy(Complex64::new(1.0, 0.0), &duh.derivatives[i])?);
        }
        let next = Trajectory {
            times: times.clone(),
            values,
            derivatives,
        };
        let inc = z_norm(&next.difference(&current)?, cfg, &problem.provider)?;
        let zn = z_norm(&next, cfg, &problem.provider)?;
        if let Some(&prev) = diag.increments.last() {
            if prev > 0.0 {
                diag.ratios.push(inc / prev);
            }
        }
        diag.increments.push(inc);
        diag.z_norms.push(zn);
        current = next;
        if !zn.is_finite() || zn > threshold {
            diag.status = PicardStatus::Diverged;
            break;
        }
        let contracting = diag.ratios.last().map_or(true, |&r| r < 1.0);
        if inc <= problem.tol * zn && contracting {
            diag.status = PicardStatus::Converged;
            break;
        }
    }
    Ok((current, diag))
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSearch {
    /// Largest data norm observed to converge.
    pub epsilon0: f64,
    /// Smallest data norm observed not to converge.
    pub failing: f64,
    pub bracket_width: f64,
    pub trials: usize,
}

/// Geometric bisection of the data scale between a converging and a failing norm.
pub fn find_epsilon0<G: ModeSpace, B: FieldBackend<G>>(
    template: &SemilinearProblem<G>,
    backend: &B,
    bracket: (f64, f64),
    trials: usize,
) -> Result<EpsilonSearch> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidBracket(format!("need 0 < lo < hi, got ({lo}, {hi})")));
    }
    let converges = |eps: f64| -> Result<bool> {
        let p = template.scaled_to(eps)?;
        match picard_solve(&p, backend) {
            Ok((_, d)) => Ok(d.status == PicardStatus::Converged),
            Err(Error::NonFinite(_)) | Err(Error::BoundaryDecay { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let (c_lo, c_hi) = (converges(lo)?, converges(hi)?);
    if !c_lo || c_hi {
        return Err(Error::InvalidBracket(format!(
            "lower end converges: {c_lo}, upper end converges: {c_hi}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..trials {
        let mid = (a * b).sqrt();
        if converges(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(EpsilonSearch {
        epsilon0: a,
        failing: b,
        bracket_width: b - a,
        trials,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SemilinearDecayReport {
    pub trivial: bool,
    pub delta0: f64,
    /// Slopes of `ln‖u‖`, `ln‖R^{1/ν}… u‖` (`‖L^{1/2}u‖` on `H^n`) and `ln‖u_t‖`.
    pub slope_l2: f64,
    pub slope_half: f64,
    pub slope_time_derivative: f64,
    /// `−max(slopes)`; positive when all three norms decay.
    pub delta_fit: f64,
}

pub fn verify_semilinear_decay<G: ModeSpace>(
    trajectory: &Trajectory<G>,
    provider: &SymbolProvider,
    b: f64,
    m: f64,
) -> Result<SemilinearDecayReport> {
    if trajectory.len() < 8 {
        return Err(Error::InsufficientSamples(format!(
            "need ≥ 8 samples, got {}",
            trajectory.len()
        )));
    }
    let symbols = trajectory.values[0].grid().mode_symbols(provider)?;
    let half = sobolev_multiplier(&symbols, 1.0, 0.5, 0.0);
    let n0: Vec<f64> = trajectory.values.iter().map(crate::spectral::l2_norm).collect();
    let n1: Vec<f64> = trajectory.values.iter().map(|f| f.weighted_norm(&half)).collect();
    let n2: Vec<f64> = trajectory.derivatives.iter().map(crate::spectral::l2_norm).collect();
    let delta0 = decay_rate(b, m);
    if n0.iter().chain(&n2).all(|v| *v == 0.0) {
        return Ok(SemilinearDecayReport {
            trivial: true,
            delta0,
            slope_l2: 0.0,
            slope_half: 0.0,
            slope_time_derivative: 0.0,
            delta_fit: 0.0,
        });
    }
    let t = &trajectory.times;
    let slope = |v: &[f64]| fit_log_slope(t, v).unwrap_or(f64::NEG_INFINITY);
    let (s0, s1, s2) = (slope(&n0), slope(&n1), slope(&n2));
    Ok(SemilinearDecayReport {
        trivial: false,
        delta0,
        slope_l2: s0,
        slope_half: s1,
        slope_time_derivative: s2,
        delta_fit: -s0.max(s1).max(s2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::{evolve_linear, propagate_raw, verify_decay, DampedModeParams};
    use crate::spectral::{build_grid, l2_norm};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn admissibility_examples() {
        let h1 = AdmissibilityBackend::Heisenberg { n: 1 };
        let a = check_admissible(2.0, h1).unwrap();
        assert!(a.admissible && a.bound == 2.0);
        assert!(!check_admissible(2.5, h1).unwrap().admissible);
        let g = check_admissible(2.0, AdmissibilityBackend::Graded { q_dim: 4.0 }).unwrap();
        assert_eq!(g.bound, 2.0);
        assert!(check_admissible(1.5, AdmissibilityBackend::Graded { q_dim: 2.0 }).is_err());
        assert!(check_admissible(1.0, h1).is_err());
    }

    #[test]
    fn power_nonlinearity_lipschitz_spot_check() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for &p in &[1.5, 2.0, 3.0] {
            let nl = Nonlinearity::power(c(0.7, -0.4), p).unwrap();
            assert_eq!(nl.eval(&[ZERO]), ZERO);
            let cst = c(0.7, -0.4).norm() * p;
            for _ in 0..2000 {
                let u = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let v = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let lhs = (nl.eval(&[u]) - nl.eval(&[v])).norm();
                let rhs = cst * (u.norm().powf(p - 1.0) + v.norm().powf(p - 1.0)) * (u - v).norm();
                assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn z_weight_and_trivial_norms() {
        let provider = SymbolProvider::sub_laplacian();
        let mut cfg = ZNormConfig::standard(2.0, 2.0, &provider, vec![0.0, 1.0]);
        cfg.delta = 1.0;
        assert!((cfg.weight(3.0) - 0.5 * 3.0f64.exp()).abs() < 1e-12);
        assert!((cfg.weight(3.0) - 10.0428).abs() < 1e-4);
        assert_eq!(cfg.weight(0.0), 1.0);

        let grid = Arc::new(build_grid(0.5, 4.0, 8, 7.0, 1).unwrap());
        let z = SpectralField::zeros(grid.clone());
        let tr = evolve_linear(&z, &z, 2.0, 2.0, &provider, &[0.0, 1.0]).unwrap();
        assert_eq!(z_norm(&tr, &cfg, &provider).unwrap(), 0.0);

        let mut f = z.clone();
        f.set(5, 1, 0, c(1.0, 0.0));
        let tr = evolve_linear(&f, &z, 2.0, 2.0, &provider, &[0.0]).unwrap();
        let w = grid.weights()[5];
        let sigma = grid.lambda_nodes()[5].abs() * 3.0;
        let expected = w.sqrt() + (w * sigma).sqrt();
        assert!((z_norm(&tr, &cfg, &provider).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn duhamel_zero_and_constant_source() {
        let grid = Arc::new(build_grid(0.5, 4.0, 4, 3.0, 1).unwrap());
        let provider = SymbolProvider::sub_laplacian();
        let symbols = grid.mode_symbols(&provider).unwrap();
        let (b, m) = (2.0, 2.0);
        let t_end = 3.0;
        let zero = vec![SpectralField::zeros(grid.clone()); 31];
        let d = duhamel_step(&zero, 0.1, b, m, &symbols, 30).unwrap();
        assert!(d.value.is_zero());

        let mut g = SpectralField::zeros(grid.clone());
        let (node, k) = (3, 1);
        g.set(node, k, 0, c(1.0, 0.5));
        let total = symbols[grid.index(node, k, 0)] + m;
        let p = DampedModeParams::new(b, m, total - m).unwrap();
        // ∫₀ᵗ e^{−βs} sin(as)/a ds = [1 − e^{−βt}(cos at + β sin(at)/a)] / (a² + β²)
        let (a, beta) = (p.a_or_c, b / 2.0);
        let exact = (1.0 - (-beta * t_end).exp() * ((a * t_end).cos() + beta * (a * t_end).sin() / a))
            / total;
        let mut errs = Vec::new();
        for steps in [30usize, 60, 120] {
            let dt = t_end / steps as f64;
            let hist = vec![g.clone(); steps + 1];
            let d = duhamel_step(&hist, dt, b, m, &symbols, steps).unwrap();
            let got = d.value.get(node, k, 0);
            errs.push((got - c(1.0, 0.5) * exact).norm());
            // Richardson estimate tracks the true error
            let est = d.richardson_error.unwrap() / grid.weights()[node].sqrt();
            assert!(est > 0.2 * errs.last().unwrap() && est < 5.0 * errs.last().unwrap());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        }
        // closed form also agrees with the propagator's own Duhamel kernel
        let s = propagate_raw(b, total, ZERO, c(1.0, 0.0), 0.0);
        assert_eq!(s.derivative, c(1.0, 0.0));
    }

    #[test]
    fn zero_nonlinearity_returns_linear_solution() {
        let grid = Arc::new(build_grid(0.5, 4.0, 8, 7.0, 1).unwrap());
        let spatial = Arc::new(SpatialGrid::new([6.0, 6.0, 12.0], [9, 9, 9]).unwrap());
        let backend = HeisenbergBackend::new(grid.clone(), spatial).unwrap();
        let provider = SymbolProvider::sub_laplacian();
        let mut u0 = SpectralField::zeros(grid.clone());
        u0.set(6, 1, 2, c(0.3, 0.1));
        let u1 = u0.scale(c(0.0, 1.0));
        let times: Vec<f64> = (0..=40).map(|j| j as f64 * 0.1).collect();
        let problem = SemilinearProblem {
            u0: u0.clone(),
            u1: u1.clone(),
            nonlinearity: Nonlinearity::power(ZERO, 2.0).unwrap(),
            b: 2.0,
            m: 2.0,
            provider: provider.clone(),
            znorm: ZNormConfig::standard(2.0, 2.0, &provider, times.clone()),
            tol: 1e-10,
            max_iter: 10,
            admissibility_backend: Some(AdmissibilityBackend::Heisenberg { n: 1 }),
        };
        let (tr, d) = picard_solve(&problem, &backend).unwrap();
        assert_eq!(d.status, PicardStatus::Converged);
        assert_eq!(d.iterations, 1);
        let lin = evolve_linear(&u0, &u1, 2.0, 2.0, &provider, &times).unwrap();
        for (a, b) in tr.values.iter().zip(&lin.values) {
            assert_eq!(a.coeffs(), b.coeffs());
        }
        let rep = verify_semilinear_decay(&tr, &provider, 2.0, 2.0).unwrap();
        let lin_rep = verify_decay(&lin, &provider, 0.0, 2.0, 2.0).unwrap();
        assert!((rep.slope_l2 / lin_rep.fitted_slope - 1.0).abs() < 0.01);
        assert!(rep.delta_fit > 0.0);
        assert!(l2_norm(&tr.values[0]) > 0.0);
    }
}
