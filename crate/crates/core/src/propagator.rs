//! Exact per-mode propagation of the damped oscillator
//! `u'' + b u' + (ω² + m) u = 0` and linear evolution of spectral fields.
//!
//! With `β = b/2` and `κ = ω² + m − β²` every regime is written as
//!
//! ```text
//! u(t)  = e^{-βt} [ (C + βS) u0 + S u1 ]
//! u'(t) = e^{-βt} [ −(ω² + m) S u0 + (C − βS) u1 ]
//! ```
//!
//! where `(C, S)` is `(cos at, sin(at)/a)` for `κ = a² > 0`,
//! `(cosh ct, sinh(ct)/c)` for `κ = −c² < 0` and `(1, t)` at `κ = 0`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{sobolev_multiplier, ModeSpace, SpectralField, SymbolProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Underdamped,
    Critical,
    Overdamped,
}

/// Relative width of the critical band around `b² = 4 (ω² + m)`.
pub const CRITICAL_BAND: f64 = 1e-8;

/// Relative threshold on `|κ|/b²` below which the series form is used.
pub const SERIES_SWITCH: f64 = 1e-8;

/// Returns the regime and `√|total − b²/4|` (zero when critical).
pub fn classify_regime(b: f64, total: f64, boundary_tol: Option<f64>) -> (Regime, f64) {
    let disc = b * b - 4.0 * total;
    let tol = boundary_tol.unwrap_or(CRITICAL_BAND * (b * b).max(4.0 * total));
    if disc.abs() <= tol {
        (Regime::Critical, 0.0)
    } else if disc < 0.0 {
        (Regime::Underdamped, (total - b * b / 4.0).sqrt())
    } else {
        (Regime::Overdamped, (b * b / 4.0 - total).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampedModeParams {
    pub b: f64,
    pub m: f64,
    pub omega2: f64,
    pub total: f64,
    pub regime: Regime,
    /// `a_k` when underdamped, `c_k` when overdamped, 0 when critical.
    pub a_or_c: f64,
}

impl DampedModeParams {
    pub fn new(b: f64, m: f64, omega2: f64) -> Result<Self> {
        if !(b > 0.0) || !(m >= 0.0) || !(omega2 >= 0.0) || !(omega2 + m > 0.0) {
            return Err(Error::Constraint(format!(
                "need b > 0, m ≥ 0, ω² ≥ 0 and ω² + m > 0 (b={b}, m={m}, ω²={omega2})"
            )));
        }
        let total = omega2 + m;
        let (regime, a_or_c) = classify_regime(b, total, None);
        Ok(Self {
            b,
            m,
            omega2,
            total,
            regime,
            a_or_c,
        })
    }

    /// Exponential rate of the slowest component of this mode.
    pub fn decay_rate(&self) -> f64 {
        mode_decay_rate(self.b, self.total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeState {
    pub value: Complex64,
    pub derivative: Complex64,
}

/// `(e^{-βt} C(t), e^{-βt} S(t))` for `β = b/2`, `κ = total − β²`.
#[inline]
pub(crate) fn damped_pair(b: f64, total: f64, t: f64) -> (f64, f64) {
    let beta = 0.5 * b;
    let kappa = total - beta * beta;
    if kappa.abs() <= SERIES_SWITCH * b * b && kappa.abs() * t * t < 1.0 {
        // C = Σ (−κt²)^j/(2j)!, S = t Σ (−κt²)^j/(2j+1)!
        let x = -kappa * t * t;
        let (mut c, mut s) = (1.0, 1.0);
        let (mut tc, mut ts) = (1.0, 1.0);
        for j in 1..12 {
            let jf = j as f64;
            tc *= x / ((2.0 * jf - 1.0) * (2.0 * jf));
            ts *= x / ((2.0 * jf) * (2.0 * jf + 1.0));
            c += tc;
            s += ts;
            if tc.abs() < 1e-18 && ts.abs() < 1e-18 {
                break;
            }
        }
        let e = (-beta * t).exp();
        (e * c, e * s * t)
    } else if kappa > 0.0 {
        let a = kappa.sqrt();
        let e = (-beta * t).exp();
        let (sn, cs) = (a * t).sin_cos();
        (e * cs, e * sn / a)
    } else {
        let c = (-kappa).sqrt();
        // c < β, so e^{(c−β)t} never overflows
        let slow = ((c - beta) * t).exp();
        let fast = ((-c - beta) * t).exp();
        (0.5 * (slow + fast), slow * (-(-2.0 * c * t).exp_m1()) / (2.0 * c))
    }
}

#[inline]
pub(crate) fn propagate_raw(b: f64, total: f64, u0: Complex64, u1: Complex64, t: f64) -> ModeState {
    let (ec, es) = damped_pair(b, total, t);
    let beta = 0.5 * b;
    ModeState {
        value: u0 * (ec + beta * es) + u1 * es,
        derivative: u0 * (-total * es) + u1 * (ec - beta * es),
    }
}

pub fn propagate_mode(
    params: &DampedModeParams,
    u0: Complex64,
    u1: Complex64,
    t: f64,
) -> Result<ModeState> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(propagate_raw(params.b, params.total, u0, u1, t))
}

/// Solution with zero displacement and initial velocity `g`.
pub fn duhamel_kernel(params: &DampedModeParams, g: Complex64, t: f64) -> Result<ModeState> {
    propagate_mode(params, Complex64::new(0.0, 0.0), g, t)
}

/// Slowest exponential rate of a single mode with `ω² + m = total`.
pub fn mode_decay_rate(b: f64, total: f64) -> f64 {
    0.5 * b - (0.25 * b * b - total).max(0.0).sqrt()
}

/// `δ0 = b/2 − √(max(0, b²/4 − m))`: infimum of the per-mode rates as the
/// symbol ranges down to 0.
pub fn decay_rate(b: f64, m: f64) -> f64 {
    mode_decay_rate(b, m)
}

/// Value and time-derivative snapshots at sorted sample times.
#[derive(Debug, Clone)]
pub struct Trajectory<G: ModeSpace = crate::spectral::ModeGrid> {
    pub times: Vec<f64>,
    pub values: Vec<SpectralField<G>>,
    pub derivatives: Vec<SpectralField<G>>,
}

impl<G: ModeSpace> Trajectory<G> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Pointwise difference of two trajectories sampled at the same times.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::InsufficientSamples(
                "trajectories sampled at different times".into(),
            ));
        }
        let diff = |a: &[SpectralField<G>], b: &[SpectralField<G>]| -> Result<Vec<_>> {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.axpy(Complex64::new(-1.0, 0.0), y))
                .collect()
        };
        Ok(Self {
            times: self.times.clone(),
            values: diff(&self.values, &other.values)?,
            derivatives: diff(&self.derivatives, &other.derivatives)?,
        })
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InsufficientSamples("no sample times".into()));
    }
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::NegativeTime(t));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Constraint("sample times must be sorted".into()));
    }
    Ok(())
}

/// Linear evolution with precomputed per-mode symbols.
pub fn evolve_with_symbols<G: ModeSpace>(
    field0: &SpectralField<G>,
    field1: &SpectralField<G>,
    b: f64,
    m: f64,
    symbols: &[f64],
    times: &[f64],
) -> Result<Trajectory<G>> {
    field0.check_same_grid(field1)?;
    check_times(times)?;
    if !(b > 0.0) || !(m > 0.0) {
        return Err(Error::Constraint(format!("need b > 0 and m > 0 (b={b}, m={m})")));
    }
    let grid = field0.grid().clone();
    let (c0, c1) = (field0.coeffs(), field1.coeffs());
    let mut values = Vec::with_capacity(times.len());
    let mut derivatives = Vec::with_capacity(times.len());
    for &t in times {
        let states: Vec<ModeState> = (0..c0.len())
            .into_par_iter()
            .map(|j| propagate_raw(b, symbols[j] + m, c0[j], c1[j], t))
            .collect();
        let (v, d): (Vec<_>, Vec<_>) = states.into_iter().map(|s| (s.value, s.derivative)).unzip();
        values.push(SpectralField::from_coeffs(grid.clone(), v)?);
        derivatives.push(SpectralField::from_coeffs(grid.clone(), d)?);
    }
    Ok(Trajectory {
        times: times.to_vec(),
        values,
        derivatives,
    })
}

pub fn evolve_linear<G: ModeSpace>(
    field0: &SpectralField<G>,
    field1: &SpectralField<G>,
    b: f64,
    m: f64,
    provider: &SymbolProvider,
    times: &[f64],
) -> Result<Trajectory<G>> {
    let symbols = field0.grid().mode_symbols(provider)?;
    evolve_with_symbols(field0, field1, b, m, &symbols, times)
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Fraction of the trailing samples used for slope fits.
pub const TAIL_FRACTION: f64 = 0.6;

/// Index of the first sample of the fitting window.
pub fn tail_start(len: usize) -> usize {
    ((1.0 - TAIL_FRACTION) * len as f64).floor() as usize
}

/// Fitted slope of `ln y` over the tail window; `None` if any value is zero.
pub fn fit_log_slope(times: &[f64], norms: &[f64]) -> Option<f64> {
    let start = tail_start(times.len());
    let (t, y) = (&times[start..], &norms[start..]);
    if y.iter().any(|v| !(*v > 0.0)) || t.len() < 2 {
        return None;
    }
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Some(fit_line(t, &logs).0)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub trivial: bool,
    pub s: f64,
    pub delta0: f64,
    pub fitted_slope: f64,
    /// `‖u0‖_{H^s} + ‖u1‖_{H^{s−1}}`
    pub data_norm: f64,
    /// Smallest `C` with `‖u(t)‖_{H^s} ≤ C e^{−δ0 t} · data_norm` on the samples.
    pub fitted_constant: f64,
    /// `(t, ‖u(t)‖_{H^s} / (e^{−δ0 t} data_norm))`
    pub ratio_curve: Vec<(f64, f64)>,
    pub norms: Vec<f64>,
}

impl DecayReport {
    /// Slope within `tolerance` of the target rate (trivial reports pass).
    pub fn passes(&self, tolerance: f64) -> bool {
        self.trivial || self.fitted_slope <= -self.delta0 + tolerance
    }
}

pub fn verify_decay<G: ModeSpace>(
    trajectory: &Trajectory<G>,
    provider: &SymbolProvider,
    s: f64,
    m: f64,
    b: f64,
) -> Result<DecayReport> {
    let delta0 = decay_rate(b, m);
    let times = &trajectory.times;
    if times.len() < 8 {
        return Err(Error::InsufficientSamples(format!(
            "need ≥ 8 samples, got {}",
            times.len()
        )));
    }
    if times[0] != 0.0 {
        return Err(Error::InsufficientSamples("trajectory must start at t = 0".into()));
    }
    let span = times[times.len() - 1] - times[0];
    if span < 3.0 / delta0 {
        return Err(Error::InsufficientSamples(format!(
            "span {span} shorter than 3/δ0 = {}",
            3.0 / delta0
        )));
    }
    let grid = trajectory.values[0].grid();
    let symbols = grid.mode_symbols(provider)?;
    let nu = provider.degree();
    let mult_s = sobolev_multiplier(&symbols, nu, s, 1.0);
    let mult_s1 = sobolev_multiplier(&symbols, nu, s - 1.0, 1.0);
    let norms: Vec<f64> = trajectory
        .values
        .iter()
        .map(|f| f.weighted_norm(&mult_s))
        .collect();
    let data_norm = norms[0] + trajectory.derivatives[0].weighted_norm(&mult_s1);
    if data_norm == 0.0 {
        return Ok(DecayReport {
            trivial: true,
            s,
            delta0,
            fitted_slope: 0.0,
            data_norm,
            fitted_constant: 0.0,
            ratio_curve: Vec::new(),
            norms,
        });
    }
    let ratio_curve: Vec<(f64, f64)> = times
        .iter()
        .zip(&norms)
        .map(|(&t, &v)| (t, v / ((-delta0 * t).exp() * data_norm)))
        .collect();
    let fitted_constant = ratio_curve.iter().map(|r| r.1).fold(0.0, f64::max);
    let fitted_slope = fit_log_slope(times, &norms).unwrap_or(f64::NEG_INFINITY);
    Ok(DecayReport {
        trivial: false,
        s,
        delta0,
        fitted_slope,
        data_norm,
        fitted_constant,
        ratio_curve,
        norms,
    })
}

/// Trajectory CSV: `t, L2, H^s…, envelope`. The envelope column is
/// `C e^{−δ0 t} · data_norm` taken from `report`, or empty without one.
pub fn write_trajectory_csv<G: ModeSpace, W: Write>(
    mut out: W,
    trajectory: &Trajectory<G>,
    provider: &SymbolProvider,
    s_values: &[f64],
    report: Option<&DecayReport>,
) -> Result<()> {
    let io = |e: std::io::Error| Error::Format(e.to_string());
    let mut header = String::from("t,L2");
    for s in s_values {
        header.push_str(&format!(",H^{s}"));
    }
    header.push_str(",envelope\n");
    out.write_all(header.as_bytes()).map_err(io)?;
    let grid = trajectory.values[0].grid();
    let symbols = grid.mode_symbols(provider)?;
    let mults: Vec<Vec<f64>> = s_values
        .iter()
        .map(|&s| sobolev_multiplier(&symbols, provider.degree(), s, 1.0))
        .collect();
    for (&t, f) in trajectory.times.iter().zip(&trajectory.values) {
        let mut line = format!("{t},{}", crate::spectral::l2_norm(f));
        for m in &mults {
            line.push_str(&format!(",{}", f.weighted_norm(m)));
        }
        match report {
            Some(r) if !r.trivial => line.push_str(&format!(
                ",{}",
                r.fitted_constant * (-r.delta0 * t).exp() * r.data_norm
            )),
            _ => line.push(','),
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    Ok(())
}
