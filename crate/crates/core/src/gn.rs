//! Gagliardo–Nirenberg exponents in exact rational arithmetic and numerical
//! checks of `‖u‖_{L^q} ≤ C ‖u‖_{Ḣ^a}^s ‖u‖_{L^p}^{1−s}`.

use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::abelian::{self, AbelianGrid};
use crate::error::{Error, Result};
use crate::semilinear::HeisenbergBackend;
use crate::spectral::{homogeneous_sobolev_norm, l2_norm, SpectralField, SymbolProvider};

pub type Rational = Ratio<i128>;

/// Edge/peak magnitude above which a sampled function is treated as not decaying.
pub const TAIL_LIMIT: f64 = 1e-6;

/// Edge/peak limit for `L^q` norms of synthesized fields (`q ≥ 2`).
pub const SYNTHESIS_TAIL_LIMIT: f64 = 1e-3;

pub fn rational(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn one() -> Rational {
    Rational::from_integer(1)
}

fn violated(name: &str, detail: String) -> Error {
    Error::Constraint(format!("{name} violated: {detail}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GnExponents {
    #[serde(serialize_with = "ser_rational")]
    pub q_dim: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub a: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub r: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub p: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub q: Rational,
    /// `None` when degenerate: every `s ∈ [0, 1]` is admissible.
    #[serde(serialize_with = "ser_opt_rational")]
    pub s: Option<Rational>,
    pub degenerate: bool,
    /// `r ≠ 2`: outside the spectral multiplier calculus.
    pub algebra_only: bool,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_opt_rational<S: serde::Serializer>(
    r: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

impl GnExponents {
    /// `a/Q + 1/p − 1/r`.
    pub fn denominator(&self) -> Rational {
        self.a / self.q_dim + self.p.recip() - self.r.recip()
    }

    /// `rQ/(Q − ar)`.
    pub fn critical_q(&self) -> Rational {
        self.r * self.q_dim / (self.q_dim - self.a * self.r)
    }

    /// Fixes `s` for a degenerate tuple.
    pub fn with_s(mut self, s: Rational) -> Result<Self> {
        if !self.degenerate {
            return Err(Error::Constraint("s is determined for non-degenerate tuples".into()));
        }
        if s < Rational::from_integer(0) || s > one() {
            return Err(violated("0 ≤ s ≤ 1", format!("s = {s}")));
        }
        self.s = Some(s);
        Ok(self)
    }
}

/// `s = (1/p − 1/q)/(a/Q + 1/p − 1/r)` under `1 < r < Q/a`, `1 ≤ p ≤ q ≤ rQ/(Q − ar)`.
pub fn gn_exponent_graded(
    q_dim: Rational,
    a: Rational,
    r: Rational,
    p: Rational,
    q: Rational,
) -> Result<GnExponents> {
    let zero = Rational::from_integer(0);
    if q_dim <= zero {
        return Err(violated("Q > 0", format!("Q = {q_dim}")));
    }
    if a <= zero {
        return Err(violated("a > 0", format!("a = {a}")));
    }
    if r <= one() {
        return Err(violated("r > 1", format!("r = {r}")));
    }
    if r >= q_dim / a {
        return Err(violated("r < Q/a", format!("r = {r}, Q/a = {}", q_dim / a)));
    }
    if p < one() {
        return Err(violated("p ≥ 1", format!("p = {p}")));
    }
    if p > q {
        return Err(violated("p ≤ q", format!("p = {p}, q = {q}")));
    }
    let crit = r * q_dim / (q_dim - a * r);
    if q > crit {
        return Err(violated("q ≤ rQ/(Q − ar)", format!("q = {q}, bound = {crit}")));
    }
    let den = a / q_dim + p.recip() - r.recip();
    let degenerate = den == zero;
    let s = if degenerate {
        None
    } else {
        Some((p.recip() - q.recip()) / den)
    };
    Ok(GnExponents {
        q_dim,
        a,
        r,
        p,
        q,
        s,
        degenerate,
        algebra_only: r != Rational::from_integer(2),
    })
}

/// `θ = Q(q − 2)/(2q)`, `Q = 2n + 2`, for `2 ≤ q ≤ 2 + 2/n`.
pub fn gn_exponent_heisenberg(q: Rational, n: u32) -> Result<Rational> {
    if n == 0 {
        return Err(Error::Constraint("n must be ≥ 1".into()));
    }
    let two = Rational::from_integer(2);
    let top = two + two / Rational::from_integer(n as i128);
    if q < two || q > top {
        return Err(violated("2 ≤ q ≤ 2 + 2/n", format!("q = {q}, n = {n}")));
    }
    let qd = Rational::from_integer(2 * n as i128 + 2);
    Ok(qd * (q - two) / (two * q))
}

/// `s = (Q/a)(1/2 − 1/q)` for `2 ≤ q ≤ 2Q/(Q − 2a)`, `Q > 2a`.
pub fn gn_exponent_corollary(q: Rational, q_dim: Rational, a: Rational) -> Result<Rational> {
    let two = Rational::from_integer(2);
    if a <= Rational::from_integer(0) || q_dim <= two * a {
        return Err(violated("Q > 2a", format!("Q = {q_dim}, a = {a}")));
    }
    let top = two * q_dim / (q_dim - two * a);
    if q < two || q > top {
        return Err(violated("2 ≤ q ≤ 2Q/(Q − 2a)", format!("q = {q}, bound = {top}")));
    }
    Ok(q_dim / a * (two.recip() - q.recip()))
}

#[derive(Debug, Clone, Serialize)]
pub struct GnRatio {
    /// `‖u‖_{L^q}`.
    pub lhs: f64,
    /// `‖u‖_{Ḣ^a}`.
    pub sobolev: f64,
    /// `‖u‖_{L^p}`.
    pub lp: f64,
    pub s: f64,
    pub ratio: f64,
    pub finite: bool,
}

fn ratio_report(lhs: f64, sobolev: f64, lp: f64, s: f64) -> GnRatio {
    let rhs = sobolev.powf(s) * lp.powf(1.0 - s);
    let ratio = lhs / rhs;
    GnRatio {
        lhs,
        sobolev,
        lp,
        s,
        ratio,
        finite: ratio.is_finite(),
    }
}

fn exponent_s(exps: &GnExponents) -> Result<f64> {
    exps.s
        .map(to_f64)
        .ok_or_else(|| Error::Constraint("degenerate tuple: fix s with `with_s`".into()))
}

/// Ratio on a periodic box in `R^d` (`Q = d`), `Ḣ^a` from `|ξ|^a`.
pub fn verify_inequality_abelian(
    grid: &Arc<AbelianGrid>,
    samples: &[Complex64],
    exps: &GnExponents,
) -> Result<GnRatio> {
    if exps.algebra_only {
        return Err(Error::Unsupported(format!(
            "r = {} is algebra-only; numerics need r = 2",
            exps.r
        )));
    }
    if exps.q_dim != Rational::from_integer(grid.dim() as i128) {
        return Err(Error::Constraint(format!(
            "Q = {} does not match the box dimension {}",
            exps.q_dim,
            grid.dim()
        )));
    }
    let s = exponent_s(exps)?;
    let n = grid.points();
    let peak = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = samples
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.unravel(*i).iter().any(|&j| j == 0 || j == n - 1))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    if peak > 0.0 && edge / peak > TAIL_LIMIT {
        return Err(Error::BoundaryDecay {
            ratio: edge / peak,
            limit: TAIL_LIMIT,
        });
    }
    let field = abelian::analyze(grid, samples)?;
    let provider = SymbolProvider::LaplacianPower {
        dim: grid.dim(),
        half_order: 1,
    };
    let sob = homogeneous_sobolev_norm(&field, &provider, to_f64(exps.a))?;
    let lq = abelian::lp_norm(grid, samples, to_f64(exps.q));
    let lp = abelian::lp_norm(grid, samples, to_f64(exps.p));
    Ok(ratio_report(lq, sob, lp, s))
}

/// `‖u‖_{L^q} / (‖∇_H u‖^θ ‖u‖^{1−θ})` on `H^1`; `L²` norms are spectral,
/// other `L^q` norms come from synthesis to the backend grid.
pub fn verify_inequality_heisenberg(
    u: &SpectralField,
    q: Rational,
    n: u32,
    backend: &HeisenbergBackend,
) -> Result<GnRatio> {
    let mut out = verify_inequalities_heisenberg(u, &[q], n, backend)?;
    Ok(out.remove(0))
}

/// One ratio per entry of `qs`, from a single synthesis of `u`.
pub fn verify_inequalities_heisenberg(
    u: &SpectralField,
    qs: &[Rational],
    n: u32,
    backend: &HeisenbergBackend,
) -> Result<Vec<GnRatio>> {
    if n != 1 {
        return Err(Error::Unsupported(format!("synthesis is available for n = 1, got {n}")));
    }
    let two = Rational::from_integer(2);
    let thetas = qs
        .iter()
        .map(|&q| gn_exponent_heisenberg(q, n))
        .collect::<Result<Vec<_>>>()?;
    let l2 = l2_norm(u);
    let grad = homogeneous_sobolev_norm(u, &SymbolProvider::sub_laplacian(), 1.0)?;
    let field = if qs.iter().any(|&q| q != two) {
        let f = backend.synthesize_field(u)?;
        let ratio = f.boundary_ratio();
        if ratio > SYNTHESIS_TAIL_LIMIT {
            return Err(Error::BoundaryDecay {
                ratio,
                limit: SYNTHESIS_TAIL_LIMIT,
            });
        }
        Some(f)
    } else {
        None
    };
    Ok(qs
        .iter()
        .zip(&thetas)
        .map(|(&q, &theta)| {
            let lhs = match &field {
                Some(f) if q != two => f.lp_norm(to_f64(q)),
                _ => l2,
            };
            ratio_report(lhs, grad, l2, to_f64(theta))
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalConstant {
    /// Largest observed ratio; a lower bound on the best constant.
    pub bound: f64,
    pub argmax: usize,
    pub descriptor: String,
    pub ratios: Vec<f64>,
    pub descriptors: Vec<String>,
}

/// Evaluates `sample(i)` for `i < trials` and keeps the largest ratio.
pub fn empirical_constant<F>(trials: usize, sample: F) -> Result<EmpiricalConstant>
where
    F: Fn(usize) -> Result<(String, f64)> + Sync,
{
    if trials == 0 {
        return Err(Error::InsufficientSamples("need at least one trial".into()));
    }
    let rows: Vec<(String, f64)> = (0..trials).into_par_iter().map(&sample).collect::<Result<_>>()?;
    if rows.iter().any(|(_, r)| !r.is_finite()) {
        return Err(Error::NonFinite("inequality ratio"));
    }
    let (argmax, _) = rows
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, (_, r))| if *r > acc.1 { (i, *r) } else { acc });
    let (descriptors, ratios): (Vec<String>, Vec<f64>) = rows.into_iter().unzip();
    Ok(EmpiricalConstant {
        bound: ratios[argmax],
        argmax,
        descriptor: descriptors[argmax].clone(),
        ratios,
        descriptors,
    })
}
