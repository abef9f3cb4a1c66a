//! Run configuration: a TOML file with nested sections.
//!
//! Every field is optional at parse time. [`RunConfig::validate`] checks what
//! the chosen subcommand needs and reports every missing or out-of-range
//! field at once.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spatial: Option<SpatialSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equation: Option<EquationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gn: Option<GnSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    /// `"heisenberg"` or `"abelian"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Heisenberg dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Euclidean dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Even operator degree ν; `|ξ|^ν` unless `coefficients` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    /// `Σ a_j ξ_j^ν`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_max: Option<f64>,
    /// Calibrated at run time when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plancherel_constant: Option<f64>,
    /// Abelian samples per axis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Abelian box half width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<[usize; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    /// `"power"`: `μ|u|^{p−1}u`; `"tuple_power"`: the same on the first slot
    /// of `(u, R^{1/ν}u, …)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Heisenberg: centre of the Gaussian λ-profile on `E_00`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    /// Heisenberg: variance of the λ-profile.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    /// Abelian: width of `exp(−|x|²/(2w²))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// Target `‖u0‖_{H^{ν/2}} + ‖u1‖_{L²}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// `u1 = velocity · u0` before rescaling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnSection {
    /// Exponents as rationals, e.g. `"8/3"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Abelian anisotropic width sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    EvolveLinear,
    EvolveSemilinear,
    VerifyDecay,
    GnCheck,
    OracleCompare,
    Calibrate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::EvolveLinear => "evolve-linear",
            Command::EvolveSemilinear => "evolve-semilinear",
            Command::VerifyDecay => "verify-decay",
            Command::GnCheck => "gn-check",
            Command::OracleCompare => "oracle-compare",
            Command::Calibrate => "calibrate",
        }
    }
}

/// Field-level validation failures.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub problems: Vec<String>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Heisenberg { n: usize },
    Abelian { dim: usize, order: u32 },
}

#[derive(Default)]
struct Checker {
    problems: Vec<String>,
}

impl Checker {
    fn need<T: Copy>(&mut self, name: &str, v: Option<T>) -> Option<T> {
        if v.is_none() {
            self.problems.push(format!("missing required field `{name}`"));
        }
        v
    }

    fn positive(&mut self, name: &str, v: Option<f64>) {
        if let Some(x) = self.need(name, v) {
            if !(x > 0.0 && x.is_finite()) {
                self.problems.push(format!("`{name}` must be positive and finite, got {x}"));
            }
        }
    }

    fn fail(&mut self, msg: String) {
        self.problems.push(msg);
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn backend(&self) -> Option<Backend> {
        let b = self.backend.as_ref()?;
        match b.kind.as_deref()? {
            "heisenberg" => Some(Backend::Heisenberg { n: b.n? }),
            "abelian" => Some(Backend::Abelian {
                dim: b.dim?,
                order: b.order?,
            }),
            _ => None,
        }
    }

    /// Checks every field `cmd` reads.
    pub fn validate(&self, cmd: Command) -> Result<Backend, ValidationError> {
        let mut c = Checker::default();
        let backend = self.backend.clone().unwrap_or_default();
        let grid = self.grid.clone().unwrap_or_default();
        let spatial = self.spatial.clone().unwrap_or_default();
        let eq = self.equation.clone().unwrap_or_default();
        let time = self.time.clone().unwrap_or_default();
        let data = self.data.clone().unwrap_or_default();
        let nl = self.nonlinearity.clone().unwrap_or_default();

        let kind = c.need("backend.kind", backend.kind.as_deref());
        let heisenberg = kind == Some("heisenberg");
        let abelian = kind == Some("abelian");
        if let Some(k) = kind {
            if !heisenberg && !abelian {
                c.fail(format!("`backend.kind` must be \"heisenberg\" or \"abelian\", got {k:?}"));
            }
        }
        if heisenberg {
            if let Some(n) = c.need("backend.n", backend.n) {
                if n == 0 {
                    c.fail("`backend.n` must be ≥ 1".into());
                }
            }
            c.positive("grid.lambda_min", grid.lambda_min);
            c.positive("grid.lambda_max", grid.lambda_max);
            if let Some(nodes) = c.need("grid.node_count", grid.node_count) {
                if nodes < 2 || nodes % 2 != 0 {
                    c.fail(format!("`grid.node_count` must be even and ≥ 2, got {nodes}"));
                }
            }
            c.positive("grid.mu_max", grid.mu_max);
            if let Some(pc) = grid.plancherel_constant {
                if !(pc > 0.0) {
                    c.fail(format!("`grid.plancherel_constant` must be positive, got {pc}"));
                }
            }
            let needs_box = !matches!(cmd, Command::EvolveLinear | Command::VerifyDecay)
                || grid.plancherel_constant.is_none();
            if needs_box {
                if let Some(hw) = c.need("spatial.half_widths", spatial.half_widths) {
                    if hw.iter().any(|v| !(*v > 0.0)) {
                        c.fail("`spatial.half_widths` must be positive".into());
                    }
                }
                if let Some(sh) = c.need("spatial.shape", spatial.shape) {
                    if sh.iter().any(|v| *v < 3) {
                        c.fail("`spatial.shape` needs ≥ 3 points per axis".into());
                    }
                }
            }
        }
        if abelian {
            if cmd == Command::Calibrate || cmd == Command::OracleCompare {
                c.fail(format!("`{}` needs the heisenberg backend", cmd.name()));
            }
            let dim = c.need("backend.dim", backend.dim);
            if let Some(order) = c.need("backend.order", backend.order) {
                if order < 2 || order % 2 != 0 {
                    c.fail(format!("`backend.order` must be even and ≥ 2, got {order}"));
                }
            }
            if let (Some(coeffs), Some(d)) = (&backend.coefficients, dim) {
                if coeffs.len() != d || coeffs.iter().any(|a| !(*a > 0.0)) {
                    c.fail("`backend.coefficients` needs `dim` positive entries".into());
                }
            }
            if let Some(p) = c.need("grid.points", grid.points) {
                if p < 4 || p % 2 != 0 {
                    c.fail(format!("`grid.points` must be even and ≥ 4, got {p}"));
                }
            }
            c.positive("grid.half_width", grid.half_width);
        }

        let evolves = matches!(
            cmd,
            Command::EvolveLinear | Command::EvolveSemilinear | Command::VerifyDecay | Command::OracleCompare
        );
        if evolves {
            c.positive("equation.b", eq.b);
            c.positive("equation.m", eq.m);
            c.positive("time.horizon", time.horizon);
            c.positive("time.step", time.step);
            if heisenberg {
                c.positive("data.center", data.center);
                c.positive("data.variance", data.variance);
            }
            if abelian {
                c.positive("data.width", data.width);
            }
            c.positive("data.scale", data.scale);
        }
        if cmd == Command::EvolveSemilinear {
            if let Some(k) = c.need("nonlinearity.kind", nl.kind.as_deref()) {
                if k != "power" && k != "tuple_power" {
                    c.fail(format!("`nonlinearity.kind` must be \"power\" or \"tuple_power\", got {k:?}"));
                }
            }
            if let Some(p) = c.need("nonlinearity.p", nl.p) {
                if !(p >= 1.0) {
                    c.fail(format!("`nonlinearity.p` must be ≥ 1, got {p}"));
                }
            }
        }
        if let Some(gn) = &self.gn {
            if let Some(qs) = &gn.q {
                for q in qs {
                    if parse_rational(q).is_none() {
                        c.fail(format!("`gn.q` entry {q:?} is not a rational"));
                    }
                }
            }
            if gn.trials == Some(0) {
                c.fail("`gn.trials` must be ≥ 1".into());
            }
        }
        if !c.problems.is_empty() {
            return Err(ValidationError { problems: c.problems });
        }
        Ok(self.backend().expect("validated backend"))
    }
}

/// `"a/b"` or an integer.
pub fn parse_rational(s: &str) -> Option<subwave::gn::Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let (n, d): (i128, i128) = (n.trim().parse().ok()?, d.trim().parse().ok()?);
            (d != 0).then(|| subwave::gn::rational(n, d))
        }
        None => Some(subwave::gn::Rational::from_integer(s.parse().ok()?)),
    }
}
