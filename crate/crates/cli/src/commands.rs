//! Subcommand bodies. Each one fills an [`Artifacts`] directory and returns
//! the acceptance checks it evaluated.

use std::sync::Arc;

use anyhow::{anyhow, bail, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use subwave::abelian::{self, AbelianGrid};
use subwave::fd::{compare_with_spectral, Leapfrog, SpatialOperator, StencilOperator};
use subwave::gn::{
    gn_exponent_graded, gn_exponent_heisenberg, to_f64, verify_inequality_abelian,
    verify_inequalities_heisenberg, Rational,
};
use subwave::propagator::{evolve_linear, verify_decay, write_trajectory_csv, DecayReport, Trajectory};
use subwave::semilinear::{
    data_norm, picard_solve, verify_semilinear_decay, AbelianBackend, AdmissibilityBackend, FieldBackend,
    HeisenbergBackend, Nonlinearity, SemilinearProblem, ZNormConfig,
};
use subwave::spectral::{build_grid, ModeGrid, ModeSpace, SpectralField, SymbolProvider};
use subwave::transform::{calibrate_plancherel, transform_plan, SpatialField, SpatialGrid};

use crate::config::{parse_rational, Backend, Command, RunConfig};
use crate::output::{Artifacts, Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceProfile {
    Strict,
    Default,
}

impl ToleranceProfile {
    /// Allowed slack on fitted decay slopes, as a fraction of `δ0`.
    fn slope_slack(self) -> f64 {
        match self {
            ToleranceProfile::Strict => 0.01,
            ToleranceProfile::Default => 0.05,
        }
    }

    fn oracle_tolerance(self) -> f64 {
        match self {
            ToleranceProfile::Strict => 5e-3,
            ToleranceProfile::Default => 1e-2,
        }
    }

    fn dilation_tolerance(self) -> f64 {
        match self {
            ToleranceProfile::Strict => 5e-3,
            ToleranceProfile::Default => 1e-2,
        }
    }

    /// Largest allowed `max / median` over an inequality family.
    fn family_spread(self) -> f64 {
        match self {
            ToleranceProfile::Strict => 5.0,
            ToleranceProfile::Default => 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

pub struct Context<'a> {
    /// Effective configuration; commands fill in derived values such as a calibrated constant.
    pub config: &'a mut RunConfig,
    pub backend: Backend,
    pub seed: u64,
    pub profile: ToleranceProfile,
}

pub fn run(cmd: Command, ctx: &mut Context<'_>, out: &mut Artifacts) -> Result<Vec<Check>> {
    match cmd {
        Command::EvolveLinear => evolve_linear_cmd(ctx, out),
        Command::VerifyDecay => verify_decay_cmd(ctx, out),
        Command::EvolveSemilinear => evolve_semilinear_cmd(ctx, out),
        Command::GnCheck => gn_check_cmd(ctx, out),
        Command::OracleCompare => oracle_compare_cmd(ctx, out),
        Command::Calibrate => calibrate_cmd(ctx, out),
    }
}

// --- shared setup ----------------------------------------------------------

fn spatial_grid(cfg: &RunConfig) -> Result<Arc<SpatialGrid>> {
    let s = cfg.spatial.as_ref().ok_or_else(|| anyhow!("missing [spatial]"))?;
    let (hw, shape) = (s.half_widths.unwrap(), s.shape.unwrap());
    Ok(Arc::new(SpatialGrid::new(hw, shape)?))
}

/// Frequency the calibration reference is modulated by.
fn reference_frequency(cfg: &RunConfig) -> f64 {
    let g = cfg.grid.as_ref().unwrap();
    cfg.data
        .as_ref()
        .and_then(|d| d.center)
        .unwrap_or_else(|| (g.lambda_min.unwrap() * g.lambda_max.unwrap()).sqrt())
}

/// `‖f‖²_{L²} = c Σ w_i ‖f̂(λ_i)‖²_HS` calibrated on `e^{−(x²+y²)/2 − t²/18} e^{iωt}`.
fn calibrate(cfg: &RunConfig, grid: ModeGrid) -> Result<ModeGrid> {
    if grid.n() != 1 {
        bail!("calibration synthesizes on H^1; set grid.plancherel_constant for n = {}", grid.n());
    }
    let omega = reference_frequency(cfg);
    let reference = SpatialField::from_fn(spatial_grid(cfg)?, |x, y, t| {
        Complex64::from_polar((-(x * x + y * y) / 2.0 - t * t / 18.0).exp(), omega * t)
    })?;
    let (_, calibrated) = calibrate_plancherel(&reference, &Arc::new(grid))?;
    Ok(calibrated)
}

fn mode_grid(ctx: &mut Context<'_>) -> Result<Arc<ModeGrid>> {
    let Backend::Heisenberg { n } = ctx.backend else {
        bail!("mode grid requested for a non-Heisenberg backend");
    };
    let g = ctx.config.grid.clone().unwrap();
    let raw = build_grid(
        g.lambda_min.unwrap(),
        g.lambda_max.unwrap(),
        g.node_count.unwrap(),
        g.mu_max.unwrap(),
        n,
    )?;
    let grid = match g.plancherel_constant {
        Some(c) => raw.with_plancherel_constant(c),
        None => {
            let cal = calibrate(ctx.config, raw)?;
            log::info!("calibrated Plancherel constant {}", cal.plancherel_constant());
            ctx.config.grid.as_mut().unwrap().plancherel_constant = Some(cal.plancherel_constant());
            cal
        }
    };
    Ok(Arc::new(grid))
}

fn abelian_grid(cfg: &RunConfig, dim: usize) -> Result<Arc<AbelianGrid>> {
    let g = cfg.grid.as_ref().unwrap();
    Ok(Arc::new(AbelianGrid::new(dim, g.points.unwrap(), g.half_width.unwrap())?))
}

fn provider(cfg: &RunConfig, backend: Backend) -> SymbolProvider {
    match backend {
        Backend::Heisenberg { .. } => SymbolProvider::sub_laplacian(),
        Backend::Abelian { dim, order } => match cfg.backend.as_ref().and_then(|b| b.coefficients.clone()) {
            Some(coefficients) => SymbolProvider::AbelianHomogeneous {
                coefficients,
                half_order: order / 2,
            },
            None => SymbolProvider::LaplacianPower {
                dim,
                half_order: order / 2,
            },
        },
    }
}

fn sample_times(cfg: &RunConfig) -> Vec<f64> {
    let t = cfg.time.as_ref().unwrap();
    let (horizon, step) = (t.horizon.unwrap(), t.step.unwrap());
    let count = (horizon / step).round() as usize;
    (0..=count).map(|j| j as f64 * step).collect()
}

/// `(u0, u1)` rescaled to `‖u0‖_{H^{ν/2}} + ‖u1‖_{L²} = data.scale`.
fn scaled_data<G: ModeSpace>(
    u0: SpectralField<G>,
    cfg: &RunConfig,
    provider: &SymbolProvider,
) -> Result<(SpectralField<G>, SpectralField<G>)> {
    let d = cfg.data.as_ref().unwrap();
    let u1 = u0.scale(Complex64::new(d.velocity.unwrap_or(0.0), 0.0));
    let norm = data_norm(&u0, &u1, provider)?;
    if !(norm > 0.0) {
        bail!("initial data vanish on the grid");
    }
    let k = Complex64::new(d.scale.unwrap() / norm, 0.0);
    Ok((u0.scale(k), u1.scale(k)))
}

/// `g(λ) E_00` with `g` Gaussian of the configured centre and variance.
fn heisenberg_profile(grid: &Arc<ModeGrid>, center: f64, variance: f64) -> SpectralField {
    let mut u = SpectralField::zeros(grid.clone());
    for (i, &lam) in grid.lambda_nodes().iter().enumerate() {
        u.set(i, 0, 0, Complex64::new((-(lam - center).powi(2) / (2.0 * variance)).exp(), 0.0));
    }
    u
}

fn abelian_gaussian(grid: &Arc<AbelianGrid>, widths: &[f64]) -> Vec<Complex64> {
    grid.sample(|x| {
        let r2: f64 = x.iter().zip(widths).map(|(v, w)| (v / w).powi(2)).sum();
        (-r2 / 2.0).exp()
    })
    .into_iter()
    .map(|v| Complex64::new(v, 0.0))
    .collect()
}

enum Data {
    Heisenberg(Arc<ModeGrid>, SpectralField, SpectralField),
    Abelian(Arc<AbelianGrid>, SpectralField<AbelianGrid>, SpectralField<AbelianGrid>),
}

fn initial_data(ctx: &mut Context<'_>, provider: &SymbolProvider) -> Result<Data> {
    let d = ctx.config.data.clone().unwrap();
    match ctx.backend {
        Backend::Heisenberg { .. } => {
            let grid = mode_grid(ctx)?;
            let u0 = heisenberg_profile(&grid, d.center.unwrap(), d.variance.unwrap());
            let (u0, u1) = scaled_data(u0, ctx.config, provider)?;
            Ok(Data::Heisenberg(grid, u0, u1))
        }
        Backend::Abelian { dim, .. } => {
            let grid = abelian_grid(ctx.config, dim)?;
            let w = d.width.unwrap();
            let u0 = abelian::analyze(&grid, &abelian_gaussian(&grid, &vec![w; dim]))?;
            let (u0, u1) = scaled_data(u0, ctx.config, provider)?;
            Ok(Data::Abelian(grid, u0, u1))
        }
    }
}

fn equation(cfg: &RunConfig) -> (f64, f64) {
    let e = cfg.equation.as_ref().unwrap();
    (e.b.unwrap(), e.m.unwrap())
}

fn decay_check(name: &str, rep: &DecayReport, slack: f64) -> Check {
    let bound = -rep.delta0 + slack * rep.delta0;
    check(
        name,
        rep.trivial || rep.fitted_slope <= bound,
        format!("fitted slope {} vs bound {bound} (δ0 = {})", rep.fitted_slope, rep.delta0),
    )
}

fn trajectory_csv<G: ModeSpace>(
    tr: &Trajectory<G>,
    provider: &SymbolProvider,
    report: Option<&DecayReport>,
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, tr, provider, &[provider.degree() / 2.0], report)?;
    Ok(buf)
}

// --- evolve-linear / verify-decay --------------------------------------------

fn linear_reports<G: ModeSpace>(
    u0: &SpectralField<G>,
    u1: &SpectralField<G>,
    ctx: &Context<'_>,
    provider: &SymbolProvider,
    orders: &[f64],
) -> Result<(Trajectory<G>, Vec<DecayReport>)> {
    let (b, m) = equation(ctx.config);
    let tr = evolve_linear(u0, u1, b, m, provider, &sample_times(ctx.config))?;
    let reports = orders
        .iter()
        .map(|&s| verify_decay(&tr, provider, s, m, b))
        .collect::<subwave::Result<Vec<_>>>()?;
    Ok((tr, reports))
}

fn evolve_linear_cmd(ctx: &mut Context<'_>, out: &mut Artifacts) -> Result<Vec<Check>> {
    let provider = provider(ctx.config, ctx.backend);
    let orders = [0.0, provider.degree() / 2.0];
    let slack = ctx.profile.slope_slack();
    let (csv, reports) = match initial_data(ctx, &provider)? {
        Data::Heisenberg(_, u0, u1) => {
            let (tr, reps) = linear_reports(&u0, &u1, ctx, &provider, &orders)?;
            (trajectory_csv(&tr, &provider, Some(&reps[1]))?, reps)
        }
        Data::Abelian(_, u0, u1) => {
            let (tr, reps) = linear_reports(&u0, &u1, ctx, &provider, &orders)?;
            (trajectory_csv(&tr, &provider, Some(&reps[1]))?, reps)
        }
    };
    out.write("trajectory.csv", &csv)?;
    out.json("decay.json", &reports)?;
    Ok(reports
        .iter()
        .map(|r| decay_check(&format!("decay H^{}", r.s), r, slack))
        .collect())
}

fn verify_decay_cmd(ctx: &mut Context<'_>, out: &mut Artifacts) -> Result<Vec<Check>> {
    let provider = provider(ctx.config, ctx.backend);
    let top = provider.degree() / 2.0;
    let orders = [0.0, 0.5 * top, top];
    let reports = match initial_data(ctx, &provider)? {
        Data::Heisenberg(_, u0, u1) => linear_reports(&u0, &u1, ctx, &provider, &orders)?.1,
        Data::Abelian(_, u0, u1) => linear_reports(&u0, &u1, ctx, &provider, &orders)?.1,
    };
    let slack = ctx.profile.slope_slack();
    let mut table = Table::new(&["s", "delta0", "fitted_slope", "slope_bound", "fitted_constant", "data_norm", "pass"]);
    let mut curve = Table::new(&["s", "t", "ratio"]);
    let mut checks = Vec::new();
    for r in &reports {
        let c = decay_check(&format!("decay H^{}", r.s), r, slack);
        table.row(&[
            Cell::F(r.s),
            Cell::F(r.delta0),
            Cell::F(r.fitted_slope),
            Cell::F(-r.delta0 + slack * r.delta0),
            Cell::F(r.fitted_constant),
            Cell::F(r.data_norm),
            Cell::S(c.passed.to_string()),
        ]);
        for &(t, v) in &r.ratio_curve {
            curve.row(&[Cell::F(r.s), Cell::F(t), Cell::F(v)]);
        }
        checks.push(c);
    }
    out.write("decay.csv", &table.into_bytes())?;
    out.write("ratio_curve.csv", &curve.into_bytes())?;
    Ok(checks)
}

// --- evolve-semilinear -------------------------------------------------------

fn nonlinearity(cfg: &RunConfig, provider: &SymbolProvider) -> Result<Nonlinearity> {
    let nl = cfg.nonlinearity.as_ref().unwrap();
    let (mu, p) = (nl.mu.unwrap_or(1.0), nl.p.unwrap());
    Ok(match nl.kind.as_deref().unwrap() {
        "power" => Nonlinearity::power(Complex64::new(mu, 0.0), p)?,
        _ => {
            let components = ((provider.degree() / 2.0).floor() as usize).max(1);
            Nonlinearity::GeneralF {
                f: Arc::new(move |u: &[Complex64]| mu * u[0] * u[0].norm().powf(p - 1.0)),
                p,
                lipschitz: mu.abs() * p,
                components,
            }
        }
    })
}

fn solve_semilinear<G: ModeSpace, B: FieldBackend<G>>(
    u0: SpectralField<G>,
    u1: SpectralField<G>,
    ctx: &Context<'_>,
    provider: &SymbolProvider,
    admissibility: AdmissibilityBackend,
    backend: &B,
    out: &mut Artifacts,
) -> Result<Vec<Check>> {
    let (b, m) = equation(ctx.config);
    let nl_cfg = ctx.config.nonlinearity.as_ref().unwrap();
    let problem = SemilinearProblem {
        u0,
        u1,
        nonlinearity: nonlinearity(ctx.config, provider)?,
        b,
        m,
        provider: provider.clone(),
        znorm: ZNormConfig::standard(b, m, provider, sample_times(ctx.config)),
        tol: nl_cfg.tol.unwrap_or(1e-8),
        max_iter: nl_cfg.max_iter.unwrap_or(30),
        admissibility_backend: Some(admissibility),
    };
    let (tr, diag) = picard_solve(&problem, backend)?;
    let mut table = Table::new(&["iteration", "z_norm", "increment", "ratio"]);
    for (j, z) in diag.z_norms.iter().enumerate() {
        let inc = if j == 0 { None } else { diag.increments.get(j - 1) };
        let ratio = if j < 2 { None } else { diag.ratios.get(j - 2) };
        table.row(&[
            Cell::I(j as u64),
            Cell::F(*z),
            inc.map_or(Cell::S(String::new()), |v| Cell::F(*v)),
            ratio.map_or(Cell::S(String::new()), |v| Cell::F(*v)),
        ]);
    }
    out.write("picard.csv", &table.into_bytes())?;
    out.write("trajectory.csv", &trajectory_csv(&tr, provider, None)?)?;
    let decay = verify_semilinear_decay(&tr, provider, b, m)?;
    out.json("diagnostics.json", &json!({ "picard": diag, "decay": decay }))?;
    let slopes = [decay.slope_l2, decay.slope_half, decay.slope_time_derivative];
    Ok(vec![
        check(
            "picard converged",
            diag.status == subwave::semilinear::PicardStatus::Converged,
            format!("{:?} after {} iterations", diag.status, diag.iterations),
        ),
        check(
            "contraction ratios < 1",
            diag.ratios.iter().all(|r| *r < 1.0),
            format!("{:?}", diag.ratios),
        ),
        check(
            "semilinear decay slopes negative",
            decay.trivial || slopes.iter().all(|s| *s < 0.0),
            format!("{slopes:?}"),
        ),
    ])
}

fn evolve_semilinear_cmd(ctx: &mut Context<'_>, out: &mut Artifacts) -> Result<Vec<Check>> {
    let provider = provider(ctx.config, ctx.backend);
    match (initial_data(ctx, &provider)?, ctx.backend) {
        (Data::Heisenberg(grid, u0, u1), Backend::Heisenberg { n }) => {
            let backend = HeisenbergBackend::new(grid, spatial_grid(ctx.config)?)?;
            solve_semilinear(u0, u1, ctx, &provider, AdmissibilityBackend::Heisenberg { n }, &backend, out)
        }
        (Data::Abelian(grid, u0, u1), Backend::Abelian { dim, .. }) => {
            let backend = AbelianBackend::new(grid);
            let adm = AdmissibilityBackend::Graded { q_dim: dim as f64 };
            solve_semilinear(u0, u1, ctx, &provider, adm, &backend, out)
        }
        _ => unreachable!("data follow the backend"),
    }
}

// --- gn-check ----------------------------------------------------------------

fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

fn q_list(cfg: &RunConfig, top: Rational) -> Vec<Rational> {
    if let Some(qs) = cfg.gn.as_ref().and_then(|g| g.q.clone()) {
        return qs.iter().filter_map(|q| parse_rational(q)).collect();
    }
    let mut qs: Vec<Rational> = (0..=4).map(|k| int(2) + (top - int(2)) * Rational::new(k, 4)).collect();
    if int(3) <= top && !qs.contains(&int(3)) {
        qs.push(int(3));
    }
    qs.sort();
    qs
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// `g(λ)` around `l0 ∈ [0.8, 1.3)` on every `(k, l)` with `k, l < 3`, random coefficients.
fn random_hermite_field(grid: &Arc<ModeGrid>, rng: &mut ChaCha8Rng) -> (String, SpectralField) {
    let l0 = rng.gen_range(0.8..1.3);
    let kmax = grid.hermite_count().min(3);
    let coeffs: Vec<Complex64> = (0..kmax * kmax)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut u = SpectralField::zeros(grid.clone());
    for (i, &lam) in grid.lambda_nodes().iter().enumerate() {
        let g = (-(lam - l0).powi(2) / 0.18).exp();
        for k in 0..kmax {
            for l in 0..kmax {
                u.set(i, k, l, coeffs[k * kmax + l] * g);
            }
        }
    }
    (format!("hermite-random l0={l0}"), u)
}

/// `u∘δ_r` of the λ-profile around 1: coefficients `r^{−2n−2} g(λ/r²)` on a box shrunk by `δ_r`.
fn dilated_profile(grid: &Arc<ModeGrid>, spatial: &SpatialGrid, r: f64) -> Result<(SpectralField, HeisenbergBackend)> {
    let mut u = SpectralField::zeros(grid.clone());
    for (i, &lam) in grid.lambda_nodes().iter().enumerate() {
        let g = (-(lam / (r * r) - 1.0).powi(2) / 0.18).exp();
        u.set(i, 0, 0, Complex64::new(r.powi(-4) * g, 0.0));
    }
    let [hx, hy, ht] = spatial.half_widths();
    let shrunk = Arc::new(SpatialGrid::new([hx / r, hy / r, ht / (r * r)], spatial.shape())?);
    Ok((u, HeisenbergBackend::new(grid.clone(), shrunk)?))
}

#[derive(Serialize)]
struct FamilySummary {
    tuple: String,
    bound: f64,
    descriptor: String,
    median: f64,
    dilation_drift: Option<f64>,
}

fn gn_check_cmd(ctx: &mut Context<'_>, out: &mut Artifacts) -> Result<Vec<Check>> {
    let trials = ctx.config.gn.as_ref().and_then(|g| g.trials).unwrap_or(20);
    let mut exps_table = Table::new(&["q", "theta", "theta_decimal"]);
    let mut ratios = Table::new(&["tuple", "s", "ratio", "family"]);
    let mut summaries = Vec::new();
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let dil_tol = ctx.profile.dilation_tolerance();
    let spread = ctx.profile.family_spread();
    match ctx.backend {
        Backend::Heisenberg { n } => {
            let top = int(2) + int(2) / int(n as i128);
            let qs = q_list(ctx.config, top);
            for &q in &qs {
                let theta = gn_exponent_heisenberg(q, n as u32)?;
                exps_table.row(&[Cell::S(q.to_string()), Cell::S(theta.to_string()), Cell::F(to_f64(theta))]);
            }
            if n == 1 {
                let grid = mode_grid(ctx)?;
                let spatial = spatial_grid(ctx.config)?;
                let backend = HeisenbergBackend::new(grid.clone(), spatial.clone())?;
                let family: Vec<(String, SpectralField)> =
                    (0..trials).map(|_| random_hermite_field(&grid, &mut rng)).collect();
                let (u1, b1) = dilated_profile(&grid, &spatial, 1.0)?;
                let (u2, b2) = dilated_profile(&grid, &spatial, 2.0)?;
                let per_field = family
                    .iter()
                    .map(|(_, u)| verify_inequalities_heisenberg(u, &qs, 1, &backend))
                    .collect::<subwave::Result<Vec<_>>>()?;
                let dil_a = verify_inequalities_heisenberg(&u1, &qs, 1, &b1)?;
                let dil_b = verify_inequalities_heisenberg(&u2, &qs, 1, &b2)?;
                for (j, &q) in qs.iter().enumerate() {
                    let tuple = format!("H1;q={q}");
                    let theta = to_f64(gn_exponent_heisenberg(q, 1)?);
                    let mut values = Vec::with_capacity(trials);
                    for ((desc, _), rs) in family.iter().zip(&per_field) {
                        ratios.row(&[Cell::S(tuple.clone()), Cell::F(theta), Cell::F(rs[j].ratio), Cell::S(desc.clone())]);
                        values.push(rs[j].ratio);
                    }
                    let (a, b) = (&dil_a[j], &dil_b[j]);
                    for (r, name) in [(a, "dilation r=1"), (b, "dilation r=2")] {
                        ratios.row(&[Cell::S(tuple.clone()), Cell::F(theta), Cell::F(r.ratio), Cell::S(name.into())]);
                    }
                    let drift = (b.ratio / a.ratio - 1.0).abs();
                    summaries.push(family_summary(&tuple, &family, &values, Some(drift)));
                    checks.extend(family_checks(&tuple, &values, Some(drift), dil_tol, spread));
                }
            } else {
                log::warn!("inequality sweeps synthesize on H^1 only; n = {n} reports exponents");
            }
        }
        Backend::Abelian { dim, .. } => {
            let q_dim = int(dim as i128);
            if dim < 3 {
                bail!("the R^d sweep needs d ≥ 3 so that Q > 2a with a = 1");
            }
            let top = int(2) * q_dim / (q_dim - int(2));
            let qs = q_list(ctx.config, top);
            let grid = abelian_grid(ctx.config, dim)?;
            let widths = ctx
                .config
                .gn
                .as_ref()
                .and_then(|g| g.widths.clone())
                .unwrap_or_else(|| vec![0.5, 0.7, 1.0, 1.4, 2.0]);
            for &q in &qs {
                let e = gn_exponent_graded(q_dim, int(1), int(2), int(2), q)?;
                let s = e.s.ok_or_else(|| anyhow!("degenerate tuple at q = {q}"))?;
                exps_table.row(&[Cell::S(q.to_string()), Cell::S(s.to_string()), Cell::F(to_f64(s))]);
                let tuple = format!("R{dim};a=1;p=r=2;q={q}");
                let family: Vec<(String, f64)> =
                    widths.iter().map(|&w| (format!("anisotropic w={w}"), w)).collect();
                let mut values = Vec::new();
                for (desc, w) in &family {
                    let mut ws = vec![1.0; dim];
                    ws[0] = *w;
                    let r = verify_inequality_abelian(&grid, &abelian_gaussian(&grid, &ws), &e)?;
                    ratios.row(&[Cell::S(tuple.clone()), Cell::F(to_f64(s)), Cell::F(r.ratio), Cell::S(desc.clone())]);
                    values.push(r.ratio);
                }
                let a = verify_inequality_abelian(&grid, &abelian_gaussian(&grid, &vec![1.0; dim]), &e)?;
                let b = verify_inequality_abelian(&grid, &abelian_gaussian(&grid, &vec![2.0; dim]), &e)?;
                let drift = (b.ratio / a.ratio - 1.0).abs();
                summaries.push(family_summary(&tuple, &family, &values, Some(drift)));
                checks.extend(family_checks(&tuple, &values, Some(drift), dil_tol, spread));
            }
        }
    }
    out.write("exponents.csv", &exps_table.into_bytes())?;
    out.write("ratios.csv", &ratios.into_bytes())?;
    out.json("summary.json", &summaries)?;
    Ok(checks)
}

fn family_summary<T>(tuple: &str, family: &[(String, T)], values: &[f64], drift: Option<f64>) -> FamilySummary {
    let (argmax, bound) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    FamilySummary {
        tuple: tuple.to_string(),
        bound,
        descriptor: family.get(argmax).map(|f| f.0.clone()).unwrap_or_default(),
        median: if values.is_empty() { f64::NAN } else { median(values) },
        dilation_drift: drift,
    }
}

fn family_checks(tuple: &str, values: &[f64], drift: Option<f64>, dil_tol: f64, spread: f64) -> Vec<Check> {
    let mut v = vec![check(
        &format!("{tuple} ratios finite"),
        values.iter().all(|r| r.is_finite()),
        format!("{} samples", values.len()),
    )];
    if !values.is_empty() {
        let (max, med) = (values.iter().copied().fold(f64::NEG_INFINITY, f64::max), median(values));
        v.push(check(
            &format!("{tuple} max within {spread}× median"),
            max <= spread * med,
            format!("max {max}, median {med}"),
        ));
    }
    if let Some(d) = drift {
        v.push(check(&format!("{tuple} dilation invariance"), d < dil_tol, format!("drift {d}")));
    }
    v
}

// --- oracle-compare ----------------------------------------------------------

fn oracle_compare_cmd(ctx: &mut Context<'_>, out: &mut Artifacts) -> Result<Vec<Check>> {
    let Backend::Heisenberg { n: 1 } = ctx.backend else {
        bail!("oracle-compare runs on H^1");
    };
    let provider = SymbolProvider::sub_laplacian();
    let Data::Heisenberg(grid, u0, u1) = initial_data(ctx, &provider)? else {
        unreachable!("Heisenberg data");
    };
    let (b, m) = equation(ctx.config);
    let horizon = ctx.config.time.as_ref().unwrap().horizon.unwrap();
    let spatial = spatial_grid(ctx.config)?;
    let plan = transform_plan(&grid, &spatial)?;
    let f0 = plan.synthesize(&u0, &spatial)?;
    let f1 = plan.synthesize(&u1, &spatial)?;
    let op = SpatialOperator::SubLaplacian(StencilOperator::new(spatial.clone())?);
    let quarter = (0.25 * horizon / (0.5 * Leapfrog::cfl_limit(&op, m))).ceil() as usize;
    let steps = 4 * quarter;
    let lf = Leapfrog::new(op, horizon / steps as f64, b, m)?;
    let fd = lf.run(f0.values(), f1.values(), steps, quarter, None)?;
    let spectral = evolve_linear(&u0, &u1, b, m, &provider, &fd.times)?;
    let rep = compare_with_spectral(&spectral, &fd, &plan, &spatial)?;
    let mut table = Table::new(&["t", "relative_error", "fd_energy"]);
    for (j, (&t, &e)) in rep.times.iter().zip(&rep.relative_errors).enumerate() {
        table.row(&[Cell::F(t), Cell::F(e), Cell::F(fd.energies.get(j).copied().unwrap_or(f64::NAN))]);
    }
    out.write("comparison.csv", &table.into_bytes())?;
    out.json(
        "summary.json",
        &json!({
            "steps": steps,
            "dt": lf.dt(),
            "max_relative_error": rep.max_relative_error,
            "max_boundary_ratio": fd.max_boundary_ratio,
        }),
    )?;
    let tol = ctx.profile.oracle_tolerance();
    Ok(vec![check(
        "spectral vs leapfrog discrepancy",
        rep.passes(tol),
        format!("max relative L² discrepancy {} (tolerance {tol})", rep.max_relative_error),
    )])
}

// --- calibrate ---------------------------------------------------------------

fn calibrate_cmd(ctx: &mut Context<'_>, out: &mut Artifacts) -> Result<Vec<Check>> {
    if let Some(g) = ctx.config.grid.as_mut() {
        g.plancherel_constant = None;
    }
    let grid = mode_grid(ctx)?;
    let constant = grid.plancherel_constant();
    out.json(
        "calibration.json",
        &json!({
            "plancherel_constant": constant,
            "reference_frequency": reference_frequency(ctx.config),
            "reference": "exp(-(x^2+y^2)/2 - t^2/18) exp(i omega t)",
        }),
    )?;
    Ok(vec![check(
        "calibration constant positive",
        constant.is_finite() && constant > 0.0,
        format!("{constant}"),
    )])
}
