//! L²-normalized Hermite functions and Gauss–Hermite quadrature.
//!
//! `ψ_k(w) = c_k H_k(w) e^{-w²/2}` with `c_k = 2^{-k/2} (k!)^{-1/2} π^{-1/4}`,
//! evaluated through the normalized three-term recurrence
//!
//! ```text
//! ψ_{k+1} = √(2/(k+1)) w ψ_k − √(k/(k+1)) ψ_{k−1}
//! ```
//!
//! which never forms `k!` or `H_k` explicitly.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

const PI_POW_MINUS_QUARTER: f64 = 0.751_125_544_464_942_5;

/// Beyond this |w| every retained order has underflowed anyway.
const UNDERFLOW_W: f64 = 38.5;

pub fn hermite_function(k: usize, w: f64) -> f64 {
    let mut buf = vec![0.0; k + 1];
    hermite_functions_into(w, &mut buf);
    buf[k]
}

/// Fill `out[j] = ψ_j(w)` for `j < out.len()`.
pub fn hermite_functions_into(w: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let order = out.len() - 1;
    if w.abs() > UNDERFLOW_W + (2.0 * order as f64 + 1.0).sqrt() || !w.is_finite() {
        out.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    if w.abs() > SCALED_W {
        return scaled_recurrence(w, out);
    }
    out[0] = PI_POW_MINUS_QUARTER * (-0.5 * w * w).exp();
    if order == 0 {
        return;
    }
    out[1] = std::f64::consts::SQRT_2 * w * out[0];
    for k in 1..order {
        let kf = k as f64;
        out[k + 1] =
            (2.0 / (kf + 1.0)).sqrt() * w * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

/// Past this |w| the Gaussian factor is carried in log form.
const SCALED_W: f64 = 20.0;

// Same recurrence on `ψ_k e^{−log_scale}`, renormalizing as values grow.
fn scaled_recurrence(w: f64, out: &mut [f64]) {
    let order = out.len() - 1;
    let mut log_scale = -0.5 * w * w;
    let mut prev = 0.0;
    let mut cur = PI_POW_MINUS_QUARTER;
    out[0] = cur * log_scale.exp();
    for k in 0..order {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * w * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
        out[k + 1] = cur * log_scale.exp();
    }
}

/// Evaluator for `ψ_0 … ψ_K`.
#[derive(Debug, Clone)]
pub struct HermiteEvaluator {
    max_order: usize,
}

impl HermiteEvaluator {
    pub fn new(max_order: usize) -> Self {
        Self { max_order }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `c_m = 2^{-m/2} (m!)^{-1/2} π^{-1/4}`, computed in log space.
    pub fn normalization(&self, m: usize) -> f64 {
        let log_fact: f64 = (1..=m).map(|j| (j as f64).ln()).sum();
        (-(m as f64) * 0.5 * std::f64::consts::LN_2 - 0.5 * log_fact).exp() * PI_POW_MINUS_QUARTER
    }

    pub fn eval(&self, w: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.max_order + 1];
        hermite_functions_into(w, &mut out);
        out
    }

    /// Row-major `[point][order]` table.
    pub fn table(&self, points: &[f64]) -> Vec<f64> {
        let stride = self.max_order + 1;
        let mut out = vec![0.0; points.len() * stride];
        for (row, &w) in out.chunks_mut(stride).zip(points) {
            hermite_functions_into(w, row);
        }
        out
    }
}

/// Gauss–Hermite rule for the weight `e^{-w²}`.
///
/// `scaled_weights[j] = weights[j] · e^{w_j²}` integrates plain functions:
/// `∫ g(w) dw ≈ Σ_j scaled_weights[j] g(w_j)`, exact when `g e^{w²}` is a
/// polynomial of degree `< 2N`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub scaled_weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        // Golub–Welsch start, Newton polish on ψ_n.
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64 / 2.0).sqrt();
            jacobi[(k, k - 1)] = off;
            jacobi[(k - 1, k)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut buf = vec![0.0; n + 1];
        for w in nodes.iter_mut() {
            for _ in 0..4 {
                hermite_functions_into(*w, &mut buf);
                let psi = buf[n];
                let dpsi = (2.0 * n as f64).sqrt() * buf[n - 1] - *w * psi;
                if dpsi == 0.0 {
                    break;
                }
                let step = psi / dpsi;
                *w -= step;
                if step.abs() < 1e-16 * w.abs().max(1.0) {
                    break;
                }
            }
        }
        // Christoffel: λ_j = 1 / Σ_{k<n} p_k(w_j)² with p_k = ψ_k e^{w²/2}.
        let mut scaled_weights = Vec::with_capacity(n);
        for &w in &nodes {
            hermite_functions_into(w, &mut buf[..n]);
            let s: f64 = buf[..n].iter().map(|v| v * v).sum();
            scaled_weights.push(1.0 / s);
        }
        let weights = nodes
            .iter()
            .zip(&scaled_weights)
            .map(|(w, sw)| sw * (-w * w).exp())
            .collect();
        Self {
            nodes,
            weights,
            scaled_weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ g(w) dw` for `g` with Gaussian decay.
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&w, &sw)| sw * g(w))
            .sum()
    }
}

/// Shared rule with `n` nodes; rules are built once per process.
pub fn gauss_hermite(n: usize) -> Arc<GaussHermite> {
    static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = rules.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(GaussHermite::new(n));
    rules.lock().unwrap().entry(n).or_insert(rule).clone()
}
