//! Euclidean backend: periodic FFT box on `R^d`.
//!
//! Samples live at `x_j = −R + j h`, `h = 2R/N`, per axis. Coefficients
//! approximate the continuous transform `û(ξ) = ∫ u(x) e^{−iξ·x} dx` at
//! `ξ = π k / R`, so every mode carries the Plancherel weight `(2R)^{−d}`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::spectral::{next_stamp, ModeSpace, SpectralField, SymbolProvider};

#[derive(Debug, Clone)]
pub struct AbelianGrid {
    dim: usize,
    points: usize,
    half_width: f64,
    weights: Vec<f64>,
    stamp: u64,
}

impl AbelianGrid {
    /// `points` samples per axis (even) on `[−half_width, half_width)^dim`.
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        if dim == 0 || points < 2 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "need dim ≥ 1 and an even point count ≥ 2, got dim={dim}, points={points}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width}")));
        }
        let total = points
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;
        let w = (2.0 * half_width).powi(-(dim as i32));
        Ok(Self {
            dim,
            points,
            half_width,
            weights: vec![w; total],
            stamp: next_stamp(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn points(&self) -> usize {
        self.points
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Per-axis indices of flat position `idx` (last axis fastest).
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.unravel(idx).into_iter().map(|j| self.coordinate(j)).collect()
    }

    /// Signed integer wavenumber of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn frequency(&self, idx: usize) -> Vec<f64> {
        let scale = std::f64::consts::PI / self.half_width;
        self.unravel(idx)
            .into_iter()
            .map(|j| scale * self.wavenumber(j) as f64)
            .collect()
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }
}

impl ModeSpace for AbelianGrid {
    fn mode_count(&self) -> usize {
        self.weights.len()
    }

    fn mode_weights(&self) -> &[f64] {
        &self.weights
    }

    fn mode_symbols(&self, provider: &SymbolProvider) -> Result<Vec<f64>> {
        provider.validate()?;
        (0..self.len())
            .map(|i| provider.abelian_symbol(&self.frequency(i)))
            .collect()
    }

    fn stamp(&self) -> u64 {
        self.stamp
    }
}

fn fft_axes(grid: &AbelianGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points;
    let mut planner = FftPlanner::<f64>::new();
    let fft: Arc<dyn Fft<f64>> = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

// e^{iξR} = (−1)^{Σk} from the box offset
fn offset_sign(grid: &AbelianGrid, idx: usize) -> f64 {
    let s: i64 = grid.unravel(idx).into_iter().map(|j| grid.wavenumber(j)).sum();
    if s.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn analyze(grid: &Arc<AbelianGrid>, samples: &[Complex64]) -> Result<SpectralField<AbelianGrid>> {
    if samples.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: samples.len(),
        });
    }
    let mut data = samples.to_vec();
    fft_axes(grid, &mut data, false);
    let vol = grid.cell_volume();
    for (i, v) in data.iter_mut().enumerate() {
        *v *= vol * offset_sign(grid, i);
    }
    SpectralField::from_coeffs(grid.clone(), data)
}

pub fn analyze_real(grid: &Arc<AbelianGrid>, samples: &[f64]) -> Result<SpectralField<AbelianGrid>> {
    let c: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    analyze(grid, &c)
}

pub fn synthesize(field: &SpectralField<AbelianGrid>) -> Vec<Complex64> {
    let grid = field.grid();
    let mut data: Vec<Complex64> = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c * offset_sign(grid, i))
        .collect();
    fft_axes(grid, &mut data, true);
    let scale = 1.0 / (grid.cell_volume() * grid.len() as f64);
    data.iter_mut().for_each(|v| *v *= scale);
    data
}

/// `(Σ |u|^p h^d)^{1/p}` over the box; `p = ∞` gives the max.
pub fn lp_norm(grid: &AbelianGrid, values: &[Complex64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let s: f64 = values.iter().map(|v| v.norm().powf(p)).sum();
    (s * grid.cell_volume()).powf(1.0 / p)
}
