//! Binary containers for spectral and spatial fields.
//!
//! All integers are `u32` and all reals `f64`, little-endian.
//!
//! Spectral field (`SWSF`):
//!
//! ```text
//! magic "SWSF" | version | n | node count N
//! λ nodes [N] | weights incl. Plancherel constant [N] | Plancherel constant
//! index count K | multi-indices [K × n]
//! coefficients [N × K × K] as (re, im), row-major in (node, k, l)
//! ```
//!
//! Spatial field (`SWSP`):
//!
//! ```text
//! magic "SWSP" | version | half widths [3] | shape [3]
//! samples [shape product] as (re, im), t fastest
//! ```

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::MultiIndex;
use crate::spectral::{ModeGrid, SpectralField};
use crate::transform::{SpatialField, SpatialGrid};

pub const SPECTRAL_MAGIC: &[u8; 4] = b"SWSF";
pub const SPATIAL_MAGIC: &[u8; 4] = b"SWSP";
pub const VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn complex(&mut self, v: &[Complex64]) {
        for c in v {
            self.f64(c.re);
            self.f64(c.im);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn complex(&mut self, n: usize) -> Result<Vec<Complex64>> {
        if n.saturating_mul(16) > self.buf.len() - self.pos {
            return Err(Error::Format("coefficient block truncated".into()));
        }
        (0..n)
            .map(|_| Ok(Complex64::new(self.f64()?, self.f64()?)))
            .collect()
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(Error::Format("bad magic".into()));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        Ok(())
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn encode_spectral(field: &SpectralField) -> Vec<u8> {
    let g = field.grid();
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(SPECTRAL_MAGIC);
    w.u32(VERSION);
    w.u32(g.n() as u32);
    w.u32(g.node_count() as u32);
    g.lambda_nodes().iter().for_each(|&v| w.f64(v));
    g.weights().iter().for_each(|&v| w.f64(v));
    w.f64(g.plancherel_constant());
    w.u32(g.hermite_count() as u32);
    for k in g.hermite_indices() {
        k.0.iter().for_each(|&c| w.u32(c));
    }
    w.complex(field.coeffs());
    w.0
}

pub fn decode_spectral(bytes: &[u8]) -> Result<SpectralField> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.header(SPECTRAL_MAGIC)?;
    let n = r.u32()? as usize;
    let nodes = r.u32()? as usize;
    if nodes.saturating_mul(16) > bytes.len() {
        return Err(Error::Format("node count exceeds container size".into()));
    }
    let lambda = r.f64s(nodes)?;
    let weights = r.f64s(nodes)?;
    let c = r.f64()?;
    let kk = r.u32()? as usize;
    if kk.saturating_mul(n).saturating_mul(4) > bytes.len() {
        return Err(Error::Format("index count exceeds container size".into()));
    }
    let hermite = (0..kk)
        .map(|_| (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>().map(MultiIndex))
        .collect::<Result<Vec<_>>>()?;
    let grid = ModeGrid::from_parts(n, lambda, weights, c, hermite)?;
    let coeffs = r.complex(nodes * kk * kk)?;
    r.finish()?;
    SpectralField::from_coeffs(Arc::new(grid), coeffs)
}

pub fn encode_spatial(field: &SpatialField) -> Vec<u8> {
    let g = field.grid();
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(SPATIAL_MAGIC);
    w.u32(VERSION);
    g.half_widths().iter().for_each(|&v| w.f64(v));
    g.shape().iter().for_each(|&v| w.u32(v as u32));
    w.complex(field.values());
    w.0
}

pub fn decode_spatial(bytes: &[u8]) -> Result<SpatialField> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.header(SPATIAL_MAGIC)?;
    let hw = [r.f64()?, r.f64()?, r.f64()?];
    let shape = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    let grid = SpatialGrid::new(hw, shape)?;
    let values = r.complex(grid.len())?;
    r.finish()?;
    SpatialField::from_values(Arc::new(grid), values)
}
