//! Wigner quasi-probability distribution of a truncated Fock-basis density
//! matrix on a phase-space grid.
//!
//! Quadrature convention x = (a + a†)/√2, p = (a - a†)/(i√2), so [x, p] = i
//! and the vacuum is W(x, p) = (1/π) e^{-x²-p²} with ∫ W dx dp = 1.
//!
//! Evaluation uses the displaced-parity identity: with α = (x + ip)/√2 and
//! β = 2α,
//!
//! ```text
//! W(x, p) = (1/π) Σ_{m,q} ρ_{mq} (-1)^m ⟨q| D(β) |m⟩,
//! ```
//!
//! and the displacement matrix elements come from generalized-Laguerre
//! recurrences run directly on the unitary-bounded combination
//! √(m!/(m+d)!) |β|^d e^{-|β|²/2} L_m^{(d)}(|β|²), which stays in [-1, 1]
//! for every order, so no overflow occurs at large truncations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fock::FockDensityMatrix;
use crate::spectral::Statistics;

/// Rectangular phase-space grid (dimensionless quadratures).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl Default for PhaseSpaceGrid {
    fn default() -> Self {
        Self {
            x_min: -5.0,
            x_max: 5.0,
            p_min: -5.0,
            p_max: 5.0,
            nx: 201,
            np: 201,
        }
    }
}

impl PhaseSpaceGrid {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.p_min, self.p_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.p_max <= self.p_min {
            return Err(Error::InvalidParameter(
                "phase-space ranges must be finite and increasing".into(),
            ));
        }
        if self.nx < 2 || self.np < 2 {
            return Err(Error::InvalidParameter(
                "phase-space resolution must be at least 2 per axis".into(),
            ));
        }
        Ok(())
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * ix as f64 / (self.nx - 1) as f64
    }

    pub fn p(&self, ip: usize) -> f64 {
        self.p_min + (self.p_max - self.p_min) * ip as f64 / (self.np - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }
}

/// One Wigner-function snapshot; values stored row-major with p as the row
/// index: `values[ip * nx + ix]`.
#[derive(Debug, Clone)]
pub struct WignerFrame {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl WignerFrame {
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ip * self.grid.nx + ix]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Discrete ∫ W dx dp (trapezoid weights at the boundary).
    pub fn normalization(&self) -> f64 {
        let (nx, np) = (self.grid.nx, self.grid.np);
        let mut acc = 0.0;
        for ip in 0..np {
            let wp = if ip == 0 || ip == np - 1 { 0.5 } else { 1.0 };
            for ix in 0..nx {
                let wx = if ix == 0 || ix == nx - 1 { 0.5 } else { 1.0 };
                acc += wp * wx * self.at(ix, ip);
            }
        }
        acc * self.grid.dx() * self.grid.dp()
    }

    /// Relative angular non-uniformity of W over circles of radius up to the
    /// grid extent, weighted by the radial profile; 0 for a radially
    /// symmetric frame.
    pub fn radial_asymmetry(&self) -> f64 {
        let r_max = self
            .grid
            .x_max
            .abs()
            .min(self.grid.x_min.abs())
            .min(self.grid.p_max.abs())
            .min(self.grid.p_min.abs());
        let n_r = 40;
        let n_th = 64;
        let mut num = 0.0;
        let mut den = 0.0;
        for ir in 1..=n_r {
            let r = r_max * ir as f64 / n_r as f64;
            let mut vals = Vec::with_capacity(n_th);
            for it in 0..n_th {
                let th = 2.0 * std::f64::consts::PI * it as f64 / n_th as f64;
                vals.push(self.sample(r * th.cos(), r * th.sin()));
            }
            let mean = vals.iter().sum::<f64>() / n_th as f64;
            let dev = vals
                .iter()
                .map(|v| (v - mean).abs())
                .sum::<f64>()
                / n_th as f64;
            num += r * dev;
            den += r * mean.abs();
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Bilinear interpolation inside the grid.
    pub fn sample(&self, x: f64, p: f64) -> f64 {
        let gx = (x - self.grid.x_min) / self.grid.dx();
        let gp = (p - self.grid.p_min) / self.grid.dp();
        let ix = (gx.floor().max(0.0) as usize).min(self.grid.nx - 2);
        let ip = (gp.floor().max(0.0) as usize).min(self.grid.np - 2);
        let tx = (gx - ix as f64).clamp(0.0, 1.0);
        let tp = (gp - ip as f64).clamp(0.0, 1.0);
        let f00 = self.at(ix, ip);
        let f10 = self.at(ix + 1, ip);
        let f01 = self.at(ix, ip + 1);
        let f11 = self.at(ix + 1, ip + 1);
        f00 * (1.0 - tx) * (1.0 - tp) + f10 * tx * (1.0 - tp) + f01 * (1.0 - tx) * tp
            + f11 * tx * tp
    }

    /// CSV columns: x, p, W.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,p,W")?;
        for ip in 0..self.grid.np {
            for ix in 0..self.grid.nx {
                writeln!(w, "{},{},{}", self.grid.x(ix), self.grid.p(ip), self.at(ix, ip))?;
            }
        }
        Ok(())
    }

    /// Binary 16-bit PGM (P5), rows from p_max down to p_min; pixel value
    /// round((W - min)/(max - min) · 65535). Pair with [`Self::sidecar_json`].
    pub fn write_pgm<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let (lo, hi) = (self.min(), self.max());
        let scale = if hi > lo { 65535.0 / (hi - lo) } else { 0.0 };
        write!(w, "P5\n{} {}\n65535\n", self.grid.nx, self.grid.np)?;
        let mut buf = Vec::with_capacity(2 * self.grid.nx * self.grid.np);
        for ip in (0..self.grid.np).rev() {
            for ix in 0..self.grid.nx {
                let px = ((self.at(ix, ip) - lo) * scale).round().clamp(0.0, 65535.0) as u16;
                buf.extend_from_slice(&px.to_be_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Metadata documenting the PGM scaling.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::json!({
            "time": self.time,
            "w_min": self.min(),
            "w_max": self.max(),
            "maxval": 65535,
            "pixel": "round((W - w_min)/(w_max - w_min) * maxval)",
            "rows": "p from p_max (top) to p_min (bottom)",
            "cols": "x from x_min (left) to x_max (right)",
            "x_range": [self.grid.x_min, self.grid.x_max],
            "p_range": [self.grid.p_min, self.grid.p_max],
        })
    }
}

/// Wigner transform of a bosonic density matrix on the given grid.
pub fn wigner_transform(
    rho: &FockDensityMatrix,
    grid: &PhaseSpaceGrid,
    statistics: Statistics,
    time: f64,
) -> Result<WignerFrame> {
    if statistics == Statistics::Fermion {
        return Err(Error::Unsupported(
            "the Wigner transform is implemented for bosonic modes only".into(),
        ));
    }
    grid.validate()?;
    let dim = rho.dim();

    let rows: Vec<Vec<f64>> = (0..grid.np)
        .into_par_iter()
        .map(|ip| {
            let p = grid.p(ip);
            let mut row = vec![0.0; grid.nx];
            let mut s = vec![0.0f64; dim];
            for (ix, slot) in row.iter_mut().enumerate() {
                let x = grid.x(ix);
                // β = 2α, |β|² = 2(x² + p²)
                let b2 = 2.0 * (x * x + p * p);
                let theta = p.atan2(x);
                *slot = wigner_point(rho, dim, b2, theta, &mut s);
            }
            row
        })
        .collect();

    let mut values = Vec::with_capacity(grid.nx * grid.np);
    for row in rows {
        values.extend(row);
    }
    Ok(WignerFrame {
        grid: *grid,
        values,
        time,
    })
}

/// W at one point via the displaced-parity sum; `s` is scratch of length dim.
fn wigner_point(rho: &FockDensityMatrix, dim: usize, b2: f64, theta: f64, s: &mut [f64]) -> f64 {
    let mut acc = 0.0;
    for d in 0..dim {
        // normalized matrix-element magnitudes S_m^{(d)} for m = 0..dim-1-d
        let m_hi = dim - d;
        if b2 == 0.0 {
            for (m, slot) in s.iter_mut().enumerate().take(m_hi) {
                *slot = if d == 0 { 1.0 } else { 0.0 };
                let _ = m;
            }
        } else {
            let s0 = (-0.5 * b2 + 0.5 * d as f64 * b2.ln() - 0.5 * ln_gamma(d as f64 + 1.0)).exp();
            s[0] = s0;
            if m_hi > 1 {
                s[1] = (1.0 + d as f64 - b2) * (1.0 / (1.0 + d as f64)).sqrt() * s0;
            }
            for m in 1..m_hi.saturating_sub(1) {
                let mf = m as f64;
                let df = d as f64;
                let a = (2.0 * mf + 1.0 + df - b2) * ((mf + 1.0) / (mf + 1.0 + df)).sqrt();
                let b = (mf + df)
                    * (mf * (mf + 1.0) / ((mf + df) * (mf + 1.0 + df))).sqrt();
                s[m + 1] = (a * s[m] - b * s[m - 1]) / (mf + 1.0);
            }
        }
        if d == 0 {
            for m in 0..dim {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * s[m] * rho.at(m, m).re;
            }
        } else {
            let (sin_d, cos_d) = (d as f64 * theta).sin_cos();
            for m in 0..m_hi {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let r = rho.at(m, m + d);
                // ρ_{m,m+d} e^{idθ} + c.c.
                acc += sign * s[m] * 2.0 * (r.re * cos_d - r.im * sin_d);
            }
        }
    }
    acc / std::f64::consts::PI
}
