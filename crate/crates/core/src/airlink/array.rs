//! Uniform planar arrays, DFT codebooks and beam selection.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrayConfig {
    pub n_horizontal: usize,
    pub n_vertical: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub wavelength: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self { n_horizontal: 8, n_vertical: 2, spacing: 0.5, wavelength: 0.005 }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_horizontal == 0 || self.n_vertical == 0 {
            return invalid("array needs at least one element per axis");
        }
        if !(self.spacing > 0.0) || !(self.wavelength > 0.0) {
            return invalid("element spacing and wavelength must be positive");
        }
        Ok(())
    }

    pub fn n_elements(&self) -> usize {
        self.n_horizontal * self.n_vertical
    }
}

/// Direction cosines `(cos φ·sin θ, cos θ)` of azimuth `φ` / elevation `θ`.
pub fn direction_cosines(az_deg: f64, el_deg: f64) -> (f64, f64) {
    let (az, el) = (az_deg.to_radians(), el_deg.to_radians());
    (az.cos() * el.sin(), el.cos())
}

fn steering_from_cosines(uh: f64, uv: f64, cfg: &ArrayConfig) -> Vec<Complex64> {
    let norm = 1.0 / (cfg.n_elements() as f64).sqrt();
    let mut out = Vec::with_capacity(cfg.n_elements());
    for mv in 0..cfg.n_vertical {
        for mh in 0..cfg.n_horizontal {
            let phase = 2.0 * PI * cfg.spacing * (mh as f64 * uh + mv as f64 * uv);
            out.push(Complex64::from_polar(norm, phase));
        }
    }
    out
}

/// Unit-norm UPA steering vector; element `(m_h, m_v)` has phase
/// `2πd(m_h·cos φ·sin θ + m_v·cos θ)` and index `m_h + N_h·m_v`.
pub fn upa_steering(az_deg: f64, el_deg: f64, cfg: &ArrayConfig) -> Vec<Complex64> {
    let (uh, uv) = direction_cosines(az_deg, el_deg);
    steering_from_cosines(uh, uv, cfg)
}

/// Codewords on the direction-cosine grid `u = 2k/N − 1` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DftCodebook {
    pub n_horizontal: usize,
    pub n_vertical: usize,
}

impl DftCodebook {
    /// One codeword per array element along each axis.
    pub fn for_array(cfg: &ArrayConfig) -> Self {
        Self { n_horizontal: cfg.n_horizontal, n_vertical: cfg.n_vertical }
    }

    pub fn len(&self) -> usize {
        self.n_horizontal * self.n_vertical
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn grid_cosines(&self, kh: usize, kv: usize) -> (f64, f64) {
        (2.0 * kh as f64 / self.n_horizontal as f64 - 1.0, 2.0 * kv as f64 / self.n_vertical as f64 - 1.0)
    }

    pub fn codewords(&self, cfg: &ArrayConfig) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.len());
        for kv in 0..self.n_vertical {
            for kh in 0..self.n_horizontal {
                let (uh, uv) = self.grid_cosines(kh, kv);
                out.push(steering_from_cosines(uh, uv, cfg));
            }
        }
        out
    }
}

/// `x^H y`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Row-major `N_RX × N_TX` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl Matrix {
    pub fn outer(x: &[Complex64], y: &[Complex64], scale: Complex64) -> Self {
        let data = x.iter().flat_map(|a| y.iter().map(move |b| scale * a * b.conj())).collect();
        Self { rows: x.len(), cols: y.len(), data }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![Complex64::default(); self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    /// `f_rx^H · A · f_tx`.
    pub fn bilinear(&self, f_rx: &[Complex64], f_tx: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::default();
        for r in 0..self.rows {
            let row: Complex64 = (0..self.cols).map(|c| self.data[r * self.cols + c] * f_tx[c]).sum();
            acc += f_rx[r].conj() * row;
        }
        acc
    }
}

/// Monostatic radar response of one path: `√(N_TX·N_RX)·a·a^H`.
pub fn radar_array_response(az_deg: f64, el_deg: f64, cfg: &ArrayConfig) -> Matrix {
    let a = upa_steering(az_deg, el_deg, cfg);
    let n = cfg.n_elements() as f64;
    Matrix::outer(&a, &a, Complex64::new(n, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beams {
    pub f_tx: Vec<Complex64>,
    pub f_rx_com: Vec<Complex64>,
    /// Radar receive beam, the conjugate of the communication receive beam.
    pub f_rx_rad: Vec<Complex64>,
}

impl Beams {
    /// Complex radar beamforming gain `f_rx,rad^H · A · f_tx` towards a direction.
    pub fn radar_gain(&self, az_deg: f64, el_deg: f64, cfg: &ArrayConfig) -> Complex64 {
        radar_array_response(az_deg, el_deg, cfg).bilinear(&self.f_rx_rad, &self.f_tx)
    }
}

/// Picks the codewords that maximize `|f_RX^H A f_TX|` for a target direction.
///
/// For the rank-one monostatic response the objective factors into
/// `|f_RX^H a|·|a^H f_TX|`, so each side is searched independently.
pub fn select_beams(cfg: &ArrayConfig, codebook: &DftCodebook, az_deg: f64, el_deg: f64) -> Result<Beams> {
    cfg.validate()?;
    if codebook.is_empty() {
        return invalid("empty codebook");
    }
    let a = upa_steering(az_deg, el_deg, cfg);
    let words = codebook.codewords(cfg);
    let best = words
        .iter()
        .enumerate()
        .map(|(i, w)| (i, inner(w, &a).norm()))
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, g)| if g > acc.1 + 1e-12 { (i, g) } else { acc })
        .0;
    let f = words[best].clone();
    let f_rx_com: Vec<Complex64> = f.iter().map(|v| v.conj()).collect();
    Ok(Beams { f_tx: f.clone(), f_rx_com, f_rx_rad: f })
}
