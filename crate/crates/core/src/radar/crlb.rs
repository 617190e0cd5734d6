//! Lower bounds on range and velocity variance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::airlink::C;
use crate::error::{invalid, Result};

/// `η²` of a flat spectrum over the occupied band.
pub const ETA_SQ_FLAT: f64 = (2.0 * PI) * (2.0 * PI) / 12.0;

fn check_scnr(scnr: f64) -> Result<()> {
    if !(scnr > 0.0) || !scnr.is_finite() {
        return invalid(format!("SCNR must be positive and finite (linear), got {scnr}"));
    }
    Ok(())
}

/// `σ²_ρ = c²/(8η²W²Pζ)` in m².
pub fn crlb_range(scnr: f64, p: usize, bandwidth: f64) -> Result<f64> {
    check_scnr(scnr)?;
    if p == 0 || !(bandwidth > 0.0) {
        return invalid("integration length and bandwidth must be positive");
    }
    Ok(C * C / (8.0 * ETA_SQ_FLAT * bandwidth * bandwidth * p as f64 * scnr))
}

/// Angular-frequency variance (rad²/sample²) to velocity variance (m²/s²):
/// `ν = ω/(2πTs)` and `v = λν/2`, so `σ²_v = λ²σ²_ω/(4πTs)²`.
pub fn omega_var_to_velocity_var(omega_var: f64, ts: f64, wavelength: f64) -> f64 {
    let d = 4.0 * PI * ts;
    wavelength * wavelength * omega_var / (d * d)
}

/// Doppler variance (Hz²) to velocity variance.
pub fn doppler_var_to_velocity_var(doppler_var: f64, wavelength: f64) -> f64 {
    wavelength * wavelength * doppler_var / 4.0
}

/// Single-frame bound `6λ²/((4π)²P³Ts²ζ)`.
pub fn crlb_velocity_single(scnr: f64, p: usize, ts: f64, wavelength: f64) -> Result<f64> {
    check_scnr(scnr)?;
    let p = p as f64;
    Ok(6.0 * wavelength * wavelength / ((4.0 * PI).powi(2) * p.powi(3) * ts * ts * scnr))
}

/// Large-`M` multi-frame approximation
/// `6λ²/((4π)²(MP³ + M³PK²)Ts²ζ)`.
pub fn crlb_velocity_multi(scnr: f64, p: usize, m: usize, k: usize, ts: f64, wavelength: f64) -> Result<f64> {
    check_scnr(scnr)?;
    let (p, m, k) = (p as f64, m as f64, k as f64);
    let g = m * p.powi(3) + m.powi(3) * p * k * k;
    Ok(6.0 * wavelength * wavelength / ((4.0 * PI).powi(2) * g * ts * ts * scnr))
}

/// Exact bound from the Fisher information of a tone observed at sample
/// indices `n = k_i + mK`:
/// `σ²_ω = ξ/[Σn² − (Σn)²/(PM)]`, `ξ = (PMζ + 1)/(2PMζ²)`.
pub fn crlb_velocity_exact(scnr: f64, offsets: &[usize], m: usize, k: usize, ts: f64, wavelength: f64) -> Result<f64> {
    check_scnr(scnr)?;
    if offsets.is_empty() || m == 0 {
        return invalid("need at least one training sample and one frame");
    }
    let pm = (offsets.len() * m) as f64;
    let index = |i: usize, f: usize| (offsets[i] + f * k) as f64;
    let mut mean = 0.0;
    for f in 0..m {
        for i in 0..offsets.len() {
            mean += index(i, f);
        }
    }
    mean /= pm;
    // Centered second moment; equal to Σn² − (Σn)²/(PM) without cancellation.
    let mut spread = 0.0;
    for f in 0..m {
        for i in 0..offsets.len() {
            let d = index(i, f) - mean;
            spread += d * d;
        }
    }
    if spread == 0.0 {
        return invalid("a single observation carries no frequency information");
    }
    let xi = (pm * scnr + 1.0) / (2.0 * pm * scnr * scnr);
    Ok(omega_var_to_velocity_var(xi / spread, ts, wavelength))
}

/// Exact bound for a contiguous block of `P` training symbols per frame.
pub fn crlb_velocity_exact_contiguous(
    scnr: f64,
    p: usize,
    m: usize,
    k: usize,
    ts: f64,
    wavelength: f64,
) -> Result<f64> {
    let offsets: Vec<usize> = (0..p).collect();
    crlb_velocity_exact(scnr, &offsets, m, k, ts, wavelength)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityBound {
    SingleFrame,
    MultiFrame,
    Exact,
}
