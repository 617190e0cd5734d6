//! Range from preamble timing and velocity from the Moose estimator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::airlink::C;
use crate::error::{invalid, Result};
use crate::frame::{CEF_PAIR_LEN, SHORT_LEN, STF_REPS};
use crate::sync::TimingEstimate;

/// Lag between correlated STF blocks in the single-frame estimator.
pub const SINGLE_FRAME_ND: usize = 4 * SHORT_LEN;
/// STF symbols used by the single-frame estimator.
pub const SINGLE_FRAME_P: usize = STF_REPS * SHORT_LEN;

const _: () = assert!(SINGLE_FRAME_ND == CEF_PAIR_LEN);

#[derive(Debug, Clone, PartialEq)]
pub struct RadarEstimate {
    pub range: f64,
    pub velocity: f64,
    /// Round-trip delay estimate of each processed frame (s).
    pub delays: Vec<f64>,
    pub doppler: f64,
}

impl RadarEstimate {
    pub fn new(delays: Vec<f64>, doppler: f64, wavelength: f64) -> Result<Self> {
        if delays.is_empty() {
            return invalid("need at least one delay estimate");
        }
        let tau = delays.iter().sum::<f64>() / delays.len() as f64;
        Ok(Self { range: delay_to_range(tau), velocity: doppler_to_velocity(doppler, wavelength), delays, doppler })
    }
}

pub fn delay_to_range(delay: f64) -> f64 {
    C * delay / 2.0
}

pub fn doppler_to_velocity(doppler: f64, wavelength: f64) -> f64 {
    wavelength * doppler / 2.0
}

/// Round-trip delay of a timing estimate: `(ℓ̂ + τ̂_d)·Ts` on the stream's
/// time axis minus the time the first preamble symbol left the transmitter.
pub fn estimate_delay(timing: &TimingEstimate, t0: f64, ts: f64, q: usize, tx_reference_time: f64) -> f64 {
    timing.start_time(t0, ts, q) - tx_reference_time
}

/// `ρ̂ = c·τ̂/2`.
pub fn estimate_range(timing: &TimingEstimate, t0: f64, ts: f64, q: usize, tx_reference_time: f64) -> f64 {
    delay_to_range(estimate_delay(timing, t0, ts, q, tx_reference_time))
}

/// Largest Doppler magnitude the estimator resolves without wrapping,
/// `1/(2·N_D·Ts)`.
pub fn unambiguous_doppler(nd: usize, ts: f64) -> f64 {
    1.0 / (2.0 * nd as f64 * ts)
}

pub fn unambiguous_velocity(nd: usize, ts: f64, wavelength: f64) -> f64 {
    doppler_to_velocity(unambiguous_doppler(nd, ts), wavelength)
}

/// Single-frame Moose: `ν̂ = ∠(Σ_n s[n+N_D]·s*[n])/(2π·N_D·Ts)` over every
/// pair inside `s`.
pub fn moose_single_frame(s: &[Complex64], nd: usize, ts: f64) -> Result<f64> {
    if nd == 0 || s.len() <= nd {
        return invalid(format!("need more than N_D = {nd} samples, got {}", s.len()));
    }
    let acc: Complex64 = (0..s.len() - nd).map(|n| s[n + nd] * s[n].conj()).sum();
    Ok(acc.arg() / (2.0 * PI * nd as f64 * ts))
}

/// Multi-frame Moose with `N_D = K`: the training block of each frame is
/// correlated with the same block one frame later,
/// `ν̂ = ∠(Σ_m Σ_n p_{m+1}[n]·p_m*[n])/(2π·K·Ts)`.
pub fn moose_multi_frame(blocks: &[Vec<Complex64>], k: usize, ts: f64) -> Result<f64> {
    if blocks.len() < 2 {
        return invalid("multi-frame estimation needs at least two frames");
    }
    let p = blocks[0].len();
    if p == 0 || blocks.iter().any(|b| b.len() != p) {
        return invalid("training blocks must be nonempty and of equal length");
    }
    let mut acc = Complex64::default();
    for w in blocks.windows(2) {
        acc += w[1].iter().zip(&w[0]).map(|(a, b)| a * b.conj()).sum::<Complex64>();
    }
    Ok(acc.arg() / (2.0 * PI * k as f64 * ts))
}
