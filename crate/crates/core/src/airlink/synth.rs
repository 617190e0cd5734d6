//! Received radar stream synthesis.
//!
//! Echoes follow the stop-and-hop model: each path keeps its delay for the
//! whole CPI and its motion enters only through `e^{j2πνt}` with `t` the
//! absolute time since the first transmitted symbol peak.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::array::{ArrayConfig, Beams};
use super::channel::{complex_normal, radar_path_gain, random_phase};
use super::{db_to_lin, Target};
use crate::dsp::{apply_delay_doppler, matched_filter_decimate, IqStream, RrcPulse, RrcSpec};
use crate::error::{invalid, Result};
use crate::frame::CpiSymbols;

/// Clutter and noise power spectral densities over the noise bandwidth `W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseClutterSpec {
    pub noise_psd: f64,
    pub clutter_psd: f64,
    pub bandwidth: f64,
}

impl NoiseClutterSpec {
    pub fn new(noise_psd: f64, clutter_psd: f64, bandwidth: f64) -> Result<Self> {
        if noise_psd < 0.0 || clutter_psd < 0.0 || !(bandwidth > 0.0) {
            return invalid("noise and clutter densities must be nonnegative and the bandwidth positive");
        }
        Ok(Self { noise_psd, clutter_psd, bandwidth })
    }

    /// Densities that give `scnr_db` for an echo of power `signal_power`.
    pub fn from_scnr(signal_power: f64, scnr_db: f64, clutter_to_noise_db: f64, bandwidth: f64) -> Result<Self> {
        let total = signal_power / db_to_lin(scnr_db);
        let ratio = if clutter_to_noise_db == f64::NEG_INFINITY { 0.0 } else { db_to_lin(clutter_to_noise_db) };
        let n0 = total / bandwidth / (1.0 + ratio);
        Self::new(n0, n0 * ratio, bandwidth)
    }

    /// `σ²_cn = σ²_c·W + σ²_n·W`.
    pub fn sigma_cn2(&self) -> f64 {
        (self.clutter_psd + self.noise_psd) * self.bandwidth
    }

    /// Variance per sample of the white process before (and after) the
    /// unit-energy matched filter, `σ²_cn/(W·Ts)`.
    pub fn sample_variance(&self, ts: f64) -> f64 {
        self.sigma_cn2() / (self.bandwidth * ts)
    }
}

/// One propagation path as seen at the matched-filter output: a symbol with
/// value `s` contributes `gain·s` at its peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Echo {
    pub delay: f64,
    pub doppler: f64,
    pub gain: Complex64,
}

/// Paths for a list of targets. `tx_power_mw` is the per-element transmit
/// power; the beam pair supplies the array gains and each target gets a
/// unit-modulus coefficient with random phase, fixed over the CPI.
pub fn echoes_from_targets<R: Rng + ?Sized>(
    targets: &[Target],
    tx_power_mw: f64,
    array: &ArrayConfig,
    beams: &Beams,
    rng: &mut R,
) -> Result<Vec<Echo>> {
    targets
        .iter()
        .map(|t| {
            t.validate()?;
            let g = radar_path_gain(t, array.wavelength);
            let bf = beams.radar_gain(t.azimuth_deg, t.elevation_deg, array);
            Ok(Echo {
                delay: t.delay(),
                doppler: t.doppler(array.wavelength),
                gain: bf * random_phase(rng) * (tx_power_mw * g).sqrt(),
            })
        })
        .collect()
}

/// Renders windows of the received oversampled stream directly from the
/// transmitted symbols by evaluating the analytic RRC at the shifted
/// instants. Sample index `i` sits at time `i·Ts/Q`.
#[derive(Debug, Clone)]
pub struct EchoSynth {
    pulse: RrcPulse,
    ts: f64,
}

impl EchoSynth {
    pub fn new(spec: RrcSpec, ts: f64) -> Result<Self> {
        if !(ts > 0.0) {
            return invalid("symbol period must be positive");
        }
        Ok(Self { pulse: RrcPulse::new(spec)?, ts })
    }

    pub fn spec(&self) -> &RrcSpec {
        self.pulse.spec()
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn rate(&self) -> f64 {
        self.spec().oversample as f64 / self.ts
    }

    /// Noiseless sum of echoes over samples `start..start+len`.
    pub fn render(&self, src: &CpiSymbols, echoes: &[Echo], start: i64, len: usize) -> Vec<Complex64> {
        let q = self.spec().oversample as i64;
        let l = (self.spec().span as i64 * q) / 2;
        let rate = self.rate();
        let mut out = vec![Complex64::default(); len];
        let mut tmp = vec![Complex64::default(); len];
        for e in echoes {
            let d = e.delay * rate;
            let dint = d.floor();
            let frac = d - dint;
            let dint = dint as i64;
            // h[j + l] = g((j − frac)·Ts/Q), j ∈ −l..=l+1
            let table: Vec<f64> = (-l..=l + 1).map(|j| self.pulse.eval((j as f64 - frac) / q as f64)).collect();
            let n_lo = (start - dint - l - 1).div_euclid(q);
            let n_hi = (start + len as i64 - 1 - dint + l).div_euclid(q) + 1;
            let syms = src.window(n_lo, (n_hi - n_lo + 1) as usize);
            tmp.iter_mut().for_each(|v| *v = Complex64::default());
            for (idx, s) in syms.iter().enumerate() {
                if s.re == 0.0 && s.im == 0.0 {
                    continue;
                }
                let base = dint + (n_lo + idx as i64) * q - start;
                let j_lo = (-l).max(-base);
                let j_hi = (l + 1).min(len as i64 - 1 - base);
                for j in j_lo..=j_hi {
                    tmp[(base + j) as usize] += s * table[(j + l) as usize];
                }
            }
            for (i, (o, v)) in out.iter_mut().zip(&tmp).enumerate() {
                let t = (start + i as i64) as f64 / rate;
                *o += v * e.gain * Complex64::from_polar(1.0, 2.0 * PI * e.doppler * t);
            }
        }
        out
    }

    /// Rendered echoes plus white circular Gaussian clutter-plus-noise.
    pub fn receive<R: Rng + ?Sized>(
        &self,
        src: &CpiSymbols,
        echoes: &[Echo],
        sample_variance: f64,
        start: i64,
        len: usize,
        rng: &mut R,
    ) -> IqStream {
        let mut s = self.render(src, echoes, start, len);
        if sample_variance > 0.0 {
            for v in s.iter_mut() {
                *v += complex_normal(rng, sample_variance);
            }
        }
        IqStream { samples: s, rate: self.rate(), t0: start as f64 / self.rate() }
    }
    /// Matched-filter output of [`receive`](Self::receive) taken at symbol
    /// rate: entry `j` is the sample at oversampled index `(first + j)·Q + phase`.
    /// Only the stretch of stream these outputs depend on is rendered.
    #[allow(clippy::too_many_arguments)]
    pub fn receive_symbols<R: Rng + ?Sized>(
        &self,
        src: &CpiSymbols,
        echoes: &[Echo],
        sample_variance: f64,
        first: i64,
        count: usize,
        phase: usize,
        rng: &mut R,
    ) -> Result<Vec<Complex64>> {
        let q = self.spec().oversample;
        if phase >= q || count == 0 {
            return invalid(format!("need a phase in 0..{q} and at least one output"));
        }
        let l = self.spec().centre();
        let start = first * q as i64 + phase as i64 - l as i64;
        let len = (count - 1) * q + 2 * l + 1;
        let y = self.receive(src, echoes, sample_variance, start, len, rng);
        let mf = matched_filter_decimate(&y, self.spec(), self.ts, l % q)?;
        Ok(mf.samples[l / q..l / q + count].to_vec())
    }
}

/// Sum of delayed, Doppler-shifted copies of an already shaped stream plus
/// clutter-plus-noise of per-sample variance `sample_variance`. The output
/// keeps the input's grid, so the caller pads `tx` to cover the longest delay.
pub fn synthesize_radar_rx<R: Rng + ?Sized>(
    tx: &IqStream,
    echoes: &[Echo],
    sample_variance: f64,
    rng: &mut R,
) -> Result<IqStream> {
    let mut out = vec![Complex64::default(); tx.len()];
    for e in echoes {
        let y = apply_delay_doppler(tx, e.delay, e.doppler, e.gain)?;
        for (o, v) in out.iter_mut().zip(&y.samples) {
            *o += v;
        }
    }
    if sample_variance > 0.0 {
        for v in out.iter_mut() {
            *v += complex_normal(rng, sample_variance);
        }
    }
    Ok(IqStream { samples: out, rate: tx.rate, t0: tx.t0 })
}
