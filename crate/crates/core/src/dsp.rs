//! Continuous-time layer: RRC pulse shaping, matched filtering, symbol-rate
//! sampling and delay/Doppler application on oversampled streams.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Complex baseband samples; sample `k` sits at time `t0 + k / rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct IqStream {
    pub samples: Vec<Complex64>,
    pub rate: f64,
    pub t0: f64,
}

impl IqStream {
    pub fn new(samples: Vec<Complex64>, rate: f64, t0: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return invalid(format!("sample rate must be positive, got {rate}"));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return invalid("stream contains non-finite samples");
        }
        Ok(Self { samples, rate, t0 })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrcSpec {
    pub rolloff: f64,
    /// Filter support in symbols (even).
    pub span: usize,
    /// Samples per symbol.
    pub oversample: usize,
}

impl Default for RrcSpec {
    fn default() -> Self {
        Self { rolloff: 0.25, span: 16, oversample: 8 }
    }
}

impl RrcSpec {
    pub fn validate(&self) -> Result<()> {
        if self.oversample < 1 {
            return invalid("oversampling factor must be at least 1");
        }
        if self.span < 2 || !self.span.is_multiple_of(2) {
            return invalid(format!("RRC span must be an even number >= 2, got {}", self.span));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return invalid(format!("roll-off must be in (0, 1], got {}", self.rolloff));
        }
        Ok(())
    }

    pub fn n_taps(&self) -> usize {
        self.span * self.oversample + 1
    }

    /// Tap index of the filter centre.
    pub fn centre(&self) -> usize {
        self.span * self.oversample / 2
    }

    /// `(1 + β)·symbol_rate`.
    pub fn occupied_bandwidth(&self, symbol_rate: f64) -> f64 {
        (1.0 + self.rolloff) * symbol_rate
    }
}

/// Unnormalized RRC impulse response at `t` symbol periods.
pub fn rrc_value(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let x = 4.0 * beta * t;
    if (x.abs() - 1.0).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    ((PI * t * (1.0 - beta)).sin() + x * (PI * t * (1.0 + beta)).cos()) / (PI * t * (1.0 - x * x))
}

/// Truncated RRC evaluated anywhere inside its support, scaled so that the
/// taps sampled on the `Q`-grid have unit energy.
#[derive(Debug, Clone, Copy)]
pub struct RrcPulse {
    spec: RrcSpec,
    scale: f64,
}

impl RrcPulse {
    pub fn new(spec: RrcSpec) -> Result<Self> {
        spec.validate()?;
        let q = spec.oversample as f64;
        let c = spec.centre() as f64;
        let e: f64 = (0..spec.n_taps()).map(|n| rrc_value((n as f64 - c) / q, spec.rolloff).powi(2)).sum();
        Ok(Self { spec, scale: 1.0 / e.sqrt() })
    }

    pub fn spec(&self) -> &RrcSpec {
        &self.spec
    }

    /// Pulse value at `t` symbol periods from its peak; zero outside `±span/2`.
    pub fn eval(&self, t: f64) -> f64 {
        let half = self.spec.span as f64 / 2.0;
        if t.abs() > half + 1e-12 {
            0.0
        } else {
            self.scale * rrc_value(t, self.spec.rolloff)
        }
    }

    pub fn taps(&self) -> Vec<f64> {
        let q = self.spec.oversample as f64;
        let c = self.spec.centre() as f64;
        (0..self.spec.n_taps()).map(|n| self.eval((n as f64 - c) / q)).collect()
    }
}

pub fn rrc_taps(spec: &RrcSpec) -> Result<Vec<f64>> {
    Ok(RrcPulse::new(*spec)?.taps())
}

/// `x(t) = amplitude·Σ s[n]·g(t − nTs)` sampled at `Q/Ts`. Sample 0 lies at
/// `t0 = −(span/2)·Ts`, so symbol `n` peaks at sample `n·Q + span·Q/2`.
pub fn pulse_shape(symbols: &[Complex64], spec: &RrcSpec, ts: f64, amplitude: f64) -> Result<IqStream> {
    if symbols.is_empty() {
        return invalid("no symbols to shape");
    }
    if !(ts > 0.0) {
        return invalid("symbol period must be positive");
    }
    let taps = rrc_taps(spec)?;
    let q = spec.oversample;
    let mut out = vec![Complex64::default(); (symbols.len() - 1) * q + taps.len()];
    for (n, s) in symbols.iter().enumerate() {
        let s = s * amplitude;
        for (j, t) in taps.iter().enumerate() {
            out[n * q + j] += s * t;
        }
    }
    IqStream::new(out, q as f64 / ts, -(spec.span as f64 / 2.0) * ts)
}

fn check_rate(y: &IqStream, spec: &RrcSpec, ts: f64) -> Result<()> {
    let expect = spec.oversample as f64 / ts;
    if ((y.rate - expect) / expect).abs() > 1e-9 {
        return invalid(format!(
            "stream rate {} does not match {} samples per symbol at Ts = {ts}",
            y.rate, spec.oversample
        ));
    }
    Ok(())
}

#[inline]
fn filter_at(y: &[Complex64], taps: &[f64], k: usize, c: usize) -> Complex64 {
    // out[k] = Σ_j taps[j]·y[k + j − c]
    let lo = c.saturating_sub(k);
    let hi = taps.len().min(y.len() + c - k);
    let mut acc = Complex64::default();
    for j in lo..hi {
        acc += y[k + j - c] * taps[j];
    }
    acc
}

/// Convolution with the RX RRC, "same" length, with the group delay removed
/// so that `t0` is preserved.
pub fn matched_filter(y: &IqStream, spec: &RrcSpec, ts: f64) -> Result<IqStream> {
    check_rate(y, spec, ts)?;
    let taps = rrc_taps(spec)?;
    let c = spec.centre();
    let out = (0..y.len()).map(|k| filter_at(&y.samples, &taps, k, c)).collect();
    Ok(IqStream { samples: out, rate: y.rate, t0: y.t0 })
}

/// Matched filter evaluated only at the outputs `phase + n·Q`; equivalent to
/// `symbol_sample(matched_filter(y), phase)`.
pub fn matched_filter_decimate(y: &IqStream, spec: &RrcSpec, ts: f64, phase: usize) -> Result<IqStream> {
    check_rate(y, spec, ts)?;
    let q = spec.oversample;
    if phase >= q {
        return invalid(format!("sampling phase {phase} outside 0..{q}"));
    }
    let taps = rrc_taps(spec)?;
    let c = spec.centre();
    let out = (phase..y.len()).step_by(q).map(|k| filter_at(&y.samples, &taps, k, c)).collect();
    Ok(IqStream { samples: out, rate: y.rate / q as f64, t0: y.t0 + phase as f64 / y.rate })
}

/// Decimation by `q` starting at `phase`; the result starts at `t0 + phase/rate`.
pub fn symbol_sample(y: &IqStream, phase: usize, q: usize) -> Result<IqStream> {
    if q == 0 || phase >= q {
        return invalid(format!("sampling phase {phase} outside 0..{q}"));
    }
    let out = y.samples.iter().skip(phase).step_by(q).copied().collect();
    Ok(IqStream { samples: out, rate: y.rate / q as f64, t0: y.t0 + phase as f64 / y.rate })
}

/// Maps a sampling phase to a fraction of `Ts` wrapped into `[−0.5, 0.5)`.
pub fn phase_fraction(phase: usize, q: usize) -> f64 {
    let f = phase as f64 / q as f64;
    if f >= 0.5 {
        f - 1.0
    } else {
        f
    }
}

const SINC_HALF: i64 = 32;

fn windowed_sinc(x: f64) -> f64 {
    let h = SINC_HALF as f64;
    if x.abs() >= h {
        return 0.0;
    }
    let s = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
    let w = 0.42 + 0.5 * (PI * x / h).cos() + 0.08 * (2.0 * PI * x / h).cos();
    s * w
}

/// `out[n] = gain·x(t_n − delay)·exp(j2π·doppler·t_n)` with `t_n = t0 + n/rate`.
///
/// The integer part of the delay is a sample shift; the fractional part is a
/// Blackman-windowed sinc interpolation (±32 taps). The output keeps the
/// input's length and time origin.
pub fn apply_delay_doppler(x: &IqStream, delay: f64, doppler: f64, gain: Complex64) -> Result<IqStream> {
    if delay < 0.0 || !delay.is_finite() {
        return invalid(format!("delay must be nonnegative, got {delay}"));
    }
    if doppler.abs() >= x.rate / 2.0 {
        return invalid(format!("Doppler {doppler} Hz exceeds half the sample rate"));
    }
    let d = delay * x.rate;
    let mut shift = d.floor();
    let mut frac = d - shift;
    if frac > 1.0 - 1e-12 {
        shift += 1.0;
        frac = 0.0;
    }
    let shift = shift as i64;
    let n = x.len() as i64;
    let fetch = |i: i64| if (0..n).contains(&i) { x.samples[i as usize] } else { Complex64::default() };
    let mut out = Vec::with_capacity(x.len());
    for k in 0..n {
        let base = k - shift;
        let v = if frac == 0.0 {
            fetch(base)
        } else {
            let mut acc = Complex64::default();
            for j in (-SINC_HALF + 1)..=SINC_HALF {
                acc += fetch(base - j) * windowed_sinc(j as f64 - frac);
            }
            acc
        };
        let t = x.t0 + k as f64 / x.rate;
        out.push(gain * v * Complex64::from_polar(1.0, 2.0 * PI * doppler * t));
    }
    Ok(IqStream { samples: out, rate: x.rate, t0: x.t0 })
}
