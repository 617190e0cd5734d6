//! Shared transmit/receive chain of the Monte Carlo trials.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::Scenario;
use crate::airlink::channel::random_phase;
use crate::airlink::synth::{Echo, EchoSynth, NoiseClutterSpec};
use crate::airlink::{Target, C};
use crate::dsp::{matched_filter, symbol_sample, IqStream};
use crate::error::{invalid, Result};
use crate::frame::{CpiConfig, CpiSymbols, FrameLayout, Modulation, Preamble, PREAMBLE_LEN};
use crate::sync::{synchronize, SyncConfig, TimingEstimate};

/// Noise-only symbols captured ahead of the earliest echo.
pub const SYNC_LEAD: i64 = 512;
/// Symbols captured after the end of the latest preamble.
pub const SYNC_TAIL: usize = 256;

#[derive(Debug, Clone)]
pub struct Link {
    pub ts: f64,
    pub q: usize,
    pub k: usize,
    pub preamble: Preamble,
    pub layout: FrameLayout,
    pub synth: EchoSynth,
    pub sync: SyncConfig,
    pub modulation: Modulation,
    pub wavelength: f64,
    pub noise_bandwidth: f64,
    pub clutter_to_noise_db: Option<f64>,
}

impl Link {
    pub fn new(sc: &Scenario, k: usize) -> Result<Self> {
        let ts = sc.ts();
        Ok(Self {
            ts,
            q: sc.rrc.oversample,
            k,
            preamble: sc.preamble()?,
            layout: FrameLayout::new(k, sc.header_len)?,
            synth: EchoSynth::new(sc.rrc, ts)?,
            sync: sc.sync,
            modulation: sc.modulation,
            wavelength: sc.wavelength,
            noise_bandwidth: sc.noise_bandwidth,
            clutter_to_noise_db: sc.clutter_to_noise_db,
        })
    }

    pub fn source(&self, m: usize, seed: u64) -> Result<CpiSymbols> {
        CpiSymbols::new(CpiConfig::new(m, self.k, self.ts)?, self.layout, self.preamble.clone(), self.modulation, seed)
    }

    fn clutter_db(&self) -> f64 {
        self.clutter_to_noise_db.unwrap_or(f64::NEG_INFINITY)
    }

    /// Per-sample variance for an echo of unit power at SCNR `scnr_db`.
    pub fn sample_variance_for_scnr(&self, scnr_db: f64) -> Result<f64> {
        Ok(NoiseClutterSpec::from_scnr(1.0, scnr_db, self.clutter_db(), self.noise_bandwidth)?.sample_variance(self.ts))
    }

    /// Per-sample variance for thermal noise power `noise_mw` over the noise
    /// bandwidth, plus clutter at the configured ratio.
    pub fn sample_variance_for_noise(&self, noise_mw: f64) -> Result<f64> {
        let n0 = noise_mw / self.noise_bandwidth;
        let c0 = n0 * 10f64.powf(self.clutter_db() / 10.0);
        Ok(NoiseClutterSpec::new(n0, c0, self.noise_bandwidth)?.sample_variance(self.ts))
    }

    /// SNR per matched-filter symbol sample of a unit-power echo, `ζ·W·Ts`.
    pub fn symbol_snr(&self, scnr_lin: f64) -> f64 {
        scnr_lin * self.noise_bandwidth * self.ts
    }

    /// Single echo of unit power with a random phase.
    pub fn unit_echo(&self, target: &Target, rng: &mut ChaCha8Rng) -> Echo {
        Echo { delay: target.delay(), doppler: target.doppler(self.wavelength), gain: random_phase(rng) }
    }

    /// Frame-0 window around the echoes: first symbol and symbol count.
    pub fn window(&self, echoes: &[Echo]) -> Result<(i64, usize)> {
        if echoes.is_empty() {
            return invalid("capture window is placed around at least one echo");
        }
        let lo = echoes.iter().map(|e| e.delay).fold(f64::INFINITY, f64::min);
        let hi = echoes.iter().map(|e| e.delay).fold(f64::NEG_INFINITY, f64::max);
        let first = (lo / self.ts).floor() as i64 - SYNC_LEAD;
        let count = ((hi - lo) / self.ts).ceil() as usize + SYNC_LEAD as usize + PREAMBLE_LEN + SYNC_TAIL;
        Ok((first, count))
    }

    /// Renders frame 0 around the echoes, applies the matched filter and
    /// runs the timing chain.
    pub fn capture(&self, src: &CpiSymbols, echoes: &[Echo], var: f64, rng: &mut ChaCha8Rng) -> Result<Capture> {
        let (first, count) = self.window(echoes)?;
        let mf = self.stream(src, echoes, var, first, count, rng)?;
        self.synchronize(first, &mf)
    }

    /// Timing chain over a matched-filter stream starting at symbol `first`.
    pub fn synchronize(&self, first: i64, mf: &IqStream) -> Result<Capture> {
        let timing = synchronize(mf, self.q, &self.preamble, &self.sync)?;
        let symbols = symbol_sample(mf, timing.phase, self.q)?.samples;
        Ok(Capture { first_symbol: first, t0: mf.t0, timing, symbols })
    }

    /// Matched-filter output over symbols `first..first+count`, at `Q`
    /// samples per symbol.
    pub fn stream(
        &self,
        src: &CpiSymbols,
        echoes: &[Echo],
        var: f64,
        first: i64,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<IqStream> {
        let q = self.q as i64;
        let y = self.synth.receive(src, echoes, var, first * q, count * self.q, rng);
        matched_filter(&y, self.synth.spec(), self.ts)
    }
}

/// Frame-0 capture and its timing estimate.
#[derive(Debug, Clone)]
pub struct Capture {
    /// CPI symbol index of the first captured symbol.
    pub first_symbol: i64,
    pub t0: f64,
    pub timing: TimingEstimate,
    /// Matched-filter output at the chosen sampling phase.
    pub symbols: Vec<Complex64>,
}

impl Capture {
    /// Round-trip delay of the detected preamble (s).
    pub fn delay(&self, link: &Link) -> f64 {
        self.timing.start_time(self.t0, link.ts, link.q)
    }

    pub fn range(&self, link: &Link) -> f64 {
        C * self.delay(link) / 2.0
    }

    /// `count` symbols starting `offset` symbols after the detected preamble
    /// start of frame `m`, at the synchronized sampling phase. Frame 0 reuses
    /// the captured samples when they cover the block.
    #[allow(clippy::too_many_arguments)]
    pub fn block(
        &self,
        link: &Link,
        src: &CpiSymbols,
        echoes: &[Echo],
        var: f64,
        offset: usize,
        count: usize,
        m: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Complex64>> {
        let local = self.timing.fine_start + offset;
        if m == 0 && local + count <= self.symbols.len() {
            return Ok(self.symbols[local..local + count].to_vec());
        }
        let first = self.first_symbol + local as i64 + (m * link.k) as i64;
        link.synth.receive_symbols(src, echoes, var, first, count, self.timing.phase, rng)
    }
}

/// Target with its range drawn uniformly within one symbol of delay around
/// the nominal value when `jitter` is set.
pub fn jittered(target: &Target, ts: f64, jitter: bool, rng: &mut impl Rng) -> Target {
    if !jitter {
        return *target;
    }
    let step = C * ts / 2.0;
    Target { range: target.range + (rng.random::<f64>() - 0.5) * step, ..*target }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn noiseless_capture_recovers_range() {
        let sc = Scenario::default();
        let link = Link::new(&sc, 12800).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for r in [10.0, 33.3, 50.0, 120.7] {
            let t = Target::new(r, 20.0);
            let src = link.source(1, 7).unwrap();
            let e = link.unit_echo(&t, &mut rng);
            let cap = link.capture(&src, &[e], 0.0, &mut rng).unwrap();
            // Quantization of the fractional delay to Ts/Q.
            assert!(
                (cap.range(&link) - r).abs() <= C * link.ts / (4.0 * link.q as f64) + 1e-9,
                "{r}: {}",
                cap.range(&link)
            );
        }
    }

    #[test]
    fn scnr_variance_convention() {
        let link = Link::new(&Scenario::default(), 12800).unwrap();
        let v = link.sample_variance_for_scnr(0.0).unwrap();
        assert!((v - 1.0 / 1.25).abs() < 1e-12);
        assert!((link.symbol_snr(1.0) - 1.25).abs() < 1e-12);
    }
}
