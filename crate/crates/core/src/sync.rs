//! Preamble processing of the communication receiver, reused by the radar:
//! fractional symbol timing, frame-start detection, fine timing and CEF
//! channel estimation.
//!
//! Carrier offset is assumed perfectly compensated and the radar shares its
//! oscillator with the transmitter, so Doppler is left untouched here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{phase_fraction, symbol_sample, IqStream};
use crate::error::{invalid, Result};
use crate::frame::{Preamble, CEF_PAIR_LEN, SHORT_LEN, STF_LEN, STF_REPS};
use crate::golay::CyclicPairCorrelator;

/// Bin of the channel estimate that holds a synchronized single target.
pub const CEF_PEAK_BIN: usize = 256;
pub const CEF_BINS: usize = CEF_PAIR_LEN;
pub const DEFAULT_CHI_STF_SQ: f64 = 1.0 / 8.0;
/// Half-width of the fine-timing search around the coarse estimate.
pub const FINE_HALF_WINDOW: usize = 3 * SHORT_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FineTiming {
    /// Peak of the repeated-`a128` correlator over the STF.
    #[default]
    Stf,
    /// Peak of the `(Gu, Gv)` correlator over the CEF.
    Cef,
    /// Sign flip between the last `a128` and the closing `−a128`.
    PhaseBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyncConfig {
    pub chi_stf_sq: f64,
    pub fine_half_window: usize,
    pub fine: FineTiming,
    /// Minimum peak-to-mean ratio of `|R2|²` for a confident symbol timing.
    pub confidence_floor: f64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            chi_stf_sq: DEFAULT_CHI_STF_SQ,
            fine_half_window: FINE_HALF_WINDOW,
            fine: FineTiming::Stf,
            confidence_floor: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolTiming {
    pub phase: usize,
    /// Fraction of `Ts` in `[−0.5, 0.5)`.
    pub tau_d: f64,
    pub confident: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingEstimate {
    /// Frame-start detection index, if the R1 test fired.
    pub coarse_start: Option<usize>,
    /// STF start in the symbol-rate sequence taken at `phase`.
    pub fine_start: usize,
    pub phase: usize,
    pub tau_d: f64,
}

impl TimingEstimate {
    /// Absolute time of the detected STF start. `t0` is the time of sample 0
    /// of the oversampled stream the estimate was taken from.
    pub fn start_time(&self, t0: f64, ts: f64, q: usize) -> f64 {
        t0 + (self.fine_start as f64 + self.phase as f64 / q as f64) * ts
    }
}

/// `S[k] = Σ_{i<reps} y[k + i·period]` for every `k` with a full set of terms.
fn repeated_sum(y: &[Complex64], period: usize, reps: usize) -> Vec<Complex64> {
    let span = period * (reps - 1);
    if y.len() <= span {
        return Vec::new();
    }
    let n = y.len() - span;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Complex64::default();
        for i in 0..reps {
            acc += y[k + i * period];
        }
        out.push(acc);
    }
    out
}

/// `R2[ℓ] = Σ_{i<16} Σ_{n<128} a*[n]·y[ℓ + n + 128i]` for `ℓ ∈ lags`.
///
/// Returns the lag range actually evaluated (clipped to the data) and values.
pub fn stf_correlation(y: &[Complex64], a: &[Complex64], lo: usize, hi: usize) -> (usize, Vec<Complex64>) {
    let p = a.len();
    let need = p * STF_REPS;
    if y.len() < need || lo > hi {
        return (lo, Vec::new());
    }
    let last = (y.len() - need).min(hi);
    if lo > last {
        return (lo, Vec::new());
    }
    let s = repeated_sum(&y[lo..last + need], p, STF_REPS);
    let out = (0..=last - lo).map(|l| a.iter().enumerate().map(|(n, r)| r.conj() * s[l + n]).sum()).collect();
    (lo, out)
}

fn argmax_first(v: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.enumerate() {
        if best.is_none_or(|(_, b)| x > b) {
            best = Some((i, x));
        }
    }
    best
}

/// Chooses the sampling phase whose symbol-rate sequence gives the largest
/// STF correlator peak. `y` is the matched-filter output at `Q` samples per
/// symbol.
pub fn estimate_symbol_timing(y: &IqStream, q: usize, preamble: &Preamble, cfg: &SyncConfig) -> Result<SymbolTiming> {
    let a = preamble.stf_reference();
    let mut best = (0usize, f64::NEG_INFINITY, 0.0f64);
    for phase in 0..q {
        let s = symbol_sample(y, phase, q)?;
        let (_, r2) = stf_correlation(&s.samples, &a, 0, usize::MAX);
        if r2.is_empty() {
            return invalid("stream shorter than one STF");
        }
        let e: Vec<f64> = r2.iter().map(|v| v.norm_sqr()).collect();
        let (_, peak) = argmax_first(e.iter().copied()).expect("nonempty");
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        if peak > best.1 {
            best = (phase, peak, if mean > 0.0 { peak / mean } else { f64::INFINITY });
        }
    }
    let confident = best.2 >= cfg.confidence_floor;
    let phase = if confident { best.0 } else { 0 };
    Ok(SymbolTiming { phase, tau_d: phase_fraction(phase, q), confident })
}

/// Normalized STF autocorrelation
/// `R1[ℓ] = Σ_{n<P} y[ℓ−n]·y*[ℓ−n−N_D] / √(Σ|y[ℓ−n]|²·Σ|y[ℓ−n−N_D]|²)`
/// for `ℓ ≥ P − 1 + N_D`; earlier entries are zero.
pub fn stf_autocorrelation(y: &[Complex64], p: usize, nd: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); y.len()];
    let first = p - 1 + nd;
    for l in first..y.len() {
        let (mut num, mut e0, mut e1) = (Complex64::default(), 0.0f64, 0.0f64);
        for n in 0..p {
            let (x0, x1) = (y[l - n], y[l - n - nd]);
            num += x0 * x1.conj();
            e0 += x0.norm_sqr();
            e1 += x1.norm_sqr();
        }
        let den = (e0 * e1).sqrt();
        out[l] = if den > 0.0 { num / den } else { Complex64::default() };
    }
    out
}

/// First index of a run of `sustain` consecutive lags with `|R1| ≥ χ_STF`.
pub fn detect_frame_start(y: &[Complex64], chi_stf: f64, sustain: usize) -> Option<usize> {
    let r1 = stf_autocorrelation(y, SHORT_LEN, SHORT_LEN);
    let mut run = 0usize;
    for (l, v) in r1.iter().enumerate() {
        if v.norm() >= chi_stf {
            run += 1;
            if run == sustain {
                return Some(l + 1 - sustain);
            }
        } else {
            run = 0;
        }
    }
    None
}

fn window(center: usize, half: usize) -> (usize, usize) {
    (center.saturating_sub(half), center + half)
}

/// `argmax |R2[ℓ]|²` over `center ± half`, ties to the smallest index.
pub fn fine_timing_stf(y: &[Complex64], a: &[Complex64], center: usize, half: usize) -> Result<usize> {
    let (lo, hi) = window(center, half);
    let (lo, r2) = stf_correlation(y, a, lo, hi);
    match argmax_first(r2.iter().map(|v| v.norm_sqr())) {
        Some((i, _)) => Ok(lo + i),
        None => invalid("search window does not contain a full STF"),
    }
}

/// CEF alternative: peak of the linear `(Gu, Gv)` correlator, reported as the
/// implied STF start.
pub fn fine_timing_cef(y: &[Complex64], preamble: &Preamble, center: usize, half: usize) -> Result<usize> {
    let (u, v) = preamble.cef_references();
    let (lo, hi) = window(center + STF_LEN, half);
    let n = u.len();
    if y.len() < lo + 2 * n {
        return invalid("search window does not contain the CEF");
    }
    let hi = hi.min(y.len() - 2 * n);
    let metric = (lo..=hi).map(|l| {
        let mut acc = Complex64::default();
        for i in 0..n {
            acc += y[l + i] * u[i].conj() + y[l + n + i] * v[i].conj();
        }
        acc.norm_sqr()
    });
    let (i, _) = argmax_first(metric).expect("nonempty window");
    Ok(lo + i - STF_LEN)
}

/// Phase-based alternative: locates the polarity flip between the sixteenth
/// `a128` and the closing `−a128` and reports the implied STF start. Doppler
/// rotates the block phases, so this path degrades at low SNR.
pub fn fine_timing_phase_boundary(y: &[Complex64], a: &[Complex64], center: usize, half: usize) -> Result<usize> {
    let p = a.len();
    let flip = STF_REPS * p;
    let (lo, hi) = window(center + flip, half);
    let lo = lo.max(p);
    if y.len() < lo + p {
        return invalid("search window does not contain the STF end");
    }
    let hi = hi.min(y.len() - p);
    let block = |l: usize| -> Complex64 { a.iter().enumerate().map(|(n, r)| r.conj() * y[l + n]).sum() };
    let metric = (lo..=hi).map(|l| -(block(l) * block(l - p).conj()).re);
    let (i, _) = argmax_first(metric).expect("nonempty window");
    Ok(lo + i - flip)
}

/// Full timing chain on a matched-filter output: symbol timing, frame-start
/// detection and fine timing. Without a sustained R1 crossing the fine search
/// covers the whole stream.
pub fn synchronize(y: &IqStream, q: usize, preamble: &Preamble, cfg: &SyncConfig) -> Result<TimingEstimate> {
    let st = estimate_symbol_timing(y, q, preamble, cfg)?;
    let s = symbol_sample(y, st.phase, q)?;
    let coarse = detect_frame_start(&s.samples, cfg.chi_stf_sq.sqrt(), SHORT_LEN);
    let (center, half) = match coarse {
        Some(c) => (c, cfg.fine_half_window),
        None => (0, s.len()),
    };
    let a = preamble.stf_reference();
    let fine = match cfg.fine {
        FineTiming::Stf => fine_timing_stf(&s.samples, &a, center, half)?,
        FineTiming::Cef => fine_timing_cef(&s.samples, preamble, center, half)?,
        FineTiming::PhaseBoundary => fine_timing_phase_boundary(&s.samples, &a, center, half)?,
    };
    Ok(TimingEstimate { coarse_start: coarse, fine_start: fine, phase: st.phase, tau_d: st.tau_d })
}

/// CEF channel estimator over the `(Gu, Gv)` pair.
#[derive(Debug, Clone)]
pub struct CefEstimator {
    corr: CyclicPairCorrelator,
    u: Vec<Complex64>,
    v: Vec<Complex64>,
}

impl CefEstimator {
    pub fn new(preamble: &Preamble) -> Self {
        let (u, v) = preamble.cef_references();
        let corr = CyclicPairCorrelator::new(u.clone(), v.clone()).expect("equal nonempty references");
        Self { corr, u, v }
    }

    /// Cyclic estimator with the prefix removed. `cef_start` indexes the first
    /// `Gu` symbol; `ĥ[ℓ]` is the response at offset `ℓ − 256` from it.
    pub fn estimate(&self, y: &[Complex64], cef_start: usize) -> Result<Vec<Complex64>> {
        let n = CEF_PAIR_LEN;
        if y.len() < cef_start + 2 * n {
            return invalid(format!("sequence of {} symbols ends inside the CEF at {cef_start}", y.len()));
        }
        let g = self.corr.correlate(&y[cef_start..cef_start + n], &y[cef_start + n..cef_start + 2 * n])?;
        Ok((0..n).map(|l| g[(l + n - CEF_PEAK_BIN) % n]).collect())
    }

    /// Linear correlator over the received CEF, `ĥ[ℓ] = γ̂(y_m, ℓ + N_CP)` with
    /// `y_m` starting `N_CP + 256` symbols ahead of `cef_start`. Equal to
    /// [`estimate`](Self::estimate) for responses within ±128 symbols of the
    /// synchronization point.
    pub fn estimate_linear(&self, y: &[Complex64], cef_start: usize) -> Result<Vec<Complex64>> {
        let n = CEF_PAIR_LEN;
        if cef_start < CEF_PEAK_BIN || y.len() < cef_start - CEF_PEAK_BIN + 3 * n - 1 {
            return invalid("sequence does not cover the linear CEF correlator support");
        }
        let base = cef_start - CEF_PEAK_BIN;
        let scale = 1.0 / (2 * n) as f64;
        Ok((0..n)
            .map(|l| {
                let mut acc = Complex64::default();
                for i in 0..n {
                    acc += y[base + l + i] * self.u[i].conj() + y[base + l + n + i] * self.v[i].conj();
                }
                acc * scale
            })
            .collect())
    }
}

/// Channel estimates of `M` frames, `M × 512`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimateMatrix {
    rows: usize,
    data: Vec<Complex64>,
    /// Absolute delay (in symbols, relative to the transmit reference) of bin 0.
    pub delay_origin: f64,
}

impl ChannelEstimateMatrix {
    pub fn new(rows: Vec<Vec<Complex64>>, delay_origin: f64) -> Result<Self> {
        if rows.iter().any(|r| r.len() != CEF_BINS) {
            return invalid(format!("channel estimates must have {CEF_BINS} bins"));
        }
        let m = rows.len();
        Ok(Self { rows: m, data: rows.into_iter().flatten().collect(), delay_origin })
    }

    pub fn frames(&self) -> usize {
        self.rows
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        &self.data[m * CEF_BINS..(m + 1) * CEF_BINS]
    }

    pub fn get(&self, m: usize, l: usize) -> Complex64 {
        self.data[m * CEF_BINS + l]
    }

    /// Slow-time vector of delay bin `l`.
    pub fn bin(&self, l: usize) -> Vec<Complex64> {
        (0..self.rows).map(|m| self.get(m, l)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airlink::channel::complex_normal;
    use crate::frame::{FrameLayout, Modulation, CEF_LEN, PREAMBLE_LEN};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(seed: u64) -> Vec<Complex64> {
        let l = FrameLayout::new(5000, 200).unwrap();
        crate::frame::assemble_frame(&l, &Preamble::standard(), Modulation::Bpsk, &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap()
    }

    /// Symbol-rate echo of `frame` at integer `delay` with gain `g`, plus noise.
    fn echo(total: usize, delay: usize, g: Complex64, var: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let f = frame(1);
        (0..total)
            .map(|i| {
                let s = if i >= delay && i - delay < f.len() { f[i - delay] * g } else { Complex64::default() };
                if var > 0.0 {
                    s + complex_normal(rng, var)
                } else {
                    s
                }
            })
            .collect()
    }

    #[test]
    fn frame_start_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = echo(7000, 600, Complex64::new(0.7, 0.2), 0.0, &mut rng);
        let l = detect_frame_start(&y, DEFAULT_CHI_STF_SQ.sqrt(), 128).unwrap();
        assert!((600..600 + 384).contains(&l), "{l}");
        assert!(stf_autocorrelation(&y, 128, 128).iter().all(|v| v.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn frame_start_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = echo(7000, 900, Complex64::new(1.0, 0.0), 0.5, &mut rng);
        let l = detect_frame_start(&y, DEFAULT_CHI_STF_SQ.sqrt(), 128);
        for c in [1e-3, 7.0, 1e4] {
            let z: Vec<_> = y.iter().map(|v| v * c).collect();
            assert_eq!(detect_frame_start(&z, DEFAULT_CHI_STF_SQ.sqrt(), 128), l);
        }
    }

    #[test]
    fn noise_rarely_triggers_frame_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut hits = 0;
        for _ in 0..1000 {
            let y: Vec<_> = (0..3000).map(|_| complex_normal(&mut rng, 1.0)).collect();
            hits += detect_frame_start(&y, DEFAULT_CHI_STF_SQ.sqrt(), 128).is_some() as usize;
        }
        assert!(hits <= 10, "{hits}");
    }

    #[test]
    fn fine_timing_noiseless_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = echo(7000, 587, Complex64::new(0.0, -1.0), 0.0, &mut rng);
        let a = Preamble::standard().stf_reference();
        assert_eq!(fine_timing_stf(&y, &a, 700, 384).unwrap(), 587);
        assert_eq!(fine_timing_cef(&y, &Preamble::standard(), 700, 384).unwrap(), 587);
        assert_eq!(fine_timing_phase_boundary(&y, &a, 700, 384).unwrap(), 587);
        assert!(fine_timing_stf(&y[..1000], &a, 500, 10).is_err());
    }

    #[test]
    fn fine_timing_at_zero_db() {
        // 0 dB over the occupied bandwidth is 1.25 per symbol sample.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Preamble::standard().stf_reference();
        let mut good = 0;
        for _ in 0..1000 {
            let y = echo(4000, 587, Complex64::new(1.0, 0.0), 1.0 / 1.25, &mut rng);
            let l = fine_timing_stf(&y, &a, 700, 384).unwrap() as i64;
            if (l - 587).abs() <= 1 {
                good += 1;
            }
        }
        assert!(good >= 990, "{good}");
    }

    #[test]
    fn strongest_of_two_echoes_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y1 = echo(7000, 500, Complex64::new(0.4, 0.0), 0.0, &mut rng);
        let y2 = echo(7000, 700, Complex64::new(0.0, 1.0), 0.0, &mut rng);
        let y: Vec<_> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        let a = Preamble::standard().stf_reference();
        assert_eq!(fine_timing_stf(&y, &a, 600, 384).unwrap(), 700);
    }

    fn cef_input(offset: usize, g: Complex64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        echo(6000, 400 + offset, g, 0.0, &mut rng)
    }

    #[test]
    fn cef_estimate_is_a_delta() {
        let est = CefEstimator::new(&Preamble::standard());
        let g = Complex64::new(-0.3, 0.9);
        let y = cef_input(0, g);
        let start = 400 + STF_LEN;
        let h = est.estimate(&y, start).unwrap();
        assert!((h[CEF_PEAK_BIN] - g).norm() < 1e-12);
        for (l, v) in h.iter().enumerate() {
            if l != CEF_PEAK_BIN {
                assert!(v.norm() < 1e-10, "bin {l}: {v}");
            }
        }
        // The linear form is a delta only inside the ±128-lag guard zone.
        let h = est.estimate_linear(&y, start).unwrap();
        assert!((h[CEF_PEAK_BIN] - g).norm() < 1e-12);
        for l in CEF_PEAK_BIN - 128..=CEF_PEAK_BIN + 128 {
            if l != CEF_PEAK_BIN {
                assert!(h[l].norm() < 1e-10, "bin {l}: {}", h[l]);
            }
        }
        let leak = h
            .iter()
            .map(|v| v.norm())
            .enumerate()
            .filter(|(l, _)| (*l as i64 - 256).abs() > 128)
            .map(|(_, v)| v)
            .fold(0.0, f64::max);
        assert!(leak > 1e-3);
    }

    #[test]
    fn cef_estimate_shifts_with_delay() {
        let est = CefEstimator::new(&Preamble::standard());
        let g = Complex64::new(1.0, 0.0);
        let start = 400 + STF_LEN;
        for extra in [3usize, 128] {
            let y = cef_input(extra, g);
            let h = est.estimate(&y, start).unwrap();
            let peak = h.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
            assert_eq!(peak, CEF_PEAK_BIN + extra);
            assert!((h[peak] - g).norm() < 1e-12);
            let others = h.iter().enumerate().filter(|(l, _)| *l != peak).map(|(_, v)| v.norm()).fold(0.0, f64::max);
            assert!(others < 1e-10);
        }
        // Earlier echoes within the guard land below the peak bin.
        let y = cef_input(0, g);
        let h = est.estimate(&y, start + 100).unwrap();
        assert!((h[CEF_PEAK_BIN - 100] - g).norm() < 1e-12);
    }

    #[test]
    fn linear_and_cyclic_agree_inside_guard_zone() {
        // Responses within ±129 lags of the sync point see no cross terms in
        // the linear correlator either.
        let est = CefEstimator::new(&Preamble::standard());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut y = vec![Complex64::default(); 7000];
        for (d, g) in
            [(450usize, Complex64::new(1.0, 0.5)), (487, Complex64::new(0.2, 0.0)), (360, Complex64::new(0.0, -0.7))]
        {
            for (o, v) in y.iter_mut().zip(echo(7000, d, g, 0.0, &mut rng)) {
                *o += v;
            }
        }
        let start = 450 + STF_LEN;
        let c = est.estimate(&y, start).unwrap();
        let l = est.estimate_linear(&y, start).unwrap();
        // Every echo must sit within ±128 lags of the bin for the linear form to be exact.
        let offsets = [0i64, 37, -90];
        for b in 0..CEF_BINS {
            let d = b as i64 - CEF_PEAK_BIN as i64;
            if offsets.iter().all(|e| (d - e).abs() <= 128) {
                assert!((c[b] - l[b]).norm() < 1e-9, "bin {b}");
            }
        }
        assert!(est.estimate(&y[..start + 1000], start).is_err());
    }

    #[test]
    fn cef_noise_bins_have_expected_variance_and_mean() {
        let est = CefEstimator::new(&Preamble::standard());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let var = 2.0;
        let g = Complex64::new(0.5, 0.0);
        let trials = 1000;
        let (mut acc_var, mut acc_mean) = (0.0, Complex64::default());
        for _ in 0..trials {
            let y = echo(4000, 100, g, var, &mut rng);
            let h = est.estimate(&y, 100 + STF_LEN).unwrap();
            acc_mean += h[CEF_PEAK_BIN];
            acc_var += h.iter().enumerate().filter(|(l, _)| *l != CEF_PEAK_BIN).map(|(_, v)| v.norm_sqr()).sum::<f64>()
                / 511.0;
        }
        let v = acc_var / trials as f64;
        assert!((v / (var / 1024.0) - 1.0).abs() < 0.02, "{v}");
        let mean = acc_mean / trials as f64;
        let se = (var / 1024.0 / trials as f64).sqrt();
        assert!((mean - g).norm() < 3.0 * se * 2f64.sqrt());
    }

    #[test]
    fn channel_matrix_shape() {
        let rows = vec![vec![Complex64::new(1.0, 0.0); 512]; 3];
        let h = ChannelEstimateMatrix::new(rows, -88.0).unwrap();
        assert_eq!(h.frames(), 3);
        assert_eq!(h.bin(5).len(), 3);
        assert!(ChannelEstimateMatrix::new(vec![vec![Complex64::default(); 10]], 0.0).is_err());
        assert_eq!(PREAMBLE_LEN, STF_LEN + CEF_LEN);
    }
}
