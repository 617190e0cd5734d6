//! Delay-Doppler map across the frames of a CPI and thresholding of its cells.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::detect::cfar_threshold;
use super::estimate::{delay_to_range, doppler_to_velocity};
use crate::error::{invalid, Result};
use crate::sync::{ChannelEstimateMatrix, CEF_BINS};

/// `H[ℓ, d] = Σ_m ĥ_m[ℓ]·e^{−j2πmd/(MZ)}`, one row per delay bin.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDopplerMap {
    frames: usize,
    zero_pad: usize,
    /// Frame length `K` in symbols.
    k: usize,
    ts: f64,
    /// Absolute delay (symbols) of delay bin 0.
    delay_origin: f64,
    cells: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDetection {
    /// Row of the map.
    pub delay_bin: usize,
    /// Signed Doppler bin in `[−MZ/2, MZ/2)`.
    pub doppler_bin: i64,
    /// Round-trip delay in symbols.
    pub delay_symbols: f64,
    pub range: f64,
    pub doppler: f64,
    pub velocity: f64,
    pub power: f64,
}

pub fn build_delay_doppler_map(
    h: &ChannelEstimateMatrix,
    zero_pad: usize,
    k: usize,
    ts: f64,
) -> Result<DelayDopplerMap> {
    let m = h.frames();
    if m < 2 {
        return invalid(format!("a delay-Doppler map needs at least two frames, got {m}"));
    }
    if zero_pad == 0 || k == 0 || !(ts > 0.0) {
        return invalid("zero-pad factor, frame length and symbol period must be positive");
    }
    let n = m * zero_pad;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut cells = vec![Complex64::default(); CEF_BINS * n];
    cells.par_chunks_mut(n).enumerate().for_each(|(l, row)| {
        for f in 0..m {
            row[f] = h.get(f, l);
        }
        fft.process(row);
    });
    Ok(DelayDopplerMap { frames: m, zero_pad, k, ts, delay_origin: h.delay_origin, cells })
}

impl DelayDopplerMap {
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn zero_pad(&self) -> usize {
        self.zero_pad
    }

    pub fn delay_bins(&self) -> usize {
        CEF_BINS
    }

    pub fn doppler_bins(&self) -> usize {
        self.frames * self.zero_pad
    }

    pub fn delay_origin(&self) -> f64 {
        self.delay_origin
    }

    pub fn cell(&self, l: usize, col: usize) -> Complex64 {
        self.cells[l * self.doppler_bins() + col]
    }

    pub fn row(&self, l: usize) -> &[Complex64] {
        let n = self.doppler_bins();
        &self.cells[l * n..(l + 1) * n]
    }

    /// Signed Doppler bin of a column.
    pub fn signed_bin(&self, col: usize) -> i64 {
        let n = self.doppler_bins() as i64;
        let c = col as i64;
        if c >= (n + 1) / 2 {
            c - n
        } else {
            c
        }
    }

    /// Doppler spacing of adjacent columns, `1/(MZ·K·Ts)`.
    pub fn doppler_step(&self) -> f64 {
        1.0 / (self.doppler_bins() as f64 * self.k as f64 * self.ts)
    }

    pub fn doppler(&self, col: usize) -> f64 {
        self.signed_bin(col) as f64 * self.doppler_step()
    }

    pub fn velocity(&self, col: usize, wavelength: f64) -> f64 {
        doppler_to_velocity(self.doppler(col), wavelength)
    }

    /// Round-trip delay of a row, in symbols.
    pub fn delay_symbols(&self, l: usize) -> f64 {
        self.delay_origin + l as f64
    }

    pub fn range(&self, l: usize) -> f64 {
        delay_to_range(self.delay_symbols(l) * self.ts)
    }

    /// Variance of a cell for white per-symbol input variance `sample_var`:
    /// each frame contributes a CEF bin of variance `σ²/1024`.
    pub fn background_variance(&self, sample_var: f64) -> f64 {
        self.frames as f64 * sample_var / (2 * CEF_BINS) as f64
    }

    /// `(row, column, |H|²)` of the strongest cell; ties to the first.
    pub fn peak(&self) -> (usize, usize, f64) {
        let n = self.doppler_bins();
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, v) in self.cells.iter().enumerate() {
            let p = v.norm_sqr();
            if p > best.2 {
                best = (i / n, i % n, p);
            }
        }
        best
    }

    /// Magnitudes in dB relative to the strongest cell.
    pub fn magnitude_db(&self) -> Vec<f64> {
        let peak = self.peak().2;
        self.cells.iter().map(|v| 10.0 * (v.norm_sqr() / peak).log10()).collect()
    }

    /// Number of cells whose power exceeds `threshold`.
    pub fn exceedances(&self, threshold: f64) -> usize {
        self.cells.iter().filter(|v| v.norm_sqr() > threshold).count()
    }

    /// 3-dB width of the response through `(l, col)` along the delay axis, in
    /// bins, with linear interpolation of power between cells.
    pub fn delay_width_3db(&self, l: usize, col: usize) -> f64 {
        let half = self.cell(l, col).norm_sqr() / 2.0;
        let power = |i: i64| -> Option<f64> {
            (0..CEF_BINS as i64).contains(&i).then(|| self.cell(i as usize, col).norm_sqr())
        };
        half_power_span(l as i64, half, power)
    }

    /// 3-dB width along the (cyclic) Doppler axis, in columns.
    pub fn doppler_width_3db(&self, l: usize, col: usize) -> f64 {
        let n = self.doppler_bins() as i64;
        let half = self.cell(l, col).norm_sqr() / 2.0;
        let power = |i: i64| -> Option<f64> {
            let c = i - col as i64;
            (c.abs() < n / 2).then(|| self.cell(l, i.rem_euclid(n) as usize).norm_sqr())
        };
        half_power_span(col as i64, half, power)
    }

    /// Doppler 3-dB width in m/s.
    pub fn velocity_width_3db(&self, l: usize, col: usize, wavelength: f64) -> f64 {
        doppler_to_velocity(self.doppler_width_3db(l, col) * self.doppler_step(), wavelength)
    }
}

/// Distance between the two half-power crossings around `centre`.
fn half_power_span(centre: i64, half: f64, power: impl Fn(i64) -> Option<f64>) -> f64 {
    let side = |dir: i64| -> f64 {
        let mut prev = power(centre).unwrap_or(0.0);
        let mut i = centre;
        loop {
            let next = i + dir;
            match power(next) {
                Some(p) if p >= half => {
                    prev = p;
                    i = next;
                }
                Some(p) => return (i - centre).abs() as f64 + (prev - half) / (prev - p),
                None => return (i - centre).abs() as f64,
            }
        }
    };
    side(-1) + side(1)
}

/// Peak sidelobe level of the rectangular slow-time window.
pub const SIDELOBE_BLANKING_DB: f64 = 13.26;

/// Cells above `χ_D = −σ²·ln P_FA` that are local maxima of the
/// unpadded map (every `Z`-th Doppler column) along both axes. Each hit is
/// refined to the strongest padded column within half a native bin.
/// `noise_var` is the per-cell background variance.
///
/// Zero-padded columns between native bins trace the sidelobes of the
/// slow-time window, so testing maxima on the native grid keeps those
/// sidelobes from registering as targets. Hits more than
/// [`SIDELOBE_BLANKING_DB`] below the strongest hit of their delay row are
/// dropped as leakage.
pub fn detect_targets_map(
    map: &DelayDopplerMap,
    noise_var: f64,
    pfa: f64,
    wavelength: f64,
) -> Result<Vec<MapDetection>> {
    let threshold = cfar_threshold(noise_var, pfa)?;
    let rows = map.delay_bins();
    let z = map.zero_pad();
    let native = map.frames();
    let cols = map.doppler_bins();
    let p = |l: usize, j: usize| map.cell(l, j * z).norm_sqr();
    let mut out = Vec::new();
    for l in 0..rows {
        for j in 0..native {
            let v = p(l, j);
            if v <= threshold {
                continue;
            }
            let left = p(l, (j + native - 1) % native);
            let right = p(l, (j + 1) % native);
            let up = if l > 0 { p(l - 1, j) } else { f64::NEG_INFINITY };
            let down = if l + 1 < rows { p(l + 1, j) } else { f64::NEG_INFINITY };
            if !(v > left && v >= right && v > up && v >= down) {
                continue;
            }
            let centre = (j * z) as i64;
            let half = (z / 2) as i64;
            let (c, power) = (centre - half..=centre + half)
                .map(|c| {
                    let c = c.rem_euclid(cols as i64) as usize;
                    (c, map.cell(l, c).norm_sqr())
                })
                .fold((j * z, v), |acc, x| if x.1 > acc.1 { x } else { acc });
            out.push(MapDetection {
                delay_bin: l,
                doppler_bin: map.signed_bin(c),
                delay_symbols: map.delay_symbols(l),
                range: map.range(l),
                doppler: map.doppler(c),
                velocity: map.velocity(c, wavelength),
                power,
            });
        }
    }
    let floor = 10f64.powf(-SIDELOBE_BLANKING_DB / 10.0);
    let mut row_max = vec![0.0f64; rows];
    for d in &out {
        row_max[d.delay_bin] = row_max[d.delay_bin].max(d.power);
    }
    out.retain(|d| d.power >= row_max[d.delay_bin] * floor);
    out.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.delay_bin.cmp(&b.delay_bin)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::airlink::channel::complex_normal;
    use crate::sync::CEF_PEAK_BIN;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TS: f64 = 1.0 / 1.76e9;
    const LAMBDA: f64 = 0.005;

    /// Ideal per-frame estimates of point targets at `(bin, doppler, gain)`.
    fn estimates(
        m: usize,
        k: usize,
        targets: &[(usize, f64, Complex64)],
        var: f64,
        seed: u64,
    ) -> ChannelEstimateMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..m)
            .map(|f| {
                let mut r: Vec<Complex64> = (0..CEF_BINS)
                    .map(|_| if var > 0.0 { complex_normal(&mut rng, var) } else { Complex64::default() })
                    .collect();
                for &(l, nu, g) in targets {
                    r[l] += g * Complex64::from_polar(1.0, 2.0 * PI * nu * (f * k) as f64 * TS);
                }
                r
            })
            .collect();
        ChannelEstimateMatrix::new(rows, 100.0).unwrap()
    }

    #[test]
    fn needs_two_frames() {
        let h = estimates(1, 12800, &[], 0.0, 0);
        assert!(build_delay_doppler_map(&h, 4, 12800, TS).is_err());
    }

    #[test]
    fn stationary_target_at_zero_doppler() {
        let h = estimates(10, 12800, &[(CEF_PEAK_BIN, 0.0, Complex64::new(1.0, 0.0))], 0.0, 0);
        let map = build_delay_doppler_map(&h, 16, 12800, TS).unwrap();
        let (l, c, p) = map.peak();
        assert_eq!((l, c), (CEF_PEAK_BIN, 0));
        assert!((p - 100.0).abs() < 1e-9);
        assert_eq!(map.delay_symbols(l), 356.0);
    }

    #[test]
    fn moving_target_peak_within_half_bin() {
        let (m, k) = (10usize, 12800usize);
        let nu = 2.0 * 30.0 / LAMBDA;
        let h = estimates(m, k, &[(300, nu, Complex64::new(0.0, 1.0))], 0.0, 0);
        let map = build_delay_doppler_map(&h, 16, k, TS).unwrap();
        let (l, c, _) = map.peak();
        assert_eq!(l, 300);
        let t = m as f64 * k as f64 * TS;
        assert!((map.doppler(c) - nu).abs() <= 1.0 / (2.0 * t));
        assert!((map.velocity(c, LAMBDA) - 30.0).abs() <= LAMBDA / (4.0 * t));
    }

    #[test]
    fn rectangular_window_widths() {
        let (m, k) = (10usize, 12800usize);
        let h = estimates(m, k, &[(200, 0.0, Complex64::new(1.0, 0.0))], 0.0, 0);
        let map = build_delay_doppler_map(&h, 1000, k, TS).unwrap();
        // 3-dB width of |sin(πMx)/(M sin πx)|² is ≈ 0.886 of 1/M.
        let w = map.doppler_width_3db(200, 0) / map.zero_pad() as f64;
        assert!((w - 0.886).abs() < 0.01, "{w}");
        assert!((map.delay_width_3db(200, 0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_targets_two_clusters() {
        let (m, k) = (10usize, 12800usize);
        let var = 1e-3;
        let h =
            estimates(m, k, &[(168, 12_000.0, Complex64::new(1.0, 0.0)), (118, 0.0, Complex64::new(0.0, 0.3))], var, 3);
        let map = build_delay_doppler_map(&h, 16, k, TS).unwrap();
        let det = detect_targets_map(&map, m as f64 * var, 1e-6, LAMBDA).unwrap();
        assert_eq!(det.len(), 2, "{det:?}");
        assert_eq!(det[0].delay_bin, 168);
        assert_eq!(det[1].delay_bin, 118);
        assert!((det[0].velocity - 30.0).abs() < 34.375 / 2.0);
        assert!(det[1].velocity.abs() < 34.375 / 2.0);
    }

    #[test]
    fn noise_only_exceedances_follow_pfa() {
        let (m, k) = (8usize, 12800usize);
        let var = 2.0;
        let h = estimates(m, k, &[], var, 11);
        let map = build_delay_doppler_map(&h, 1, k, TS).unwrap();
        let pfa = 1e-2;
        let t = cfar_threshold(m as f64 * var, pfa).unwrap();
        let cells = (map.delay_bins() * map.doppler_bins()) as f64;
        let n = map.exceedances(t) as f64;
        let sigma = (cells * pfa * (1.0 - pfa)).sqrt();
        assert!((n - cells * pfa).abs() < 4.0 * sigma, "{n} vs {}", cells * pfa);
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(24))]
        #[test]
        fn scaling_keeps_argmax(scale in 1e-3f64..1e3, bin in 0usize..512, nu in -60_000f64..60_000.0) {
            let h = estimates(6, 12800, &[(bin, nu, Complex64::new(0.7, -0.2))], 1e-4, 5);
            let rows: Vec<Vec<Complex64>> = (0..6).map(|f| h.row(f).iter().map(|v| v * scale).collect()).collect();
            let hs = ChannelEstimateMatrix::new(rows, h.delay_origin).unwrap();
            let a = build_delay_doppler_map(&h, 8, 12800, TS).unwrap().peak();
            let b = build_delay_doppler_map(&hs, 8, 12800, TS).unwrap().peak();
            proptest::prop_assert_eq!((a.0, a.1), (b.0, b.1));
        }
    }
}
