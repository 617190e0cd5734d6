//! CFAR thresholding of the CEF peak and of the full-preamble correlation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{symbol_sample, IqStream};
use crate::error::{invalid, Result};
use crate::frame::{Preamble, CEF_PAIR_LEN};
use crate::sync::CEF_PEAK_BIN;

/// Detection threshold `χ_D = −σ²·ln P_FA` for an exponentially
/// distributed statistic `|z|²`, `z ~ CN(0, σ²)`.
pub fn cfar_threshold(noise_var: f64, pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa <= 1.0) {
        return invalid(format!("false-alarm probability must be in (0, 1], got {pfa}"));
    }
    if !(noise_var > 0.0) {
        return invalid(format!("statistic variance must be positive, got {noise_var}"));
    }
    Ok(-noise_var * pfa.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionDecision {
    pub statistic: f64,
    pub threshold: f64,
    pub detected: bool,
    pub pfa: f64,
}

impl DetectionDecision {
    pub fn decide(statistic: f64, noise_var: f64, pfa: f64) -> Result<Self> {
        let threshold = cfar_threshold(noise_var, pfa)?;
        Ok(Self { statistic, threshold, detected: statistic > threshold, pfa })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatSource {
    /// `|ĥ[256]|²` of the cyclic CEF estimate.
    CefPeak,
    /// Peak energy of the full-preamble cross-correlation.
    #[default]
    Preamble,
}

/// `|ĥ[ℓ_CEF]|²`.
pub fn cef_statistic(h: &[Complex64]) -> f64 {
    h[CEF_PEAK_BIN].norm_sqr()
}

/// Background variance of a CEF bin for white input of per-symbol variance
/// `sample_var`: the estimator averages `2·512` products.
pub fn cef_statistic_variance(sample_var: f64) -> f64 {
    sample_var / (2 * CEF_PAIR_LEN) as f64
}

/// Background variance of the normalized preamble correlation.
pub fn preamble_statistic_variance(sample_var: f64, preamble_len: usize) -> f64 {
    sample_var / preamble_len as f64
}

/// `|Σ_n s[lag+n]·x*[n] / P|²` with `x` the transmitted preamble.
pub fn preamble_correlation(s: &[Complex64], preamble: &[Complex64], lag: usize) -> Option<f64> {
    let p = preamble.len();
    if lag + p > s.len() {
        return None;
    }
    let acc: Complex64 = preamble.iter().zip(&s[lag..lag + p]).map(|(x, y)| y * x.conj()).sum();
    Some((acc / p as f64).norm_sqr())
}

/// `E_pream`: maximum of the normalized full-preamble correlation energy over
/// every sampling phase and the lags within `gate` symbols of the expected
/// preamble start. `expected_start` is in seconds on the stream's time axis.
pub fn preamble_energy(
    y: &IqStream,
    q: usize,
    preamble: &Preamble,
    expected_start: f64,
    ts: f64,
    gate: usize,
) -> Result<f64> {
    let x = preamble.symbols();
    let mut best: Option<f64> = None;
    for phase in 0..q {
        let s = symbol_sample(y, phase, q)?;
        let centre = ((expected_start - s.t0) / ts).round();
        if !centre.is_finite() {
            return invalid("expected start is not finite");
        }
        let lo = (centre as i64 - gate as i64).max(0) as usize;
        let hi = (centre as i64 + gate as i64).max(0) as usize;
        for lag in lo..=hi {
            if let Some(e) = preamble_correlation(&s.samples, x, lag) {
                best = Some(best.map_or(e, |b: f64| b.max(e)));
            }
        }
    }
    best.ok_or_else(|| crate::error::Error::InvalidArgument("no full preamble inside the gate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airlink::channel::complex_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threshold_values() {
        assert_eq!(cfar_threshold(3.0, 1.0).unwrap(), 0.0);
        assert!((cfar_threshold(1.0, 1e-6).unwrap() - 13.815_510_557_964_274).abs() < 1e-12);
        assert!(cfar_threshold(1.0, 0.0).is_err());
        assert!(cfar_threshold(1.0, 1.5).is_err());
        assert!(cfar_threshold(0.0, 0.1).is_err());
    }

    #[test]
    fn decision_is_strict_threshold() {
        let d = DetectionDecision::decide(13.0, 1.0, 1e-6).unwrap();
        assert!(!d.detected);
        let t = cfar_threshold(1.0, 1e-6).unwrap();
        assert!(!DetectionDecision::decide(t, 1.0, 1e-6).unwrap().detected);
        assert!(DetectionDecision::decide(t + 1e-9, 1.0, 1e-6).unwrap().detected);
    }

    #[test]
    fn calibration_on_gaussian_statistics() {
        let n = 100_000usize;
        for (i, pfa) in [1e-1, 1e-2, 1e-3].into_iter().enumerate() {
            for var in [0.01, 1.0, 37.0] {
                let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
                let t = cfar_threshold(var, pfa).unwrap();
                let hits = (0..n).filter(|_| complex_normal(&mut rng, var).norm_sqr() > t).count();
                let rate = hits as f64 / n as f64;
                let sigma = (pfa * (1.0 - pfa) / n as f64).sqrt();
                assert!((rate - pfa).abs() <= 3.0 * sigma, "pfa {pfa} var {var}: {rate}");
            }
        }
    }

    #[test]
    fn preamble_correlation_of_clean_copy() {
        let pre = Preamble::standard();
        let x = pre.symbols();
        let mut s = vec![Complex64::default(); 40];
        s.extend(x.iter().map(|v| v * Complex64::new(0.0, 2.0)));
        s.extend(vec![Complex64::default(); 40]);
        assert!((preamble_correlation(&s, x, 40).unwrap() - 4.0).abs() < 1e-12);
        assert!(preamble_correlation(&s, x, 39).unwrap() < 0.1);
        assert!(preamble_correlation(&s, x, 81).is_none());
    }

    #[test]
    fn preamble_statistic_variance_matches_monte_carlo() {
        let pre = Preamble::standard();
        let x = pre.symbols();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let var = 2.0;
        let trials = 2000;
        let mean: f64 = (0..trials)
            .map(|_| {
                let s: Vec<Complex64> = (0..x.len()).map(|_| complex_normal(&mut rng, var)).collect();
                preamble_correlation(&s, x, 0).unwrap()
            })
            .sum::<f64>()
            / trials as f64;
        let want = preamble_statistic_variance(var, x.len());
        assert!((mean / want - 1.0).abs() < 0.1, "{mean} vs {want}");
    }
}
