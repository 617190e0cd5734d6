//! Ambiguity function, data rate and Monte Carlo summary statistics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Two-sided 95% normal quantile used for all confidence half-widths.
pub const Z95: f64 = 1.959_963_984_540_054;

/// `|Σ_n x[n]·x*[n−lag]·e^{j2πνnTs}|` for every `(lag, ν)`; rows follow
/// `lags`, columns follow `dopplers`.
pub fn ambiguity_function(x: &[Complex64], lags: &[i64], dopplers: &[f64], ts: f64) -> Result<Vec<Vec<f64>>> {
    check_doppler_grid(dopplers, ts)?;
    Ok(lags.iter().map(|&lag| dopplers.iter().map(|&nu| lagged_product(x, lag, nu, ts).norm()).collect()).collect())
}

/// Ambiguity of a complementary pair sent back to back and processed with
/// the pair correlator: `|AF_a(lag, ν) + e^{j2πνNTs}·AF_b(lag, ν)|`.
pub fn pair_ambiguity(
    a: &[Complex64],
    b: &[Complex64],
    lags: &[i64],
    dopplers: &[f64],
    ts: f64,
) -> Result<Vec<Vec<f64>>> {
    check_doppler_grid(dopplers, ts)?;
    if a.len() != b.len() || a.is_empty() {
        return invalid("pair sequences must have equal nonzero length");
    }
    let n = a.len() as f64;
    Ok(lags
        .iter()
        .map(|&lag| {
            dopplers
                .iter()
                .map(|&nu| {
                    let shift = Complex64::from_polar(1.0, 2.0 * PI * nu * n * ts);
                    (lagged_product(a, lag, nu, ts) + shift * lagged_product(b, lag, nu, ts)).norm()
                })
                .collect()
        })
        .collect())
}

fn check_doppler_grid(dopplers: &[f64], ts: f64) -> Result<()> {
    let lim = 1.0 / (2.0 * ts);
    if let Some(nu) = dopplers.iter().find(|nu| nu.abs() > lim) {
        return invalid(format!("Doppler {nu} Hz outside ±1/(2Ts) = ±{lim} Hz"));
    }
    Ok(())
}

fn lagged_product(x: &[Complex64], lag: i64, nu: f64, ts: f64) -> Complex64 {
    let n = x.len() as i64;
    let lo = lag.max(0);
    let hi = n.min(n + lag);
    (lo..hi)
        .map(|i| {
            x[i as usize] * x[(i - lag) as usize].conj() * Complex64::from_polar(1.0, 2.0 * PI * nu * i as f64 * ts)
        })
        .sum()
}

/// Communication rate in bit/s:
/// `R = (M·K_CD·Ts/T)·E[log2(1 + ζ_com)]/Ts`, the expectation taken as the
/// sample mean over the supplied per-frame SNRs (linear).
pub fn data_rate(m: usize, k_cd: usize, ts: f64, cpi: f64, snr: &[f64]) -> Result<f64> {
    if !(ts > 0.0 && cpi > 0.0) {
        return invalid("symbol period and CPI must be positive");
    }
    if k_cd == 0 {
        return Ok(0.0);
    }
    if snr.is_empty() {
        return invalid("need at least one SNR sample");
    }
    let spectral = snr.iter().map(|z| (1.0 + z).log2()).sum::<f64>() / snr.len() as f64;
    Ok(m as f64 * k_cd as f64 * ts / cpi * spectral / ts)
}

/// Detection rate with its binomial half-width.
pub fn proportion(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, Z95 * (p * (1.0 - p) / n as f64).sqrt())
}

/// Sample mean with its half-width.
pub fn mean_hw(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Mean squared error of `errors` with the half-width of that mean.
pub fn mse_hw(errors: &[f64]) -> (f64, f64) {
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    mean_hw(&sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golay::generate_golay_pair;

    const TS: f64 = 1.0 / 1.76e9;

    #[test]
    fn pair_zero_doppler_is_a_delta() {
        let p = generate_golay_pair(512).unwrap();
        let (a, b) = (p.a.to_complex(), p.b.to_complex());
        let lags: Vec<i64> = (-511..=511).collect();
        let af = pair_ambiguity(&a, &b, &lags, &[0.0], TS).unwrap();
        for (i, row) in af.iter().enumerate() {
            let want = if lags[i] == 0 { 1024.0 } else { 0.0 };
            assert!((row[0] - want).abs() < 1e-9, "lag {}", lags[i]);
        }
        // The concatenated waveform alone has sidelobes.
        let cat: Vec<Complex64> = a.iter().chain(&b).copied().collect();
        let plain = ambiguity_function(&cat, &lags, &[0.0], TS).unwrap();
        assert!(plain.iter().enumerate().any(|(i, r)| lags[i] != 0 && r[0] > 1.0));
        assert!((plain[511][0] - 1024.0).abs() < 1e-9);
    }

    #[test]
    fn pair_peak_decays_with_doppler() {
        let p = generate_golay_pair(512).unwrap();
        let (a, b) = (p.a.to_complex(), p.b.to_complex());
        let nus: Vec<f64> = [0.0, 2e5, 1e6, 5e6].to_vec();
        let af = pair_ambiguity(&a, &b, &[0], &nus, TS).unwrap();
        for w in af[0].windows(2) {
            assert!(w[1] < w[0]);
        }
        // Zero-lag sidelobes of the pair appear once Doppler is present.
        let side = pair_ambiguity(&a, &b, &[7], &[0.0, 5e6], TS).unwrap();
        assert!(side[0][0] < 1e-9 && side[0][1] > 1e-3);
        assert!(pair_ambiguity(&a, &b, &[0], &[1e9], TS).is_err());
    }

    #[test]
    fn data_rate_formula() {
        assert_eq!(data_rate(4, 0, TS, 1e-4, &[]).unwrap(), 0.0);
        // Full duty: R = log2(1 + ζ)/Ts.
        let r = data_rate(2, 50_000, TS, 100_000.0 * TS, &[15.0, 15.0]).unwrap();
        assert!((r - 4.0 * 1.76e9).abs() < 1e-3);
        let half = data_rate(2, 25_000, TS, 100_000.0 * TS, &[3.0, 15.0]).unwrap();
        assert!((half - 0.5 * 3.0 * 1.76e9).abs() < 1e-3);
    }

    #[test]
    fn half_widths() {
        let (p, hw) = proportion(50, 100);
        assert_eq!(p, 0.5);
        assert!((hw - Z95 * 0.05).abs() < 1e-12);
        let (m, hw) = mean_hw(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((hw - Z95 * 1.0).abs() < 1e-12);
        assert_eq!(mse_hw(&[-2.0, 2.0]).0, 4.0);
    }
}
