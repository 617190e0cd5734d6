//! Large- and small-scale channel gains.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::array::{upa_steering, ArrayConfig, Beams, Matrix};
use super::Target;

/// Circular complex Gaussian sample with variance `var`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Unit-modulus coefficient with uniform phase.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())
}

/// One-way close-in free-space reference gain `λ²/((4π)²·ρ^PL)`.
pub fn comm_path_gain(wavelength: f64, distance: f64, pl_exponent: f64) -> f64 {
    wavelength * wavelength / ((4.0 * PI).powi(2) * distance.powf(pl_exponent))
}

/// Two-way radar gain `λ²·σ/(64π³·ρ⁴)`.
pub fn radar_path_gain(target: &Target, wavelength: f64) -> f64 {
    wavelength * wavelength * target.rcs_linear() / (64.0 * PI.powi(3) * target.range.powi(4))
}

/// Frequency-flat Rician link from the source to the recipient vehicle.
///
/// The recipient's receive steering vector is the conjugate of the source's,
/// which makes the communication RX beam the conjugate of the radar RX beam.
#[derive(Debug, Clone)]
pub struct CommLink {
    pub array: ArrayConfig,
    pub beams: Beams,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// Large-scale gain `G_com`.
    pub path_gain: f64,
    /// Rician factor (linear).
    pub rician_k: f64,
    pub doppler: f64,
    pub frame_interval: f64,
    /// LOS coefficient, unit modulus.
    pub alpha0: Complex64,
}

impl CommLink {
    /// `H_LOS[m] = √(N_TX N_RX)·α₀·e^{j2πν₀mKTs}·a_RX·a_TX^H`.
    pub fn los_matrix(&self, m: usize) -> Matrix {
        let a_tx = upa_steering(self.azimuth_deg, self.elevation_deg, &self.array);
        let a_rx: Vec<Complex64> = a_tx.iter().map(|v| v.conj()).collect();
        let n = self.array.n_elements() as f64;
        let rot = Complex64::from_polar(1.0, 2.0 * PI * self.doppler * m as f64 * self.frame_interval);
        Matrix::outer(&a_rx, &a_tx, self.alpha0 * rot * n)
    }

    /// Rician mix of the LOS matrix and an i.i.d. `CN(0,1)` matrix.
    pub fn matrix<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Matrix {
        let mut h = self.los_matrix(m);
        let k = self.rician_k;
        let (wl, wn) = if k.is_infinite() { (1.0, 0.0) } else { ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt()) };
        for v in h.data.iter_mut() {
            *v *= wl;
            if wn > 0.0 {
                *v += complex_normal(rng, 1.0) * wn;
            }
        }
        h
    }

    /// `h_com[m] = √G_com·f_RX,com^H·H_com[m]·f_TX`.
    pub fn coefficient<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Complex64 {
        self.matrix(m, rng).bilinear(&self.beams.f_rx_com, &self.beams.f_tx) * self.path_gain.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airlink::array::{select_beams, DftCodebook};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn link(k: f64) -> CommLink {
        let array = ArrayConfig::default();
        let beams = select_beams(&array, &DftCodebook::for_array(&array), 90.0, 90.0).unwrap();
        CommLink {
            array,
            beams,
            azimuth_deg: 90.0,
            elevation_deg: 90.0,
            path_gain: comm_path_gain(0.005, 50.0, 2.0),
            rician_k: k,
            doppler: 4000.0,
            frame_interval: 12800.0 / 1.76e9,
            alpha0: Complex64::new(0.0, 1.0),
        }
    }

    #[test]
    fn radar_gain_formula() {
        let t = Target::new(50.0, 0.0);
        let g = radar_path_gain(&t, 0.005);
        let want = 2.5e-4 / (64.0 * PI.powi(3) * 6.25e6);
        assert!((g / want - 1.0).abs() < 1e-12);
        assert!((g - 2.0e-14).abs() < 0.05e-14);
        let far = Target::new(100.0, 0.0);
        assert!((g / radar_path_gain(&far, 0.005) - 16.0).abs() < 1e-9);
        let big = Target { rcs_dbsm: 13.0, ..t };
        assert!((10.0 * (radar_path_gain(&big, 0.005) / g).log10() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn los_limit_is_deterministic() {
        let l = link(f64::INFINITY);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h0 = l.coefficient(0, &mut rng);
        assert!((h0.norm() - l.path_gain.sqrt() * 16.0).abs() < 1e-12 * h0.norm());
        let h1 = l.coefficient(1, &mut rng);
        let step = (h1 * h0.conj()).arg();
        let want = 2.0 * PI * l.doppler * l.frame_interval;
        let diff = (step - want).rem_euclid(2.0 * PI);
        assert!(diff.min(2.0 * PI - diff) < 1e-9);
    }

    #[test]
    fn rician_matrix_has_expected_power() {
        let l = link(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let mean: f64 = (0..n).map(|m| l.matrix(m, &mut rng).frobenius_sq()).sum::<f64>() / n as f64;
        assert!((mean / 256.0 - 1.0).abs() < 0.03, "{mean}");
    }
}
