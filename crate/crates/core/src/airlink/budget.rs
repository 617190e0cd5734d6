//! Link budget for the communication and radar links versus distance.

use serde::{Deserialize, Serialize};

use super::channel::{comm_path_gain, radar_path_gain};
use super::{db_to_lin, lin_to_db, Target};
use crate::error::{invalid, Result};

/// Regulatory EIRP ceiling (dBm).
pub const MAX_EIRP_DBM: f64 = 43.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkBudget {
    /// Total radiated power including the TX array gain.
    pub eirp_dbm: f64,
    pub noise_figure_db: f64,
    pub pl_exponent: f64,
    pub rician_k_db: f64,
    /// Noise bandwidth (Hz).
    pub bandwidth: f64,
    pub wavelength: f64,
    pub rcs_dbsm: f64,
    /// Receive array size; its beamforming gain applies to both links.
    pub n_rx: usize,
    pub n_tx: usize,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            eirp_dbm: 43.0,
            noise_figure_db: 6.0,
            pl_exponent: 2.0,
            rician_k_db: 10.0,
            bandwidth: 2.2e9,
            wavelength: 0.005,
            rcs_dbsm: 10.0,
            n_rx: 16,
            n_tx: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPoint {
    pub distance: f64,
    pub comm_snr_db: f64,
    pub radar_scnr_db: f64,
}

impl LinkBudget {
    pub fn exceeds_regulatory_eirp(&self) -> bool {
        self.eirp_dbm > MAX_EIRP_DBM
    }

    /// Thermal noise `−174 dBm/Hz + 10·log10(W) + NF`.
    pub fn noise_floor_dbm(&self) -> f64 {
        -174.0 + lin_to_db(self.bandwidth) + self.noise_figure_db
    }

    pub fn noise_floor_mw(&self) -> f64 {
        db_to_lin(self.noise_floor_dbm())
    }

    /// Per-element transmit power: EIRP minus the TX array gain.
    pub fn tx_power_dbm(&self) -> f64 {
        self.eirp_dbm - lin_to_db(self.n_tx as f64)
    }

    pub fn rx_array_gain_db(&self) -> f64 {
        lin_to_db(self.n_rx as f64)
    }

    pub fn comm_snr_db(&self, distance: f64) -> f64 {
        self.eirp_dbm + lin_to_db(comm_path_gain(self.wavelength, distance, self.pl_exponent)) + self.rx_array_gain_db()
            - self.noise_floor_dbm()
    }

    /// Two-way SCNR; the radar path loss always follows the ρ⁴ law.
    pub fn radar_scnr_db(&self, distance: f64) -> f64 {
        let t = Target { rcs_dbsm: self.rcs_dbsm, ..Target::new(distance, 0.0) };
        self.eirp_dbm + lin_to_db(radar_path_gain(&t, self.wavelength)) + self.rx_array_gain_db()
            - self.noise_floor_dbm()
    }
}

pub fn link_budget_sweep(lb: &LinkBudget, distances: &[f64]) -> Result<Vec<LinkPoint>> {
    if let Some(d) = distances.iter().find(|d| !(**d > 0.0)) {
        return invalid(format!("distance must be positive, got {d}"));
    }
    Ok(distances
        .iter()
        .map(|&d| LinkPoint { distance: d, comm_snr_db: lb.comm_snr_db(d), radar_scnr_db: lb.radar_scnr_db(d) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_floor() {
        let lb = LinkBudget::default();
        assert!((lb.noise_floor_dbm() - (-174.0 + 93.424 + 6.0)).abs() < 1e-3);
        assert!(!lb.exceeds_regulatory_eirp());
        assert!(LinkBudget { eirp_dbm: 45.0, ..lb }.exceeds_regulatory_eirp());
    }

    #[test]
    fn slopes_and_ordering() {
        for pl in [2.0, 2.5] {
            let lb = LinkBudget { pl_exponent: pl, ..Default::default() };
            let pts = link_budget_sweep(&lb, &[10.0, 20.0, 100.0, 200.0, 1000.0]).unwrap();
            assert!((pts[0].comm_snr_db - pts[1].comm_snr_db - 10.0 * pl * 2f64.log10()).abs() < 1e-9);
            assert!((pts[0].radar_scnr_db - pts[2].radar_scnr_db - 40.0).abs() < 1e-9);
            assert!(pts.iter().all(|p| p.comm_snr_db > p.radar_scnr_db));
        }
        assert!(link_budget_sweep(&LinkBudget::default(), &[0.0]).is_err());
    }
}
