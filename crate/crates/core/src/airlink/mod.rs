//! Propagation layer: arrays and beams, channel gains, link budget and
//! synthesis of received radar streams.

pub mod array;
pub mod budget;
pub mod channel;
pub mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Speed of light (m/s).
pub const C: f64 = 299_792_458.0;

/// Point target seen by the monostatic radar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub range: f64,
    /// Radial velocity (m/s); positive values give positive Doppler.
    pub velocity: f64,
    #[serde(default = "default_rcs")]
    pub rcs_dbsm: f64,
    #[serde(default = "broadside")]
    pub azimuth_deg: f64,
    #[serde(default = "broadside")]
    pub elevation_deg: f64,
}

fn default_rcs() -> f64 {
    10.0
}

fn broadside() -> f64 {
    90.0
}

impl Target {
    pub fn new(range: f64, velocity: f64) -> Self {
        Self { range, velocity, rcs_dbsm: default_rcs(), azimuth_deg: 90.0, elevation_deg: 90.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return invalid(format!("target range must be positive, got {}", self.range));
        }
        Ok(())
    }

    /// Round-trip delay `2ρ/c`.
    pub fn delay(&self) -> f64 {
        2.0 * self.range / C
    }

    /// Doppler shift `2v/λ`.
    pub fn doppler(&self, wavelength: f64) -> f64 {
        2.0 * self.velocity / wavelength
    }

    pub fn rcs_linear(&self) -> f64 {
        10f64.powf(self.rcs_dbsm / 10.0)
    }
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
