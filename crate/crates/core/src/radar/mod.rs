//! Radar receiver: CFAR detection, range and velocity estimation, the
//! delay-Doppler map and the associated bounds and resolutions.

pub mod crlb;
pub mod detect;
pub mod estimate;
pub mod map;

use crate::airlink::C;
use crate::error::{invalid, Result};

/// Range and velocity resolution `(c/(2W), λ/(2T_int))`.
pub fn resolutions(bandwidth: f64, t_int: f64, wavelength: f64) -> Result<(f64, f64)> {
    if !(bandwidth > 0.0 && t_int > 0.0 && wavelength > 0.0) {
        return invalid("bandwidth, integration time and wavelength must be positive");
    }
    Ok((C / (2.0 * bandwidth), wavelength / (2.0 * t_int)))
}
