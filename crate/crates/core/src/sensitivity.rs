//! Closed-form radiometric sensitivity (minimum detectable temperature).
//!
//! All three forms share `T_sys / √(Δν τ)` with the post-detection bandwidth
//! taken as `1/(2τ)`. A CMI visibility pays a factor `N` because every
//! element's noise reaches the single detector. Valid while `NΔT ≪ N T_sys`.

use crate::error::SensitivityError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiometricParams {
    pub n_elements: f64,
    pub t_sys: f64,
    pub bandwidth_hz: f64,
    pub tau_s: f64,
    pub pixels: f64,
}

impl RadiometricParams {
    pub fn validate(&self) -> Result<(), SensitivityError> {
        positive("n_elements", self.n_elements)?;
        positive("t_sys", self.t_sys)?;
        positive("bandwidth", self.bandwidth_hz)?;
        positive("tau", self.tau_s)?;
        positive("pixels", self.pixels)
    }

    /// Sensitivity constant `K_e = N` of a CMI visibility.
    pub fn k_e(&self) -> f64 {
        self.n_elements
    }

    pub fn delta_t_vis(&self) -> Result<f64, SensitivityError> {
        delta_t_vis(self.n_elements, self.t_sys, self.bandwidth_hz, self.tau_s)
    }

    pub fn delta_t_image(&self) -> Result<f64, SensitivityError> {
        delta_t_image(self.t_sys, self.pixels, self.bandwidth_hz, self.tau_s)
    }

    pub fn delta_t_image_cmi(&self) -> Result<f64, SensitivityError> {
        delta_t_image_cmi(self.n_elements, self.t_sys, self.pixels, self.bandwidth_hz, self.tau_s)
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), SensitivityError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SensitivityError::NonPositive { name, value })
    }
}

fn radiometer(t_sys: f64, bw: f64, tau: f64) -> Result<f64, SensitivityError> {
    positive("t_sys", t_sys)?;
    positive("bandwidth", bw)?;
    positive("tau", tau)?;
    Ok(t_sys / (bw * tau).sqrt())
}

/// `ΔT_vis = N T_sys / √(Δν τ)`.
pub fn delta_t_vis(n: f64, t_sys: f64, bw: f64, tau: f64) -> Result<f64, SensitivityError> {
    positive("n_elements", n)?;
    Ok(n * radiometer(t_sys, bw, tau)?)
}

/// `ΔT_image = T_sys √N_p / √(Δν τ)`.
pub fn delta_t_image(t_sys: f64, pixels: f64, bw: f64, tau: f64) -> Result<f64, SensitivityError> {
    positive("pixels", pixels)?;
    Ok(pixels.sqrt() * radiometer(t_sys, bw, tau)?)
}

/// `ΔT_image,CMI = N T_sys √N_p / √(Δν τ)`.
pub fn delta_t_image_cmi(n: f64, t_sys: f64, pixels: f64, bw: f64, tau: f64) -> Result<f64, SensitivityError> {
    positive("n_elements", n)?;
    Ok(n * delta_t_image(t_sys, pixels, bw, tau)?)
}
