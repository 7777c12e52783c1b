//! Parametric coating Brownian and substrate thermorefractive noise.
//!
//! Absolute levels are model coefficients referenced to a single-doublet
//! coating at `f_ref`; see `optimize::calibrate` for fitting them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::CavityConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalNoiseModel {
    /// Brownian ASD of a one-layer coating at `f_ref`, m/√Hz.
    pub brownian_ref_asd: f64,
    pub f_ref: f64,
    pub brownian_slope: f64,
    /// IETM substrate thermorefractive ASD at `f_ref` for light that fully
    /// traverses the substrate, m/√Hz.
    pub thermorefractive_ref_asd: f64,
    pub tr_slope: f64,
    /// Physical thickness of one low-index layer relative to one high-index layer.
    pub layer_thickness_ratio: f64,
}

impl Default for ThermalNoiseModel {
    fn default() -> Self {
        Self {
            brownian_ref_asd: 1e-21,
            f_ref: 100.0,
            brownian_slope: 0.5,
            thermorefractive_ref_asd: 1e-21,
            tr_slope: 0.5,
            layer_thickness_ratio: 1.0,
        }
    }
}

impl ThermalNoiseModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f_ref", self.f_ref),
            ("layer_thickness_ratio", self.layer_thickness_ratio),
        ];
        let nonnegative = [
            ("brownian_ref_asd", self.brownian_ref_asd),
            ("thermorefractive_ref_asd", self.thermorefractive_ref_asd),
            ("brownian_slope", self.brownian_slope),
            ("tr_slope", self.tr_slope),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in nonnegative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Copy with both reference ASDs multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            brownian_ref_asd: self.brownian_ref_asd * factor,
            thermorefractive_ref_asd: self.thermorefractive_ref_asd * factor,
            ..*self
        }
    }

    /// Coating thickness in units of one high-index layer. `n` high-index
    /// layers carry `n − 1` low-index layers; below one layer the thickness
    /// interpolates linearly to zero.
    pub fn coating_thickness(&self, n: f64) -> f64 {
        n + (n - 1.0).max(0.0) * self.layer_thickness_ratio
    }
}

fn check_frequency(op: &'static str, f: f64) -> Result<()> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("frequency {f} Hz must be positive")))
    }
}

/// Coating Brownian ASD of an `n`-layer stack at `f`.
pub fn brownian_coating_asd(model: &ThermalNoiseModel, n: u32, f: f64) -> Result<f64> {
    brownian_coating_asd_continuous(model, f64::from(n), f)
}

/// As [`brownian_coating_asd`] for a fractional layer count.
pub fn brownian_coating_asd_continuous(model: &ThermalNoiseModel, n: f64, f: f64) -> Result<f64> {
    check_frequency("brownian_coating_asd", f)?;
    if !(n >= 0.0) {
        return Err(Error::domain("brownian_coating_asd", format!("layer count {n} < 0")));
    }
    // thickness(1) = 1, so the ratio needs no explicit normalization
    let thickness = model.coating_thickness(n);
    Ok(model.brownian_ref_asd * thickness.sqrt() * (model.f_ref / f).powf(model.brownian_slope))
}

pub fn thermorefractive_asd(model: &ThermalNoiseModel, f: f64) -> Result<f64> {
    check_frequency("thermorefractive_asd", f)?;
    Ok(model.thermorefractive_ref_asd * (model.f_ref / f).powf(model.tr_slope))
}

/// The two cavity-sensed thermal terms that the control loop can remove.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessThermal {
    pub eetm_coating: f64,
    pub thermorefractive: f64,
}

impl ExcessThermal {
    pub fn total(&self) -> f64 {
        (self.eetm_coating * self.eetm_coating + self.thermorefractive * self.thermorefractive).sqrt()
    }
}

/// EETM coating noise and IETM substrate thermorefractive noise as they
/// appear in the carrier reflected off the compound mirror. Both phases
/// are picked up inside the cavity and share the leakage weight.
pub fn excess_thermal_components(model: &ThermalNoiseModel, cavity: &CavityConfig, f: f64) -> Result<ExcessThermal> {
    let weight = cavity.eetm_sensing_factor();
    let eetm = brownian_coating_asd_continuous(model, cavity.eetm.coating_layers(), f)?;
    let tr = thermorefractive_asd(model, f)?;
    Ok(ExcessThermal {
        eetm_coating: weight * eetm,
        thermorefractive: weight * tr,
    })
}

pub fn excess_thermal_asd(model: &ThermalNoiseModel, cavity: &CavityConfig, f: f64) -> Result<f64> {
    excess_thermal_components(model, cavity, f).map(|c| c.total())
}

/// IETM coating noise plus the excess thermal noise: the uncontrolled
/// thermal budget of the compound mirror.
pub fn total_thermal_asd(model: &ThermalNoiseModel, cavity: &CavityConfig, f: f64) -> Result<f64> {
    let ietm = brownian_coating_asd_continuous(model, cavity.ietm.coating_layers(), f)?;
    let excess = excess_thermal_asd(model, cavity, f)?;
    Ok((ietm * ietm + excess * excess).sqrt())
}
