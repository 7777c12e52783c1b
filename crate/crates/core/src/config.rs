//! Flat `key = value` run configuration (TOML subset).
//!
//! ```toml
//! ietm_layers = 1              # or ietm_reflectivity = 0.49
//! ietm_loss = 5e-5
//! eetm_layers = 15             # omit to solve from loss_budget
//! eetm_loss = 5e-5
//! loss_budget = 0.5
//! reference_single_mirror_loss = 5e-5
//! brownian_ref_asd = 3e-21
//! f_ref = 100.0
//! brownian_slope = 0.5
//! thermorefractive_ref_asd = 1e-24
//! tr_slope = 0.5
//! layer_thickness_ratio = 1.0
//! carrier_power = 1e5
//! laser_angular_frequency = 1.77e15
//! mirror_mass = 40.0
//! scheme = "phase"             # none | phase | variational | variational-ideal
//! sideband_ratio = "optimized" # or a positive number A1s/A1c
//! zeta = 0.0                   # readout angle for scheme = "variational"
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optics::{CavityConfig, MirrorSpec};
use crate::optimize::MirrorLosses;
use crate::quantum::{ControlScheme, QuantumParams, Readout, SidebandRatio, HBAR, SPEED_OF_LIGHT};
use crate::thermal::ThermalNoiseModel;

/// Directory searched for relative `--config` paths and for the default
/// `antires.toml`.
pub const CONFIG_DIR_ENV: &str = "ANTIRES_CONFIG_DIR";
pub const DEFAULT_CONFIG_NAME: &str = "antires.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    None,
    Phase,
    Variational,
    VariationalIdeal,
}

impl SchemeName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Phase => "phase",
            Self::Variational => "variational",
            Self::VariationalIdeal => "variational-ideal",
        }
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "phase" => Ok(Self::Phase),
            "variational" => Ok(Self::Variational),
            "variational-ideal" => Ok(Self::VariationalIdeal),
            other => Err(Error::InvalidInput(format!(
                "unknown scheme '{other}' (expected none, phase, variational, variational-ideal)"
            ))),
        }
    }
}

/// `"optimized"` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSetting(pub SidebandRatio);

impl FromStr for RatioSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "optimized" {
            return Ok(Self(SidebandRatio::Optimized));
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0 && v.is_finite())
            .map(|v| Self(SidebandRatio::Fixed(v)))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "sideband ratio must be 'optimized' or a positive number, got '{s}'"
                ))
            })
    }
}

impl Serialize for RatioSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            SidebandRatio::Optimized => s.serialize_str("optimized"),
            SidebandRatio::Fixed(v) => s.serialize_f64(v),
        }
    }
}

impl<'de> Deserialize<'de> for RatioSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Num(v) => v.to_string(),
            Raw::Int(v) => v.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ietm_layers: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ietm_reflectivity: Option<f64>,
    pub ietm_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eetm_layers: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eetm_reflectivity: Option<f64>,
    pub eetm_loss: f64,
    pub loss_budget: f64,
    pub reference_single_mirror_loss: f64,

    pub brownian_ref_asd: f64,
    pub f_ref: f64,
    pub brownian_slope: f64,
    pub thermorefractive_ref_asd: f64,
    pub tr_slope: f64,
    pub layer_thickness_ratio: f64,

    pub carrier_power: f64,
    pub laser_angular_frequency: f64,
    pub mirror_mass: f64,

    pub scheme: SchemeName,
    pub sideband_ratio: RatioSetting,
    pub zeta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_parts(
            &ThermalNoiseModel::default(),
            &QuantumParams::default(),
            &MirrorLosses::default(),
            0.5,
        )
    }
}

impl RunConfig {
    pub fn from_parts(
        model: &ThermalNoiseModel,
        params: &QuantumParams,
        losses: &MirrorLosses,
        loss_budget: f64,
    ) -> Self {
        Self {
            ietm_layers: None,
            ietm_reflectivity: None,
            ietm_loss: losses.ietm,
            eetm_layers: None,
            eetm_reflectivity: None,
            eetm_loss: losses.eetm,
            loss_budget,
            reference_single_mirror_loss: losses.reference,
            brownian_ref_asd: model.brownian_ref_asd,
            f_ref: model.f_ref,
            brownian_slope: model.brownian_slope,
            thermorefractive_ref_asd: model.thermorefractive_ref_asd,
            tr_slope: model.tr_slope,
            layer_thickness_ratio: model.layer_thickness_ratio,
            carrier_power: params.carrier_power,
            laser_angular_frequency: params.laser_angular_frequency,
            mirror_mass: params.mirror_mass,
            scheme: SchemeName::Phase,
            sideband_ratio: RatioSetting(SidebandRatio::Optimized),
            zeta: 0.0,
        }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Canonical rendering: fixed key order, floats in shortest
    /// round-trip scientific notation.
    pub fn to_toml(&self) -> String {
        let mut lines: Vec<String> = Vec::new();
        let f = |key: &str, v: f64| format!("{key} = {v:e}");
        if let Some(n) = self.ietm_layers {
            lines.push(format!("ietm_layers = {n}"));
        }
        if let Some(r) = self.ietm_reflectivity {
            lines.push(f("ietm_reflectivity", r));
        }
        lines.push(f("ietm_loss", self.ietm_loss));
        if let Some(n) = self.eetm_layers {
            lines.push(format!("eetm_layers = {n}"));
        }
        if let Some(r) = self.eetm_reflectivity {
            lines.push(f("eetm_reflectivity", r));
        }
        lines.extend([
            f("eetm_loss", self.eetm_loss),
            f("loss_budget", self.loss_budget),
            f("reference_single_mirror_loss", self.reference_single_mirror_loss),
            f("brownian_ref_asd", self.brownian_ref_asd),
            f("f_ref", self.f_ref),
            f("brownian_slope", self.brownian_slope),
            f("thermorefractive_ref_asd", self.thermorefractive_ref_asd),
            f("tr_slope", self.tr_slope),
            f("layer_thickness_ratio", self.layer_thickness_ratio),
            f("carrier_power", self.carrier_power),
            f("laser_angular_frequency", self.laser_angular_frequency),
            f("mirror_mass", self.mirror_mass),
            format!("scheme = \"{}\"", self.scheme.as_str()),
            match self.sideband_ratio.0 {
                SidebandRatio::Optimized => "sideband_ratio = \"optimized\"".to_string(),
                SidebandRatio::Fixed(v) => f("sideband_ratio", v),
            },
            f("zeta", self.zeta),
        ]);
        lines.join("\n") + "\n"
    }

    /// SHA-256 of the canonical rendering, so overrides are reflected.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn thermal(&self) -> ThermalNoiseModel {
        ThermalNoiseModel {
            brownian_ref_asd: self.brownian_ref_asd,
            f_ref: self.f_ref,
            brownian_slope: self.brownian_slope,
            thermorefractive_ref_asd: self.thermorefractive_ref_asd,
            tr_slope: self.tr_slope,
            layer_thickness_ratio: self.layer_thickness_ratio,
        }
    }

    pub fn quantum(&self) -> QuantumParams {
        QuantumParams {
            carrier_power: self.carrier_power,
            laser_angular_frequency: self.laser_angular_frequency,
            mirror_mass: self.mirror_mass,
            hbar: HBAR,
            light_speed: SPEED_OF_LIGHT,
        }
    }

    pub fn losses(&self) -> MirrorLosses {
        MirrorLosses {
            ietm: self.ietm_loss,
            eetm: self.eetm_loss,
            reference: self.reference_single_mirror_loss,
        }
    }

    pub fn control_scheme(&self) -> ControlScheme {
        let readout = match self.scheme {
            SchemeName::None => Readout::NoControl,
            SchemeName::Phase => Readout::PhaseQuadrature,
            SchemeName::Variational => Readout::VariationalFixed { zeta: self.zeta },
            SchemeName::VariationalIdeal => Readout::VariationalIdeal,
        };
        ControlScheme {
            readout,
            ratio: self.sideband_ratio.0,
        }
    }

    fn mirror(layers: Option<u32>, reflectivity: Option<f64>, loss: f64, which: &str) -> Result<Option<MirrorSpec>> {
        match (layers, reflectivity) {
            (Some(_), Some(_)) => Err(Error::InvalidInput(format!(
                "set either {which}_layers or {which}_reflectivity, not both"
            ))),
            (Some(n), None) => MirrorSpec::from_layers(n, loss).map(Some),
            (None, Some(r)) => MirrorSpec::from_reflectivity(r, loss).map(Some),
            (None, None) => Ok(None),
        }
    }

    /// Builds the cavity, solving the EETM coating when none is given.
    pub fn cavity(&self) -> Result<CavityConfig> {
        let ietm = Self::mirror(self.ietm_layers, self.ietm_reflectivity, self.ietm_loss, "ietm")?
            .ok_or_else(|| Error::InvalidInput("config needs ietm_layers or ietm_reflectivity".into()))?;
        match Self::mirror(self.eetm_layers, self.eetm_reflectivity, self.eetm_loss, "eetm")? {
            Some(eetm) => CavityConfig::new(ietm, eetm, self.loss_budget, self.reference_single_mirror_loss),
            None => CavityConfig::with_solved_eetm(
                ietm,
                self.eetm_loss,
                self.loss_budget,
                self.reference_single_mirror_loss,
            ),
        }
    }

    /// Checks every coefficient; physics errors are left to the engine.
    pub fn validate(&self) -> Result<()> {
        self.thermal().validate()?;
        self.quantum().validate()?;
        self.control_scheme().validate()?;
        for (name, v) in [
            ("ietm_loss", self.ietm_loss),
            ("eetm_loss", self.eetm_loss),
            ("reference_single_mirror_loss", self.reference_single_mirror_loss),
            ("loss_budget", self.loss_budget),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Resolves the configuration file: an explicit path (relative paths fall
/// back to the config directory), else `antires.toml` in that directory.
pub fn resolve_config_path(explicit: Option<&Path>, config_dir: Option<&Path>) -> Result<PathBuf> {
    match (explicit, config_dir) {
        (Some(p), dir) => {
            if p.exists() || p.is_absolute() {
                return Ok(p.to_path_buf());
            }
            if let Some(candidate) = dir.map(|d| d.join(p)).filter(|c| c.exists()) {
                return Ok(candidate);
            }
            Ok(p.to_path_buf())
        }
        (None, Some(dir)) => Ok(dir.join(DEFAULT_CONFIG_NAME)),
        (None, None) => Err(Error::InvalidInput(format!(
            "no --config given and {CONFIG_DIR_ENV} is not set"
        ))),
    }
}
