//! Quantum noise of the sideband-controlled end-mirror cavity in the
//! two-photon picture.
//!
//! The carrier phase quadrature after feedback reads
//!
//! ```text
//! z2 = a2c − r̃K a1c + (√(2K) r̃ / x_SQL) x
//!      + g (a2s + a1s tan ζ) − r̃K ρ a1s,      g = c / ρ,  c = ((1 − r)/(1 + r))²
//! ```
//!
//! with `ρ = A1s/A1c` the sideband-to-carrier amplitude ratio. Phase
//! quadrature control is the `ζ = 0` case. All vacuum inputs are unit
//! variance and mutually uncorrelated; losses and EETM transmission are
//! neglected.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::thermorefractive_sensing_ratio;

/// Reduced Planck constant, J·s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumParams {
    /// Carrier power incident on the IETM, W.
    pub carrier_power: f64,
    /// Laser angular frequency ω0, rad/s.
    pub laser_angular_frequency: f64,
    /// IETM mass, kg.
    pub mirror_mass: f64,
    pub hbar: f64,
    pub light_speed: f64,
}

impl Default for QuantumParams {
    fn default() -> Self {
        Self {
            carrier_power: 1e5,
            laser_angular_frequency: 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / 1.064e-6,
            mirror_mass: 40.0,
            hbar: HBAR,
            light_speed: SPEED_OF_LIGHT,
        }
    }
}

impl QuantumParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("carrier_power", self.carrier_power),
            ("laser_angular_frequency", self.laser_angular_frequency),
            ("mirror_mass", self.mirror_mass),
            ("hbar", self.hbar),
            ("light_speed", self.light_speed),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn x_sql(&self, omega: f64) -> Result<f64> {
        sql_with(self.hbar, self.mirror_mass, omega)
    }
}

/// Which quadrature of the sideband output is fed back to the EETM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Readout {
    NoControl,
    PhaseQuadrature,
    /// Rotated readout at a fixed angle (radians, in (−π/2, π/2)).
    VariationalFixed {
        zeta: f64,
    },
    /// Readout angle re-tuned at every measurement frequency.
    VariationalIdeal,
}

/// Sideband-to-carrier amplitude ratio `A1s / A1c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SidebandRatio {
    /// Chosen to minimise the control noise at each frequency.
    Optimized,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlScheme {
    pub readout: Readout,
    pub ratio: SidebandRatio,
}

impl ControlScheme {
    pub const NONE: ControlScheme = ControlScheme {
        readout: Readout::NoControl,
        ratio: SidebandRatio::Optimized,
    };

    pub fn phase(ratio: SidebandRatio) -> Self {
        Self {
            readout: Readout::PhaseQuadrature,
            ratio,
        }
    }

    pub fn is_controlled(&self) -> bool {
        !matches!(self.readout, Readout::NoControl)
    }

    pub fn validate(&self) -> Result<()> {
        if let Readout::VariationalFixed { zeta } = self.readout {
            if !(zeta.abs() < FRAC_PI_2) {
                return Err(Error::InvalidInput(format!(
                    "readout angle {zeta} rad is outside (−π/2, π/2)"
                )));
            }
        }
        if let SidebandRatio::Fixed(rho) = self.ratio {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "sideband ratio must be positive, got {rho}"
                )));
            }
        }
        Ok(())
    }

    /// Short name used on the command line and in output metadata.
    pub fn label(&self) -> &'static str {
        match self.readout {
            Readout::NoControl => "none",
            Readout::PhaseQuadrature => "phase",
            Readout::VariationalFixed { .. } => "variational",
            Readout::VariationalIdeal => "variational-ideal",
        }
    }
}

/// Optomechanical coupling `K = 8 I0 ω0 / (m Ω² c²)`.
pub fn kappa(params: &QuantumParams, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::domain("kappa", format!("Ω = {omega} must be positive")));
    }
    let c = params.light_speed;
    Ok(8.0 * params.carrier_power * params.laser_angular_frequency / (params.mirror_mass * omega * omega * c * c))
}

fn sql_with(hbar: f64, m: f64, omega: f64) -> Result<f64> {
    if !(m > 0.0 && omega > 0.0) {
        return Err(Error::domain(
            "x_sql",
            format!("mass {m} and Ω {omega} must be positive"),
        ));
    }
    Ok((2.0 * hbar / (m * omega * omega)).sqrt())
}

/// Free-mass standard quantum limit `√(2ħ / (m Ω²))`, m/√Hz.
pub fn x_sql(m: f64, omega: f64) -> Result<f64> {
    sql_with(HBAR, m, omega)
}

/// Effective coupling `4r / (1 + r)²` of the compound mirror.
pub fn r_tilde(r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain("r_tilde", format!("r = {r} is outside [0, 1]")));
    }
    Ok(4.0 * r / ((1.0 + r) * (1.0 + r)))
}

fn check_open_unit(op: &'static str, r: f64) -> Result<()> {
    if r == 0.0 || r == 1.0 {
        let why = if r == 0.0 {
            "r = 0 removes the carrier signal"
        } else {
            "r = 1 decouples the control sideband"
        };
        return Err(Error::singular(op, why));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(op, format!("r = {r} is outside (0, 1)")));
    }
    Ok(())
}

/// Square of the feedback weight's reflectivity factor, `((1 − r)/(1 + r))²`.
fn control_coupling(r: f64) -> Result<f64> {
    let s = thermorefractive_sensing_ratio(r)?;
    Ok(1.0 / (s * s))
}

/// Dimensionless coefficients of each unit vacuum in the fed-back phase
/// quadrature, plus the signal gain that converts them to displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureBudget {
    pub a2_carrier: f64,
    pub a1_carrier: f64,
    pub a2_sideband: f64,
    pub a1_sideband: f64,
    /// Transfer from IETM displacement to `z2`, 1/m·√Hz.
    pub signal_gain: f64,
}

impl QuadratureBudget {
    /// `tan_zeta = 0` is phase-quadrature feedback.
    pub fn new(r: f64, k: f64, sql: f64, ratio: f64, tan_zeta: f64) -> Result<Self> {
        check_open_unit("quadrature_budget", r)?;
        let rt = r_tilde(r)?;
        let c = control_coupling(r)?;
        let feedback = c / ratio;
        let back_action = rt * k;
        Ok(Self {
            a2_carrier: 1.0,
            a1_carrier: -back_action,
            a2_sideband: feedback,
            a1_sideband: feedback * tan_zeta - back_action * ratio,
            signal_gain: (2.0 * k).sqrt() * rt / sql,
        })
    }

    fn to_noise(self, ratio: f64, zeta: f64) -> QuantumNoise {
        let g = self.signal_gain;
        QuantumNoise::from_components(
            self.a2_carrier.abs() / g,
            self.a1_carrier.abs() / g,
            self.a2_sideband.abs() / g,
            self.a1_sideband.abs() / g,
            ratio,
            zeta,
        )
    }
}

/// Displacement-referred quantum noise, m/√Hz, split by vacuum source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumNoise {
    pub total: f64,
    /// Carrier shot noise (a2c).
    pub shot: f64,
    /// Carrier radiation pressure on the IETM (a1c).
    pub rp_carrier: f64,
    /// Sideband shot noise driven onto the EETM through the feedback (a2s).
    pub control_shot: f64,
    /// Sideband radiation pressure on the IETM, net of any readout cancellation (a1s).
    pub control_rp: f64,
    /// `A1s/A1c` in use; infinite in the large-sideband limit.
    pub sideband_ratio: f64,
    /// Readout angle in use, radians.
    pub zeta: f64,
}

impl QuantumNoise {
    fn from_components(shot: f64, rp_carrier: f64, control_shot: f64, control_rp: f64, ratio: f64, zeta: f64) -> Self {
        let total =
            (shot * shot + rp_carrier * rp_carrier + control_shot * control_shot + control_rp * control_rp).sqrt();
        Self {
            total,
            shot,
            rp_carrier,
            control_shot,
            control_rp,
            sideband_ratio: ratio,
            zeta,
        }
    }

    /// Excess control noise, m/√Hz.
    pub fn control_asd(&self) -> f64 {
        self.control_psd().sqrt()
    }

    /// Excess control noise power, m²/Hz.
    pub fn control_psd(&self) -> f64 {
        self.control_shot * self.control_shot + self.control_rp * self.control_rp
    }
}

/// Feedback of the sideband phase quadrature. With
/// [`SidebandRatio::Optimized`] the ratio `ρ = √(c / (r̃K))` balances
/// sideband shot noise against sideband radiation pressure.
pub fn quantum_noise_phase_control(
    r: f64,
    params: &QuantumParams,
    omega: f64,
    ratio: SidebandRatio,
) -> Result<QuantumNoise> {
    check_open_unit("quantum_noise_phase_control", r)?;
    let k = kappa(params, omega)?;
    let sql = params.x_sql(omega)?;
    let rho = match ratio {
        SidebandRatio::Fixed(rho) => positive_ratio(rho)?,
        SidebandRatio::Optimized => (control_coupling(r)? / (r_tilde(r)? * k)).sqrt(),
    };
    Ok(QuadratureBudget::new(r, k, sql, rho, 0.0)?.to_noise(rho, 0.0))
}

fn positive_ratio(rho: f64) -> Result<f64> {
    if rho > 0.0 && rho.is_finite() {
        Ok(rho)
    } else {
        Err(Error::domain(
            "sideband ratio",
            format!("A1s/A1c = {rho} must be positive"),
        ))
    }
}

/// Readout angle that cancels the sideband radiation pressure:
/// `tan ζ = r̃K [ρ(1 + r)/(1 − r)]²`.
pub fn variational_zeta(r: f64, kappa_val: f64, ratio: f64) -> Result<f64> {
    tan_ideal_zeta(r, kappa_val, ratio).map(f64::atan)
}

fn tan_ideal_zeta(r: f64, kappa_val: f64, ratio: f64) -> Result<f64> {
    if r == 1.0 {
        return Err(Error::singular(
            "variational_zeta",
            "r = 1 decouples the control sideband",
        ));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain("variational_zeta", format!("r = {r} is outside (0, 1)")));
    }
    if !(kappa_val >= 0.0) {
        return Err(Error::domain("variational_zeta", format!("K = {kappa_val} < 0")));
    }
    positive_ratio(ratio)?;
    let s = ratio * thermorefractive_sensing_ratio(r)?;
    Ok(r_tilde(r)? * kappa_val * s * s)
}

/// Feedback of the rotated quadrature `b1s sin ζ + b2s cos ζ`.
///
/// - fixed `ζ`, fixed `ρ`: evaluated as given;
/// - fixed `ζ`, optimized `ρ`: `ρ² = c √(1 + tan²ζ) / (r̃K)`;
/// - ideal `ζ`, fixed `ρ`: `ζ` cancels the sideband back-action at this `Ω`,
///   leaving sideband shot noise that falls as `1/ρ`;
/// - ideal `ζ`, optimized `ρ`: the large-sideband limit, no control noise.
pub fn quantum_noise_variational(
    r: f64,
    params: &QuantumParams,
    omega: f64,
    scheme: &ControlScheme,
) -> Result<QuantumNoise> {
    check_open_unit("quantum_noise_variational", r)?;
    let k = kappa(params, omega)?;
    let sql = params.x_sql(omega)?;
    match (scheme.readout, scheme.ratio) {
        (Readout::VariationalFixed { zeta }, ratio) => {
            if !(zeta.abs() < FRAC_PI_2) {
                return Err(Error::domain(
                    "quantum_noise_variational",
                    format!("ζ = {zeta} outside (−π/2, π/2)"),
                ));
            }
            let t = zeta.tan();
            let rho = match ratio {
                SidebandRatio::Fixed(rho) => positive_ratio(rho)?,
                SidebandRatio::Optimized => (control_coupling(r)? * (1.0 + t * t).sqrt() / (r_tilde(r)? * k)).sqrt(),
            };
            Ok(QuadratureBudget::new(r, k, sql, rho, t)?.to_noise(rho, zeta))
        }
        (Readout::VariationalIdeal, SidebandRatio::Fixed(rho)) => {
            let t = tan_ideal_zeta(r, k, rho)?;
            Ok(QuadratureBudget::new(r, k, sql, rho, t)?.to_noise(rho, t.atan()))
        }
        (Readout::VariationalIdeal, SidebandRatio::Optimized) => {
            // carrier terms only; any finite ρ would add c/ρ of sideband shot noise
            let g = (2.0 * k).sqrt() * r_tilde(r)? / sql;
            Ok(QuantumNoise::from_components(
                1.0 / g,
                r_tilde(r)? * k / g,
                0.0,
                0.0,
                f64::INFINITY,
                FRAC_PI_2,
            ))
        }
        (Readout::NoControl | Readout::PhaseQuadrature, _) => Err(Error::domain(
            "quantum_noise_variational",
            format!("scheme '{}' is not a variational readout", scheme.label()),
        )),
    }
}

/// Quantum noise for any controlled scheme.
pub fn quantum_noise(r: f64, params: &QuantumParams, omega: f64, scheme: &ControlScheme) -> Result<QuantumNoise> {
    match scheme.readout {
        Readout::NoControl => Err(Error::domain(
            "quantum_noise",
            "no control loop, no control noise model",
        )),
        Readout::PhaseQuadrature => quantum_noise_phase_control(r, params, omega, scheme.ratio),
        _ => quantum_noise_variational(r, params, omega, scheme),
    }
}

/// Lowest excess control noise reachable with phase-quadrature feedback,
/// `x_SQL (1 − r) / (2√r)`. Independent of carrier power.
pub fn min_excess_control_asd(r: f64, m: f64, omega: f64) -> Result<f64> {
    if r == 0.0 {
        return Err(Error::singular(
            "min_excess_control_asd",
            "r = 0 removes the carrier signal",
        ));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::domain(
            "min_excess_control_asd",
            format!("r = {r} is outside (0, 1]"),
        ));
    }
    Ok(x_sql(m, omega)? * (1.0 - r) / (2.0 * r.sqrt()))
}
