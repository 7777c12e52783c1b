//! Amplitude optics of a single coated mirror and of the anti-resonant
//! two-mirror compound (input mirror IETM, end mirror EETM).
//!
//! Reflectivities are real amplitude coefficients in `[0, 1]`; losses are
//! power fractions. Everything here is lossless except [`compound_loss`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper end of every layer-count scan.
pub const MAX_LAYERS: u32 = 40;

/// Per-mirror optical loss assumed throughout (50 ppm).
pub const DEFAULT_MIRROR_LOSS: f64 = 50e-6;

/// Amplitude reflectivity of an uncoated fused-silica surface.
pub const UNCOATED_SUBSTRATE_REFLECTIVITY: f64 = 0.184;

const THIN_COATING_REFLECTIVITY: [f64; 4] = [UNCOATED_SUBSTRATE_REFLECTIVITY, 0.49, 0.72, 0.85];

fn check_unit(op: &'static str, name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::domain(op, format!("{name} = {value} is outside [0, 1]")))
    }
}

/// One mirror: amplitude reflectivity and transmissivity, power loss and,
/// when built from a coating stack, the number of high-index layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorSpec {
    pub r: f64,
    pub t: f64,
    pub loss: f64,
    pub layers: Option<u32>,
}

impl MirrorSpec {
    /// Mirror with reflectivity `r` and power loss `loss`; the transmissivity
    /// takes up the remainder so that `r² + t² + loss = 1`.
    pub fn from_reflectivity(r: f64, loss: f64) -> Result<Self> {
        check_unit("MirrorSpec", "r", r)?;
        if !(0.0..1.0).contains(&loss) {
            return Err(Error::domain("MirrorSpec", format!("loss = {loss} is outside [0, 1)")));
        }
        let t2 = 1.0 - r * r - loss;
        // allow a few ulps of slack so that r = sqrt(1 - loss) builds cleanly
        if t2 < -1e-15 {
            return Err(Error::domain(
                "MirrorSpec",
                format!("r = {r} leaves no room for loss {loss} (r² + loss > 1)"),
            ));
        }
        Ok(Self {
            r,
            t: t2.max(0.0).sqrt(),
            loss,
            layers: None,
        })
    }

    /// Mirror coated with `layers` high-index layers.
    pub fn from_layers(layers: u32, loss: f64) -> Result<Self> {
        let mut spec = Self::from_reflectivity(coating_reflectivity(layers), loss)?;
        spec.layers = Some(layers);
        Ok(spec)
    }

    pub fn lossless(r: f64) -> Result<Self> {
        Self::from_reflectivity(r, 0.0)
    }

    /// Layer count used for coating-noise purposes. Mirrors specified by
    /// reflectivity alone get the continuous interpolated count.
    pub fn coating_layers(&self) -> f64 {
        match self.layers {
            Some(n) => f64::from(n),
            None => effective_layers(self.r),
        }
    }

    /// `r² + t² + loss − 1`; zero up to rounding for every constructed spec.
    pub fn energy_residual(&self) -> f64 {
        self.r * self.r + self.t * self.t + self.loss - 1.0
    }
}

/// The end-mirror cavity together with its loss constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    pub ietm: MirrorSpec,
    pub eetm: MirrorSpec,
    /// Allowed fractional excess of the compound loss over the reference
    /// single-mirror loss (0.5 means "50% more").
    pub loss_budget: f64,
    pub reference_single_mirror_loss: f64,
}

impl CavityConfig {
    pub fn new(
        ietm: MirrorSpec,
        eetm: MirrorSpec,
        loss_budget: f64,
        reference_single_mirror_loss: f64,
    ) -> Result<Self> {
        if !(loss_budget >= 0.0) {
            return Err(Error::domain("CavityConfig", format!("loss budget {loss_budget} < 0")));
        }
        Ok(Self {
            ietm,
            eetm,
            loss_budget,
            reference_single_mirror_loss,
        })
    }

    /// Builds the cavity with the thinnest EETM coating that meets the budget.
    pub fn with_solved_eetm(
        ietm: MirrorSpec,
        eetm_loss: f64,
        loss_budget: f64,
        reference_single_mirror_loss: f64,
    ) -> Result<Self> {
        let n_e = solve_eetm_layers(&ietm, eetm_loss, loss_budget, reference_single_mirror_loss)?;
        let eetm = MirrorSpec::from_layers(n_e, eetm_loss)?;
        Self::new(ietm, eetm, loss_budget, reference_single_mirror_loss)
    }

    pub fn compound_loss(&self) -> f64 {
        compound_loss(&self.ietm, &self.eetm)
    }

    pub fn loss_limit(&self) -> f64 {
        (1.0 + self.loss_budget) * self.reference_single_mirror_loss
    }

    pub fn budget_satisfied(&self) -> bool {
        self.compound_loss() <= self.loss_limit()
    }

    pub fn compound_reflectivity(&self) -> f64 {
        // both reflectivities were range-checked at construction
        (self.ietm.r + self.eetm.r) / (1.0 + self.ietm.r * self.eetm.r)
    }

    pub fn eetm_sensing_factor(&self) -> f64 {
        eetm_sensing_factor(self.ietm.r, self.eetm.r)
    }
}

/// Lossless reflectivity of two mirrors held at anti-resonance.
pub fn compound_reflectivity(r_i: f64, r_e: f64) -> Result<f64> {
    check_unit("compound_reflectivity", "r_i", r_i)?;
    check_unit("compound_reflectivity", "r_e", r_e)?;
    Ok((r_i + r_e) / (1.0 + r_i * r_e))
}

/// Amplitude reflectivity of a SiO2/Ta2O5 stack with `n` Ta2O5 layers (and
/// `n − 1` SiO2 layers). Thin stacks use tabulated exact values; `n = 0` is
/// the bare substrate.
pub fn coating_reflectivity(n: u32) -> f64 {
    match THIN_COATING_REFLECTIVITY.get(n as usize) {
        Some(&r) => r,
        None => (1.0 - 2.8 * 0.49_f64.powi(n as i32)).sqrt(),
    }
}

/// Smallest layer count whose coating reaches `r_target`.
pub fn layers_for_reflectivity(r_target: f64) -> Result<u32> {
    if !(r_target > 0.0 && r_target < 1.0) {
        return Err(Error::domain(
            "layers_for_reflectivity",
            format!("target {r_target} is outside (0, 1)"),
        ));
    }
    (0..=MAX_LAYERS)
        .find(|&n| coating_reflectivity(n) >= r_target)
        .ok_or_else(|| {
            Error::domain(
                "layers_for_reflectivity",
                format!("target {r_target} needs more than {MAX_LAYERS} layers"),
            )
        })
}

/// Continuous layer count for a reflectivity between tabulated stacks,
/// linear in `r` between neighbouring integer counts. Used only for
/// rendering continuous reflectivity sweeps.
pub fn effective_layers(r: f64) -> f64 {
    if r <= coating_reflectivity(0) {
        return 0.0;
    }
    for n in 0..MAX_LAYERS {
        let (lo, hi) = (coating_reflectivity(n), coating_reflectivity(n + 1));
        if r <= hi {
            return f64::from(n) + (r - lo) / (hi - lo);
        }
    }
    f64::from(MAX_LAYERS)
}

/// Displacement weight with which EETM motion (or any phase picked up
/// inside the cavity) appears in the carrier reflected off the compound
/// mirror: `t_i² / (1 + r_i r_e)²` with lossless `t_i`.
pub fn eetm_sensing_factor(r_i: f64, r_e: f64) -> f64 {
    let d = 1.0 + r_i * r_e;
    (1.0 - r_i * r_i) / (d * d)
}

/// How much more strongly the cavity-resonant control sideband senses IETM
/// substrate fluctuations than the anti-resonant carrier.
pub fn thermorefractive_sensing_ratio(r_i: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r_i) {
        if r_i == 1.0 {
            return Err(Error::singular(
                "thermorefractive_sensing_ratio",
                "r_i = 1 blocks all light from entering the cavity",
            ));
        }
        return Err(Error::domain(
            "thermorefractive_sensing_ratio",
            format!("r_i = {r_i} is outside [0, 1)"),
        ));
    }
    Ok((1.0 + r_i) / (1.0 - r_i))
}

/// Total power loss of the compound mirror: IETM loss plus the EETM loss
/// and transmission, weighted by the anti-resonant intra-cavity power.
pub fn compound_loss(ietm: &MirrorSpec, eetm: &MirrorSpec) -> f64 {
    let buildup = ietm.t / (1.0 + ietm.r * eetm.r);
    ietm.loss + buildup * buildup * (eetm.loss + eetm.t * eetm.t)
}

/// Thinnest EETM coating (0..=40 layers) for which the compound loss stays
/// within `(1 + budget) · reference_loss`. Layer counts whose reflectivity
/// cannot coexist with `eetm_loss` are skipped.
pub fn solve_eetm_layers(ietm: &MirrorSpec, eetm_loss: f64, budget: f64, reference_loss: f64) -> Result<u32> {
    if !(budget >= 0.0) {
        return Err(Error::domain("solve_eetm_layers", format!("budget {budget} < 0")));
    }
    let limit = (1.0 + budget) * reference_loss;
    (0..=MAX_LAYERS)
        .find(|&n| {
            MirrorSpec::from_layers(n, eetm_loss)
                .map(|eetm| compound_loss(ietm, &eetm) <= limit)
                .unwrap_or(false)
        })
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no EETM with at most {MAX_LAYERS} layers keeps the loss of an IETM with r = {} \
                 below {limit:.3e}",
                ietm.r
            ))
        })
}
