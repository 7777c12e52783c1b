//! Per-source noise budgets over a frequency grid and their CSV / JSON
//! renderings.
//!
//! Uncontrolled cavities carry the thermal columns only. Under control the
//! cavity-sensed thermal terms are removed by the feedback and the four
//! quantum columns take their place. `total` is always the quadrature sum
//! of every source column.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::optics::CavityConfig;
use crate::quantum::{quantum_noise, ControlScheme, QuantumParams};
use crate::thermal::{brownian_coating_asd_continuous, excess_thermal_components, ThermalNoiseModel};

/// CSV header, in column order.
pub const COLUMNS: [&str; 9] = [
    "frequency_hz",
    "ietm_coating",
    "eetm_coating_sensed",
    "thermorefractive_sensed",
    "shot",
    "rp_carrier",
    "control_shot",
    "control_rp",
    "total",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub frequency_hz: f64,
    pub ietm_coating: f64,
    pub eetm_coating_sensed: f64,
    pub thermorefractive_sensed: f64,
    pub shot: f64,
    pub rp_carrier: f64,
    pub control_shot: f64,
    pub control_rp: f64,
    pub total: f64,
}

impl BudgetRow {
    pub fn sources(&self) -> [f64; 7] {
        [
            self.ietm_coating,
            self.eetm_coating_sensed,
            self.thermorefractive_sensed,
            self.shot,
            self.rp_carrier,
            self.control_shot,
            self.control_rp,
        ]
    }

    pub fn values(&self) -> [f64; 9] {
        let s = self.sources();
        [self.frequency_hz, s[0], s[1], s[2], s[3], s[4], s[5], s[6], self.total]
    }

    fn with_total(mut self) -> Self {
        self.total = self.sources().iter().map(|x| x * x).sum::<f64>().sqrt();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BudgetMetadata {
    pub config_sha256: String,
    pub scheme: String,
    pub generated: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub metadata: BudgetMetadata,
    pub columns: Vec<String>,
    pub rows: Vec<BudgetRow>,
}

/// `points` logarithmically spaced frequencies from `f_min` to `f_max` inclusive.
pub fn log_grid(f_min: f64, f_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(f_min > 0.0 && f_min < f_max && f_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "frequency range must satisfy 0 < fmin < fmax, got {f_min}..{f_max}"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 grid points, got {points}"
        )));
    }
    let (lo, hi) = (f_min.ln(), f_max.ln());
    let step = (hi - lo) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| (lo + step * i as f64).exp()).collect();
    grid[0] = f_min;
    grid[points - 1] = f_max;
    Ok(grid)
}

/// Every noise source at one frequency.
pub fn budget_row(
    model: &ThermalNoiseModel,
    params: &QuantumParams,
    cavity: &CavityConfig,
    scheme: &ControlScheme,
    f: f64,
) -> Result<BudgetRow> {
    let ietm_coating = brownian_coating_asd_continuous(model, cavity.ietm.coating_layers(), f)?;
    let mut row = BudgetRow {
        frequency_hz: f,
        ietm_coating,
        eetm_coating_sensed: 0.0,
        thermorefractive_sensed: 0.0,
        shot: 0.0,
        rp_carrier: 0.0,
        control_shot: 0.0,
        control_rp: 0.0,
        total: 0.0,
    };
    if scheme.is_controlled() {
        let q = quantum_noise(cavity.ietm.r, params, 2.0 * PI * f, scheme)?;
        row.shot = q.shot;
        row.rp_carrier = q.rp_carrier;
        row.control_shot = q.control_shot;
        row.control_rp = q.control_rp;
    } else {
        let excess = excess_thermal_components(model, cavity, f)?;
        row.eetm_coating_sensed = excess.eetm_coating;
        row.thermorefractive_sensed = excess.thermorefractive;
    }
    Ok(row.with_total())
}

pub fn assemble_budget(
    model: &ThermalNoiseModel,
    params: &QuantumParams,
    cavity: &CavityConfig,
    scheme: &ControlScheme,
    frequencies: &[f64],
    exec: Execution,
) -> Result<Vec<BudgetRow>> {
    exec.map(frequencies, |&f| budget_row(model, params, cavity, scheme, f))
        .into_iter()
        .collect()
}

/// Scientific notation with 15 significant digits.
pub fn format_sci(x: f64) -> String {
    format!("{x:.14e}")
}

impl NoiseBudget {
    pub fn new(metadata: BudgetMetadata, rows: Vec<BudgetRow>) -> Self {
        Self {
            metadata,
            columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let m = &self.metadata;
        let _ = writeln!(out, "# config_sha256: {}", m.config_sha256);
        let _ = writeln!(out, "# scheme: {}", m.scheme);
        let _ = writeln!(out, "# generated: {}", m.generated);
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.values().iter().map(|&v| format_sci(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("budget rows are finite numbers");
        s.push('\n');
        s
    }

    /// Parses the CSV rendering back into rows (metadata comments are kept).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = BudgetMetadata::default();
        let mut rows = Vec::new();
        let mut saw_header = false;
        for line in text.lines() {
            if let Some(comment) = line.strip_prefix("# ") {
                if let Some((key, value)) = comment.split_once(": ") {
                    match key {
                        "config_sha256" => metadata.config_sha256 = value.to_string(),
                        "scheme" => metadata.scheme = value.to_string(),
                        "generated" => metadata.generated = value.to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            if !saw_header {
                if line != COLUMNS.join(",") {
                    return Err(Error::InvalidInput(format!("unexpected CSV header: {line}")));
                }
                saw_header = true;
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("bad CSV cell in '{line}': {e}")))?;
            if v.len() != COLUMNS.len() {
                return Err(Error::InvalidInput(format!(
                    "expected {} cells, got {}",
                    COLUMNS.len(),
                    v.len()
                )));
            }
            rows.push(BudgetRow {
                frequency_hz: v[0],
                ietm_coating: v[1],
                eetm_coating_sensed: v[2],
                thermorefractive_sensed: v[3],
                shot: v[4],
                rp_carrier: v[5],
                control_shot: v[6],
                control_rp: v[7],
                total: v[8],
            });
        }
        Ok(Self::new(metadata, rows))
    }
}
