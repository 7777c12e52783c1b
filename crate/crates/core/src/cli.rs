//! Command-line front end. [`run`] is the whole program; `main` only
//! forwards its exit code.
//!
//! Exit codes: 0 success, 2 input error, 3 physics or feasibility error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::budget::{assemble_budget, format_sci, log_grid, BudgetMetadata, NoiseBudget};
use crate::config::{resolve_config_path, RatioSetting, RunConfig, SchemeName, CONFIG_DIR_ENV};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::optimize::{
    calibrate, optimize_layers, sweep_reflectivity, CalibrationBounds, CalibrationTargets, OptimizationResult,
    SweepCurve,
};

#[derive(Debug, Parser)]
#[command(
    name = "antires",
    version,
    about = "Noise budgets and coating optimization for anti-resonant end-mirror cavities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run configuration (flat TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for relative config paths and the default antires.toml.
    #[arg(long, env = CONFIG_DIR_ENV)]
    pub config_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    /// Control scheme; overrides the config.
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<SchemeName>,
    /// Sideband amplitude ratio A1s/A1c, or "optimized".
    #[arg(long, value_parser = parse_ratio)]
    pub ratio: Option<RatioSetting>,
    /// Readout angle in radians for --scheme variational.
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-source noise budget over a logarithmic frequency grid.
    Budget {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long, default_value_t = 10.0)]
        fmin: f64,
        #[arg(long, default_value_t = 10_000.0)]
        fmax: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Loss budget used when the EETM coating is solved.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Best IETM / EETM layer split at one frequency.
    Optimize {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = 100.0)]
        freq: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Noise versus IETM reflectivity for several loss budgets.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Comma-separated loss budgets.
        #[arg(long, default_value = "0.1,0.5,1.0")]
        budgets: String,
        #[arg(long, default_value_t = 100.0)]
        freq: f64,
        /// Linear reflectivity grid START:STOP:COUNT.
        #[arg(long, default_value = "0.2:0.99:80")]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Fit thermal coefficients and mirror mass to target noise claims.
    Calibrate {
        /// Targets file (TOML); omitted keys take the built-in targets.
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Base configuration supplying losses and fixed model parameters.
        #[command(flatten)]
        config: ConfigArgs,
        /// Where to write the fitted configuration.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_scheme(s: &str) -> std::result::Result<SchemeName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_ratio(s: &str) -> std::result::Result<RatioSetting, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `START:STOP:COUNT` into `COUNT` evenly spaced values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("grid must look like START:STOP:COUNT, got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    match count {
        0 => Err(bad()),
        1 => Ok(vec![start]),
        _ => Ok((0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect()),
    }
}

pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad number '{s}' in list '{spec}'")))
        })
        .collect()
}

fn load_config(args: &ConfigArgs) -> Result<(RunConfig, PathBuf)> {
    let path = resolve_config_path(args.config.as_deref(), args.config_dir.as_deref())?;
    Ok((RunConfig::load(&path)?, path))
}

fn apply_scheme(cfg: &mut RunConfig, args: &SchemeArgs) {
    if let Some(s) = args.scheme {
        cfg.scheme = s;
    }
    if let Some(r) = args.ratio {
        cfg.sideband_ratio = r;
    }
    if let Some(z) = args.zeta {
        cfg.zeta = z;
    }
}

fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(chrono::Utc::now);
    now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Assembles the noise budget of the configured cavity.
pub fn cmd_budget(cfg: &RunConfig, f_min: f64, f_max: f64, points: usize) -> Result<NoiseBudget> {
    cfg.validate()?;
    let grid = log_grid(f_min, f_max, points)?;
    let cavity = cfg.cavity()?;
    let rows = assemble_budget(
        &cfg.thermal(),
        &cfg.quantum(),
        &cavity,
        &cfg.control_scheme(),
        &grid,
        Execution::default(),
    )?;
    let metadata = BudgetMetadata {
        config_sha256: cfg.digest(),
        scheme: cfg.control_scheme().label().to_string(),
        generated: timestamp(),
    };
    Ok(NoiseBudget::new(metadata, rows))
}

pub fn cmd_optimize(cfg: &RunConfig, f: f64) -> Result<OptimizationResult> {
    cfg.validate()?;
    optimize_layers(
        &cfg.thermal(),
        &cfg.quantum(),
        &cfg.losses(),
        cfg.loss_budget,
        f,
        &cfg.control_scheme(),
    )
}

pub fn cmd_sweep(cfg: &RunConfig, budgets: &[f64], f: f64, grid: &[f64]) -> Result<Vec<SweepCurve>> {
    cfg.validate()?;
    sweep_reflectivity(
        &cfg.thermal(),
        &cfg.quantum(),
        &cfg.losses(),
        budgets,
        f,
        &cfg.control_scheme(),
        grid,
    )
}

/// Runs the calibration and renders the fitted configuration, with the
/// residual report as leading comments.
pub fn cmd_calibrate(targets: &CalibrationTargets, base: &RunConfig) -> Result<(RunConfig, String, Vec<String>)> {
    base.validate()?;
    let fit = calibrate(
        targets,
        &base.thermal(),
        &base.quantum(),
        &base.losses(),
        &CalibrationBounds::default(),
    )?;
    let mut cfg = RunConfig::from_parts(&fit.model, &fit.params, &base.losses(), targets.loss_budget);
    cfg.ietm_layers = Some(targets.controlled_layers);
    cfg.scheme = SchemeName::Phase;
    let lines = fit.report.lines();
    let mut text = String::from("# fitted by `antires calibrate`\n");
    for line in &lines {
        let _ = writeln!(text, "# {line}");
    }
    text.push_str(&cfg.to_toml());
    Ok((cfg, text, lines))
}

fn optimize_csv(res: &OptimizationResult) -> String {
    let mut out = String::from("n_ietm,n_eetm,r_ietm,total_asd\n");
    for p in &res.swept_curve {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.n_ietm,
            p.n_eetm,
            format_sci(p.r_ietm),
            format_sci(p.total_asd)
        );
    }
    out
}

fn sweep_csv(curves: &[SweepCurve]) -> String {
    let mut out = String::from("loss_budget,r_ietm,n_eetm,feasible,total_asd\n");
    for curve in curves {
        for p in &curve.points {
            let n_e = p.n_eetm.map(|n| n.to_string()).unwrap_or_default();
            let total = p.total_asd.map(format_sci).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                format_sci(p.loss_budget),
                format_sci(p.r_ietm),
                n_e,
                p.feasible(),
                total
            );
        }
    }
    out
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialize");
    s.push('\n');
    s
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Budget {
            config,
            scheme,
            fmin,
            fmax,
            points,
            budget,
            out,
            format,
        } => {
            let (mut cfg, _) = load_config(&config)?;
            apply_scheme(&mut cfg, &scheme);
            if let Some(b) = budget {
                cfg.loss_budget = b;
            }
            let result = cmd_budget(&cfg, fmin, fmax, points)?;
            let text = match format {
                Format::Csv => result.to_csv(),
                Format::Json => result.to_json(),
            };
            write_output(out.as_deref(), &text)
        }
        Command::Optimize {
            config,
            scheme,
            budget,
            freq,
            out,
            format,
        } => {
            let (mut cfg, _) = load_config(&config)?;
            apply_scheme(&mut cfg, &scheme);
            if let Some(b) = budget {
                cfg.loss_budget = b;
            }
            let result = cmd_optimize(&cfg, freq)?;
            let text = match format {
                Format::Csv => optimize_csv(&result),
                Format::Json => to_json(&result),
            };
            write_output(out.as_deref(), &text)
        }
        Command::Sweep {
            config,
            scheme,
            budgets,
            freq,
            grid,
            out,
            format,
        } => {
            let (mut cfg, _) = load_config(&config)?;
            apply_scheme(&mut cfg, &scheme);
            let curves = cmd_sweep(&cfg, &parse_list(&budgets)?, freq, &parse_grid(&grid)?)?;
            let text = match format {
                Format::Csv => sweep_csv(&curves),
                Format::Json => to_json(&curves),
            };
            write_output(out.as_deref(), &text)
        }
        Command::Calibrate { targets, config, out } => {
            let targets = match targets {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    toml::from_str::<CalibrationTargets>(&text).map_err(|e| Error::Parse {
                        path: path.clone(),
                        message: e.to_string(),
                    })?
                }
                None => CalibrationTargets::default(),
            };
            let base = if config.config.is_some() || config.config_dir.is_some() {
                load_config(&config)?.0
            } else {
                RunConfig::default()
            };
            let (_, text, lines) = cmd_calibrate(&targets, &base)?;
            std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
            for line in lines {
                println!("{line}");
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
