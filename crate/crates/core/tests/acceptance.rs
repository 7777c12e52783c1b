//! Acceptance criteria, one line of output per criterion.
//!
//! Run with `cargo test -p antires --test acceptance`. Exits non-zero if
//! any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use antires::budget::COLUMNS;
use antires::cli::{cmd_budget, cmd_calibrate, cmd_optimize};
use antires::config::{RunConfig, SchemeName};
use antires::optics::{coating_reflectivity, compound_reflectivity, MirrorSpec, MAX_LAYERS};
use antires::optimize::{sweep_reflectivity_with, CalibrationTargets, MirrorLosses};
use antires::quantum::{
    kappa, min_excess_control_asd, quantum_noise_phase_control, quantum_noise_variational, r_tilde, variational_zeta,
    ControlScheme, QuadratureBudget, QuantumParams, Readout, SidebandRatio,
};
use antires::thermal::ThermalNoiseModel;
use antires::Execution;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const R_SET: [f64; 4] = [0.184, 0.49, 0.72, 0.9];
const OMEGA_100HZ: f64 = 2.0 * PI * 100.0;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn c_of(r: f64) -> f64 {
    ((1.0 - r) / (1.0 + r)).powi(2)
}

/// Carrier power that produces coupling `k` at `omega`.
fn params_for_kappa(k: f64, omega: f64) -> QuantumParams {
    let base = QuantumParams::default();
    let p = k * base.mirror_mass * omega * omega * base.light_speed * base.light_speed
        / (8.0 * base.laser_angular_frequency);
    QuantumParams {
        carrier_power: p,
        ..base
    }
}

/// Optimized phase-control total written out in closed form.
fn closed_form_total(r: f64, k: f64, sql: f64) -> f64 {
    let rt = r_tilde(r).unwrap();
    sql / ((2.0 * k).sqrt() * rt) * (1.0 + rt * rt * k * k + 2.0 * rt * k * c_of(r)).sqrt()
}

fn criterion_1() -> Check {
    for (n, want) in [(0, 0.184), (1, 0.49), (2, 0.72), (3, 0.85)] {
        let got = coating_reflectivity(n);
        ensure(got == want, || format!("N = {n}: got {got:?}, want {want:?}"))?;
    }
    Ok("N = 0..3 -> 0.184, 0.49, 0.72, 0.85 exactly".into())
}

fn criterion_2() -> Check {
    let sql = antires::quantum::x_sql(QuantumParams::default().mirror_mass, OMEGA_100HZ).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for r in R_SET {
        let want = sql * (1.0 - r) / (2.0 * r.sqrt());
        let limit =
            min_excess_control_asd(r, QuantumParams::default().mirror_mass, OMEGA_100HZ).map_err(|e| e.to_string())?;
        worst = worst.max(rel(limit, want));
        let rt = r_tilde(r).unwrap();
        for k in logspace(1e-4, 1e4, 30) {
            let extracted = (sql * sql / (2.0 * k * rt * rt) * 2.0 * rt * k * c_of(r)).sqrt();
            let engine = quantum_noise_phase_control(
                r,
                &params_for_kappa(k, OMEGA_100HZ),
                OMEGA_100HZ,
                SidebandRatio::Optimized,
            )
            .map_err(|e| e.to_string())?
            .control_asd();
            for (label, v) in [("extracted", extracted), ("engine", engine)] {
                let d = rel(v, want);
                worst = worst.max(d);
                ensure(d <= 1e-10, || {
                    format!("r = {r}, K = {k:e}: {label} {v:e} vs {want:e} (rel {d:.2e})")
                })?;
            }
        }
    }
    Ok(format!("4 r x 30 K, worst rel {worst:.2e} (tol 1e-10)"))
}

/// Golden-section search for the minimum of `f` over `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

fn criterion_3() -> Check {
    let m = QuantumParams::default().mirror_mass;
    let sql = antires::quantum::x_sql(m, OMEGA_100HZ).map_err(|e| e.to_string())?;
    let (mut worst_v, mut worst_k) = (0.0f64, 0.0f64);
    for r in R_SET {
        let rt = r_tilde(r).unwrap();
        // the total is flat at its minimum, so search on the derivative-friendly power
        let psd = |lnk: f64| {
            let k = lnk.exp();
            let q = quantum_noise_phase_control(
                r,
                &params_for_kappa(k, OMEGA_100HZ),
                OMEGA_100HZ,
                SidebandRatio::Optimized,
            )
            .expect("valid r");
            q.total * q.total / (sql * sql)
        };
        let k_star = golden_min(psd, (1e-3f64).ln(), (1e3f64).ln(), 1e-12).exp();
        let min_total = psd(k_star.ln()).sqrt() * sql;
        let closed = sql * ((1.0 + c_of(r)) / rt).sqrt();
        let dv = rel(min_total, closed);
        let dk = rel(k_star, 1.0 / rt);
        worst_v = worst_v.max(dv);
        worst_k = worst_k.max(dk);
        ensure(dv <= 1e-6, || {
            format!("r = {r}: minimum {min_total:e} vs {closed:e} (rel {dv:.2e})")
        })?;
        ensure(dk <= 1e-6, || {
            format!("r = {r}: K* = {k_star} vs 1/r~ = {} (rel {dk:.2e})", 1.0 / rt)
        })?;
        ensure(min_total > sql, || {
            format!("r = {r}: minimum {min_total:e} reaches x_SQL {sql:e}")
        })?;
    }
    Ok(format!(
        "worst rel: minimum {worst_v:.2e}, K* {worst_k:.2e} (tol 1e-6); all above x_SQL"
    ))
}

fn criterion_4() -> Check {
    let params = QuantumParams::default();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let r = 0.02 + 0.96 * i as f64 / 19.0;
        for f in logspace(1.0, 1e4, 20) {
            let omega = 2.0 * PI * f;
            let q =
                quantum_noise_phase_control(r, &params, omega, SidebandRatio::Optimized).map_err(|e| e.to_string())?;
            let k = kappa(&params, omega).map_err(|e| e.to_string())?;
            let want = closed_form_total(r, k, params.x_sql(omega).map_err(|e| e.to_string())?);
            let d = rel(q.total, want);
            worst = worst.max(d);
            ensure(d <= 1e-8, || {
                format!("r = {r}, f = {f}: {:e} vs {want:e} (rel {d:.2e})", q.total)
            })?;
        }
    }
    Ok(format!("20 x 20 grid, worst rel {worst:.2e} (tol 1e-8)"))
}

fn criterion_5() -> Check {
    let params = QuantumParams::default();
    let sql = params.x_sql(OMEGA_100HZ).map_err(|e| e.to_string())?;
    let k = kappa(&params, OMEGA_100HZ).map_err(|e| e.to_string())?;

    let mut worst_a1s = 0.0f64;
    for r in R_SET {
        for rho in logspace(1e-2, 1e2, 9) {
            let zeta = variational_zeta(r, k, rho).map_err(|e| e.to_string())?;
            let b = QuadratureBudget::new(r, k, sql, rho, zeta.tan()).map_err(|e| e.to_string())?;
            worst_a1s = worst_a1s.max(b.a1_sideband.abs());
            ensure(b.a1_sideband.abs() <= 1e-12, || {
                format!("r = {r}, rho = {rho}: a1s = {:e}", b.a1_sideband)
            })?;
        }
    }

    let r = 0.49;
    let psd = |rho: f64| {
        let scheme = ControlScheme {
            readout: Readout::VariationalIdeal,
            ratio: SidebandRatio::Fixed(rho),
        };
        quantum_noise_variational(r, &params, OMEGA_100HZ, &scheme).map(|q| q.control_psd())
    };
    let rhos = logspace(10.0, 1e4, 31);
    let (xs, ys): (Vec<f64>, Vec<f64>) = rhos
        .iter()
        .map(|&rho| psd(rho).map(|p| (rho.ln(), p.ln())))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?
        .into_iter()
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    ensure((slope + 2.0).abs() <= 0.01, || {
        format!("control residual slope {slope:.4}, want -2.00 +- 0.01")
    })?;

    for r in R_SET {
        for rho in [0.1, 1.0, 3.7, 100.0] {
            let fixed = ControlScheme {
                readout: Readout::VariationalFixed { zeta: 0.0 },
                ratio: SidebandRatio::Fixed(rho),
            };
            let v = quantum_noise_variational(r, &params, OMEGA_100HZ, &fixed).map_err(|e| e.to_string())?;
            let p = quantum_noise_phase_control(r, &params, OMEGA_100HZ, SidebandRatio::Fixed(rho))
                .map_err(|e| e.to_string())?;
            ensure(v == p, || {
                format!("r = {r}, rho = {rho}: zeta = 0 differs from phase control")
            })?;
        }
        let v = quantum_noise_variational(
            r,
            &params,
            OMEGA_100HZ,
            &ControlScheme {
                readout: Readout::VariationalFixed { zeta: 0.0 },
                ratio: SidebandRatio::Optimized,
            },
        )
        .map_err(|e| e.to_string())?;
        let p = quantum_noise_phase_control(r, &params, OMEGA_100HZ, SidebandRatio::Optimized)
            .map_err(|e| e.to_string())?;
        ensure(v == p, || {
            format!("r = {r}: optimized zeta = 0 differs from phase control")
        })?;
    }
    Ok(format!(
        "max |a1s| {worst_a1s:.1e}; control PSD slope {slope:.4}; zeta = 0 bit-exact"
    ))
}

fn criterion_6() -> Check {
    let targets = CalibrationTargets::default();
    let (cfg, _, _) = cmd_calibrate(&targets, &RunConfig::default()).map_err(|e| format!("calibration failed: {e}"))?;

    let free = cmd_optimize(
        &RunConfig {
            scheme: SchemeName::None,
            ..cfg
        },
        100.0,
    )
    .map_err(|e| e.to_string())?;
    let locked = cmd_optimize(
        &RunConfig {
            scheme: SchemeName::Phase,
            ..cfg
        },
        100.0,
    )
    .map_err(|e| e.to_string())?;
    let gain = free.total_asd_at_f / locked.total_asd_at_f;

    let mut failures = Vec::new();
    if free.best_n_ietm != 2 {
        failures.push(format!("uncontrolled optimum n_i = {}, want 2", free.best_n_ietm));
    }
    if locked.best_n_ietm != 1 {
        failures.push(format!("controlled optimum n_i = {}, want 1", locked.best_n_ietm));
    }
    if (gain - 2.5).abs() > 0.5 {
        failures.push(format!("controlled gain {gain:.4}, want 2.5 +- 0.5"));
    }
    let summary = format!(
        "targets met; n_i = {} uncontrolled, {} controlled; gain {gain:.4}",
        free.best_n_ietm, locked.best_n_ietm
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}: {}", failures.join("; ")))
    }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn criterion_7() -> Check {
    runner(10_000)
        .run(&(0.0f64..=1.0, 0.0f64..=1.0), |(a, b)| {
            let ab = compound_reflectivity(a, b).unwrap();
            let ba = compound_reflectivity(b, a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab >= a.max(b) - 1e-15 && ab <= 1.0 + 1e-15, "r({a}, {b}) = {ab}");
            Ok(())
        })
        .map_err(|e| format!("compound reflectivity: {e}"))?;

    for n in 0..MAX_LAYERS {
        let (lo, hi) = (coating_reflectivity(n), coating_reflectivity(n + 1));
        ensure(hi > lo, || {
            format!("coating reflectivity not increasing at N = {n}: {lo} -> {hi}")
        })?;
    }

    let mut specs = 0usize;
    for loss in [0.0, 1e-6, 50e-6, 1e-3] {
        for n in 0..=MAX_LAYERS {
            if let Ok(m) = MirrorSpec::from_layers(n, loss) {
                specs += 1;
                ensure(m.energy_residual().abs() <= 1e-12, || {
                    format!("N = {n}, loss {loss}: residual {:e}", m.energy_residual())
                })?;
            }
        }
    }
    runner(2_000)
        .run(&(0.0f64..0.9999, 0.0f64..1e-4), |(r, loss)| {
            let m = MirrorSpec::from_reflectivity(r, loss).unwrap();
            prop_assert!(m.energy_residual().abs() <= 1e-12);
            Ok(())
        })
        .map_err(|e| format!("energy conservation: {e}"))?;
    specs += 2_000;

    let base = RunConfig {
        ietm_layers: Some(1),
        ..RunConfig::default()
    };
    let mut rows = 0usize;
    for scheme in [
        SchemeName::None,
        SchemeName::Phase,
        SchemeName::Variational,
        SchemeName::VariationalIdeal,
    ] {
        let cfg = RunConfig {
            scheme,
            zeta: 0.3,
            ..base
        };
        let budget = cmd_budget(&cfg, 1.0, 1e4, 97).map_err(|e| e.to_string())?;
        ensure(budget.columns.len() == COLUMNS.len(), || "column count".into())?;
        for row in &budget.rows {
            rows += 1;
            let sum = row.sources().iter().map(|v| v * v).sum::<f64>().sqrt();
            ensure(row.values().iter().all(|v| *v >= 0.0), || {
                format!("negative entry at {} Hz", row.frequency_hz)
            })?;
            ensure(rel(row.total, sum) <= 1e-12 || (sum == 0.0 && row.total == 0.0), || {
                format!("{}: total {:e} vs quadrature sum {sum:e}", scheme.as_str(), row.total)
            })?;
        }
    }

    let model = ThermalNoiseModel::default();
    let params = QuantumParams::default();
    let losses = MirrorLosses::default();
    let budgets = [0.1, 0.5, 1.0];
    let grid: Vec<f64> = (0..60).map(|i| 0.2 + 0.79 * i as f64 / 59.0).collect();
    // fixed stride permutation, coprime with the grid length
    let shuffled: Vec<f64> = (0..grid.len()).map(|i| grid[(i * 7) % grid.len()]).collect();
    for scheme in [ControlScheme::NONE, ControlScheme::phase(SidebandRatio::Optimized)] {
        let reference = sweep_reflectivity_with(
            &model,
            &params,
            &losses,
            &budgets,
            100.0,
            &scheme,
            &grid,
            Execution::Sequential,
        )
        .map_err(|e| e.to_string())?;
        for exec in Execution::available() {
            let permuted =
                sweep_reflectivity_with(&model, &params, &losses, &budgets, 100.0, &scheme, &shuffled, *exec)
                    .map_err(|e| e.to_string())?;
            for (a, b) in reference.iter().zip(&permuted) {
                for (i, p) in b.points.iter().enumerate() {
                    let q = &a.points[(i * 7) % grid.len()];
                    ensure(p == q, || {
                        format!("sweep point differs under permutation ({})", exec.name())
                    })?;
                }
            }
        }
    }
    Ok(format!(
        "10^4 pairs, N = 0..{MAX_LAYERS}, {specs} mirror specs, {rows} budget rows, sweeps order/strategy invariant"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("exact low-N reflectivity", Duration::from_millis(100), criterion_1),
        ("control-noise limit consistency", Duration::from_secs(1), criterion_2),
        ("quantum minimum over K", Duration::from_secs(1), criterion_3),
        (
            "optimized phase control closed form",
            Duration::from_secs(5),
            criterion_4,
        ),
        ("variational cancellation", Duration::from_secs(1), criterion_5),
        ("calibrated optima", Duration::from_secs(30), criterion_6),
        ("property suites", Duration::from_secs(10), criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > *limit => Err(format!("{msg}; took {elapsed:.2?}, limit {limit:.0?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS [{}] {name}: {msg} ({elapsed:.2?})", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{}] {name}: {msg} ({elapsed:.2?})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
