//! One function per experiment kind; each returns its artifacts in memory.

use std::fmt::Write as _;

use fracspde::frac_time::rl_integral;
use fracspde::kernels::{kernel_field, scaling_check};
use fracspde::lp_check::{
    adversarial_family, lp_inequality_check_multi, white_noise_spectrum, EstimateConfig, LpSource,
    SlopeConfig,
};
use fracspde::mittag_leffler::{ml_eval_detailed, Branch, MLParams};
use fracspde::noise::{sample_noise, NoiseBasis};
use fracspde::solver::{NoiseForcing, SpectralSolver};
use fracspde::{FracOrders, SampledPath, Warning};
use serde::Serialize;
use serde_json::json;

use crate::config::{Kind, RunConfig};
use crate::output::{csv_table, Artifacts};
use crate::HarnessError;

pub fn dispatch(config: &RunConfig) -> Result<Artifacts, HarnessError> {
    match config.kind {
        Kind::Ml => ml(config),
        Kind::Fraccalc => fraccalc(config),
        Kind::Kernel => kernel(config),
        Kind::Solve => solve(config),
        Kind::Lp => lp(config),
        Kind::Sweep => sweep(config),
    }
}

fn warning_lines(out: &mut String, warnings: &[Warning]) {
    for w in warnings {
        let _ = writeln!(out, "warning: {w}");
    }
}

/// Closed form of `E_{a,b}(z)` where one is known.
pub fn ml_reference(a: f64, b: f64, z: f64) -> Option<f64> {
    match (a, b) {
        (1.0, 1.0) => Some(z.exp()),
        (1.0, 2.0) if z != 0.0 => Some((z.exp() - 1.0) / z),
        (2.0, 1.0) if z <= 0.0 => Some((-z).sqrt().cos()),
        (2.0, 1.0) => Some(z.sqrt().cosh()),
        (2.0, 2.0) if z < 0.0 => Some((-z).sqrt().sin() / (-z).sqrt()),
        _ => None,
    }
}

#[derive(Serialize)]
struct MlRow {
    z: f64,
    value: f64,
    branch: &'static str,
    error_estimate: f64,
    reference: Option<f64>,
    abs_error: Option<f64>,
    rel_error: Option<f64>,
}

fn ml(config: &RunConfig) -> Result<Artifacts, HarnessError> {
    let c = &config.ml;
    let params = MLParams::new(c.a, c.b)?;
    let rows = (0..c.samples)
        .map(|i| {
            let z = c.z_min + (c.z_max - c.z_min) * i as f64 / (c.samples - 1) as f64;
            let v = ml_eval_detailed(&params, z)?;
            let reference = ml_reference(c.a, c.b, z);
            let abs_error = reference.map(|r| (v.value - r).abs());
            Ok(MlRow {
                z,
                value: v.value,
                branch: match v.branch {
                    Branch::Exact => "exact",
                    Branch::Series => "series",
                    Branch::Asymptotic => "asymptotic",
                },
                error_estimate: v.error_estimate,
                reference,
                abs_error,
                rel_error: reference.zip(abs_error).map(|(r, e)| e / r.abs().max(1.0)),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let mut summary = format!(
        "E_{{{},{}}} on [{}, {}], {} samples\n",
        c.a, c.b, c.z_min, c.z_max, c.samples
    );
    let max_abs = rows
        .iter()
        .filter_map(|r| r.abs_error)
        .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))));
    match max_abs {
        Some(e) => {
            let rel = rows.iter().filter_map(|r| r.rel_error).fold(0.0, f64::max);
            let _ = writeln!(summary, "max abs error vs closed form: {e:e}");
            let _ = writeln!(summary, "max error relative to max(1, |E|): {rel:e}");
        }
        None => summary.push_str("no closed form for these parameters\n"),
    }
    Ok(Artifacts {
        tables: vec![("ml.csv".into(), csv_table(&rows))],
        reports: vec![json!({"kind": "ml", "a": c.a, "b": c.b, "max_abs_error": max_abs})],
        summary,
        ..Artifacts::default()
    })
}

#[derive(Serialize)]
struct FracRow {
    t: f64,
    nested: f64,
    direct: f64,
    diff: f64,
}

fn semigroup_rows(t_end: f64, n: usize, a: f64, b: f64) -> Result<Vec<FracRow>, HarnessError> {
    let path = SampledPath::from_fn(fracspde::TimeGrid::new(t_end, n)?, f64::sin)?;
    let nested = rl_integral(&rl_integral(&path, b)?, a)?;
    let direct = rl_integral(&path, a + b)?;
    Ok(path
        .grid
        .nodes()
        .into_iter()
        .zip(nested.values.iter().zip(&direct.values))
        .map(|(t, (&x, &y))| FracRow {
            t,
            nested: x,
            direct: y,
            diff: (x - y).abs(),
        })
        .collect())
}

fn fraccalc(config: &RunConfig) -> Result<Artifacts, HarnessError> {
    let (a, b) = (config.fraccalc.a, config.fraccalc.b);
    let tg = config.time_grid()?;
    let rows = semigroup_rows(tg.t_end, tg.n_steps, a, b)?;
    let fine = semigroup_rows(tg.t_end, 2 * tg.n_steps, a, b)?;
    let scale = (0..=2 * tg.n_steps)
        .map(|j| (j as f64 * tg.t_end / (2 * tg.n_steps) as f64).sin().abs())
        .fold(0.0, f64::max);
    let e1 = rows.iter().map(|r| r.diff).fold(0.0, f64::max) / scale;
    let e2 = fine.iter().map(|r| r.diff).fold(0.0, f64::max) / scale;
    let summary = format!(
        "phi = sin on [0, {}]: |I^{a} I^{b} phi - I^{} phi|_inf / |phi|_inf\n{} steps: {e1:e}\n{} steps: {e2:e}\nrefinement ratio: {:.3}\n",
        tg.t_end,
        a + b,
        tg.n_steps,
        2 * tg.n_steps,
        e1 / e2
    );
    Ok(Artifacts {
        tables: vec![("semigroup.csv".into(), csv_table(&rows))],
        reports: vec![
            json!({"kind": "fraccalc", "a": a, "b": b, "discrepancy": e1, "refined": e2}),
        ],
        summary,
        ..Artifacts::default()
    })
}

fn kernel(config: &RunConfig) -> Result<Artifacts, HarnessError> {
    let o = config.frac_orders()?;
    let grid = config.torus()?;
    let t = config.kernel.t;
    let p = kernel_field(o, t, &grid)?;
    let scaling = scaling_check(o, t, &grid)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..grid.dim).map(|a| format!("x{a}")).collect();
    header.push("p".into());
    w.write_record(&header)
        .map_err(|e| HarnessError::Io(e.into()))?;
    for (k, v) in p.value.values.iter().enumerate() {
        let x = grid.point(k);
        let mut rec: Vec<String> = x[..grid.dim].iter().map(|c| c.to_string()).collect();
        rec.push(v.to_string());
        w.write_record(&rec)
            .map_err(|e| HarnessError::Io(e.into()))?;
    }
    let table = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8");
    let mass = p.value.integral();
    let min = p.value.values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut summary = format!(
        "p(t, x) for alpha = {}, t = {t}, d = {}, n = {}, L = {}\nmass: {mass:.15}\nmin: {min:e}\nscaling discrepancy: {:e}\n",
        o.alpha, grid.dim, grid.n, grid.side, scaling.value
    );
    warning_lines(&mut summary, &p.warnings);
    warning_lines(&mut summary, &scaling.warnings);
    Ok(Artifacts {
        tables: vec![("kernel.csv".into(), table)],
        reports: vec![
            json!({"kind": "kernel", "mass": mass, "min": min, "scaling": scaling.value, "warnings": p.warnings}),
        ],
        summary,
        fields: vec![("kernel.bin".into(), p.value)],
        ..Artifacts::default()
    })
}

#[derive(Serialize)]
struct ShellRow {
    m2: i64,
    xi: f64,
    count: usize,
    measured: f64,
    band: f64,
    oracle: f64,
}

fn solve(config: &RunConfig) -> Result<Artifacts, HarnessError> {
    let o = config.frac_orders()?;
    let grid = config.torus()?;
    let tg = config.time_grid()?;
    let stats = white_noise_spectrum(&o, grid, tg, config.replicates, config.seed, i64::MAX)?;
    let rows: Vec<ShellRow> = stats
        .iter()
        .map(|s| ShellRow {
            m2: s.m2,
            xi: s.xi,
            count: s.count,
            measured: s.mean,
            band: s.band,
            oracle: s.oracle,
        })
        .collect();
    let basis = NoiseBasis::fourier_white(grid, None)?;
    let noise = sample_noise(config.seed, tg, basis.len())?;
    let u = SpectralSolver::new(o, grid, tg).stochastic_final(
        NoiseForcing::Basis {
            basis: &basis,
            h: None,
        },
        &noise,
    )?;
    let band = config.tolerances.band;
    let wide = rows.iter().filter(|r| r.band > band).count();
    let mut summary = format!(
        "white-noise solution, alpha = {}, beta = {}, d = {}, n = {}, L = {}, T = {}, {} steps, {} replicates\n",
        o.alpha, o.beta, grid.dim, grid.n, grid.side, tg.t_end, tg.n_steps, config.replicates
    );
    let _ = writeln!(
        summary,
        "shells: {}, with band > {band}: {wide}",
        rows.len()
    );
    if wide > 0 {
        summary.push_str("inconclusive: confidence bands too wide\n");
    }
    let reports = rows
        .iter()
        .map(|r| json!({"kind": "solve", "m2": r.m2, "measured": r.measured, "oracle": r.oracle, "band": r.band}))
        .collect();
    Ok(Artifacts {
        tables: vec![("spectrum.csv".into(), csv_table(&rows))],
        reports,
        summary,
        fields: vec![("u_final.bin".into(), u.inverse())],
        inconclusive: wide > 0,
    })
}

#[derive(Serialize)]
struct LpRow {
    sample: usize,
    family: String,
    p: f64,
    ratio: f64,
    plancherel_ratio: Option<f64>,
}

fn lp(config: &RunConfig) -> Result<Artifacts, HarnessError> {
    let o = config.frac_orders()?;
    let grid = config.torus()?;
    let tg = config.time_grid()?;
    let c = &config.lp;
    let max_mode = if c.max_mode == 0 {
        grid.n as i64 / 4
    } else {
        c.max_mode
    };
    let samples = adversarial_family(c.samples, grid.dim, max_mode, tg.t_end, config.seed)
        .into_iter()
        .map(|s| Ok((s.family.clone(), s.sample(grid, tg)?)))
        .collect::<Result<Vec<(String, LpSource)>, HarnessError>>()?;
    let reports = lp_inequality_check_multi(&o, &c.p, &samples)?;
    let mut rows = Vec::new();
    let mut nd = Vec::new();
    let mut summary = format!(
        "Littlewood-Paley ratios, alpha = {}, beta = {}, d = {}, n = {}, {} steps, {} samples\n",
        o.alpha, o.beta, grid.dim, grid.n, tg.n_steps, c.samples
    );
    for rep in &reports {
        for (i, (fam, r)) in rep.families.iter().zip(&rep.ratios).enumerate() {
            let pl = rep.plancherel_ratios.get(i).copied();
            nd.push(json!({
                "family": fam,
                "grid": {"dim": grid.dim, "n": grid.n, "side": grid.side, "n_steps": tg.n_steps, "t_end": tg.t_end},
                "orders": {"alpha": o.alpha, "beta": o.beta},
                "p": rep.p,
                "ratio": r,
                "plancherel_ratio": pl,
                "bands": null,
            }));
            rows.push(LpRow {
                sample: i,
                family: fam.clone(),
                p: rep.p,
                ratio: *r,
                plancherel_ratio: pl,
            });
        }
        let _ = write!(summary, "p = {}: N* = {:.6}", rep.p, rep.n_star);
        if let Some(n2) = rep.n2_oracle {
            let _ = write!(summary, ", symbol bound N2* = {n2:.6}");
        }
        let _ = writeln!(summary, ", flagged quadratures: {}", rep.flagged);
    }
    Ok(Artifacts {
        tables: vec![("lp.csv".into(), csv_table(&rows))],
        reports: nd,
        summary,
        ..Artifacts::default()
    })
}

#[derive(Serialize)]
struct SweepRow {
    alpha: f64,
    beta: f64,
    predicted_gain: f64,
    oracle_gain: f64,
    measured_gain: f64,
    max_band: f64,
}

fn sweep(config: &RunConfig) -> Result<Artifacts, HarnessError> {
    let base = config.frac_orders()?;
    let grid = config.torus()?;
    let tg = config.time_grid()?;
    let [lo, hi] = config.sweep.modes;
    let mut rows = Vec::new();
    for &beta in &config.sweep.betas {
        let o = FracOrders::with_kappa(base.alpha, beta, base.kappa)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let cfg = EstimateConfig {
            gamma: 0.0,
            p: 2.0,
            replicates: config.replicates,
            seed: config.seed,
            levels: Vec::new(),
            slope: Some(SlopeConfig {
                grid,
                time_grid: tg,
                modes: (lo, hi),
                replicates: config.replicates,
            }),
        };
        let r = fracspde::lp_check::apriori_estimate_check(&o, &cfg)?;
        let s = r.slope.expect("slope requested");
        rows.push(SweepRow {
            alpha: o.alpha,
            beta,
            predicted_gain: o.c1(),
            oracle_gain: -0.5 * s.oracle_slope,
            measured_gain: -0.5 * s.measured_slope,
            max_band: s.bands.iter().copied().fold(0.0, f64::max),
        });
    }
    let band = config.tolerances.band;
    let inconclusive = rows.iter().any(|r| r.max_band > band);
    let mut summary = format!(
        "regularity gain from E|u(T,xi)|^2 ~ |xi|^(-2 gain), |m| in [{lo}, {hi}], {} replicates\n",
        config.replicates
    );
    for r in &rows {
        let _ = writeln!(
            summary,
            "beta = {}: predicted {:.4}, oracle {:.4}, measured {:.4}, max band {:.3}",
            r.beta, r.predicted_gain, r.oracle_gain, r.measured_gain, r.max_band
        );
    }
    if inconclusive {
        summary.push_str("inconclusive: confidence bands too wide\n");
    }
    let reports = rows
        .iter()
        .map(|r| json!({"kind": "sweep", "alpha": r.alpha, "beta": r.beta, "predicted": r.predicted_gain, "oracle": r.oracle_gain, "measured": r.measured_gain, "band": r.max_band}))
        .collect();
    Ok(Artifacts {
        tables: vec![("sweep.csv".into(), csv_table(&rows))],
        reports,
        summary,
        inconclusive,
        ..Artifacts::default()
    })
}
