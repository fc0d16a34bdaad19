//! Command implementations: thin orchestration over the core operations,
//! with CSV emission and a JSON report per run.

use std::path::Path;

use anosov_core::backend::Backend;
use anosov_core::contact::{
    dirichlet_energy, h_matrix, realize_ricci, tanno_residual_canonical, torsion_series, torsion_sq,
};
use anosov_core::ergodic::{birkhoff, pesin_entropy, SeriesKey};
use anosov_core::numeric::trapezoid_mean;
use anosov_core::series::OrbitSeries;
use anosov_core::uniformize::{
    cocycle_residual, domination_check, uniformized_rate, UniformizeConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Config, ConfigError};
use crate::output::{CsvWriter, RunReport};

#[derive(Debug)]
pub enum CmdError {
    /// exit 2
    Config(String),
    /// exit 3
    Numeric(String),
    /// exit 1
    Identity(String),
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Config(e.to_string())
    }
}

impl From<anosov_core::Error> for CmdError {
    fn from(e: anosov_core::Error) -> Self {
        CmdError::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Numeric(format!("io error: {e}"))
    }
}

fn require_anosov(backend: &Backend) -> Result<(), CmdError> {
    if !backend.info().is_anosov {
        return Err(CmdError::Config(format!(
            "backend is not Anosov: {}",
            backend.info().name
        )));
    }
    Ok(())
}

fn require_contact(backend: &Backend) -> Result<(), CmdError> {
    if !backend.info().is_contact {
        return Err(CmdError::Config(format!(
            "backend is not contact: {}",
            backend.info().name
        )));
    }
    Ok(())
}

fn sample_ensemble(
    cfg: &Config,
    backend: &Backend,
    seed_override: Option<u64>,
) -> Result<Vec<OrbitSeries>, CmdError> {
    let seeds = cfg.seeds(seed_override);
    backend
        .sample_ensemble(&seeds, cfg.dt, cfg.samples())
        .map_err(|e| CmdError::Numeric(e.to_string()))
}

/// Liouville entropy rate: closed form when the backend has one, ensemble
/// estimate otherwise.
fn h_bar_estimate(
    backend: &Backend,
    ensemble: &[OrbitSeries],
    report: &mut RunReport,
) -> Result<(f64, f64), CmdError> {
    if let Some(h) = backend.h_bar_closed_form() {
        return Ok((h, 0.0));
    }
    if ensemble.len() >= 4 {
        let rep = pesin_entropy(ensemble)?;
        if rep.inconsistent {
            report.warn("entropy ensemble inconsistent beyond 5 sigma");
        }
        Ok((rep.h_bar, rep.stderr))
    } else {
        report.warn("ensemble < 4 orbits: entropy pooled without consistency checks");
        let means: Vec<f64> = ensemble
            .iter()
            .map(|s| birkhoff(s, SeriesKey::RateU).map(|e| e.mean))
            .collect::<Result<_, _>>()?;
        let mean = means.iter().sum::<f64>() / means.len() as f64;
        Ok((mean, 0.0))
    }
}

pub fn cmd_entropy(
    cfg: &Config,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CmdError> {
    let backend = cfg.build_backend()?;
    require_anosov(&backend)?;
    let mut report = RunReport::new("entropy", cfg);
    let ensemble = sample_ensemble(cfg, &backend, seed_override)?;

    for series in &ensemble {
        let mut csv = CsvWriter::create(
            &out.join(format!("entropy_orbit_{}.csv", series.seed())),
            &["t", "running_mean_r_u", "batch_stderr"],
        )?;
        let prefix = series.stretch_prefix();
        let stride = cfg.csv_stride();
        let mut i = stride.max(1);
        while i < series.len() {
            let t = series.t(i);
            let mean = prefix[i] / (t - series.t0());
            let stderr = running_batch_stderr(series, prefix, i);
            csv.row(&[t, mean, stderr])?;
            i += stride;
        }
        csv.finish()?;
    }

    let (h_bar, stderr) = h_bar_estimate(&backend, &ensemble, &mut report)?;
    if ensemble.len() >= 4 {
        let rep = pesin_entropy(&ensemble)?;
        report.put("per_orbit_means", json!(rep.per_orbit_means));
    }
    report.put_f64("h_bar", h_bar);
    report.put_f64("h_bar_stderr", stderr);
    Ok(report)
}

fn running_batch_stderr(series: &OrbitSeries, prefix: &[f64], upto: usize) -> f64 {
    const B: usize = 10;
    if upto < 2 * B {
        return 0.0;
    }
    let mut means = [0.0f64; B];
    for (k, m) in means.iter_mut().enumerate() {
        let lo = upto * k / B;
        let hi = upto * (k + 1) / B;
        *m = (prefix[hi] - prefix[lo]) / (series.t(hi) - series.t(lo));
    }
    let grand = means.iter().sum::<f64>() / B as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (B - 1) as f64;
    (var / B as f64).sqrt()
}

pub fn cmd_energy(
    cfg: &Config,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CmdError> {
    let backend = cfg.build_backend()?;
    require_contact(&backend)?;
    let mut report = RunReport::new("energy", cfg);
    let params = cfg.metric_params()?;
    let ensemble = sample_ensemble(cfg, &backend, seed_override)?;
    let energy = dirichlet_energy(&ensemble, &params, &backend.info())?;
    let (h_bar, h_stderr) = h_bar_estimate(&backend, &ensemble, &mut report)?;

    let mut csv = CsvWriter::create(&out.join("energy.csv"), &["seed", "mean_lambda_sq"])?;
    let mut sorted: Vec<&OrbitSeries> = ensemble.iter().collect();
    sorted.sort_by_key(|s| s.seed());
    for (s, m) in sorted.iter().zip(&energy.per_orbit_means) {
        csv.row(&[s.seed() as f64, *m])?;
    }
    csv.finish()?;

    let gap = energy.e_bar - h_bar * h_bar;
    let sigma = energy.stderr + 2.0 * h_bar.abs() * h_stderr;
    let jensen_violated = gap < -4.0 * sigma - 1e-12;
    if jensen_violated {
        report.warn(format!(
            "Jensen floor violated: gap {gap} below -4 sigma ({sigma})"
        ));
    }
    report.put_f64("e_bar", energy.e_bar);
    report.put_f64("e_bar_stderr", energy.stderr);
    if let Some(total) = energy.e_total {
        report.put_f64("e_total", total);
    }
    report.put_f64("h_bar", h_bar);
    report.put_f64("h_bar_sq", h_bar * h_bar);
    report.put_f64("gap", gap);
    report.put_f64("mean_gauged_rate", energy.mean_gauged_rate);
    report.put("jensen_violated", json!(jensen_violated));
    Ok(report)
}

pub fn cmd_uniformize(
    cfg: &Config,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CmdError> {
    let backend = cfg.build_backend()?;
    require_anosov(&backend)?;
    let mut report = RunReport::new("uniformize", cfg);
    let seeds = cfg.seeds(seed_override);
    let series = backend
        .sample_seeded(seeds[0], cfg.dt, cfg.samples())
        .map_err(|e| CmdError::Numeric(e.to_string()))?;
    let stride = cfg.uniformize_stride.unwrap_or(25).max(1);
    let is_contact = backend.info().is_contact;

    let mut sweep = Vec::new();
    for (k, &window) in cfg.uniformize_windows().iter().enumerate() {
        let (eps, floored) = cfg.eps_for(&series, window);
        if floored {
            report.warn(format!(
                "eps floor engaged at window {window}: schedule fell below 1e-6"
            ));
        }
        let ucfg = UniformizeConfig::with_default_horizon(
            window,
            eps,
            cfg.horizon_cap.filter(|c| *c > 0.0),
        )
        .map_err(|e| CmdError::Numeric(e.to_string()))?;
        let rates = uniformized_rate(&series, &ucfg, stride)?;
        let mut csv = CsvWriter::create(
            &out.join(format!("uniformize_T{k}.csv")),
            &["t", "r_u", "r_uT", "x_r_uT", "A_T", "B_T"],
        )?;
        for (i, &idx) in rates.base_index.iter().enumerate() {
            csv.row(&[
                rates.base_t[i],
                series.r_u()[idx],
                rates.r_ut[i],
                rates.x_r_ut[i],
                rates.a_t[i],
                rates.b_t[i],
            ])?;
        }
        csv.finish()?;
        let sup_x = rates
            .x_r_ut
            .iter()
            .cloned()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let e_bar_t = if is_contact {
            let sq: Vec<f64> = rates.r_ut.iter().map(|r| r * r).collect();
            Some(trapezoid_mean(&sq))
        } else {
            None
        };
        sweep.push(json!({
            "window": window,
            "eps": eps,
            "horizon": ucfg.horizon,
            "sup_abs_x_r_ut": sup_x,
            "truncation_error_bound": rates.truncation_error_bound,
            "e_bar_of_window": e_bar_t,
            "points": rates.base_t.len(),
        }));
    }
    report.put("sweep", json!(sweep));
    Ok(report)
}

pub fn cmd_curvature(
    cfg: &Config,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CmdError> {
    let backend = cfg.build_backend()?;
    require_contact(&backend)?;
    let mut report = RunReport::new("curvature", cfg);
    let params = cfg.metric_params()?;
    let ensemble = sample_ensemble(cfg, &backend, seed_override)?;

    let ts = torsion_series(&ensemble[0], &params)?;
    let mut csv = CsvWriter::create(
        &out.join("curvature.csv"),
        &["t", "lambda_sq", "ricci_x", "kappa_u", "kappa_s"],
    )?;
    let stride = cfg.csv_stride();
    for (i, s) in ts.samples.iter().enumerate() {
        if i % stride == 0 {
            csv.row(&[s.t, s.lambda_sq, s.ricci_x, s.kappa_u, s.kappa_s])?;
        }
    }
    csv.finish()?;

    let mut lam = Vec::new();
    let mut ricci = Vec::new();
    let mut ku = Vec::new();
    let mut ks = Vec::new();
    for series in &ensemble {
        let t = torsion_series(series, &params)?;
        lam.push(trapezoid_mean(
            &t.samples.iter().map(|x| x.lambda_sq).collect::<Vec<_>>(),
        ));
        ricci.push(trapezoid_mean(
            &t.samples.iter().map(|x| x.ricci_x).collect::<Vec<_>>(),
        ));
        ku.push(trapezoid_mean(
            &t.samples.iter().map(|x| x.kappa_u).collect::<Vec<_>>(),
        ));
        ks.push(trapezoid_mean(
            &t.samples.iter().map(|x| x.kappa_s).collect::<Vec<_>>(),
        ));
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    report.put_f64("mean_lambda_sq", avg(&lam));
    report.put_f64("mean_ricci_x", avg(&ricci));
    report.put_f64("mean_kappa_u", avg(&ku));
    report.put_f64("mean_kappa_s", avg(&ks));
    Ok(report)
}

pub fn cmd_realize(
    cfg: &Config,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CmdError> {
    let backend = cfg.build_backend()?;
    let Backend::Algebraic(ref alg) = backend else {
        return Err(CmdError::Config(
            "realization requires the algebraic backend (constant rates)".into(),
        ));
    };
    let mut report = RunReport::new("realize", cfg);
    let seeds = cfg.seeds(seed_override);
    let series = backend
        .sample_seeded(seeds[0], cfg.dt, cfg.samples())
        .map_err(|e| CmdError::Numeric(e.to_string()))?;
    let (eta, sigma) = cfg.eta_sigma();
    let outcome = realize_ricci(&series, alg.h_bar(), &eta, &sigma, 0.1)?;

    let mut csv = CsvWriter::create(
        &out.join("realize.csv"),
        &["t", "f_target", "ricci_achieved", "diff"],
    )?;
    let stride = cfg.csv_stride();
    for i in (0..series.len()).step_by(stride) {
        csv.row(&[
            series.t(i),
            outcome.f_target[i],
            outcome.ricci_achieved[i],
            outcome.ricci_achieved[i] - outcome.f_target[i],
        ])?;
    }
    csv.finish()?;
    report.put_f64("max_pointwise_diff", outcome.max_pointwise_diff);
    report.put_f64("max_constant_ricci", 2.0 - 2.0 * alg.h_bar() * alg.h_bar());
    Ok(report)
}

pub fn cmd_tanno(
    cfg: &Config,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CmdError> {
    let backend = cfg.build_backend()?;
    if !matches!(backend, Backend::Algebraic(_)) {
        return Err(CmdError::Config(
            "the criticality residual is assembled on the algebraic backend only".into(),
        ));
    }
    let params = cfg.metric_params()?;
    if !params.is_canonical() {
        return Err(CmdError::Config(
            "criticality residual requires the canonical metric (f and theta offsets zero)".into(),
        ));
    }
    let mut report = RunReport::new("tanno", cfg);
    let ensemble = sample_ensemble(cfg, &backend, seed_override)?;
    let tanno = tanno_residual_canonical(&ensemble, &params)?;

    let ts = torsion_series(&ensemble[0], &params)?;
    let lambda: Vec<f64> = ts.samples.iter().map(|x| x.lambda_sq.sqrt()).collect();
    let x_lambda = anosov_core::series::flow_derivative(&ensemble[0], &lambda)?;
    let mut csv = CsvWriter::create(&out.join("tanno.csv"), &["t", "lambda", "x_lambda"])?;
    let stride = cfg.csv_stride();
    for i in (0..lambda.len()).step_by(stride) {
        csv.row(&[ensemble[0].t(i), lambda[i], x_lambda[i]])?;
    }
    csv.finish()?;
    report.put_f64("residual", tanno.residual);
    report.put_f64("max_x_lambda", tanno.max_x_lambda);
    Ok(report)
}

pub fn cmd_orbit(
    cfg: &Config,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CmdError> {
    let backend = cfg.build_backend()?;
    let mut report = RunReport::new("orbit", cfg);
    let seeds = cfg.seeds(seed_override);
    let series = backend
        .sample_seeded(seeds[0], cfg.dt, cfg.samples())
        .map_err(|e| CmdError::Numeric(e.to_string()))?;
    let aux_keys: Vec<String> = series.aux_keys().map(String::from).collect();
    let mut header = vec!["t".to_string(), "r_u".to_string(), "r_s".to_string()];
    header.extend(aux_keys.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvWriter::create(&out.join("orbit.csv"), &header_refs)?;
    let stride = cfg.csv_stride();
    for i in (0..series.len()).step_by(stride) {
        let mut row = vec![series.t(i), series.r_u()[i], series.r_s()[i]];
        for key in &aux_keys {
            row.push(series.aux(key).unwrap()[i]);
        }
        csv.row(&row)?;
    }
    csv.finish()?;
    report.put_f64("samples", series.len() as f64);
    report.put("origin", json!(series.origin()));
    Ok(report)
}

struct IdentityCheck {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> IdentityCheck {
    IdentityCheck {
        name,
        value,
        tolerance,
        pass: value.abs() <= tolerance,
    }
}

/// The invariant battery: exits nonzero on any violation (CI gate).
pub fn cmd_identities(
    cfg: &Config,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CmdError> {
    let backend = cfg.build_backend()?;
    let info = backend.info();
    let mut report = RunReport::new("identities", cfg);
    let ensemble = sample_ensemble(cfg, &backend, seed_override)?;
    let series = &ensemble[0];
    let mut checks: Vec<IdentityCheck> = Vec::new();

    // semigroup property of the flow
    let semi_tol = if matches!(backend, Backend::Perturbed(_)) {
        1e-6
    } else {
        1e-8
    };
    let semi = backend
        .semigroup_residual(100, cfg.seeds(seed_override)[0])
        .map_err(|e| CmdError::Numeric(e.to_string()))?;
    checks.push(check("semigroup_residual", semi, semi_tol));

    if info.is_anosov {
        let min_gap = series
            .r_u()
            .iter()
            .zip(series.r_s())
            .map(|(u, s)| u - s)
            .fold(f64::MAX, f64::min);
        checks.push(IdentityCheck {
            name: "domination_r_u_gt_r_s",
            value: min_gap,
            tolerance: 0.0,
            pass: min_gap > 0.0,
        });
    }

    // angle constraint and torsion route agreement on sampled data
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut worst_det = 0.0f64;
    let mut worst_reduction = 0.0f64;
    for _ in 0..1000 {
        let r_u = series.r_u()[rng.gen_range(0..series.len())] + rng.gen_range(-0.05..0.05);
        let theta: f64 = rng.gen_range(0.15..std::f64::consts::PI - 0.15);
        let x_theta: f64 = rng.gen_range(-2.0..2.0);
        let r_s = (theta.cos() / theta.sin()) * x_theta - r_u;
        let m = h_matrix(r_u, r_s, theta, x_theta);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let closed = torsion_sq(r_u, theta, x_theta);
        worst_det = worst_det.max((-det / 4.0 - closed).abs() / closed.max(1.0));
        let reduced = torsion_sq(r_u, std::f64::consts::FRAC_PI_2, 0.0);
        worst_reduction = worst_reduction.max((reduced - r_u * r_u).abs());
    }
    checks.push(check("h_det_vs_torsion_sq", worst_det, 1e-8));
    checks.push(check("right_angle_reduction", worst_reduction, 1e-12));

    if info.is_contact {
        let params = cfg.metric_params()?;
        let ts = torsion_series(series, &params)?;
        let mut worst_angle = 0.0f64;
        let mut worst_ricci = 0.0f64;
        for (i, s) in ts.samples.iter().enumerate() {
            let residual =
                ts.r_s[i] + ts.r_u[i] - (ts.theta[i].cos() / ts.theta[i].sin()) * ts.x_theta[i];
            worst_angle = worst_angle.max(residual.abs());
            worst_ricci = worst_ricci.max((s.ricci_x - (2.0 - 2.0 * s.lambda_sq)).abs());
        }
        checks.push(check("angle_constraint_residual", worst_angle, 1e-10));
        checks.push(check("ricci_identity", worst_ricci, 0.0));

        let energy = dirichlet_energy(&ensemble, &params, &info)?;
        let floor = energy.mean_gauged_rate * energy.mean_gauged_rate;
        let jensen_slack = energy.e_bar - floor + 4.0 * energy.stderr + 1e-9;
        checks.push(IdentityCheck {
            name: "jensen_floor",
            value: jensen_slack,
            tolerance: 0.0,
            pass: jensen_slack >= 0.0,
        });
    }

    if info.is_anosov {
        let window = cfg.uniformize_windows()[0];
        let (eps, _) = cfg.eps_for(series, window);
        if let Ok(ucfg) = UniformizeConfig::with_default_horizon(
            window,
            eps,
            cfg.horizon_cap.filter(|c| *c > 0.0),
        ) {
            let cocycle = cocycle_residual(series, &ucfg, 100, 7)?;
            checks.push(check("cocycle_residual", cocycle, 1e-9));
            let rates = uniformized_rate(series, &ucfg, cfg.uniformize_stride.unwrap_or(25))?;
            let worst_a = rates
                .a_t
                .iter()
                .cloned()
                .fold(0.0f64, |m, a| m.max(a.abs()));
            checks.push(check("a_correction_in_unit_interval", worst_a, 1.0));
            let min_b = rates.b_t.iter().cloned().fold(f64::MAX, f64::min);
            checks.push(IdentityCheck {
                name: "b_correction_positive",
                value: min_b,
                tolerance: 0.0,
                pass: min_b > 0.0,
            });
            let dom = domination_check(series, &ucfg, 3)?;
            checks.push(IdentityCheck {
                name: "domination_bounded_term",
                value: dom.max_abs_term,
                tolerance: dom.bound,
                pass: dom.violations == 0,
            });
        }
    }

    let mut csv = CsvWriter::create(
        &out.join("identities.csv"),
        &["check", "value", "tolerance", "pass"],
    )?;
    let mut failed = Vec::new();
    for c in &checks {
        csv.row_mixed(
            c.name,
            &[c.value, c.tolerance, if c.pass { 1.0 } else { 0.0 }],
        )?;
        if !c.pass {
            failed.push(c.name);
        }
        report.put(
            c.name,
            json!({ "value": c.value, "tolerance": c.tolerance, "pass": c.pass }),
        );
    }
    csv.finish()?;
    if !failed.is_empty() {
        return Err(CmdError::Identity(format!(
            "identity violations: {}",
            failed.join(", ")
        )));
    }
    Ok(report)
}

/// Energy optimization is reachable through the library; the CLI exposes it
/// as part of `energy` when a bump basis with a budget is configured.
pub fn maybe_optimize(
    cfg: &Config,
    backend: &Backend,
    ensemble: &[OrbitSeries],
    report: &mut RunReport,
) -> Result<(), CmdError> {
    let Some(budget) = cfg.opt_budget else {
        return Ok(());
    };
    let centers = anosov_core::fields::octagon_bump_centers(cfg.basis_count.unwrap_or(16));
    let nm = anosov_core::optimize::NelderMeadConfig {
        budget,
        step: cfg.opt_step.unwrap_or(0.05),
        f_tol: 1e-10,
    };
    let (params, result) = anosov_core::optimize::optimize_energy(
        ensemble,
        &centers,
        cfg.basis_width.unwrap_or(0.4),
        &backend.info(),
        &nm,
    )?;
    let _ = params;
    if result.budget_exhausted {
        report.warn("optimizer budget exhausted before simplex collapse");
    }
    report.put_f64("optimized_e_bar", result.best_f);
    report.put("optimizer_evaluations", json!(result.evaluations));
    report.put(
        "optimizer_trace_tail",
        json!(result
            .trace
            .iter()
            .rev()
            .take(10)
            .rev()
            .cloned()
            .collect::<Vec<f64>>()),
    );
    Ok(())
}

/// Used by the energy command when optimization keys are present.
pub fn cmd_energy_with_optimizer(
    cfg: &Config,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CmdError> {
    let backend = cfg.build_backend()?;
    require_contact(&backend)?;
    let mut report = cmd_energy(cfg, out, seed_override)?;
    if cfg.opt_budget.is_some() {
        let ensemble = sample_ensemble(cfg, &backend, seed_override)?;
        maybe_optimize(cfg, &backend, &ensemble, &mut report)?;
    }
    Ok(report)
}
