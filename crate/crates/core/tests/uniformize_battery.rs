//! Averaged-norm battery on the roofed cat-map suspension: correction-term
//! bounds, the cocycle identity, and the window sweep that drives the rate
//! toward its Lyapunov exponent with shrinking flow derivative.

use anosov_core::backend::Backend;
use anosov_core::ergodic::{birkhoff, SeriesKey};
use anosov_core::series::OrbitSeries;
use anosov_core::suspension::SuspensionBackend;
use anosov_core::uniformize::{
    cocycle_residual, domination_check, uniformized_rate, UniformizeConfig, UniformizedRate,
};

fn suspension_series(eps: f64, delta: f64, dt: f64, n: usize) -> OrbitSeries {
    let backend = Backend::Suspension(SuspensionBackend::new(eps, delta, 60).unwrap());
    backend.sample_seeded(5, dt, n).unwrap()
}

fn spread(series: &OrbitSeries) -> f64 {
    let max = series.r_u().iter().cloned().fold(f64::MIN, f64::max);
    let min = series.r_u().iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

fn sweep_at(series: &OrbitSeries, window_t: f64) -> (UniformizedRate, UniformizeConfig) {
    let eps_t = 1.0 / (window_t * window_t);
    let cfg = UniformizeConfig::with_default_horizon(window_t, eps_t, None).unwrap();
    let out = uniformized_rate(series, &cfg, 25).unwrap();
    (out, cfg)
}

#[test]
fn correction_terms_stay_in_their_bands() {
    let dt = 0.005;
    let series = suspension_series(0.0, 0.3, dt, 120_000);
    let delta_hat = spread(&series);
    for &t_win in &[1.0f64, 4.0] {
        let (out, cfg) = sweep_at(&series, t_win);
        assert!(!out.r_ut.is_empty());
        let band_lo = cfg.eps_t * (-t_win * delta_hat).exp();
        let band_hi = cfg.eps_t * (t_win * delta_hat).exp();
        for (a, b) in out.a_t.iter().zip(&out.b_t) {
            assert!(a.abs() <= 1.0, "|A_T| = {}", a.abs());
            assert!(*b > 0.0);
            // pad the band by the truncation share of the norm
            let pad = 1.0 + 0.12;
            assert!(
                *b >= band_lo / pad && *b <= band_hi * pad,
                "B_T = {b} outside [{band_lo}, {band_hi}] at T = {t_win}"
            );
        }
    }
}

#[test]
fn cocycle_identity_holds() {
    let dt = 0.005;
    let series = suspension_series(0.0, 0.3, dt, 80_000);
    let cfg = UniformizeConfig::new(1.0, 1.0, 5.0).unwrap();
    let worst = cocycle_residual(&series, &cfg, 300, 99).unwrap();
    assert!(worst < 1e-9, "cocycle residual {worst}");
}

#[test]
fn window_sweep_flattens_the_rate() {
    let dt = 0.005;
    let series = suspension_series(0.02, 0.3, dt, 120_000);
    let mean = birkhoff(&series, SeriesKey::RateU).unwrap().mean;

    let (out1, _) = sweep_at(&series, 1.0);
    let (out4, _) = sweep_at(&series, 4.0);
    let sup1 = out1
        .x_r_ut
        .iter()
        .cloned()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let sup4 = out4
        .x_r_ut
        .iter()
        .cloned()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(
        sup4 < sup1,
        "sup |X.r_uT| should fall with the window: {sup1} -> {sup4}"
    );

    // r_uT approaches the Birkhoff mean on most common base points
    let common: Vec<usize> = out4
        .base_index
        .iter()
        .filter(|i| out1.base_index.contains(i))
        .cloned()
        .collect();
    assert!(common.len() > 50);
    // the short 1 -> 4 window step only shrinks the averaging variance 4x,
    // so a strict majority is the right expectation here; the 4 -> 64 step
    // with its >= 90% fraction runs in the acceptance suite
    let mut improved = 0usize;
    for &idx in &common {
        let p1 = out1.base_index.iter().position(|&j| j == idx).unwrap();
        let p4 = out4.base_index.iter().position(|&j| j == idx).unwrap();
        if (out4.r_ut[p4] - mean).abs() <= (out1.r_ut[p1] - mean).abs() {
            improved += 1;
        }
    }
    assert!(
        improved as f64 >= 0.55 * common.len() as f64,
        "only {improved}/{} points improved",
        common.len()
    );
}

#[test]
fn domination_bound_holds_and_is_not_vacuous() {
    let dt = 0.005;
    let series = suspension_series(0.0, 0.3, dt, 80_000);
    // short window: both ends of the gap integral can sit on extreme fibers,
    // so the bound should be approached within a factor of two
    let cfg = UniformizeConfig::new(0.5, 1.0, 2.5).unwrap();
    let rep = domination_check(&series, &cfg, 1).unwrap();
    assert_eq!(rep.violations, 0);
    assert!(rep.max_abs_term <= rep.bound + 1e-9);
    assert!(
        rep.tightness > 0.5,
        "bound looks vacuous: tightness {}",
        rep.tightness
    );
}
