//! Birkhoff averaging, Lyapunov exponents, and the Pesin entropy estimator.
//!
//! Uncertainty comes from batch means with 10 equal batches, the only error
//! model in this crate. The Lyapunov exponent is the stretch integral over
//! [0, T] divided by T, which coincides with the Birkhoff mean of r_u by
//! construction (identical quadrature); the identity is asserted.

use crate::error::{Error, Result};
use crate::numeric::trapezoid_mean;
use crate::series::{FlowBackend, OrbitSeries};

pub const BATCHES: usize = 10;

/// Which scalar of an orbit series to average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKey<'a> {
    RateU,
    RateS,
    Aux(&'a str),
}

/// A time average with its batch-means uncertainty.
#[derive(Debug, Clone, Copy)]
pub struct BirkhoffEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Total averaging time.
    pub total_time: f64,
    pub batches: usize,
}

fn key_values<'a>(series: &'a OrbitSeries, key: SeriesKey) -> Result<&'a [f64]> {
    match key {
        SeriesKey::RateU => Ok(series.r_u()),
        SeriesKey::RateS => Ok(series.r_s()),
        SeriesKey::Aux(name) => series
            .aux(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no aux channel named {name}"))),
    }
}

/// Time average via trapezoid quadrature; stderr from 10 equal batches.
pub fn birkhoff(series: &OrbitSeries, key: SeriesKey) -> Result<BirkhoffEstimate> {
    let values = key_values(series, key)?;
    let n = values.len();
    if n < 2 * BATCHES {
        return Err(Error::SeriesTooShort {
            need: 2 * BATCHES,
            have: n,
        });
    }
    let mean = trapezoid_mean(values);
    let batch_len = n / BATCHES;
    let mut batch_means = Vec::with_capacity(BATCHES);
    for b in 0..BATCHES {
        let lo = b * batch_len;
        let hi = if b + 1 == BATCHES { n } else { lo + batch_len };
        batch_means.push(trapezoid_mean(&values[lo..hi]));
    }
    let grand = batch_means.iter().sum::<f64>() / BATCHES as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - grand) * (m - grand))
        .sum::<f64>()
        / (BATCHES - 1) as f64;
    let stderr = (var / BATCHES as f64).sqrt();
    Ok(BirkhoffEstimate {
        mean,
        stderr,
        total_time: series.dt() * (n - 1) as f64,
        batches: BATCHES,
    })
}

/// Forward Lyapunov exponent of the unstable bundle from a fresh orbit
/// sample: (1/T) * stretch integral over [0, T].
pub fn lyapunov_exponent<B: FlowBackend>(
    backend: &B,
    p0: &B::Point,
    total_time: f64,
    dt: f64,
) -> Result<f64> {
    if total_time < 100.0 {
        return Err(Error::InvalidArgument(format!(
            "lyapunov_exponent needs T >= 100, got {total_time}"
        )));
    }
    let n = (total_time / dt).round() as usize + 1;
    let series = backend.sample_orbit(p0, dt, n, 0)?;
    let t_end = series.t(n - 1);
    let exponent = series.stretch_integral(0.0, t_end)? / t_end;
    // same quadrature as the Birkhoff mean; the two must agree exactly
    let check = birkhoff(&series, SeriesKey::RateU)?.mean;
    debug_assert!(
        (exponent - check).abs() <= 1e-14 * check.abs().max(1.0),
        "stretch integral and Birkhoff mean diverged: {exponent} vs {check}"
    );
    Ok(exponent)
}

/// Pesin entropy estimate from an orbit ensemble.
#[derive(Debug, Clone)]
pub struct EntropyReport {
    /// Pooled Liouville entropy rate estimate.
    pub h_bar: f64,
    pub stderr: f64,
    pub per_orbit_means: Vec<f64>,
    /// Set when two orbits disagree beyond 5 pooled sigma.
    pub inconsistent: bool,
}

/// Pooled Birkhoff mean of r_u over an ensemble of independent orbits.
/// Orbits are pooled in seed order; the estimate is their unweighted mean
/// (equal durations assumed, checked).
pub fn pesin_entropy(ensemble: &[OrbitSeries]) -> Result<EntropyReport> {
    if ensemble.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "pesin_entropy needs an ensemble of >= 4 orbits, got {}",
            ensemble.len()
        )));
    }
    let mut orbits: Vec<&OrbitSeries> = ensemble.iter().collect();
    orbits.sort_by_key(|s| s.seed());
    let len0 = orbits[0].len();
    if orbits.iter().any(|s| s.len() != len0) {
        return Err(Error::InvalidArgument(
            "ensemble orbits must share the same duration".into(),
        ));
    }
    let estimates: Vec<BirkhoffEstimate> = orbits
        .iter()
        .map(|s| birkhoff(s, SeriesKey::RateU))
        .collect::<Result<_>>()?;
    let means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    let k = means.len() as f64;
    let h_bar = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - h_bar) * (m - h_bar)).sum::<f64>() / (k - 1.0);
    let stderr = (var / k).sqrt();
    let mut inconsistent = false;
    for i in 0..estimates.len() {
        for j in i + 1..estimates.len() {
            let gap = (estimates[i].mean - estimates[j].mean).abs();
            let sigma = estimates[i].stderr + estimates[j].stderr;
            if sigma > 0.0 && gap > 5.0 * sigma {
                inconsistent = true;
            }
        }
    }
    Ok(EntropyReport {
        h_bar,
        stderr,
        per_orbit_means: means,
        inconsistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebraic::AlgebraicBackend;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn series_of(values: Vec<f64>, dt: f64) -> OrbitSeries {
        let n = values.len();
        OrbitSeries::new(0.0, dt, values, vec![-1.0; n], "t", 0).unwrap()
    }

    #[test]
    fn constant_series_has_zero_stderr() {
        let s = series_of(vec![3.25; 1000], 0.01);
        let e = birkhoff(&s, SeriesKey::RateU).unwrap();
        assert_eq!(e.mean, 3.25);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn algebraic_rate_average_is_exactly_one() {
        let backend = AlgebraicBackend::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = backend.random_point(&mut rng);
        let s = backend.sample_orbit(&p, 0.01, 5000, 0).unwrap();
        let e = birkhoff(&s, SeriesKey::RateU).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn sine_over_whole_periods_averages_to_zero() {
        let periods = 5;
        let n_per = 256;
        let dt = std::f64::consts::TAU / n_per as f64;
        let n = periods * n_per + 1;
        let vals: Vec<f64> = (0..n).map(|i| (i as f64 * dt).sin()).collect();
        let s = series_of(vals, dt);
        let e = birkhoff(&s, SeriesKey::RateU).unwrap();
        assert!(e.mean.abs() < 1e-8, "mean {}", e.mean);
    }

    #[test]
    fn too_short_series_is_rejected() {
        let s = series_of(vec![1.0; 10], 0.01);
        assert!(birkhoff(&s, SeriesKey::RateU).is_err());
    }

    #[test]
    fn lyapunov_matches_constant_rate() {
        let backend = AlgebraicBackend::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = backend.random_point(&mut rng);
        let lam = lyapunov_exponent(&backend, &p, 150.0, 0.01).unwrap();
        assert_eq!(lam, 1.0);
    }

    #[test]
    fn lyapunov_matches_cat_map_eigenvalue() {
        let backend = crate::suspension::SuspensionBackend::new(0.0, 0.0, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = backend.random_point(&mut rng);
        let lam = lyapunov_exponent(&backend, &p, 500.0, 0.05).unwrap();
        let expect = crate::suspension::TorusMap::cat_eigenvalue().ln();
        assert!((lam - expect).abs() < 1e-10);
    }

    #[test]
    fn pesin_entropy_scales_with_rate() {
        for &lambda0 in &[1.0, 2.0] {
            let backend = AlgebraicBackend::new(lambda0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let ensemble: Vec<OrbitSeries> = (0..4)
                .map(|i| {
                    let p = backend.random_point(&mut rng);
                    backend.sample_orbit(&p, 0.01, 2000, i).unwrap()
                })
                .collect();
            let report = pesin_entropy(&ensemble).unwrap();
            assert_eq!(report.h_bar, lambda0);
            assert_eq!(report.stderr, 0.0);
            assert!(!report.inconsistent);
        }
    }

    #[test]
    fn pesin_rejects_small_ensembles() {
        let backend = AlgebraicBackend::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = backend.random_point(&mut rng);
        let s = backend.sample_orbit(&p, 0.01, 500, 0).unwrap();
        assert!(pesin_entropy(&[s]).is_err());
    }
}
