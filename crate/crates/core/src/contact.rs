//! Contact-metric machinery for a metric parametrized by a gauge on the
//! unstable norm and the angle between the stable and unstable directions.
//!
//! Fixing the unstable norm (through the gauge f) and the angle field theta
//! determines the whole metric tensor; every quantity here is computed
//! pointwise along orbits from the gauged unstable rate, theta, and the flow
//! derivative of theta:
//!
//!   r_s + r_u = cot(theta) (X.theta)           (angle constraint)
//!   2h        = [[-X.cot, -X.csc + (r_s - r_u) csc],
//!                [ X.csc + (r_s - r_u) csc,  X.cot]]   in the (e_s, e_u) frame
//!   4 lambda^2 = 4 r_u^2 + [X.cot(theta) - 2 r_u cot(theta)]^2
//!   Ricci(X)  = 2 - 2 lambda^2
//!
//! The scalar torsion routes (h-matrix determinant vs the closed form) are
//! kept separate so they can cross-check each other.

use crate::error::{Error, Result};
use crate::fields::{FieldOnOrbit, ScalarField};
use crate::numeric::trapezoid_mean;
use crate::series::{flow_derivative, OrbitSeries};

/// Facts about the backend a computation runs against.
#[derive(Debug, Clone, Copy)]
pub struct BackendInfo {
    pub name: &'static str,
    pub is_contact: bool,
    pub is_anosov: bool,
    pub volume: Option<f64>,
}

/// Default margin keeping theta away from {0, pi}.
pub const THETA_MARGIN: f64 = 0.1;

/// A contact metric in the (unstable gauge, angle field) parametrization.
#[derive(Debug, Clone)]
pub struct MetricParams {
    /// Log of the unstable norm gauge.
    pub f: ScalarField,
    /// theta = pi/2 + offset; offset 0 is the canonical bundle-aligned angle.
    pub theta_offset: ScalarField,
    pub margin: f64,
}

impl MetricParams {
    pub fn canonical() -> Self {
        Self {
            f: ScalarField::Zero,
            theta_offset: ScalarField::Zero,
            margin: THETA_MARGIN,
        }
    }

    pub fn new(f: ScalarField, theta_offset: ScalarField) -> Self {
        Self {
            f,
            theta_offset,
            margin: THETA_MARGIN,
        }
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self.f, ScalarField::Zero) && matches!(self.theta_offset, ScalarField::Zero)
    }

    /// Evaluate theta and X.theta along an orbit, enforcing the safe range.
    pub fn theta_on_orbit(&self, series: &OrbitSeries) -> Result<FieldOnOrbit> {
        let off = self.theta_offset.eval(series)?;
        let mut values = Vec::with_capacity(off.len());
        for &v in &off.values {
            let theta = std::f64::consts::FRAC_PI_2 + v;
            if theta < self.margin || theta > std::f64::consts::PI - self.margin {
                return Err(Error::AngleOutOfRange {
                    theta,
                    margin: self.margin,
                });
            }
            values.push(theta);
        }
        Ok(FieldOnOrbit {
            values,
            x_deriv: off.x_deriv,
        })
    }
}

/// Per-point torsion and curvature quantities.
#[derive(Debug, Clone, Copy)]
pub struct TorsionSample {
    pub t: f64,
    pub lambda_sq: f64,
    pub ricci_x: f64,
    pub kappa_u: f64,
    pub kappa_s: f64,
}

/// Gauge change of the unstable rate: r~_u = r_u + X.f.
pub fn gauge_rate(r_u: &[f64], f: &FieldOnOrbit) -> Result<Vec<f64>> {
    if f.len() != r_u.len() {
        return Err(Error::LengthMismatch {
            expected: r_u.len(),
            got: f.len(),
        });
    }
    Ok(r_u.iter().zip(&f.x_deriv).map(|(r, d)| r + d).collect())
}

/// Stable rate from the angle constraint: r~_s = cot(theta) X.theta - r~_u.
pub fn stable_rate_from_angle(r_u_gauged: &[f64], theta: &FieldOnOrbit) -> Result<Vec<f64>> {
    if theta.len() != r_u_gauged.len() {
        return Err(Error::LengthMismatch {
            expected: r_u_gauged.len(),
            got: theta.len(),
        });
    }
    Ok(r_u_gauged
        .iter()
        .zip(theta.values.iter().zip(&theta.x_deriv))
        .map(|(ru, (th, dth))| (th.cos() / th.sin()) * dth - ru)
        .collect())
}

/// Components of 2h in the (e_s, e_u) basis at one point.
pub fn h_matrix(r_u: f64, r_s: f64, theta: f64, x_theta: f64) -> [[f64; 2]; 2] {
    let csc = 1.0 / theta.sin();
    let cot = theta.cos() * csc;
    let x_cot = -csc * csc * x_theta;
    let x_csc = -csc * cot * x_theta;
    [
        [-x_cot, -x_csc + (r_s - r_u) * csc],
        [x_csc + (r_s - r_u) * csc, x_cot],
    ]
}

/// Scalar torsion squared from the closed form, the stable rate having been
/// eliminated through the angle constraint:
/// lambda^2 = r~_u^2 + [X.cot(theta) + 2 r~_u cot(theta)]^2 / 4.
///
/// Expanding csc^2{(X.theta)^2 + (2 r_u - cot(theta) X.theta)^2} with
/// X.cot(theta) = -csc^2(theta) X.theta forces the + sign in the bracket;
/// the determinant of the 2h matrix is the independent check.
pub fn torsion_sq(r_u_gauged: f64, theta: f64, x_theta: f64) -> f64 {
    let csc = 1.0 / theta.sin();
    let cot = theta.cos() * csc;
    let x_cot = -csc * csc * x_theta;
    let inner = x_cot + 2.0 * r_u_gauged * cot;
    r_u_gauged * r_u_gauged + 0.25 * inner * inner
}

/// The full pointwise pipeline along one orbit.
#[derive(Debug, Clone)]
pub struct TorsionSeries {
    /// Gauged unstable rate.
    pub r_u: Vec<f64>,
    /// Stable rate from the angle constraint.
    pub r_s: Vec<f64>,
    pub theta: Vec<f64>,
    pub x_theta: Vec<f64>,
    pub samples: Vec<TorsionSample>,
}

/// Sectional curvature of the weak unstable plane at one point:
/// kappa(E^u) = c_u^2 - r_u^2 - X.r_u with
/// c_u = -1 + [X.csc + (r_u - r_s) csc] cos(theta)/2 - X.cot/2.
pub fn kappa_u_point(r_u: f64, r_s: f64, theta: f64, x_theta: f64, x_r_u: f64) -> f64 {
    let csc = 1.0 / theta.sin();
    let cot = theta.cos() * csc;
    let x_cot = -csc * csc * x_theta;
    let x_csc = -csc * cot * x_theta;
    let c_u = -1.0 + 0.5 * (x_csc + (r_u - r_s) * csc) * theta.cos() - 0.5 * x_cot;
    c_u * c_u - r_u * r_u - x_r_u
}

/// Mirrored computation for the weak stable plane.
pub fn kappa_s_point(r_u: f64, r_s: f64, theta: f64, x_theta: f64, x_r_s: f64) -> f64 {
    let csc = 1.0 / theta.sin();
    let cot = theta.cos() * csc;
    let x_cot = -csc * csc * x_theta;
    let x_csc = -csc * cot * x_theta;
    let c_s = -1.0 - 0.5 * (x_csc + (r_s - r_u) * csc) * theta.cos() + 0.5 * x_cot;
    c_s * c_s - r_s * r_s - x_r_s
}

/// Evaluate the metric's torsion and curvature quantities along an orbit.
pub fn torsion_series(series: &OrbitSeries, params: &MetricParams) -> Result<TorsionSeries> {
    let f = params.f.eval(series)?;
    let theta = params.theta_on_orbit(series)?;
    let r_u = gauge_rate(series.r_u(), &f)?;
    let r_s = stable_rate_from_angle(&r_u, &theta)?;
    let x_r_u = flow_derivative(series, &r_u)?;
    let x_r_s = flow_derivative(series, &r_s)?;
    let mut samples = Vec::with_capacity(series.len());
    for i in 0..series.len() {
        let lambda_sq = torsion_sq(r_u[i], theta.values[i], theta.x_deriv[i]);
        samples.push(TorsionSample {
            t: series.t(i),
            lambda_sq,
            ricci_x: 2.0 - 2.0 * lambda_sq,
            kappa_u: kappa_u_point(r_u[i], r_s[i], theta.values[i], theta.x_deriv[i], x_r_u[i]),
            kappa_s: kappa_s_point(r_u[i], r_s[i], theta.values[i], theta.x_deriv[i], x_r_s[i]),
        });
    }
    Ok(TorsionSeries {
        r_u,
        r_s,
        theta: theta.values,
        x_theta: theta.x_deriv,
        samples,
    })
}

/// Dirichlet energy of a parametrized metric over an orbit ensemble.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    /// Per-unit-volume energy: pooled Birkhoff mean of lambda^2.
    pub e_bar: f64,
    pub stderr: f64,
    /// Total energy V * e_bar when the backend volume is known.
    pub e_total: Option<f64>,
    pub per_orbit_means: Vec<f64>,
    /// Pooled mean of the gauged unstable rate (the Jensen floor is its
    /// square).
    pub mean_gauged_rate: f64,
}

pub fn dirichlet_energy(
    ensemble: &[OrbitSeries],
    params: &MetricParams,
    backend: &BackendInfo,
) -> Result<EnergyReport> {
    if !backend.is_contact {
        return Err(Error::NotContact(backend.name));
    }
    if ensemble.is_empty() {
        return Err(Error::SeriesTooShort { need: 1, have: 0 });
    }
    let mut orbits: Vec<&OrbitSeries> = ensemble.iter().collect();
    orbits.sort_by_key(|s| s.seed());
    let mut per_orbit_means = Vec::with_capacity(orbits.len());
    let mut rate_means = Vec::with_capacity(orbits.len());
    for s in &orbits {
        let ts = torsion_series(s, params)?;
        let lam: Vec<f64> = ts.samples.iter().map(|x| x.lambda_sq).collect();
        per_orbit_means.push(trapezoid_mean(&lam));
        rate_means.push(trapezoid_mean(&ts.r_u));
    }
    let k = per_orbit_means.len() as f64;
    let e_bar = per_orbit_means.iter().sum::<f64>() / k;
    let mean_gauged_rate = rate_means.iter().sum::<f64>() / k;
    let stderr = if per_orbit_means.len() >= 2 {
        let var = per_orbit_means
            .iter()
            .map(|m| (m - e_bar) * (m - e_bar))
            .sum::<f64>()
            / (k - 1.0);
        (var / k).sqrt()
    } else {
        // single orbit: batch means over its lambda^2 series
        let ts = torsion_series(orbits[0], params)?;
        let lam: Vec<f64> = ts.samples.iter().map(|x| x.lambda_sq).collect();
        let tmp = OrbitSeries::new(0.0, orbits[0].dt(), lam, vec![0.0; orbits[0].len()], "", 0)?;
        crate::ergodic::birkhoff(&tmp, crate::ergodic::SeriesKey::RateU)?.stderr
    };
    Ok(EnergyReport {
        e_bar,
        stderr,
        e_total: backend.volume.map(|v| v * e_bar),
        per_orbit_means,
        mean_gauged_rate,
    })
}

/// Residual of the criticality equation at the canonical metric of the
/// algebraic backend, assembled in the torsion eigenframe from the frame
/// derivatives (the residual operator is diag(X.lambda, -X.lambda), so its
/// Frobenius norm is sqrt(2) |X.lambda|).
#[derive(Debug, Clone)]
pub struct TannoReport {
    /// Max Frobenius norm of the criticality residual along the orbits.
    pub residual: f64,
    /// Max |X.lambda| along the orbits.
    pub max_x_lambda: f64,
}

pub fn tanno_residual_canonical(
    ensemble: &[OrbitSeries],
    params: &MetricParams,
) -> Result<TannoReport> {
    if !params.is_canonical() {
        return Err(Error::NotCanonical(
            "the criticality residual is assembled only in the canonical eigenframe \
             (theta = pi/2, f = 0)"
                .into(),
        ));
    }
    let mut residual = 0.0f64;
    let mut max_x_lambda = 0.0f64;
    for s in ensemble {
        let ts = torsion_series(s, params)?;
        let lambda: Vec<f64> = ts.samples.iter().map(|x| x.lambda_sq.sqrt()).collect();
        let x_lambda = flow_derivative(s, &lambda)?;
        for v in x_lambda {
            max_x_lambda = max_x_lambda.max(v.abs());
            residual = residual.max(std::f64::consts::SQRT_2 * v.abs());
        }
    }
    Ok(TannoReport {
        residual,
        max_x_lambda,
    })
}

/// Output of the curvature realization: the target Ricci from the closed
/// formula and the Ricci achieved by the metric built from (eta, sigma).
#[derive(Debug, Clone)]
pub struct RealizationSeries {
    pub f_target: Vec<f64>,
    pub ricci_achieved: Vec<f64>,
    pub max_pointwise_diff: f64,
}

/// Build the metric with gauge f = eta and angle theta = arccot(2 sigma) on
/// a constant-rate (algebraic) orbit, and compare the achieved Ricci(X)
/// against the closed realization formula
/// f = 2 - 2 (h + X.eta)^2 - 2 [X.sigma + 2 sigma (h + X.eta)]^2,
/// the sigma-substitution (sigma = cot(theta)/2) of the torsion closed form.
pub fn realize_ricci(
    series: &OrbitSeries,
    h_bar: f64,
    eta: &ScalarField,
    sigma: &ScalarField,
    margin: f64,
) -> Result<RealizationSeries> {
    let eta_f = eta.eval(series)?;
    let sigma_f = sigma.eval(series)?;
    let n = series.len();

    // rates must be the constant h_bar for the closed formula to apply
    for &r in series.r_u() {
        if (r - h_bar).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "realize_ricci requires the constant-rate backend: r_u = {r} != {h_bar}"
            )));
        }
    }

    let mut theta_vals = Vec::with_capacity(n);
    let mut theta_derivs = Vec::with_capacity(n);
    for i in 0..n {
        let s = sigma_f.values[i];
        // arccot into (0, pi)
        let theta = (1.0f64).atan2(2.0 * s);
        if theta < margin || theta > std::f64::consts::PI - margin {
            return Err(Error::AngleOutOfRange { theta, margin });
        }
        theta_vals.push(theta);
        theta_derivs.push(-2.0 * sigma_f.x_deriv[i] / (1.0 + 4.0 * s * s));
    }
    let theta = FieldOnOrbit {
        values: theta_vals,
        x_deriv: theta_derivs,
    };
    let r_u = gauge_rate(series.r_u(), &eta_f)?;

    let mut f_target = Vec::with_capacity(n);
    let mut ricci_achieved = Vec::with_capacity(n);
    let mut max_diff = 0.0f64;
    for i in 0..n {
        let lambda_sq = torsion_sq(r_u[i], theta.values[i], theta.x_deriv[i]);
        let achieved = 2.0 - 2.0 * lambda_sq;
        let gauged = h_bar + eta_f.x_deriv[i];
        let bracket = sigma_f.x_deriv[i] + 2.0 * sigma_f.values[i] * gauged;
        let target = 2.0 - 2.0 * gauged * gauged - 2.0 * bracket * bracket;
        max_diff = max_diff.max((achieved - target).abs());
        f_target.push(target);
        ricci_achieved.push(achieved);
    }
    Ok(RealizationSeries {
        f_target,
        ricci_achieved,
        max_pointwise_diff: max_diff,
    })
}
