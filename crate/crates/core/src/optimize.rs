//! Derivative-free minimization of the Dirichlet energy over field
//! coefficients.
//!
//! A plain Nelder-Mead simplex with standard coefficients drives the search;
//! the objective is deterministic for a fixed orbit ensemble (common random
//! numbers), so the noisy-Monte-Carlo caveats reduce to quadrature noise
//! shared by every candidate.

use num_complex::Complex64;

use crate::contact::{dirichlet_energy, BackendInfo, MetricParams};
use crate::error::{Error, Result};
use crate::fields::{BumpBasisField, ScalarField};
use crate::series::OrbitSeries;

#[derive(Debug, Clone)]
pub struct NelderMeadConfig {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Initial simplex displacement per coordinate.
    pub step: f64,
    /// Stop when the simplex f-spread falls below this.
    pub f_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            budget: 400,
            step: 0.05,
            f_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Monotone best-so-far objective trace, one entry per evaluation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    /// Set when the evaluation budget ran out before the simplex collapsed.
    pub budget_exhausted: bool,
}

/// Minimize `f` from `x0` with a Nelder-Mead simplex.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    cfg: &NelderMeadConfig,
) -> OptimizeResult {
    let n = x0.len();
    assert!(n >= 1, "need at least one coordinate");
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut evals = 0usize;
    let mut trace: Vec<f64> = Vec::new();
    let mut best_so_far = f64::INFINITY;
    let mut eval = |x: &[f64], evals: &mut usize, trace: &mut Vec<f64>, best: &mut f64| -> f64 {
        let v = f(x);
        *evals += 1;
        if v < *best {
            *best = v;
        }
        trace.push(*best);
        v
    };

    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals, &mut trace, &mut best_so_far);
    simplex.push((f0, x0.to_vec()));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += cfg.step;
        let fx = eval(&x, &mut evals, &mut trace, &mut best_so_far);
        simplex.push((fx, x));
    }

    while evals < cfg.budget {
        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if simplex[n].0 - simplex[0].0 < cfg.f_tol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(_, x)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflected: Vec<f64> = (0..n)
            .map(|j| centroid[j] + alpha * (centroid[j] - worst.1[j]))
            .collect();
        let f_r = eval(&reflected, &mut evals, &mut trace, &mut best_so_far);

        if f_r < simplex[0].0 {
            let expanded: Vec<f64> = (0..n)
                .map(|j| centroid[j] + gamma * (reflected[j] - centroid[j]))
                .collect();
            let f_e = eval(&expanded, &mut evals, &mut trace, &mut best_so_far);
            simplex[n] = if f_e < f_r {
                (f_e, expanded)
            } else {
                (f_r, reflected)
            };
        } else if f_r < simplex[n - 1].0 {
            simplex[n] = (f_r, reflected);
        } else {
            let contracted: Vec<f64> = (0..n)
                .map(|j| centroid[j] + rho * (worst.1[j] - centroid[j]))
                .collect();
            let f_c = eval(&contracted, &mut evals, &mut trace, &mut best_so_far);
            if f_c < worst.0 {
                simplex[n] = (f_c, contracted);
            } else {
                // shrink toward the best point
                let best = simplex[0].1.clone();
                for k in 1..=n {
                    let x: Vec<f64> = (0..n)
                        .map(|j| best[j] + sigma * (simplex[k].1[j] - best[j]))
                        .collect();
                    let fx = eval(&x, &mut evals, &mut trace, &mut best_so_far);
                    simplex[k] = (fx, x);
                    if evals >= cfg.budget {
                        break;
                    }
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let budget_exhausted = evals >= cfg.budget;
    OptimizeResult {
        best_f: simplex[0].0,
        best_x: simplex[0].1.clone(),
        trace,
        evaluations: evals,
        budget_exhausted,
    }
}

/// Coefficient layout for the energy search: the first half gauges the
/// unstable norm, the second half perturbs the angle around pi/2.
pub fn params_from_coefficients(
    centers: &[Complex64],
    width: f64,
    coeffs: &[f64],
) -> Result<MetricParams> {
    let m = centers.len();
    if coeffs.len() != 2 * m {
        return Err(Error::LengthMismatch {
            expected: 2 * m,
            got: coeffs.len(),
        });
    }
    Ok(MetricParams::new(
        ScalarField::Bumps(BumpBasisField {
            centers: centers.to_vec(),
            coefficients: coeffs[..m].to_vec(),
            width,
        }),
        ScalarField::Bumps(BumpBasisField {
            centers: centers.to_vec(),
            coefficients: coeffs[m..].to_vec(),
            width,
        }),
    ))
}

/// Minimize the per-volume Dirichlet energy over a bump basis for (f, theta),
/// on a fixed orbit ensemble. Returns the best parameters found with the
/// monotone energy trace.
pub fn optimize_energy(
    ensemble: &[OrbitSeries],
    centers: &[Complex64],
    width: f64,
    backend: &BackendInfo,
    cfg: &NelderMeadConfig,
) -> Result<(MetricParams, OptimizeResult)> {
    if !backend.is_contact {
        return Err(Error::NotContact(backend.name));
    }
    let dim = 2 * centers.len();
    let objective = |coeffs: &[f64]| -> f64 {
        match params_from_coefficients(centers, width, coeffs) {
            Ok(params) => match dirichlet_energy(ensemble, &params, backend) {
                Ok(report) => report.e_bar,
                // out-of-range angles and other rejections are walls
                Err(_) => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    };
    let x0 = vec![0.0; dim];
    let result = nelder_mead(objective, &x0, cfg);
    let params = params_from_coefficients(centers, width, &result.best_x)?;
    Ok((params, result))
}
