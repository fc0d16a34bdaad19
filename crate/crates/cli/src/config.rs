//! Flat-key experiment configuration. Unknown keys are rejected; every
//! command validates the subset it needs and fails with exit code 2 on any
//! gap. All randomness flows from the explicit seed.

use anosov_core::algebraic::AlgebraicBackend;
use anosov_core::backend::Backend;
use anosov_core::conformal::ConformalFactor;
use anosov_core::contact::MetricParams;
use anosov_core::fields::{octagon_bump_centers, BumpBasisField, ScalarField};
use anosov_core::hopf::HopfBackend;
use anosov_core::perturbed::PerturbedBackend;
use anosov_core::suspension::SuspensionBackend;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// algebraic | perturbed | suspension | hopf
    pub backend: String,

    // algebraic
    pub lambda0: Option<f64>,

    // perturbed conformal factor
    pub bump_center_x: Option<Vec<f64>>,
    pub bump_center_y: Option<Vec<f64>>,
    pub bump_amplitude: Option<Vec<f64>>,
    pub bump_width: Option<f64>,
    pub dt_max: Option<f64>,
    pub warmup: Option<f64>,

    // suspension
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub warmup_iterations: Option<usize>,

    // orbit sampling
    pub dt: f64,
    pub orbit_time: f64,
    pub ensemble: Option<usize>,
    pub seed: Option<u64>,
    /// CSV row stride; 0 picks one keeping roughly 2000 rows per orbit.
    pub csv_stride: Option<usize>,

    // metric fields (energy / curvature / identities)
    pub f_kind: Option<String>, // zero | const | trig | bumps
    pub f_value: Option<f64>,
    pub f_amp: Option<f64>,
    pub f_omega: Option<f64>,
    pub f_phase: Option<f64>,
    pub f_coeffs: Option<Vec<f64>>,
    pub theta_kind: Option<String>, // offset from pi/2
    pub theta_value: Option<f64>,
    pub theta_amp: Option<f64>,
    pub theta_omega: Option<f64>,
    pub theta_phase: Option<f64>,
    pub theta_coeffs: Option<Vec<f64>>,
    pub basis_count: Option<usize>,
    pub basis_width: Option<f64>,

    // realization fields
    pub eta_amp: Option<f64>,
    pub eta_omega: Option<f64>,
    pub eta_phase: Option<f64>,
    pub sigma_amp: Option<f64>,
    pub sigma_omega: Option<f64>,
    pub sigma_phase: Option<f64>,

    // uniformization
    pub uniformize_windows: Option<Vec<f64>>,
    /// paper | inverse_t_sq | fixed
    pub eps_policy: Option<String>,
    pub eps_fixed: Option<f64>,
    pub horizon_cap: Option<f64>,
    pub uniformize_stride: Option<usize>,

    // optimizer
    pub opt_budget: Option<usize>,
    pub opt_step: Option<f64>,
}

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid(m) => write!(f, "config error: {m}"),
        }
    }
}

impl Config {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        let cfg: Config = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate_common()?;
        Ok(cfg)
    }

    fn validate_common(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.orbit_time > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "orbit_time must be > 0, got {}",
                self.orbit_time
            )));
        }
        match self.backend.as_str() {
            "algebraic" | "perturbed" | "suspension" | "hopf" => Ok(()),
            other => Err(ConfigError::Invalid(format!(
                "unknown backend {other:?}; expected algebraic | perturbed | suspension | hopf"
            ))),
        }
    }

    pub fn build_backend(&self) -> Result<Backend, ConfigError> {
        match self.backend.as_str() {
            "algebraic" => {
                let lambda0 = self.lambda0.unwrap_or(1.0);
                AlgebraicBackend::new(lambda0)
                    .map(Backend::Algebraic)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            "hopf" => Ok(Backend::Hopf(HopfBackend::new())),
            "perturbed" => {
                let xs = self.bump_center_x.clone().unwrap_or_default();
                let ys = self.bump_center_y.clone().unwrap_or_default();
                let amps = self.bump_amplitude.clone().unwrap_or_default();
                if xs.len() != ys.len() || xs.len() != amps.len() {
                    return Err(ConfigError::Invalid(format!(
                        "bump arrays must share a length: {} x, {} y, {} amplitudes",
                        xs.len(),
                        ys.len(),
                        amps.len()
                    )));
                }
                let centers: Vec<Complex64> = xs
                    .iter()
                    .zip(&ys)
                    .map(|(&x, &y)| Complex64::new(x, y))
                    .collect();
                let width = self.bump_width.unwrap_or(0.8);
                let factor = if centers.is_empty() {
                    ConformalFactor::flat()
                } else {
                    ConformalFactor::new(centers, amps, width)
                        .map_err(|e| ConfigError::Invalid(e.to_string()))?
                };
                PerturbedBackend::new(
                    factor,
                    self.dt_max.unwrap_or(0.02),
                    self.warmup.unwrap_or(20.0),
                )
                .map(Backend::Perturbed)
                .map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            "suspension" => SuspensionBackend::new(
                self.epsilon.unwrap_or(0.0),
                self.delta.unwrap_or(0.0),
                self.warmup_iterations.unwrap_or(60),
            )
            .map(Backend::Suspension)
            .map_err(|e| ConfigError::Invalid(e.to_string())),
            _ => unreachable!("validated"),
        }
    }

    pub fn seeds(&self, override_seed: Option<u64>) -> Vec<u64> {
        let base = override_seed.or(self.seed).unwrap_or(1);
        let k = self.ensemble.unwrap_or(1).max(1);
        (0..k as u64).map(|i| base + i).collect()
    }

    pub fn samples(&self) -> usize {
        (self.orbit_time / self.dt).round() as usize + 1
    }

    pub fn csv_stride(&self) -> usize {
        match self.csv_stride {
            Some(0) | None => (self.samples() / 2000).max(1),
            Some(s) => s,
        }
    }

    fn field_from(
        &self,
        kind: &Option<String>,
        value: Option<f64>,
        amp: Option<f64>,
        omega: Option<f64>,
        phase: Option<f64>,
        coeffs: &Option<Vec<f64>>,
        what: &str,
    ) -> Result<ScalarField, ConfigError> {
        match kind.as_deref().unwrap_or("zero") {
            "zero" => Ok(ScalarField::Zero),
            "const" => Ok(ScalarField::Const(value.unwrap_or(0.0))),
            "trig" => Ok(ScalarField::TimeTrig {
                amp: amp.unwrap_or(0.0),
                omega: omega.unwrap_or(1.0),
                phase: phase.unwrap_or(0.0),
            }),
            "bumps" => {
                let count = self.basis_count.unwrap_or(16);
                let c = coeffs.clone().unwrap_or_else(|| vec![0.0; count]);
                if c.len() != count {
                    return Err(ConfigError::Invalid(format!(
                        "{what}_coeffs has {} entries, basis_count is {count}",
                        c.len()
                    )));
                }
                Ok(ScalarField::Bumps(BumpBasisField {
                    centers: octagon_bump_centers(count),
                    coefficients: c,
                    width: self.basis_width.unwrap_or(0.4),
                }))
            }
            other => Err(ConfigError::Invalid(format!(
                "unknown {what}_kind {other:?}; expected zero | const | trig | bumps"
            ))),
        }
    }

    pub fn metric_params(&self) -> Result<MetricParams, ConfigError> {
        let f = self.field_from(
            &self.f_kind,
            self.f_value,
            self.f_amp,
            self.f_omega,
            self.f_phase,
            &self.f_coeffs,
            "f",
        )?;
        let theta = self.field_from(
            &self.theta_kind,
            self.theta_value,
            self.theta_amp,
            self.theta_omega,
            self.theta_phase,
            &self.theta_coeffs,
            "theta",
        )?;
        Ok(MetricParams::new(f, theta))
    }

    pub fn eta_sigma(&self) -> (ScalarField, ScalarField) {
        let eta = match self.eta_amp {
            Some(a) if a != 0.0 => ScalarField::TimeTrig {
                amp: a,
                omega: self.eta_omega.unwrap_or(1.0),
                phase: self.eta_phase.unwrap_or(0.0),
            },
            _ => ScalarField::Zero,
        };
        let sigma = match self.sigma_amp {
            Some(a) if a != 0.0 => ScalarField::TimeTrig {
                amp: a,
                omega: self.sigma_omega.unwrap_or(1.0),
                phase: self.sigma_phase.unwrap_or(0.0),
            },
            _ => ScalarField::Zero,
        };
        (eta, sigma)
    }

    pub fn uniformize_windows(&self) -> Vec<f64> {
        self.uniformize_windows
            .clone()
            .unwrap_or_else(|| vec![1.0, 4.0, 16.0, 64.0])
    }

    /// Offset for a window per the configured policy.
    pub fn eps_for(&self, series: &anosov_core::series::OrbitSeries, window: f64) -> (f64, bool) {
        match self.eps_policy.as_deref().unwrap_or("inverse_t_sq") {
            "paper" => anosov_core::uniformize::default_epsilon(series, window),
            "fixed" => (self.eps_fixed.unwrap_or(0.01), false),
            _ => (1.0 / (window * window), false),
        }
    }
}
