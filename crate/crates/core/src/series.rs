//! Backend-agnostic orbit data: uniformly sampled expansion-rate series and
//! the contract every flow backend implements.
//!
//! An [`OrbitSeries`] is the universal currency between backends and the
//! analysis modules: a uniform time grid, the unstable and stable expansion
//! rates at each sample, and optional named auxiliary scalars (curvature,
//! positions, angles). Sample times are never stored; they are reconstructed
//! as `t0 + i*dt` so the grid cannot drift.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numeric;

/// One sample of a flow orbit: time and the two expansion rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub t: f64,
    pub r_u: f64,
    pub r_s: f64,
}

/// Uniformly sampled time series of a flow orbit.
#[derive(Debug, Clone)]
pub struct OrbitSeries {
    t0: f64,
    dt: f64,
    r_u: Vec<f64>,
    r_s: Vec<f64>,
    aux: BTreeMap<String, Vec<f64>>,
    origin: String,
    seed: u64,
    /// Cumulative trapezoid integral of r_u; shared by stretch integrals so
    /// that adjacent ranges add exactly.
    prefix_r_u: Vec<f64>,
}

impl OrbitSeries {
    pub fn new(
        t0: f64,
        dt: f64,
        r_u: Vec<f64>,
        r_s: Vec<f64>,
        origin: impl Into<String>,
        seed: u64,
    ) -> Result<Self> {
        if dt <= 0.0 {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        if r_u.is_empty() {
            return Err(Error::SeriesTooShort { need: 1, have: 0 });
        }
        if r_u.len() != r_s.len() {
            return Err(Error::LengthMismatch {
                expected: r_u.len(),
                got: r_s.len(),
            });
        }
        for (i, (&u, &s)) in r_u.iter().zip(&r_s).enumerate() {
            if !u.is_finite() || !s.is_finite() {
                return Err(Error::IntegratorDiverged {
                    t: t0 + i as f64 * dt,
                    detail: format!("non-finite rate sample (r_u={u}, r_s={s})"),
                });
            }
        }
        let prefix_r_u = numeric::prefix_trapezoid(&r_u, dt);
        Ok(Self {
            t0,
            dt,
            r_u,
            r_s,
            aux: BTreeMap::new(),
            origin: origin.into(),
            seed,
            prefix_r_u,
        })
    }

    /// Domination and sign checks for series produced by Anosov backends.
    pub fn validate_anosov(&self) -> Result<()> {
        for i in 0..self.len() {
            let (u, s) = (self.r_u[i], self.r_s[i]);
            if !(u > s) {
                return Err(Error::InvalidArgument(format!(
                    "domination violated at t = {}: r_u = {u} <= r_s = {s}",
                    self.t(i)
                )));
            }
            if !(u > 0.0 && s < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "canonical-norm signs violated at t = {}: r_u = {u}, r_s = {s}",
                    self.t(i)
                )));
            }
        }
        Ok(())
    }

    pub fn with_aux(mut self, key: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        self.aux.insert(key.into(), values);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.r_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_u.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.len() - 1)
    }

    pub fn r_u(&self) -> &[f64] {
        &self.r_u
    }

    pub fn r_s(&self) -> &[f64] {
        &self.r_s
    }

    pub fn aux(&self, key: &str) -> Option<&[f64]> {
        self.aux.get(key).map(|v| v.as_slice())
    }

    pub fn aux_keys(&self) -> impl Iterator<Item = &str> {
        self.aux.keys().map(|k| k.as_str())
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample(&self, i: usize) -> RateSample {
        RateSample {
            t: self.t(i),
            r_u: self.r_u[i],
            r_s: self.r_s[i],
        }
    }

    /// Index of a grid-aligned time. Errors if `t` is off the grid or
    /// outside the series.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let rel = (t - self.t0) / self.dt;
        let k = rel.round();
        if (rel - k).abs() > 1e-6 {
            return Err(Error::GridMisaligned { t, dt: self.dt });
        }
        if k < 0.0 || k as usize >= self.len() {
            return Err(Error::TimeOutOfRange {
                t,
                t_min: self.t0,
                t_max: self.t_end(),
            });
        }
        Ok(k as usize)
    }

    /// Log-stretch of the unstable norm over `[t_start, t_end]`: the
    /// trapezoid quadrature of r_u on the grid. Adjacent ranges add exactly.
    pub fn stretch_integral(&self, t_start: f64, t_end: f64) -> Result<f64> {
        let i0 = self.index_of(t_start)?;
        let i1 = self.index_of(t_end)?;
        if i1 < i0 {
            return Err(Error::InvalidArgument(format!(
                "stretch_integral range reversed: {t_start} > {t_end}"
            )));
        }
        Ok(self.prefix_r_u[i1] - self.prefix_r_u[i0])
    }

    /// Prefix stretch values aligned with the samples (integral from the
    /// first sample).
    pub fn stretch_prefix(&self) -> &[f64] {
        &self.prefix_r_u
    }
}

/// Flow derivative X·f of a field sampled along an orbit: centered
/// differences in t, one-sided at the endpoints, second-order accurate.
pub fn flow_derivative(series: &OrbitSeries, field_values: &[f64]) -> Result<Vec<f64>> {
    if field_values.len() != series.len() {
        return Err(Error::LengthMismatch {
            expected: series.len(),
            got: field_values.len(),
        });
    }
    if field_values.len() < 3 {
        return Err(Error::SeriesTooShort {
            need: 3,
            have: field_values.len(),
        });
    }
    Ok(numeric::finite_difference(series.dt(), field_values))
}

/// The contract all flow backends implement.
pub trait FlowBackend {
    type Point: Clone + std::fmt::Debug;

    fn name(&self) -> &'static str;

    /// Whether the flow preserves a contact form (torsion energy is defined).
    fn is_contact(&self) -> bool;

    /// Whether the flow is Anosov (expansion rates dominate).
    fn is_anosov(&self) -> bool;

    /// Closed-form total measure of the invariant volume, when known.
    fn volume(&self) -> Option<f64>;

    /// Flow the point for time `t` (may be negative).
    fn advance(&self, p: &Self::Point, t: f64) -> Result<Self::Point>;

    /// Sample `n` points of the forward orbit at spacing `dt`, with rates.
    /// Deterministic given the backend configuration, `p0`, `dt` and `n`;
    /// `seed` is recorded in the series for provenance only.
    fn sample_orbit(&self, p0: &Self::Point, dt: f64, n: usize, seed: u64) -> Result<OrbitSeries>;
}
