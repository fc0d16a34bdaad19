//! Expansion-rate uniformization by flow averaging of the norm.
//!
//! For a window T and offset eps_T, the averaged norm of a unit unstable
//! vector at a point x is
//!
//!   ||v||_T^2 = int_{-L}^0 ||dX^t v||^2 / R_t^2 dt
//!             + int_0^{+L}  ||dX^t v||^2 / S_t^2 dt,
//!
//! where ln R_t = int_0^t (-eps_T + m(u)) du, ln S_t the same with +eps_T,
//! and m is the forward window average of r_u. The correction terms are
//! A_T = (forward - backward)/||v||_T^2 (so |A_T| <= 1 structurally) and
//! B_T = 1/||v||_T^2. The uniformized rate and its flow derivative follow
//! the closed identities
//!
//!   r_{u,T}     = eps_T A_T + m                                     (1)
//!   X . r_{u,T} = 2 eps_T^2 + (r_u(T) - r_u)/T
//!                 - 2 eps_T B_T - 2 eps_T^2 A_T^2                   (2)
//!
//! which hold exactly for the truncated integrals as well (the moving
//! endpoint cancels; the outer boundary at +-L is fixed). The middle term
//! of (2) carries 1/T: d^2/dk^2 of R_k^2 contributes 2 m'(k) with
//! m' = (r_u(k+T) - r_u(k))/T, and the 1/2 in front of d^2/dk^2 ln N halves
//! it exactly once. Both identities are cross-checked against direct finite
//! differences of (1/2) ln||dX^k v||_T^2 wherever the differencing stencil
//! is free of rate kinks.

use crate::error::{Error, Result};
use crate::numeric::{prefix_trapezoid, Kahan};
use crate::series::OrbitSeries;

#[derive(Debug, Clone, Copy)]
pub struct UniformizeConfig {
    /// Averaging window T.
    pub window_t: f64,
    /// Rate offset eps_T.
    pub eps_t: f64,
    /// Truncation horizon L for the two improper integrals.
    pub horizon: f64,
}

impl UniformizeConfig {
    pub fn new(window_t: f64, eps_t: f64, horizon: f64) -> Result<Self> {
        if window_t <= 0.0 || eps_t <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "window_t and eps_t must be positive, got {window_t}, {eps_t}"
            )));
        }
        if horizon < 5.0 * window_t {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} below 5 * window {window_t}"
            )));
        }
        Ok(Self {
            window_t,
            eps_t,
            horizon,
        })
    }

    /// Default horizon 5 * max(T, 1/eps_T), optionally capped (the
    /// truncation bound gates validity when the cap bites).
    pub fn with_default_horizon(window_t: f64, eps_t: f64, cap: Option<f64>) -> Result<Self> {
        let mut horizon = 5.0 * window_t.max(1.0 / eps_t);
        if let Some(c) = cap {
            horizon = horizon.min(c.max(5.0 * window_t));
        }
        Self::new(window_t, eps_t, horizon)
    }
}

/// The asymptotic offset schedule e^{-T (max r_u - min r_u)},
/// floored at 1e-6 for numerical tractability. Returns the offset and
/// whether the floor engaged.
pub fn default_epsilon(series: &OrbitSeries, window_t: f64) -> (f64, bool) {
    let max = series.r_u().iter().cloned().fold(f64::MIN, f64::max);
    let min = series.r_u().iter().cloned().fold(f64::MAX, f64::min);
    let eps = (-window_t * (max - min)).exp();
    if eps < 1e-6 {
        (1e-6, true)
    } else {
        (eps, false)
    }
}

fn grid_steps(value: f64, dt: f64, what: &str) -> Result<usize> {
    let k = value / dt;
    let rounded = k.round();
    if (k - rounded).abs() > 1e-6 || rounded < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "{what} = {value} is not a positive multiple of dt = {dt}"
        )));
    }
    Ok(rounded as usize)
}

/// Forward window average m(t) = (1/T) int_0^T r_u(t + tau) d tau on the
/// grid; entry i is the average over [t_i, t_i + T].
pub fn moving_average_rate(series: &OrbitSeries, window_t: f64) -> Result<Vec<f64>> {
    let k_t = grid_steps(window_t, series.dt(), "window")?;
    let n = series.len();
    if k_t >= n {
        return Err(Error::SeriesTooShort {
            need: k_t + 1,
            have: n,
        });
    }
    let pr = series.stretch_prefix();
    let t_eff = k_t as f64 * series.dt();
    Ok((0..n - k_t)
        .map(|i| (pr[i + k_t] - pr[i]) / t_eff)
        .collect())
}

/// Shared per-(series, config) tables.
struct Tables<'a> {
    dt: f64,
    eps: f64,
    k_t: usize,
    k_l: usize,
    pr: &'a [f64],
    /// Window average, length n - k_t.
    m: Vec<f64>,
    /// Prefix trapezoid of m.
    pm: Vec<f64>,
    /// Sample indices flagged as rate kinks (piecewise-constant backends).
    kink: Vec<bool>,
}

impl<'a> Tables<'a> {
    fn build(series: &'a OrbitSeries, cfg: &UniformizeConfig) -> Result<Self> {
        let dt = series.dt();
        let k_t = grid_steps(cfg.window_t, dt, "window")?;
        let k_l = grid_steps(cfg.horizon, dt, "horizon")?;
        let m = moving_average_rate(series, cfg.window_t)?;
        let pm = prefix_trapezoid(&m, dt);
        let r = series.r_u();
        let mut diffs: Vec<f64> = r.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let kink = if diffs.is_empty() {
            vec![false; r.len()]
        } else {
            diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = diffs[diffs.len() / 2];
            let thresh = 10.0 * median + 1e-12;
            let mut flags = vec![false; r.len()];
            for i in 0..r.len() - 1 {
                if (r[i + 1] - r[i]).abs() > thresh {
                    flags[i] = true;
                    flags[i + 1] = true;
                }
            }
            flags
        };
        Ok(Self {
            dt,
            eps: cfg.eps_t,
            k_t,
            k_l,
            pr: series.stretch_prefix(),
            m,
            pm,
            kink,
        })
    }

    fn first_base(&self) -> usize {
        self.k_l
    }

    fn last_base(&self) -> Option<usize> {
        // need pm up to x + k_l and r_u at x + k_t
        let n_m = self.m.len();
        if n_m < 2 * self.k_l + 1 {
            return None;
        }
        Some(n_m - 1 - self.k_l)
    }

    /// ln of the cumulative gap between the raw stretch and the window
    /// average, relative to base x: G(j) = int (r_u - m) from x to j.
    #[inline]
    fn gap(&self, x: usize, j: usize) -> f64 {
        (self.pr[j] - self.pr[x]) - (self.pm[j] - self.pm[x])
    }

    /// Integrand ln value at offset j (either side): 2G - 2 eps |t_j - t_x|.
    #[inline]
    fn ln_integrand(&self, x: usize, j: usize) -> f64 {
        let dtau = (j as f64 - x as f64) * self.dt;
        2.0 * self.gap(x, j) - 2.0 * self.eps * dtau.abs()
    }

    fn kink_near(&self, idx: usize, pad: usize) -> bool {
        let lo = idx.saturating_sub(pad);
        let hi = (idx + pad).min(self.kink.len() - 1);
        self.kink[lo..=hi].iter().any(|&k| k)
    }
}

/// The averaged squared norm of a unit unstable vector with its correction
/// terms.
#[derive(Debug, Clone, Copy)]
pub struct AveragedNorm {
    pub norm_sq: f64,
    pub a_t: f64,
    pub b_t: f64,
    /// Estimated tail mass beyond the horizon (absolute).
    pub truncation_bound: f64,
}

fn side_integral(tables: &Tables, x: usize, forward: bool) -> (f64, f64) {
    // trapezoid from the base point outward; returns (integral, tail estimate)
    let k_l = tables.k_l;
    let mut acc = Kahan::new();
    let mut prev = (tables.ln_integrand(x, x)).exp();
    let mut values = Vec::with_capacity(k_l + 1);
    values.push(prev);
    for step in 1..=k_l {
        let j = if forward { x + step } else { x - step };
        let v = tables.ln_integrand(x, j).exp();
        values.push(v);
        acc.add(0.5 * tables.dt * (prev + v));
        prev = v;
    }
    // tail estimate from the last decade of the window: the gap term is
    // bounded (domination), so the systematic decay rate is exactly 2 eps;
    // extrapolate the decade's mean amplitude at that rate
    let decade = (k_l / 10).max(2).min(k_l);
    let mean_last = values[k_l - decade..=k_l].iter().sum::<f64>() / (decade + 1) as f64;
    let to_edge = 0.5 * decade as f64 * tables.dt;
    let tail = mean_last * (-2.0 * tables.eps * to_edge).exp() / (2.0 * tables.eps);
    (acc.value(), tail)
}

/// Evaluate the averaged norm at a grid-aligned base time.
pub fn averaged_norm_sq(
    series: &OrbitSeries,
    base_time: f64,
    cfg: &UniformizeConfig,
) -> Result<AveragedNorm> {
    let tables = Tables::build(series, cfg)?;
    let x = series.index_of(base_time)?;
    let last = tables.last_base().ok_or(Error::SeriesTooShort {
        need: 2 * tables.k_l + tables.k_t + 1,
        have: series.len(),
    })?;
    if x < tables.first_base() || x > last {
        return Err(Error::TimeOutOfRange {
            t: base_time,
            t_min: series.t(tables.first_base()),
            t_max: series.t(last),
        });
    }
    averaged_norm_at(&tables, x)
}

fn averaged_norm_at(tables: &Tables, x: usize) -> Result<AveragedNorm> {
    let (fwd, tail_f) = side_integral(tables, x, true);
    let (bwd, tail_b) = side_integral(tables, x, false);
    let norm_sq = fwd + bwd;
    let truncation_bound = tail_f + tail_b;
    if !(truncation_bound <= 0.1 * norm_sq) {
        return Err(Error::TruncationTooLarge {
            bound: truncation_bound,
            value: norm_sq,
        });
    }
    Ok(AveragedNorm {
        norm_sq,
        a_t: (fwd - bwd) / norm_sq,
        b_t: 1.0 / norm_sq,
        truncation_bound,
    })
}

/// Uniformized rate series with corrections and flow derivative.
#[derive(Debug, Clone)]
pub struct UniformizedRate {
    pub base_index: Vec<usize>,
    pub base_t: Vec<f64>,
    pub r_ut: Vec<f64>,
    pub x_r_ut: Vec<f64>,
    pub a_t: Vec<f64>,
    pub b_t: Vec<f64>,
    /// Worst absolute tail estimate across evaluation points.
    pub truncation_error_bound: f64,
}

/// Evaluate r_{u,T} and X.r_{u,T} at every `stride`-th admissible base
/// point. Formula mode (identities (1)-(2)) is cross-checked against the
/// direct finite differences of the log averaged norm wherever the stencil
/// avoids rate kinks; disagreement beyond `mode_tol` is an error.
pub fn uniformized_rate(
    series: &OrbitSeries,
    cfg: &UniformizeConfig,
    stride: usize,
) -> Result<UniformizedRate> {
    uniformized_rate_impl(series, cfg, stride, 1e-4, true)
}

/// As `uniformized_rate` but without the direct-mode cross-check (used for
/// long sweeps where the check has already passed on a subsample).
pub fn uniformized_rate_unchecked(
    series: &OrbitSeries,
    cfg: &UniformizeConfig,
    stride: usize,
) -> Result<UniformizedRate> {
    uniformized_rate_impl(series, cfg, stride, 1e-4, false)
}

fn uniformized_rate_impl(
    series: &OrbitSeries,
    cfg: &UniformizeConfig,
    stride: usize,
    mode_tol: f64,
    cross_check: bool,
) -> Result<UniformizedRate> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let tables = Tables::build(series, cfg)?;
    let last = tables.last_base().ok_or(Error::SeriesTooShort {
        need: 2 * tables.k_l + tables.k_t + 1,
        have: series.len(),
    })?;
    let first = tables.first_base();
    if first > last {
        return Err(Error::SeriesTooShort {
            need: 2 * tables.k_l + tables.k_t + 1,
            have: series.len(),
        });
    }
    let dt = tables.dt;
    let eps = tables.eps;
    let t_eff = tables.k_t as f64 * dt;
    let r = series.r_u();

    let mut out = UniformizedRate {
        base_index: Vec::new(),
        base_t: Vec::new(),
        r_ut: Vec::new(),
        x_r_ut: Vec::new(),
        a_t: Vec::new(),
        b_t: Vec::new(),
        truncation_error_bound: 0.0,
    };

    let mut x = first;
    while x <= last {
        let norm = averaged_norm_at(&tables, x)?;
        let m_x = tables.m[x];
        let r_ut = eps * norm.a_t + m_x;
        let x_r_ut = 2.0 * eps * eps + (r[x + tables.k_t] - r[x]) / t_eff
            - 2.0 * eps * norm.b_t
            - 2.0 * eps * eps * norm.a_t * norm.a_t;

        if cross_check && x > first && x < last {
            // direct mode: second differences of (1/2) ln N(k) at k = -dt, 0, dt,
            // valid when the stencil windows at x and x + T are kink-free
            let pad = 2;
            if !tables.kink_near(x, pad) && !tables.kink_near(x + tables.k_t, pad) {
                let (r_direct, x_direct) = direct_mode(&tables, x)?;
                if (r_direct - r_ut).abs() > mode_tol {
                    return Err(Error::ModeDisagreement {
                        t: series.t(x),
                        formula: r_ut,
                        direct: r_direct,
                        tol: mode_tol,
                    });
                }
                if (x_direct - x_r_ut).abs() > mode_tol {
                    return Err(Error::ModeDisagreement {
                        t: series.t(x),
                        formula: x_r_ut,
                        direct: x_direct,
                        tol: mode_tol,
                    });
                }
            }
        }

        out.base_index.push(x);
        out.base_t.push(series.t(x));
        out.r_ut.push(r_ut);
        out.x_r_ut.push(x_r_ut);
        out.a_t.push(norm.a_t);
        out.b_t.push(norm.b_t);
        out.truncation_error_bound = out.truncation_error_bound.max(norm.truncation_bound);
        x += stride;
    }
    Ok(out)
}

/// ln N(k) for k in {-dt, 0, +dt} at base x, where
/// N(k) = R_k^2 I_b(k) + S_k^2 I_f(k) over the fixed window [-L, L].
fn direct_mode(tables: &Tables, x: usize) -> Result<(f64, f64)> {
    let dt = tables.dt;
    let eps = tables.eps;
    let k_l = tables.k_l;

    // integrands relative to base x over the fixed window
    let lo = x - k_l;
    let hi = x + k_l;
    let bwd_ln = |j: usize| -> f64 {
        // backward integrand uses R_t: ln = 2G(j) + 2 eps (t_j - t_x)
        let dtau = (j as f64 - x as f64) * dt;
        2.0 * tables.gap(x, j) + 2.0 * eps * dtau
    };
    let fwd_ln = |j: usize| -> f64 {
        let dtau = (j as f64 - x as f64) * dt;
        2.0 * tables.gap(x, j) - 2.0 * eps * dtau
    };

    // I_b(k) = int_{-L}^{k}, I_f(k) = int_k^{L}; accumulate once and split
    let mut ib = [0.0f64; 3]; // k = -1, 0, +1 grid offsets
    let mut if_ = [0.0f64; 3];
    {
        let mut acc = Kahan::new();
        let mut prev = bwd_ln(lo).exp();
        for j in lo + 1..=x + 1 {
            let v = bwd_ln(j).exp();
            acc.add(0.5 * dt * (prev + v));
            prev = v;
            if j == x - 1 {
                ib[0] = acc.value();
            } else if j == x {
                ib[1] = acc.value();
            } else if j == x + 1 {
                ib[2] = acc.value();
            }
        }
    }
    {
        let mut acc = Kahan::new();
        let mut prev = fwd_ln(hi).exp();
        for j in (x - 1..hi).rev() {
            let v = fwd_ln(j).exp();
            acc.add(0.5 * dt * (prev + v));
            prev = v;
            if j == x + 1 {
                if_[2] = acc.value();
            } else if j == x {
                if_[1] = acc.value();
            } else if j == x - 1 {
                if_[0] = acc.value();
            }
        }
    }

    // ln R_k, ln S_k for k = -dt, 0, dt
    let ln_n = |off: i64| -> f64 {
        let idx = (x as i64 + off) as usize;
        let pm_gap = tables.pm[idx] - tables.pm[x];
        let k = off as f64 * dt;
        let ln_r = -eps * k + pm_gap;
        let ln_s = eps * k + pm_gap;
        let slot = (off + 1) as usize;
        ((2.0 * ln_r).exp() * ib[slot] + (2.0 * ln_s).exp() * if_[slot]).ln()
    };
    let (nm, n0, np) = (ln_n(-1), ln_n(0), ln_n(1));
    let r_direct = (np - nm) / (4.0 * dt);
    let x_direct = 0.5 * (np - 2.0 * n0 + nm) / (dt * dt);
    Ok((r_direct, x_direct))
}

/// Domination diagnostics: the bounded term in
/// ln(||dX^t|| / S_t) = -eps t + G(t) must satisfy |G| <= (T/2) * spread.
#[derive(Debug, Clone)]
pub struct DominationReport {
    /// (T/2) (max r_u - min r_u) over the sampled series.
    pub bound: f64,
    pub max_abs_term: f64,
    /// max |term| / bound; 1 means the bound is attained.
    pub tightness: f64,
    pub violations: usize,
}

pub fn domination_check(
    series: &OrbitSeries,
    cfg: &UniformizeConfig,
    stride: usize,
) -> Result<DominationReport> {
    let tables = Tables::build(series, cfg)?;
    let last = tables.last_base().ok_or(Error::SeriesTooShort {
        need: 2 * tables.k_l + tables.k_t + 1,
        have: series.len(),
    })?;
    let max = series.r_u().iter().cloned().fold(f64::MIN, f64::max);
    let min = series.r_u().iter().cloned().fold(f64::MAX, f64::min);
    let bound = 0.5 * cfg.window_t * (max - min);
    let mut max_abs = 0.0f64;
    let mut violations = 0usize;
    let mut x = tables.first_base();
    while x <= last {
        for j in (x - tables.k_l..=x + tables.k_l).step_by(stride.max(1)) {
            let g = tables.gap(x, j).abs();
            if g > max_abs {
                max_abs = g;
            }
            if g > bound + 1e-9 {
                violations += 1;
            }
        }
        x += stride.max(1) * 16;
    }
    Ok(DominationReport {
        bound,
        max_abs_term: max_abs,
        tightness: if bound > 0.0 { max_abs / bound } else { 0.0 },
        violations,
    })
}

/// Multiplicativity of the averaged cocycle: R_{t+k} = R_t * R_k(X^t x),
/// checked with independently accumulated integrals (not shared prefixes).
/// Returns the worst relative residual over `n_checks` seeded (t, k) pairs.
pub fn cocycle_residual(
    series: &OrbitSeries,
    cfg: &UniformizeConfig,
    n_checks: usize,
    seed: u64,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let tables = Tables::build(series, cfg)?;
    let n_m = tables.m.len();
    if n_m < 16 {
        return Err(Error::SeriesTooShort {
            need: 16,
            have: n_m,
        });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dt = tables.dt;
    let ln_r_between = |a: usize, b: usize| -> f64 {
        // fresh trapezoid of ln r = -eps + m over [a, b]
        let mut acc = Kahan::new();
        for j in a..b {
            acc.add(0.5 * dt * ((tables.m[j] - tables.eps) + (tables.m[j + 1] - tables.eps)));
        }
        acc.value()
    };
    let mut worst = 0.0f64;
    for _ in 0..n_checks {
        let x = rng.gen_range(0..n_m / 4);
        let jt = rng.gen_range(1..n_m / 4);
        let jk = rng.gen_range(1..n_m / 4);
        let whole = ln_r_between(x, x + jt + jk);
        let split = ln_r_between(x, x + jt) + ln_r_between(x + jt, x + jt + jk);
        let rel = (whole.exp() - split.exp()).abs() / whole.exp().max(1e-300);
        worst = worst.max(rel);
    }
    Ok(worst)
}
