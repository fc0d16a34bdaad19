//! Geodesic flow of the conformally perturbed metric e^{2u} g_hyp on the
//! genus-2 quotient, with expansion rates computed by the Riccati equation
//! r' = -r^2 - K along orbits.
//!
//! The state is (position, direction angle, Riccati variable). Unit speed in
//! the perturbed metric is built into the angle representation, so no speed
//! renormalization is ever needed. Positions are folded into the fundamental
//! octagon between steps; directions and the Riccati variable transport
//! through the folding isometry (the angle rotates by the argument of the
//! Mobius derivative, r is isometry-invariant).

use num_complex::Complex64;

use crate::algebraic::in_octagon;
use crate::conformal::{fold_point, ConformalFactor};
use crate::error::{Error, Result};
use crate::series::{FlowBackend, OrbitSeries};

/// A state of the perturbed geodesic flow.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedState {
    /// Poincare-disk coordinates, inside the fundamental octagon.
    pub position: Complex64,
    /// Unit tangent angle (Euclidean angle of the velocity).
    pub direction: f64,
    /// Current Riccati variable (unstable branch when warmed up forward).
    pub riccati_r: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbedBackend {
    pub factor: ConformalFactor,
    /// Largest internal integrator step.
    pub dt_max: f64,
    /// Riccati warmup discarded before rates are trusted.
    pub warmup: f64,
}

/// Right-hand side of the geodesic + Riccati system at a folded position.
/// phi = ln P with P = e^u * 2/(1-|z|^2); unit-speed geodesics of P^2 |dz|^2:
///   x' = cos(psi)/P, y' = sin(psi)/P,
///   psi' = (cos(psi) phi_y - sin(psi) phi_x)/P,
///   r' = -r^2 - K.
fn rhs(factor: &ConformalFactor, z: Complex64, psi: f64, r: f64) -> (f64, f64, f64, f64) {
    let r2 = z.norm_sqr();
    let den = 1.0 - r2;
    let u = factor.value_in_domain(z);
    let p = u.exp() * 2.0 / den;
    let (ux, uy) = factor.gradient_in_domain(z);
    let phi_x = ux + 2.0 * z.re / den;
    let phi_y = uy + 2.0 * z.im / den;
    let (s, c) = psi.sin_cos();
    let kappa = factor.curvature_in_domain(z);
    (c / p, s / p, (c * phi_y - s * phi_x) / p, -r * r - kappa)
}

impl PerturbedBackend {
    pub fn new(factor: ConformalFactor, dt_max: f64, warmup: f64) -> Result<Self> {
        if dt_max <= 0.0 || dt_max > 0.1 {
            return Err(Error::InvalidArgument(format!(
                "dt_max must be in (0, 0.1], got {dt_max}"
            )));
        }
        if warmup < 10.0 {
            return Err(Error::InvalidArgument(format!(
                "warmup must be >= 10 time units (attraction budget), got {warmup}"
            )));
        }
        Ok(Self {
            factor,
            dt_max,
            warmup,
        })
    }

    pub fn unperturbed(dt_max: f64, warmup: f64) -> Result<Self> {
        Self::new(ConformalFactor::flat(), dt_max, warmup)
    }

    /// One classical RK4 step of size h (|h| <= dt_max), followed by folding
    /// back into the octagon when the position leaves it.
    ///
    /// The Riccati channel is forward-attracting only; integrating long
    /// backward spans diverges it (use the geometry-only path for those).
    pub fn step_geodesic(&self, s: &PerturbedState, h: f64) -> Result<PerturbedState> {
        self.step_inner(s, h, true)
    }

    fn step_inner(&self, s: &PerturbedState, h: f64, with_riccati: bool) -> Result<PerturbedState> {
        if h.abs() > self.dt_max + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "step {h} exceeds dt_max {}",
                self.dt_max
            )));
        }
        let (x, y, psi, r) = (s.position.re, s.position.im, s.direction, s.riccati_r);
        let f = |x: f64, y: f64, psi: f64, r: f64| rhs(&self.factor, Complex64::new(x, y), psi, r);
        let k1 = f(x, y, psi, r);
        let k2 = f(
            x + 0.5 * h * k1.0,
            y + 0.5 * h * k1.1,
            psi + 0.5 * h * k1.2,
            r + 0.5 * h * k1.3,
        );
        let k3 = f(
            x + 0.5 * h * k2.0,
            y + 0.5 * h * k2.1,
            psi + 0.5 * h * k2.2,
            r + 0.5 * h * k2.3,
        );
        let k4 = f(x + h * k3.0, y + h * k3.1, psi + h * k3.2, r + h * k3.3);
        let x1 = x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let y1 = y + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        let psi1 = psi + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
        let r1 = if with_riccati {
            r + h / 6.0 * (k1.3 + 2.0 * k2.3 + 2.0 * k3.3 + k4.3)
        } else {
            r
        };
        if !(x1.is_finite() && y1.is_finite() && psi1.is_finite() && r1.is_finite()) {
            return Err(Error::IntegratorDiverged {
                t: 0.0,
                detail: format!("state ({x1}, {y1}, {psi1}, {r1})"),
            });
        }
        let mut z1 = Complex64::new(x1, y1);
        let mut dir1 = psi1;
        if !in_octagon(z1, 1e-12) {
            let (zf, map) = fold_point(z1)?;
            dir1 += map.deriv(z1).arg();
            z1 = zf;
        }
        Ok(PerturbedState {
            position: z1,
            direction: dir1,
            riccati_r: r1,
        })
    }

    /// Flow for time t (either sign), splitting into equal substeps <= dt_max.
    pub fn advance_state(&self, s: &PerturbedState, t: f64) -> Result<PerturbedState> {
        self.advance_inner(s, t, true)
    }

    /// Geodesic transport without the Riccati channel (safe for long
    /// backward spans; r is carried along unchanged).
    pub fn advance_geometry(&self, s: &PerturbedState, t: f64) -> Result<PerturbedState> {
        self.advance_inner(s, t, false)
    }

    fn advance_inner(
        &self,
        s: &PerturbedState,
        t: f64,
        with_riccati: bool,
    ) -> Result<PerturbedState> {
        if t == 0.0 {
            return Ok(*s);
        }
        let n = (t.abs() / self.dt_max).ceil().max(1.0) as usize;
        let h = t / n as f64;
        let mut cur = *s;
        for i in 0..n {
            cur = self
                .step_inner(&cur, h, with_riccati)
                .map_err(|e| match e {
                    Error::IntegratorDiverged { detail, .. } => Error::IntegratorDiverged {
                        t: i as f64 * h,
                        detail,
                    },
                    other => other,
                })?;
        }
        Ok(cur)
    }

    /// Seeded point: uniform position in the octagon with uniform direction,
    /// with the Riccati variable seeded on the local constant-curvature value.
    pub fn random_point(&self, rng: &mut impl rand::Rng) -> PerturbedState {
        loop {
            let x: f64 = rng.gen_range(-0.85..0.85);
            let y: f64 = rng.gen_range(-0.85..0.85);
            let z = Complex64::new(x, y);
            if z.norm() > 0.9 || !in_octagon(z, -1e-3) {
                continue;
            }
            let r2 = z.norm_sqr();
            let w = (1.0 - 0.9f64) / (1.0 - r2);
            if rng.gen_range(0.0..1.0) > w * w {
                continue;
            }
            let kappa = self.factor.curvature_in_domain(z);
            return PerturbedState {
                position: z,
                direction: rng.gen_range(0.0..std::f64::consts::TAU),
                riccati_r: (-kappa).sqrt(),
            };
        }
    }
}

impl FlowBackend for PerturbedBackend {
    type Point = PerturbedState;

    fn name(&self) -> &'static str {
        "perturbed"
    }

    fn is_contact(&self) -> bool {
        true
    }

    fn is_anosov(&self) -> bool {
        true
    }

    fn volume(&self) -> Option<f64> {
        // no closed form for the perturbed metric; energies are reported
        // per unit volume
        None
    }

    fn advance(&self, p: &PerturbedState, t: f64) -> Result<PerturbedState> {
        self.advance_state(p, t)
    }

    /// Samples the orbit with warmed-up Riccati rates on both bundles.
    ///
    /// The unstable rate integrates the Riccati equation forward from a
    /// backward-extended start; the stable rate comes from the time-reversed
    /// run with a sign flip.
    fn sample_orbit(
        &self,
        p0: &PerturbedState,
        dt: f64,
        n: usize,
        seed: u64,
    ) -> Result<OrbitSeries> {
        if dt <= 0.0 || n == 0 {
            return Err(Error::InvalidArgument(
                "sample_orbit requires dt > 0 and n >= 1".into(),
            ));
        }
        let w_steps = (self.warmup / dt).ceil() as usize;
        let n_ext = n + 2 * w_steps;

        // backward leg to the warmup start (geometry only)
        let start = self.advance_geometry(p0, -(w_steps as f64) * dt)?;

        // forward pass: states and curvature on the extended grid
        let mut states = Vec::with_capacity(n_ext);
        let mut kappa = Vec::with_capacity(n_ext);
        let mut cur = start;
        for i in 0..n_ext {
            states.push(cur);
            kappa.push(self.factor.curvature_in_domain(cur.position));
            if i + 1 < n_ext {
                cur = self.advance_geometry(&cur, dt)?;
            }
        }

        // Riccati rates from the curvature series
        let r_fwd = riccati_rate(&kappa, dt, self.warmup, None)?;
        let kappa_rev: Vec<f64> = kappa.iter().rev().copied().collect();
        let r_rev = riccati_rate(&kappa_rev, dt, self.warmup, None)?;

        // window [w_steps, w_steps + n)
        let r_u: Vec<f64> = (0..n).map(|i| r_fwd[i]).collect();
        let r_s: Vec<f64> = (0..n)
            .map(|i| -r_rev[n_ext - 2 * w_steps - 1 - i])
            .collect();

        let window = &states[w_steps..w_steps + n];
        let series = OrbitSeries::new(
            0.0,
            dt,
            r_u,
            r_s,
            format!("perturbed(z0 = {}, psi0 = {})", p0.position, p0.direction),
            seed,
        )?
        .with_aux("pos_x", window.iter().map(|s| s.position.re).collect())?
        .with_aux("pos_y", window.iter().map(|s| s.position.im).collect())?
        .with_aux("psi", window.iter().map(|s| s.direction).collect())?
        .with_aux("kappa", kappa[w_steps..w_steps + n].to_vec())?;
        series.validate_anosov()?;
        Ok(series)
    }
}

/// Integrate r' = -r^2 - K forward along a sampled curvature series and
/// discard the warmup prefix. The retained tail is attracted to the unstable
/// expansion rate regardless of the start value `r0` (default sqrt(-K[0])).
///
/// The stable rate is the time-reversed run with a sign flip:
/// reverse the curvature series, integrate, negate, re-reverse.
pub fn riccati_rate(kappa: &[f64], dt: f64, warmup: f64, r0: Option<f64>) -> Result<Vec<f64>> {
    if kappa.len() < 2 {
        return Err(Error::SeriesTooShort {
            need: 2,
            have: kappa.len(),
        });
    }
    let min_abs_k = kappa.iter().fold(f64::INFINITY, |m, &k| m.min(k.abs()));
    if kappa.iter().any(|&k| k >= 0.0) {
        return Err(Error::InvalidArgument(
            "riccati_rate requires strictly negative curvature".into(),
        ));
    }
    if warmup < 10.0 / min_abs_k.sqrt() {
        return Err(Error::InvalidArgument(format!(
            "warmup {warmup} below the attraction budget 10/sqrt(min|K|) = {}",
            10.0 / min_abs_k.sqrt()
        )));
    }
    let w_steps = (warmup / dt).ceil() as usize;
    if w_steps + 1 >= kappa.len() {
        return Err(Error::SeriesTooShort {
            need: w_steps + 2,
            have: kappa.len(),
        });
    }
    let max_abs_k = kappa.iter().fold(0.0f64, |m, &k| m.max(k.abs()));
    let floor = -2.0 * max_abs_k.sqrt() - 1.0;

    let mut r = r0.unwrap_or_else(|| (-kappa[0]).sqrt());
    let mut out = Vec::with_capacity(kappa.len());
    out.push(r);
    let f = |r: f64, k: f64| -r * r - k;
    for i in 0..kappa.len() - 1 {
        let (k0, k1) = (kappa[i], kappa[i + 1]);
        let km = 0.5 * (k0 + k1);
        let a1 = f(r, k0);
        let a2 = f(r + 0.5 * dt * a1, km);
        let a3 = f(r + 0.5 * dt * a2, km);
        let a4 = f(r + dt * a3, k1);
        r += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        if !r.is_finite() || r < floor {
            return Err(Error::RiccatiBlowup {
                t: (i + 1) as f64 * dt,
                r,
            });
        }
        out.push(r);
    }
    Ok(out.split_off(w_steps))
}
