//! Non-contact Anosov flow: suspension of a (possibly perturbed) hyperbolic
//! toral automorphism under a variable roof function.
//!
//! The base map is F(x) = A x + eps * s(x) mod 1 with A = [[2,1],[1,1]] and
//! s(x) = (sin 2 pi x2, sin 2 pi x1); the roof is rho(x) = 1 + delta cos(2 pi x1).
//! The instantaneous rate of a suspension concentrates at crossings; the
//! shipped fiber norm spreads each crossing's stretch uniformly over its
//! roof interval, so r_u(x, s) = ln||DF(x) v_u(x)|| / rho(x), constant in s
//! within a fiber.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::series::{FlowBackend, OrbitSeries};

const CAT: [[f64; 2]; 2] = [[2.0, 1.0], [1.0, 1.0]];

/// Perturbed hyperbolic toral automorphism.
#[derive(Debug, Clone)]
pub struct TorusMap {
    pub eps: f64,
}

impl TorusMap {
    pub fn new(eps: f64) -> Result<Self> {
        if !(0.0..=0.05).contains(&eps) {
            return Err(Error::InvalidArgument(format!(
                "torus-map perturbation must lie in [0, 0.05], got {eps}"
            )));
        }
        let map = Self { eps };
        map.check_cone_invariance()?;
        Ok(map)
    }

    pub fn matrix() -> Matrix2<f64> {
        Matrix2::new(CAT[0][0], CAT[0][1], CAT[1][0], CAT[1][1])
    }

    /// Leading eigenvalue of the unperturbed map, (3 + sqrt 5)/2.
    pub fn cat_eigenvalue() -> f64 {
        (3.0 + 5.0f64.sqrt()) / 2.0
    }

    /// Unstable eigenvector of the unperturbed map, unit length.
    pub fn cat_unstable_direction() -> Vector2<f64> {
        let lam = Self::cat_eigenvalue();
        let v = Vector2::new(1.0, lam - 2.0);
        v / v.norm()
    }

    pub fn apply(&self, x: Vector2<f64>) -> Vector2<f64> {
        let a = Self::matrix();
        let pert = Vector2::new(
            (std::f64::consts::TAU * x[1]).sin(),
            (std::f64::consts::TAU * x[0]).sin(),
        );
        let y = a * x + self.eps * pert;
        Vector2::new(y[0].rem_euclid(1.0), y[1].rem_euclid(1.0))
    }

    /// Inverse by fixed-point iteration on x' = A^{-1}(y - eps s(x')).
    pub fn apply_inverse(&self, y: Vector2<f64>) -> Vector2<f64> {
        let a_inv = Matrix2::new(1.0, -1.0, -1.0, 2.0);
        // solve on the universal cover near a seed, then wrap
        let mut x = a_inv * y;
        for _ in 0..100 {
            let pert = Vector2::new(
                (std::f64::consts::TAU * x[1]).sin(),
                (std::f64::consts::TAU * x[0]).sin(),
            );
            let next = a_inv * (y - self.eps * pert);
            if (next - x).norm() < 1e-15 {
                x = next;
                break;
            }
            x = next;
        }
        Vector2::new(x[0].rem_euclid(1.0), x[1].rem_euclid(1.0))
    }

    pub fn jacobian(&self, x: Vector2<f64>) -> Matrix2<f64> {
        let t = std::f64::consts::TAU;
        Self::matrix() + self.eps * t * Matrix2::new(0.0, (t * x[1]).cos(), (t * x[0]).cos(), 0.0)
    }

    /// Cone-field invariance along a 1000-step test orbit: vectors within
    /// the cone |v_s| <= kappa |v_u| around the unperturbed unstable
    /// eigenbasis must map strictly inside it.
    fn check_cone_invariance(&self) -> Result<()> {
        let lam = Self::cat_eigenvalue();
        let e_u = Self::cat_unstable_direction();
        let e_s = Vector2::new(-e_u[1], e_u[0]);
        let kappa = 0.5;
        let mut x = Vector2::new(0.2345, 0.6789);
        for step in 0..1000 {
            let df = self.jacobian(x);
            for sign in [-1.0, 1.0] {
                let v = e_u + sign * kappa * e_s;
                let w = df * v;
                let wu = w.dot(&e_u);
                let ws = w.dot(&e_s);
                if !(ws.abs() < kappa * wu.abs()) {
                    return Err(Error::InvalidArgument(format!(
                        "cone invariance fails at step {step}: |ws/wu| = {}",
                        (ws / wu).abs()
                    )));
                }
                // expansion inside the cone must beat the unperturbed gap
                if wu.abs() < 0.5 * lam {
                    return Err(Error::InvalidArgument(format!(
                        "cone expansion too weak at step {step}"
                    )));
                }
            }
            x = self.apply(x);
        }
        Ok(())
    }
}

/// A point of the suspension: torus coordinates plus roof coordinate.
#[derive(Debug, Clone, Copy)]
pub struct SuspensionPoint {
    pub x: Vector2<f64>,
    pub s: f64,
}

#[derive(Debug, Clone)]
pub struct SuspensionBackend {
    pub map: TorusMap,
    pub delta: f64,
    pub warmup_iterations: usize,
}

impl SuspensionBackend {
    pub fn new(eps: f64, delta: f64, warmup_iterations: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidArgument(format!(
                "roof amplitude delta must lie in [0, 1), got {delta}"
            )));
        }
        if warmup_iterations < 50 {
            return Err(Error::InvalidArgument(format!(
                "warmup_iterations must be >= 50, got {warmup_iterations}"
            )));
        }
        Ok(Self {
            map: TorusMap::new(eps)?,
            delta,
            warmup_iterations,
        })
    }

    pub fn roof(&self, x: Vector2<f64>) -> f64 {
        1.0 + self.delta * (std::f64::consts::TAU * x[0]).cos()
    }

    pub fn random_point(&self, rng: &mut impl rand::Rng) -> SuspensionPoint {
        let x = Vector2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let s = rng.gen_range(0.0..self.roof(x));
        SuspensionPoint { x, s }
    }

    /// Unstable direction at the fiber over x, tracked by normalized
    /// push-forward from `warmup_iterations` preimages back.
    fn unstable_direction(&self, x: Vector2<f64>) -> Result<Vector2<f64>> {
        let mut pre = x;
        for _ in 0..self.warmup_iterations {
            pre = self.map.apply_inverse(pre);
        }
        let mut v = Self::seed_vector();
        let mut cur = pre;
        for iter in 0..self.warmup_iterations {
            v = self.map.jacobian(cur) * v;
            let n = v.norm();
            if n < 1e-300 {
                return Err(Error::DirectionCollapse { iter });
            }
            v /= n;
            cur = self.map.apply(cur);
        }
        Ok(v)
    }

    fn seed_vector() -> Vector2<f64> {
        TorusMap::cat_unstable_direction()
    }

    fn fiber_rate(&self, x: Vector2<f64>, v_u: Vector2<f64>) -> f64 {
        (self.map.jacobian(x) * v_u).norm().ln() / self.roof(x)
    }

    /// Stable-direction rate, from the inverse-map push-forward warmed up
    /// forward of x.
    fn stable_fiber_rate(&self, x: Vector2<f64>) -> Result<f64> {
        let mut post = x;
        for _ in 0..self.warmup_iterations {
            post = self.map.apply(post);
        }
        let mut v = Vector2::new(Self::seed_vector()[1], -Self::seed_vector()[0]);
        let mut cur = post;
        for iter in 0..self.warmup_iterations {
            cur = self.map.apply_inverse(cur);
            v = self
                .map
                .jacobian(cur)
                .try_inverse()
                .ok_or(Error::DirectionCollapse { iter })?
                * v;
            let n = v.norm();
            if n < 1e-300 {
                return Err(Error::DirectionCollapse { iter });
            }
            v /= n;
        }
        // cur is back at x; v spans the stable direction
        Ok((self.map.jacobian(x) * v).norm().ln() / self.roof(x))
    }
}

impl FlowBackend for SuspensionBackend {
    type Point = SuspensionPoint;

    fn name(&self) -> &'static str {
        "suspension"
    }

    fn is_contact(&self) -> bool {
        false
    }

    fn is_anosov(&self) -> bool {
        true
    }

    fn volume(&self) -> Option<f64> {
        None
    }

    fn advance(&self, p: &SuspensionPoint, t: f64) -> Result<SuspensionPoint> {
        let mut x = p.x;
        let mut s = p.s + t;
        if t >= 0.0 {
            loop {
                let rho = self.roof(x);
                if s < rho {
                    break;
                }
                s -= rho;
                x = self.map.apply(x);
            }
        } else {
            while s < 0.0 {
                x = self.map.apply_inverse(x);
                s += self.roof(x);
            }
        }
        Ok(SuspensionPoint { x, s })
    }

    fn sample_orbit(
        &self,
        p0: &SuspensionPoint,
        dt: f64,
        n: usize,
        seed: u64,
    ) -> Result<OrbitSeries> {
        if dt <= 0.0 || n == 0 {
            return Err(Error::InvalidArgument(
                "sample_orbit requires dt > 0 and n >= 1".into(),
            ));
        }
        // track the unstable direction fiber by fiber; the rate is constant
        // within each fiber, so only crossings update it
        let mut x = p0.x;
        let mut v = self.unstable_direction(x)?;
        let mut s = p0.s;
        let mut r_u = Vec::with_capacity(n);
        let mut r_s = Vec::with_capacity(n);
        let mut x1 = Vec::with_capacity(n);
        let mut x2 = Vec::with_capacity(n);
        let mut rate_u = self.fiber_rate(x, v);
        let mut rate_s = self.stable_fiber_rate(x)?;
        for _ in 0..n {
            r_u.push(rate_u);
            r_s.push(rate_s);
            x1.push(x[0]);
            x2.push(x[1]);
            s += dt;
            let mut crossed = false;
            loop {
                let rho = self.roof(x);
                if s < rho {
                    break;
                }
                s -= rho;
                v = self.map.jacobian(x) * v;
                let norm = v.norm();
                if norm < 1e-300 {
                    return Err(Error::DirectionCollapse { iter: 0 });
                }
                v /= norm;
                x = self.map.apply(x);
                crossed = true;
            }
            if crossed {
                rate_u = self.fiber_rate(x, v);
                rate_s = self.stable_fiber_rate(x)?;
            }
        }
        let series = OrbitSeries::new(
            0.0,
            dt,
            r_u,
            r_s,
            format!("suspension(x0 = {:?}, s0 = {})", p0.x, p0.s),
            seed,
        )?
        .with_aux("x1", x1)?
        .with_aux("x2", x2)?;
        series.validate_anosov()?;
        Ok(series)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_cat_map_advance() {
        let b = SuspensionBackend::new(0.0, 0.0, 50).unwrap();
        let p = SuspensionPoint {
            x: Vector2::new(0.3, 0.7),
            s: 0.0,
        };
        let q = b.advance(&p, 1.0).unwrap();
        // one full crossing: x -> A x mod 1
        assert!((q.x[0] - (2.0f64 * 0.3 + 0.7).rem_euclid(1.0)).abs() < 1e-12);
        assert!((q.x[1] - (0.3f64 + 0.7).rem_euclid(1.0)).abs() < 1e-12);
        assert!(q.s.abs() < 1e-12);
    }

    #[test]
    fn short_advance_stays_in_fiber() {
        let b = SuspensionBackend::new(0.0, 0.3, 50).unwrap();
        let p = SuspensionPoint {
            x: Vector2::new(0.3, 0.7),
            s: 0.1,
        };
        let q = b.advance(&p, 0.2).unwrap();
        assert_eq!(q.x, p.x);
        assert!((q.s - 0.3).abs() < 1e-15);
    }

    #[test]
    fn advance_forward_back_is_identity() {
        // rounding injected at each crossing is amplified by the hyperbolic
        // dynamics (factor lambda per crossing); 1e-12 holds for spans with
        // lambda^n * eps_machine below it
        let b = SuspensionBackend::new(0.02, 0.3, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let p = b.random_point(&mut rng);
            let t = rng.gen_range(0.0..8.0);
            let q = b.advance(&b.advance(&p, t).unwrap(), -t).unwrap();
            let dx = (q.x - p.x).map(|c| {
                let w = c.rem_euclid(1.0);
                w.min(1.0 - w)
            });
            assert!(dx[0] < 1e-12 && dx[1] < 1e-12, "torus position drifted");
            assert!((q.s - p.s).abs() < 1e-10, "roof coordinate drifted");
        }
    }

    #[test]
    fn unperturbed_rate_is_the_cat_eigenvalue() {
        let b = SuspensionBackend::new(0.0, 0.0, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = b.random_point(&mut rng);
        let s = b.sample_orbit(&p, 0.01, 500, 0).unwrap();
        let expect = TorusMap::cat_eigenvalue().ln();
        for &r in s.r_u() {
            assert!((r - expect).abs() < 1e-10);
        }
        assert!((expect - 0.9624236501).abs() < 1e-9);
    }

    #[test]
    fn roofed_rate_divides_by_the_roof() {
        let b = SuspensionBackend::new(0.0, 0.3, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = b.random_point(&mut rng);
        let s = b.sample_orbit(&p, 0.0173, 2000, 0).unwrap();
        let ln_lam = TorusMap::cat_eigenvalue().ln();
        let x1 = s.aux("x1").unwrap();
        for i in 0..s.len() {
            let rho = 1.0 + 0.3 * (std::f64::consts::TAU * x1[i]).cos();
            assert!(
                (s.r_u()[i] - ln_lam / rho).abs() < 1e-10,
                "sample {i}: {} vs {}",
                s.r_u()[i],
                ln_lam / rho
            );
        }
    }

    #[test]
    fn tracked_direction_converges_to_eigenvector() {
        let b = SuspensionBackend::new(0.0, 0.0, 60).unwrap();
        let v = b.unstable_direction(Vector2::new(0.37, 0.81)).unwrap();
        let e = TorusMap::cat_unstable_direction();
        let align = v.dot(&e).abs();
        assert!(align > 1.0 - 1e-10, "alignment {align}");
    }

    #[test]
    fn rates_vary_strictly_with_roofed_suspension() {
        let b = SuspensionBackend::new(0.0, 0.3, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = b.random_point(&mut rng);
        let s = b.sample_orbit(&p, 0.05, 2000, 0).unwrap();
        let max = s.r_u().iter().cloned().fold(f64::MIN, f64::max);
        let min = s.r_u().iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min > 0.1);
        assert!(min > 0.0);
    }

    #[test]
    fn birkhoff_average_matches_cat_entropy() {
        let b = SuspensionBackend::new(0.0, 0.0, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = b.random_point(&mut rng);
        let dt = 0.05;
        let n = 200_000; // T = 10^4
        let s = b.sample_orbit(&p, dt, n, 0).unwrap();
        let mean = crate::numeric::trapezoid_mean(s.r_u());
        assert!((mean - TorusMap::cat_eigenvalue().ln()).abs() < 1e-4);
    }

    #[test]
    fn perturbed_map_keeps_anosov_signs() {
        let b = SuspensionBackend::new(0.02, 0.3, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = b.random_point(&mut rng);
        let s = b.sample_orbit(&p, 0.05, 5000, 0).unwrap();
        for i in 0..s.len() {
            assert!(s.r_u()[i] > 0.0);
            assert!(s.r_s()[i] < 0.0);
        }
    }

    #[test]
    fn eps_cap_is_enforced() {
        assert!(TorusMap::new(0.2).is_err());
        assert!(SuspensionBackend::new(0.0, 0.3, 10).is_err());
    }

    #[test]
    fn semigroup_property() {
        let b = SuspensionBackend::new(0.02, 0.3, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let p = b.random_point(&mut rng);
            let t1 = rng.gen_range(0.0..5.0);
            let t2 = rng.gen_range(0.0..5.0);
            let one = b.advance(&p, t1 + t2).unwrap();
            let two = b.advance(&b.advance(&p, t1).unwrap(), t2).unwrap();
            let dx = (one.x - two.x).map(|c| {
                let w = c.rem_euclid(1.0);
                w.min(1.0 - w)
            });
            assert!(dx[0] < 1e-9 && dx[1] < 1e-9);
            // roof coordinates agree up to a whole-fiber wrap at the boundary
            let rho = b.roof(one.x);
            let ds = (one.s - two.s).abs();
            assert!(ds < 1e-9 || (rho - ds).abs() < 1e-9);
        }
    }
}
