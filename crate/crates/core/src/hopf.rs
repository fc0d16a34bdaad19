//! Boothby-Wang sanity backend: the Hopf flow on the round 3-sphere. The
//! invariant contact metric is Killing, so the torsion vanishes identically
//! and the Dirichlet energy is zero. Not Anosov; used only to pin the
//! zero-torsion branch of the energy machinery.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{FlowBackend, OrbitSeries};

/// A point of S^3 as a unit pair of complex numbers.
#[derive(Debug, Clone, Copy)]
pub struct HopfPoint {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl HopfPoint {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        let n = (z1.norm_sqr() + z2.norm_sqr()).sqrt();
        Self {
            z1: z1 / n,
            z2: z2 / n,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct HopfBackend;

impl HopfBackend {
    pub fn new() -> Self {
        Self
    }

    /// Scalar torsion of the invariant metric.
    pub fn lambda_at(&self, _p: &HopfPoint) -> f64 {
        0.0
    }

    /// Ricci curvature of the Reeb direction: 2 - 2 lambda^2 with lambda = 0.
    pub fn ricci_at(&self, _p: &HopfPoint) -> f64 {
        2.0
    }

    pub fn random_point(&self, rng: &mut impl rand::Rng) -> HopfPoint {
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let b: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let t: f64 = rng.gen_range(0.0..1.0);
        let (c, s) = (t.sqrt(), (1.0 - t).sqrt());
        HopfPoint::new(Complex64::from_polar(c, a), Complex64::from_polar(s, b))
    }
}

impl FlowBackend for HopfBackend {
    type Point = HopfPoint;

    fn name(&self) -> &'static str {
        "hopf"
    }

    fn is_contact(&self) -> bool {
        true
    }

    fn is_anosov(&self) -> bool {
        false
    }

    fn volume(&self) -> Option<f64> {
        // alpha ^ d alpha = 2 dVol on the round sphere of volume 2 pi^2
        Some(4.0 * std::f64::consts::PI.powi(2))
    }

    fn advance(&self, p: &HopfPoint, t: f64) -> Result<HopfPoint> {
        let rot = Complex64::from_polar(1.0, t);
        Ok(HopfPoint {
            z1: p.z1 * rot,
            z2: p.z2 * rot,
        })
    }

    fn sample_orbit(&self, p0: &HopfPoint, dt: f64, n: usize, seed: u64) -> Result<OrbitSeries> {
        if dt <= 0.0 || n == 0 {
            return Err(Error::InvalidArgument(
                "sample_orbit requires dt > 0 and n >= 1".into(),
            ));
        }
        OrbitSeries::new(
            0.0,
            dt,
            vec![0.0; n],
            vec![0.0; n],
            format!("hopf({:?})", p0),
            seed,
        )
    }
}
