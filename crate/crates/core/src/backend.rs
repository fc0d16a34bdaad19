//! Uniform front over the four flow backends: seeded initial points,
//! concurrent ensemble sampling, and backend facts for the analysis layer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebraic::AlgebraicBackend;
use crate::contact::BackendInfo;
use crate::error::Result;
use crate::hopf::HopfBackend;
use crate::perturbed::PerturbedBackend;
use crate::series::{FlowBackend, OrbitSeries};
use crate::suspension::SuspensionBackend;

#[derive(Debug, Clone)]
pub enum Backend {
    Algebraic(AlgebraicBackend),
    Hopf(HopfBackend),
    Perturbed(PerturbedBackend),
    Suspension(SuspensionBackend),
}

impl Backend {
    pub fn info(&self) -> BackendInfo {
        match self {
            Backend::Algebraic(b) => BackendInfo {
                name: b.name(),
                is_contact: b.is_contact(),
                is_anosov: b.is_anosov(),
                volume: b.volume(),
            },
            Backend::Hopf(b) => BackendInfo {
                name: b.name(),
                is_contact: b.is_contact(),
                is_anosov: b.is_anosov(),
                volume: b.volume(),
            },
            Backend::Perturbed(b) => BackendInfo {
                name: b.name(),
                is_contact: b.is_contact(),
                is_anosov: b.is_anosov(),
                volume: b.volume(),
            },
            Backend::Suspension(b) => BackendInfo {
                name: b.name(),
                is_contact: b.is_contact(),
                is_anosov: b.is_anosov(),
                volume: b.volume(),
            },
        }
    }

    /// Closed-form Liouville entropy rate where one exists.
    pub fn h_bar_closed_form(&self) -> Option<f64> {
        match self {
            Backend::Algebraic(b) => Some(b.h_bar()),
            Backend::Hopf(_) => Some(0.0),
            Backend::Suspension(b) if b.map.eps == 0.0 && b.delta == 0.0 => {
                Some(crate::suspension::TorusMap::cat_eigenvalue().ln())
            }
            _ => None,
        }
    }

    /// Sample one orbit from the seeded initial point.
    pub fn sample_seeded(&self, seed: u64, dt: f64, n: usize) -> Result<OrbitSeries> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Backend::Algebraic(b) => {
                let p = b.random_point(&mut rng);
                b.sample_orbit(&p, dt, n, seed)
            }
            Backend::Hopf(b) => {
                let p = b.random_point(&mut rng);
                b.sample_orbit(&p, dt, n, seed)
            }
            Backend::Perturbed(b) => {
                let p = b.random_point(&mut rng);
                b.sample_orbit(&p, dt, n, seed)
            }
            Backend::Suspension(b) => {
                let p = b.random_point(&mut rng);
                b.sample_orbit(&p, dt, n, seed)
            }
        }
    }

    /// Sample an ensemble concurrently; ordering follows the seed list, so
    /// the result is independent of the thread count.
    pub fn sample_ensemble(&self, seeds: &[u64], dt: f64, n: usize) -> Result<Vec<OrbitSeries>> {
        seeds
            .par_iter()
            .map(|&seed| self.sample_seeded(seed, dt, n))
            .collect()
    }

    /// Worst deviation of advance(p, a+b) from advance(advance(p, a), b)
    /// over seeded random (p, a, b), in a backend-appropriate state metric.
    /// Closed-form backends should sit at rounding level; the ODE backend
    /// carries its integrator tolerance.
    pub fn semigroup_residual(&self, trials: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let a: f64 = rand::Rng::gen_range(&mut rng, 0.05..2.0);
            let b: f64 = rand::Rng::gen_range(&mut rng, 0.05..2.0);
            let d = match self {
                Backend::Algebraic(bk) => {
                    let p = bk.random_point(&mut rng);
                    let one = bk.advance(&p, a + b)?;
                    let two = bk.advance(&bk.advance(&p, a)?, b)?;
                    one.g.dist_proj(&two.g)
                }
                Backend::Hopf(bk) => {
                    let p = bk.random_point(&mut rng);
                    let one = bk.advance(&p, a + b)?;
                    let two = bk.advance(&bk.advance(&p, a)?, b)?;
                    ((one.z1 - two.z1).norm_sqr() + (one.z2 - two.z2).norm_sqr()).sqrt()
                }
                Backend::Perturbed(bk) => {
                    let p = bk.random_point(&mut rng);
                    let one = bk.advance_state(&p, a + b)?;
                    let two = bk.advance_state(&bk.advance_state(&p, a)?, b)?;
                    (one.position - two.position).norm()
                }
                Backend::Suspension(bk) => {
                    let p = bk.random_point(&mut rng);
                    let one = bk.advance(&p, a + b)?;
                    let two = bk.advance(&bk.advance(&p, a)?, b)?;
                    let wrap = |c: f64| {
                        let w = c.rem_euclid(1.0);
                        w.min(1.0 - w)
                    };
                    let dx = wrap(one.x[0] - two.x[0]) + wrap(one.x[1] - two.x[1]);
                    let rho = bk.roof(one.x);
                    let ds = (one.s - two.s).abs();
                    dx + ds.min((rho - ds).abs())
                }
            };
            worst = worst.max(d);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_is_deterministic_and_ordered() {
        let backend = Backend::Algebraic(AlgebraicBackend::new(1.0).unwrap());
        let a = backend.sample_ensemble(&[3, 1, 2], 0.01, 50).unwrap();
        let b = backend.sample_ensemble(&[3, 1, 2], 0.01, 50).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.seed(), y.seed());
            assert_eq!(x.aux("pos_x").unwrap(), y.aux("pos_x").unwrap());
        }
        assert_eq!(a[0].seed(), 3);
        assert_eq!(a[1].seed(), 1);
    }

    #[test]
    fn closed_form_entropies() {
        let algebraic = Backend::Algebraic(AlgebraicBackend::new(2.0).unwrap());
        assert_eq!(algebraic.h_bar_closed_form(), Some(2.0));
        let cat = Backend::Suspension(SuspensionBackend::new(0.0, 0.0, 50).unwrap());
        assert!((cat.h_bar_closed_form().unwrap() - 0.9624236501).abs() < 1e-9);
        let roofed = Backend::Suspension(SuspensionBackend::new(0.0, 0.3, 50).unwrap());
        assert_eq!(roofed.h_bar_closed_form(), None);
    }
}
