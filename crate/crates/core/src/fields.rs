//! Scalar fields evaluated along orbits, with their flow derivatives.
//!
//! A field is supplied either in closed form along the flow (value and
//! derivative as functions of flow time) or as spatial data (bumps over the
//! fundamental domain evaluated at the orbit's sampled positions), in which
//! case the flow derivative falls back to centered finite differences along
//! the orbit.

use num_complex::Complex64;

use crate::conformal::bump;
use crate::error::{Error, Result};
use crate::hyperbolic::disk_distance;
use crate::series::{flow_derivative, OrbitSeries};

/// A field's values and flow derivative, aligned with an orbit's samples.
#[derive(Debug, Clone)]
pub struct FieldOnOrbit {
    pub values: Vec<f64>,
    pub x_deriv: Vec<f64>,
}

impl FieldOnOrbit {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A scalar field that can be evaluated along any orbit series.
#[derive(Debug, Clone)]
pub enum ScalarField {
    Zero,
    Const(f64),
    /// amp * sin(omega t + phase) in flow time; exact flow derivative.
    TimeTrig {
        amp: f64,
        omega: f64,
        phase: f64,
    },
    /// Sum of radial bumps over the fundamental domain, evaluated at the
    /// orbit's sampled positions (aux channels pos_x/pos_y); flow derivative
    /// by centered finite differences along the orbit.
    Bumps(BumpBasisField),
    /// Raw sampled values; finite-difference flow derivative.
    Samples(Vec<f64>),
}

/// Weighted radial bumps at fixed disk centers.
#[derive(Debug, Clone)]
pub struct BumpBasisField {
    pub centers: Vec<Complex64>,
    pub coefficients: Vec<f64>,
    pub width: f64,
}

impl BumpBasisField {
    pub fn value_at(&self, z: Complex64) -> f64 {
        let mut v = 0.0;
        for (c, &a) in self.centers.iter().zip(&self.coefficients) {
            if a == 0.0 {
                continue;
            }
            v += a * bump(disk_distance(z, *c) / self.width);
        }
        v
    }
}

/// Grid of bump centers covering the fundamental octagon, for optimization
/// bases. Returns `count` centers on a centered square lattice clipped to
/// the octagon.
pub fn octagon_bump_centers(count: usize) -> Vec<Complex64> {
    let mut centers = Vec::new();
    // a 5x5 lattice over the octagon's inscribed square, densest first
    let side = (count as f64).sqrt().ceil() as usize;
    let half = 0.52;
    for i in 0..side {
        for j in 0..side {
            if centers.len() >= count {
                break;
            }
            let x = -half + 2.0 * half * (i as f64 + 0.5) / side as f64;
            let y = -half + 2.0 * half * (j as f64 + 0.5) / side as f64;
            centers.push(Complex64::new(x, y));
        }
    }
    centers
}

impl ScalarField {
    /// Evaluate along the orbit, producing values plus X-derivative.
    pub fn eval(&self, series: &OrbitSeries) -> Result<FieldOnOrbit> {
        let n = series.len();
        match self {
            ScalarField::Zero => Ok(FieldOnOrbit {
                values: vec![0.0; n],
                x_deriv: vec![0.0; n],
            }),
            ScalarField::Const(c) => Ok(FieldOnOrbit {
                values: vec![*c; n],
                x_deriv: vec![0.0; n],
            }),
            ScalarField::TimeTrig { amp, omega, phase } => {
                let mut values = Vec::with_capacity(n);
                let mut x_deriv = Vec::with_capacity(n);
                for i in 0..n {
                    let t = series.t(i);
                    values.push(amp * (omega * t + phase).sin());
                    x_deriv.push(amp * omega * (omega * t + phase).cos());
                }
                Ok(FieldOnOrbit { values, x_deriv })
            }
            ScalarField::Bumps(basis) => {
                if basis.coefficients.iter().all(|&c| c == 0.0) {
                    // the zero element of the basis needs no positions
                    return Ok(FieldOnOrbit {
                        values: vec![0.0; n],
                        x_deriv: vec![0.0; n],
                    });
                }
                let xs = series.aux("pos_x").ok_or_else(|| {
                    Error::InvalidArgument("orbit has no position channel pos_x".into())
                })?;
                let ys = series.aux("pos_y").ok_or_else(|| {
                    Error::InvalidArgument("orbit has no position channel pos_y".into())
                })?;
                let values: Vec<f64> = xs
                    .iter()
                    .zip(ys)
                    .map(|(&x, &y)| basis.value_at(Complex64::new(x, y)))
                    .collect();
                let x_deriv = flow_derivative(series, &values)?;
                Ok(FieldOnOrbit { values, x_deriv })
            }
            ScalarField::Samples(values) => {
                if values.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: values.len(),
                    });
                }
                let x_deriv = flow_derivative(series, values)?;
                Ok(FieldOnOrbit {
                    values: values.clone(),
                    x_deriv,
                })
            }
        }
    }

    /// Check a closed-form derivative against the finite-difference route.
    /// The tolerance budget is the O(dt^2) of the differencing scheme.
    pub fn check_derivative_consistency(&self, series: &OrbitSeries, tol: f64) -> Result<()> {
        let f = self.eval(series)?;
        if matches!(self, ScalarField::Bumps(_) | ScalarField::Samples(_)) {
            return Ok(()); // already finite-difference
        }
        let fd = flow_derivative(series, &f.values)?;
        for i in 1..series.len() - 1 {
            if (fd[i] - f.x_deriv[i]).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "closed-form derivative disagrees with finite differences at t = {}: {} vs {}",
                    series.t(i),
                    f.x_deriv[i],
                    fd[i]
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebraic::AlgebraicBackend;
    use crate::series::FlowBackend;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trig_field_closed_form_matches_finite_differences() {
        let backend = AlgebraicBackend::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = backend.random_point(&mut rng);
        let series = backend.sample_orbit(&p, 0.01, 2000, 0).unwrap();
        let field = ScalarField::TimeTrig {
            amp: 0.4,
            omega: 1.3,
            phase: 0.2,
        };
        field.check_derivative_consistency(&series, 1e-4).unwrap();
    }

    #[test]
    fn bump_field_evaluates_on_positions() {
        let backend = AlgebraicBackend::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = backend.random_point(&mut rng);
        let series = backend.sample_orbit(&p, 0.01, 500, 0).unwrap();
        let basis = BumpBasisField {
            centers: octagon_bump_centers(16),
            coefficients: vec![0.01; 16],
            width: 0.4,
        };
        let f = ScalarField::Bumps(basis).eval(&series).unwrap();
        assert_eq!(f.len(), 500);
        assert!(f.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn centers_cover_the_requested_count() {
        assert_eq!(octagon_bump_centers(16).len(), 16);
    }
}
