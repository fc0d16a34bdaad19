//! Gamma-invariant conformal factors e^{2u} on the genus-2 quotient.
//!
//! u is a finite sum of compactly supported radial bumps in hyperbolic
//! distance. Invariance is by construction: evaluation folds the point into
//! the fundamental octagon and sums over every group translate of the bump
//! centers whose support can reach the closed octagon (translates are
//! enumerated once, over words of length <= 3, which covers all tiles
//! touching the octagon).

use num_complex::Complex64;

use crate::algebraic::{in_octagon, octagon_generators};
use crate::error::{Error, Result};
use crate::hyperbolic::{disk_distance, disk_distance_to_origin, DiskMobius, GroupElement};

/// Smooth compactly supported bump: chi(q) = exp(1 - 1/(1 - q^2)) on |q| < 1,
/// chi(0) = 1, identically zero outside.
#[inline]
pub fn bump(q: f64) -> f64 {
    if q.abs() >= 1.0 {
        return 0.0;
    }
    (1.0 - 1.0 / (1.0 - q * q)).exp()
}

/// First derivative chi'(q).
#[inline]
pub fn bump_d1(q: f64) -> f64 {
    if q.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - q * q;
    bump(q) * (-2.0 * q / (s * s))
}

/// Second derivative chi''(q).
#[inline]
pub fn bump_d2(q: f64) -> f64 {
    if q.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - q * q;
    let g = -2.0 * q / (s * s);
    let g1 = -2.0 * (1.0 + 3.0 * q * q) / (s * s * s);
    bump(q) * (g * g + g1)
}

/// Maximum bump amplitude accepted by the constructor.
pub const MAX_AMPLITUDE: f64 = 0.1;

#[derive(Debug, Clone)]
struct TranslatedBump {
    center: Complex64,
    amplitude: f64,
    /// Euclidean disk containing the hyperbolic support ball, for rejection.
    e_center: Complex64,
    e_radius_sq: f64,
}

/// A sum of radial hyperbolic bumps, closed under the surface group.
#[derive(Debug, Clone)]
pub struct ConformalFactor {
    pub centers: Vec<Complex64>,
    pub amplitudes: Vec<f64>,
    pub width: f64,
    bumps: Vec<TranslatedBump>,
}

/// Fold a disk point into the closed fundamental octagon, returning the
/// folded point and the accumulated Mobius map that was applied.
pub fn fold_point(z: Complex64) -> Result<(Complex64, DiskMobius)> {
    let gens = octagon_generators();
    let maps: Vec<DiskMobius> = gens.iter().map(GroupElement::disk_map).collect();
    let mut cur = z;
    let mut acc = GroupElement::identity();
    let mut dist = disk_distance_to_origin(cur);
    for _ in 0..64 {
        let mut best: Option<(usize, f64)> = None;
        for (k, map) in maps.iter().enumerate() {
            let cand = disk_distance_to_origin(map.apply(cur));
            if cand < dist - 1e-12 && best.map_or(true, |(_, b)| cand < b) {
                best = Some((k, cand));
            }
        }
        match best {
            Some((k, cand)) => {
                cur = maps[k].apply(cur);
                acc = gens[k].mul(&acc);
                dist = cand;
            }
            None => return Ok((cur, acc.disk_map())),
        }
    }
    Err(Error::ReductionStalled { cap: 64, dist })
}

/// Euclidean disk exactly containing the hyperbolic ball B(center, radius).
fn euclidean_hull(center: Complex64, radius: f64) -> (Complex64, f64) {
    let d = disk_distance_to_origin(center);
    let near = ((d - radius) / 2.0).tanh();
    let far = ((d + radius) / 2.0).tanh();
    let dir = if center.norm() > 1e-15 {
        center / center.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let e_center = dir * ((near + far) / 2.0);
    let e_radius = (far - near) / 2.0;
    (e_center, e_radius)
}

/// Distinct group elements represented by words of length <= 3.
fn short_translates() -> Vec<GroupElement> {
    let gens = octagon_generators();
    let mut out: Vec<GroupElement> = vec![GroupElement::identity()];
    let mut frontier: Vec<GroupElement> = vec![GroupElement::identity()];
    for _ in 0..3 {
        let mut next = Vec::new();
        for g in &frontier {
            for gamma in &gens {
                let cand = gamma.mul(g);
                if out.iter().all(|h| cand.dist_proj(h) > 1e-9) {
                    out.push(cand);
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    out
}

impl ConformalFactor {
    /// The zero factor (unperturbed hyperbolic metric).
    pub fn flat() -> Self {
        Self {
            centers: Vec::new(),
            amplitudes: Vec::new(),
            width: 1.0,
            bumps: Vec::new(),
        }
    }

    pub fn new(centers: Vec<Complex64>, amplitudes: Vec<f64>, width: f64) -> Result<Self> {
        if centers.len() != amplitudes.len() {
            return Err(Error::BadConformalFactor(format!(
                "{} centers but {} amplitudes",
                centers.len(),
                amplitudes.len()
            )));
        }
        if !(width > 0.0 && width <= 1.5) {
            return Err(Error::BadConformalFactor(format!(
                "width must be in (0, 1.5], got {width}"
            )));
        }
        if let Some(a) = amplitudes.iter().find(|a| a.abs() > MAX_AMPLITUDE) {
            return Err(Error::BadConformalFactor(format!(
                "amplitude {a} exceeds the cap {MAX_AMPLITUDE}"
            )));
        }
        // fold centers into the octagon
        let mut folded = Vec::with_capacity(centers.len());
        for &c in &centers {
            folded.push(fold_point(c)?.0);
        }

        // enumerate every translate whose support ball can touch the octagon
        let circumradius =
            ((1.0 + std::f64::consts::SQRT_2) * (1.0 + std::f64::consts::SQRT_2)).acosh();
        let reach = circumradius + width + 0.1;
        let mut bumps = Vec::new();
        for g in short_translates() {
            let map = g.disk_map();
            for (c, &a) in folded.iter().zip(&amplitudes) {
                if a == 0.0 {
                    continue;
                }
                let tc = map.apply(*c);
                if disk_distance_to_origin(tc) <= reach {
                    let (e_center, e_radius) = euclidean_hull(tc, width);
                    bumps.push(TranslatedBump {
                        center: tc,
                        amplitude: a,
                        e_center,
                        e_radius_sq: e_radius * e_radius,
                    });
                }
            }
        }

        let factor = Self {
            centers: folded,
            amplitudes,
            width,
            bumps,
        };
        factor.check_negative_curvature()?;
        Ok(factor)
    }

    /// The perturbed Gauss curvature must stay negative; scanned on a grid
    /// over the fundamental octagon.
    fn check_negative_curvature(&self) -> Result<()> {
        let n = 200;
        for i in 0..n {
            for j in 0..n {
                let x = -0.85 + 1.7 * (i as f64 + 0.5) / n as f64;
                let y = -0.85 + 1.7 * (j as f64 + 0.5) / n as f64;
                let z = Complex64::new(x, y);
                if !in_octagon(z, 0.0) {
                    continue;
                }
                let k = self.curvature_in_domain(z);
                if !(k < 0.0) {
                    return Err(Error::BadConformalFactor(format!(
                        "curvature {k} >= 0 at ({x}, {y})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// u at a point already inside the closed octagon.
    pub fn value_in_domain(&self, z: Complex64) -> f64 {
        let mut u = 0.0;
        for b in &self.bumps {
            if (z - b.e_center).norm_sqr() > b.e_radius_sq {
                continue;
            }
            let q = disk_distance(z, b.center) / self.width;
            u += b.amplitude * bump(q);
        }
        u
    }

    /// u anywhere on the disk (folds first; Gamma-invariant by construction).
    pub fn value(&self, z: Complex64) -> Result<f64> {
        if self.bumps.is_empty() {
            return Ok(0.0);
        }
        let (zf, _) = fold_point(z)?;
        Ok(self.value_in_domain(zf))
    }

    /// Euclidean gradient (du/dx, du/dy) at a point inside the octagon.
    pub fn gradient_in_domain(&self, z: Complex64) -> (f64, f64) {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for b in &self.bumps {
            if (z - b.e_center).norm_sqr() > b.e_radius_sq {
                continue;
            }
            let d = disk_distance(z, b.center);
            if d < 1e-9 {
                continue; // radial bump has zero gradient at its center
            }
            let q = d / self.width;
            let coeff = b.amplitude * bump_d1(q) / self.width;
            // d(z, c) = acosh(1 + Q), Q = 2|z-c|^2 / ((1-|z|^2)(1-|c|^2))
            let diff = z - b.center;
            let d1 = 1.0 - z.norm_sqr();
            let d2 = 1.0 - b.center.norm_sqr();
            let n_sq = diff.norm_sqr();
            let q_big = 2.0 * n_sq / (d1 * d2);
            let denom = (q_big * q_big + 2.0 * q_big).sqrt();
            let qx = (4.0 * diff.re * d1 + 4.0 * z.re * n_sq) / (d1 * d1 * d2);
            let qy = (4.0 * diff.im * d1 + 4.0 * z.im * n_sq) / (d1 * d1 * d2);
            gx += coeff * qx / denom;
            gy += coeff * qy / denom;
        }
        (gx, gy)
    }

    /// Hyperbolic Laplacian of u at a point inside the octagon, from the
    /// radial form f'' + coth(d) f' of each bump.
    pub fn laplacian_in_domain(&self, z: Complex64) -> f64 {
        let w = self.width;
        let mut lap = 0.0;
        for b in &self.bumps {
            if (z - b.e_center).norm_sqr() > b.e_radius_sq {
                continue;
            }
            let d = disk_distance(z, b.center);
            let q = d / w;
            if d < 1e-6 {
                lap += 2.0 * b.amplitude * bump_d2(0.0) / (w * w);
            } else {
                lap += b.amplitude * (bump_d2(q) / (w * w) + (1.0 / d.tanh()) * bump_d1(q) / w);
            }
        }
        lap
    }

    /// Gauss curvature of e^{2u} g_hyp at a point inside the octagon:
    /// K = e^{-2u} (-1 - Lap_hyp u).
    pub fn curvature_in_domain(&self, z: Complex64) -> f64 {
        let u = self.value_in_domain(z);
        (-2.0 * u).exp() * (-1.0 - self.laplacian_in_domain(z))
    }

    /// Gauss curvature anywhere (folds first).
    pub fn curvature_at(&self, z: Complex64) -> Result<f64> {
        if self.bumps.is_empty() {
            return Ok(-1.0);
        }
        let (zf, _) = fold_point(z)?;
        Ok(self.curvature_in_domain(zf))
    }
}
