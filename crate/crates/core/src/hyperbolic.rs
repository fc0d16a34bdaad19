//! Hyperbolic plane primitives: unit-determinant 2x2 matrices acting on the
//! upper half-plane, the Cayley transform to the Poincare disk, and disk
//! Mobius maps with derivative tracking for transporting tangent directions.

use nalgebra::Matrix2;
use num_complex::Complex64;

/// Unit-determinant 2x2 real matrix. States of the algebraic geodesic flow
/// and elements of the surface group live here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub m: Matrix2<f64>,
}

impl GroupElement {
    pub fn new(m: Matrix2<f64>) -> Self {
        Self { m }.renormalized()
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix2::identity(),
        }
    }

    pub fn from_rows(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(Matrix2::new(a, b, c, d))
    }

    /// Rescale so det = 1 (the sign of the matrix is preserved).
    pub fn renormalized(mut self) -> Self {
        let det = self.m.determinant();
        debug_assert!(det > 0.0, "GroupElement must have positive determinant");
        let s = det.sqrt();
        self.m /= s;
        self
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn mul(&self, rhs: &GroupElement) -> GroupElement {
        GroupElement::new(self.m * rhs.m)
    }

    pub fn inverse(&self) -> GroupElement {
        // adjugate of a det-1 matrix
        let m = self.m;
        GroupElement::new(Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]))
    }

    /// Mobius action on the upper half-plane.
    pub fn act_half_plane(&self, z: Complex64) -> Complex64 {
        let m = self.m;
        (m[(0, 0)] * z + Complex64::new(m[(0, 1)], 0.0))
            / (m[(1, 0)] * z + Complex64::new(m[(1, 1)], 0.0))
    }

    /// Image of the basepoint i in the Poincare disk.
    pub fn disk_point(&self) -> Complex64 {
        half_plane_to_disk(self.act_half_plane(Complex64::new(0.0, 1.0)))
    }

    /// Frobenius distance min over the matrix sign (points of the quotient
    /// are only defined up to sign).
    pub fn dist_proj(&self, other: &GroupElement) -> f64 {
        let d1 = (self.m - other.m).norm();
        let d2 = (self.m + other.m).norm();
        d1.min(d2)
    }

    /// Rotation fixing the basepoint: acts on the disk as rotation by `phi`
    /// about the origin.
    pub fn rotation(phi: f64) -> Self {
        let u = phi / 2.0;
        Self::from_rows(u.cos(), u.sin(), -u.sin(), u.cos())
    }

    /// Hyperbolic translation of length `ell` whose axis projects to the real
    /// diameter of the disk; moves the origin toward +1.
    pub fn translation(ell: f64) -> Self {
        let h = ell / 2.0;
        Self::from_rows(h.exp(), 0.0, 0.0, (-h).exp())
    }

    /// The disk-model Mobius map this matrix induces.
    pub fn disk_map(&self) -> DiskMobius {
        let m = self.m;
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        DiskMobius {
            alpha: Complex64::new((a + d) / 2.0, (b - c) / 2.0),
            beta: Complex64::new((a - d) / 2.0, -(b + c) / 2.0),
        }
    }
}

/// Cayley transform from the upper half-plane to the unit disk, i -> 0.
pub fn half_plane_to_disk(z: Complex64) -> Complex64 {
    (z - Complex64::i()) / (z + Complex64::i())
}

/// Mobius transformation of the unit disk in SU(1,1) form:
/// z -> (alpha z + beta) / (conj(beta) z + conj(alpha)), |alpha|^2 - |beta|^2 = 1.
#[derive(Debug, Clone, Copy)]
pub struct DiskMobius {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl DiskMobius {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.alpha * z + self.beta) / (self.beta.conj() * z + self.alpha.conj())
    }

    /// Complex derivative at z; its argument rotates tangent directions.
    pub fn deriv(&self, z: Complex64) -> Complex64 {
        let den = self.beta.conj() * z + self.alpha.conj();
        1.0 / (den * den)
    }
}

/// Hyperbolic distance in the unit disk with curvature -1.
pub fn disk_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm_sqr();
    let den = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr());
    (1.0 + 2.0 * num / den).acosh()
}

/// Hyperbolic distance to the origin.
pub fn disk_distance_to_origin(z: Complex64) -> f64 {
    let r2 = z.norm_sqr();
    (1.0 + 2.0 * r2 / (1.0 - r2)).acosh()
}
