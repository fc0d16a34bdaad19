//! Compensated summation and grid quadrature shared by every module.
//!
//! All integrals in this crate are composite trapezoid sums on a uniform
//! grid, accumulated with Kahan compensation in a fixed order so that
//! results are reproducible across platforms and thread counts.

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Trapezoid integral of `values` sampled at spacing `dt`.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut acc = Kahan::new();
    for w in values.windows(2) {
        acc.add(0.5 * (w[0] + w[1]));
    }
    acc.value() * dt
}

/// Cumulative trapezoid integral: `out[i]` is the integral from sample 0 to
/// sample i. `out[0] = 0`. Differences of entries are exactly additive.
pub fn prefix_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = Kahan::new();
    out.push(0.0);
    for w in values.windows(2) {
        acc.add(0.5 * dt * (w[0] + w[1]));
        out.push(acc.value());
    }
    out
}

/// Time average of `values` over the grid: trapezoid integral of the values
/// divided by the trapezoid integral of the constant 1 on the same weights.
/// Constant inputs average to the constant exactly.
pub fn trapezoid_mean(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return values[0];
    }
    let mut num = Kahan::new();
    let mut den = Kahan::new();
    num.add(0.5 * values[0]);
    den.add(0.5);
    for &v in &values[1..n - 1] {
        num.add(v);
        den.add(1.0);
    }
    num.add(0.5 * values[n - 1]);
    den.add(0.5);
    num.value() / den.value()
}

/// Second-order finite differences of uniformly sampled values: centered in
/// the interior, three-point one-sided at the endpoints. Error is O(dt^2)
/// for C^3 data.
pub fn finite_difference(dt: f64, values: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "finite_difference needs at least 3 samples");
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dt);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_of_constant() {
        let v = vec![2.5; 11];
        assert!((trapezoid(&v, 0.1) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn prefix_differences_are_additive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let p = prefix_trapezoid(&v, 0.01);
        // bitwise additivity of I(a,b) + I(b,c) = I(a,c)
        let i_ab = p[300] - p[100];
        let i_bc = p[700] - p[300];
        let i_ac = p[700] - p[100];
        assert_eq!(i_ab + i_bc, i_ac + (p[300] - p[300]));
        assert!((i_ab + i_bc - i_ac).abs() < 1e-15);
    }

    #[test]
    fn mean_of_constant_is_exact() {
        let v = vec![0.123456789; 997];
        assert_eq!(trapezoid_mean(&v), 0.123456789);
    }

    #[test]
    fn derivative_of_sine() {
        let dt = 0.01;
        let v: Vec<f64> = (0..2000).map(|i| (i as f64 * dt).sin()).collect();
        let d = finite_difference(dt, &v);
        for (i, di) in d.iter().enumerate() {
            let expect = (i as f64 * dt).cos();
            assert!((di - expect).abs() < 1e-4, "i={i}: {di} vs {expect}");
        }
    }

    #[test]
    fn derivative_of_linear_is_exact() {
        let dt = 0.05;
        let v: Vec<f64> = (0..100).map(|i| 3.0 * (i as f64 * dt) + 1.0).collect();
        let d = finite_difference(dt, &v);
        for di in d {
            assert!((di - 3.0).abs() < 1e-10);
        }
    }
}
