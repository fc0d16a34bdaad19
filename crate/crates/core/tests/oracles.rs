//! Cross-module oracles: independent routes (Jacobi transfer matrices,
//! closed-form eigenvalues, ensemble statistics) checking the rate pipeline.

use anosov_core::algebraic::{closed_geodesic_data, AlgebraicBackend};
use anosov_core::backend::Backend;
use anosov_core::conformal::ConformalFactor;
use anosov_core::ergodic::{birkhoff, pesin_entropy, SeriesKey};
use anosov_core::perturbed::{riccati_rate, PerturbedBackend, PerturbedState};
use anosov_core::series::FlowBackend;
use num_complex::Complex64;

/// Transfer matrix of the Jacobi system J'' = -K(t) J along a sampled
/// curvature series, integrated by RK4 on the 2x2 propagator. Independent of
/// the Riccati route.
fn jacobi_transfer(kappa: &[f64], dt: f64) -> [[f64; 2]; 2] {
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    let rhs = |k: f64, m: &[[f64; 2]; 2]| {
        // d/dt [[j1, j2], [p1, p2]] with p = J'
        [[m[1][0], m[1][1]], [-k * m[0][0], -k * m[0][1]]]
    };
    let add = |a: &[[f64; 2]; 2], b: &[[f64; 2]; 2], s: f64| {
        [
            [a[0][0] + s * b[0][0], a[0][1] + s * b[0][1]],
            [a[1][0] + s * b[1][0], a[1][1] + s * b[1][1]],
        ]
    };
    for i in 0..kappa.len() - 1 {
        let (k0, k1) = (kappa[i], kappa[i + 1]);
        let km = 0.5 * (k0 + k1);
        let a1 = rhs(k0, &m);
        let a2 = rhs(km, &add(&m, &a1, 0.5 * dt));
        let a3 = rhs(km, &add(&m, &a2, 0.5 * dt));
        let a4 = rhs(k1, &add(&m, &a3, dt));
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] += dt / 6.0 * (a1[r][c] + 2.0 * a2[r][c] + 2.0 * a3[r][c] + a4[r][c]);
            }
        }
    }
    m
}

#[test]
fn stretch_integral_matches_jacobi_cocycle_over_closed_orbit() {
    // the axis orbit of the first octagon generator closes after its
    // translation length; the log of the unstable return-map eigenvalue
    // computed from the Jacobi transfer matrix must match the stretch
    // integral of the Riccati rates
    let geo = closed_geodesic_data(&[0], 1.0).unwrap();
    let backend = PerturbedBackend::unperturbed(0.005, 20.0).unwrap();
    let p0 = PerturbedState {
        position: Complex64::new(0.0, 0.0),
        direction: 0.0,
        riccati_r: 1.0,
    };
    let dt = geo.period / 640.0;
    let b = PerturbedBackend::unperturbed(dt.min(0.01), 20.0).unwrap();
    let _ = backend;
    let series = b.sample_orbit(&p0, dt, 641, 0).unwrap();

    // the orbit closes
    let back = b.advance_state(&p0, geo.period).unwrap();
    assert!(
        (back.position - p0.position).norm() < 1e-6,
        "closed orbit did not close: {}",
        back.position
    );

    let stretch = series.stretch_integral(0.0, series.t(640)).unwrap();
    let kappa = series.aux("kappa").unwrap();
    let m = jacobi_transfer(kappa, dt);
    let tr = m[0][0] + m[1][1];
    let disc = (tr * tr - 4.0 * (m[0][0] * m[1][1] - m[0][1] * m[1][0])).sqrt();
    let lambda_u = (tr.abs() + disc) / 2.0;
    assert!(
        (stretch - lambda_u.ln()).abs() < 1e-4,
        "stretch {stretch} vs Jacobi ln lambda_u {}",
        lambda_u.ln()
    );
    // and both agree with the closed form e^{lambda0 T}
    assert!((lambda_u.ln() - geo.period).abs() < 1e-5);
}

#[test]
fn riccati_anchor_on_the_flat_backend() {
    // the algebraic model treated as an ODE problem: r_u converges to 1
    // within 1e-6 after 20 time units, independently of the start value
    let b = PerturbedBackend::unperturbed(0.01, 20.0).unwrap();
    let p0 = PerturbedState {
        position: Complex64::new(0.1, -0.2),
        direction: 0.7,
        riccati_r: 1.0,
    };
    let dt = 0.01;
    let n = 6001;
    let series = b.sample_orbit(&p0, dt, n, 0).unwrap();
    for &r in series.r_u() {
        assert!((r - 1.0).abs() < 1e-6, "riccati rate {r}");
    }
    let kappa = series.aux("kappa").unwrap();
    let a = riccati_rate(kappa, dt, 20.0, Some(0.5)).unwrap();
    let c = riccati_rate(kappa, dt, 20.0, Some(2.0)).unwrap();
    for (x, y) in a.iter().zip(&c) {
        assert!((x - y).abs() < 1e-8);
    }
}

#[test]
fn perturbed_lyapunov_is_point_independent() {
    let factor = ConformalFactor::new(
        vec![Complex64::new(0.15, 0.1), Complex64::new(-0.3, 0.2)],
        vec![0.018, -0.012],
        0.8,
    )
    .unwrap();
    let backend = Backend::Perturbed(PerturbedBackend::new(factor, 0.02, 20.0).unwrap());
    let dt = 0.02;
    let n = 100_000; // T = 2000
    let s1 = backend.sample_seeded(11, dt, n).unwrap();
    let s2 = backend.sample_seeded(29, dt, n).unwrap();
    let e1 = birkhoff(&s1, SeriesKey::RateU).unwrap();
    let e2 = birkhoff(&s2, SeriesKey::RateU).unwrap();
    let gap = (e1.mean - e2.mean).abs();
    assert!(
        gap <= 3.0 * (e1.stderr + e2.stderr),
        "means {} vs {} with stderrs {} / {}",
        e1.mean,
        e2.mean,
        e1.stderr,
        e2.stderr
    );
}

#[test]
fn entropy_is_continuous_to_the_algebraic_model() {
    // shrinking the conformal amplitude brings h_bar back to 1
    let mut gaps = Vec::new();
    for scale in [1.0, 0.25] {
        let factor = ConformalFactor::new(
            vec![Complex64::new(0.15, 0.1), Complex64::new(-0.3, 0.2)],
            vec![0.018 * scale, -0.012 * scale],
            0.8,
        )
        .unwrap();
        let backend = Backend::Perturbed(PerturbedBackend::new(factor, 0.02, 20.0).unwrap());
        let ensemble = backend
            .sample_ensemble(&[1, 2, 3, 4], 0.02, 50_000)
            .unwrap();
        let report = pesin_entropy(&ensemble).unwrap();
        gaps.push(((report.h_bar - 1.0).abs(), report.stderr));
    }
    assert!(
        gaps[1].0 < gaps[0].0,
        "shrinking the bumps should shrink |h_bar - 1|: {gaps:?}"
    );
    assert!(
        gaps[1].0 < 3.0 * gaps[1].1.max(2e-3),
        "h_bar did not return to 1: {gaps:?}"
    );
}

#[test]
fn doubling_time_keeps_h_bar_within_uncertainty() {
    let backend = Backend::Algebraic(AlgebraicBackend::new(1.0).unwrap());
    let short = backend.sample_ensemble(&[1, 2, 3, 4], 0.01, 5_000).unwrap();
    let long = backend
        .sample_ensemble(&[1, 2, 3, 4], 0.01, 10_000)
        .unwrap();
    let hs = pesin_entropy(&short).unwrap();
    let hl = pesin_entropy(&long).unwrap();
    assert!((hs.h_bar - hl.h_bar).abs() <= 4.0 * hs.stderr.max(1e-12));
}
