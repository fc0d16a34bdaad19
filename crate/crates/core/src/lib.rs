//! Numerical laboratory for contact Anosov 3-flows.
//!
//! Three flow backends (a closed-form algebraic geodesic flow, a conformally
//! perturbed geodesic flow integrated with the Riccati equation, and a
//! suspension of a hyperbolic toral automorphism) feed a shared analysis
//! stack: Birkhoff averaging and entropy estimation, the contact-metric
//! torsion/energy/curvature machinery, and the averaged-norm rate
//! uniformization with its correction terms.

pub mod algebraic;
pub mod backend;
pub mod conformal;
pub mod contact;
pub mod ergodic;
pub mod error;
pub mod fields;
pub mod hopf;
pub mod hyperbolic;
pub mod numeric;
pub mod optimize;
pub mod perturbed;
pub mod series;
pub mod suspension;
pub mod uniformize;

pub use error::{Error, Result};
