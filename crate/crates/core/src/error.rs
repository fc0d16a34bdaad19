use thiserror::Error;

/// Errors surfaced by orbit sampling, reduction, and the rate machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("integrator produced a non-finite state at t = {t}: {detail}")]
    IntegratorDiverged { t: f64, detail: String },

    #[error("Riccati variable escaped below the stable branch at t = {t} (r = {r})")]
    RiccatiBlowup { t: f64, r: f64 },

    #[error("unstable-direction tracking collapsed (vector norm underflow at iteration {iter})")]
    DirectionCollapse { iter: usize },

    #[error(
        "fundamental-domain reduction did not terminate within {cap} folds (last distance {dist})"
    )]
    ReductionStalled { cap: usize, dist: f64 },

    #[error("time {t} is outside the series range [{t_min}, {t_max}]")]
    TimeOutOfRange { t: f64, t_min: f64, t_max: f64 },

    #[error("time {t} does not lie on the sampling grid (dt = {dt})")]
    GridMisaligned { t: f64, dt: f64 },

    #[error("series too short: need at least {need} samples, have {have}")]
    SeriesTooShort { need: usize, have: usize },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("word is not hyperbolic: |trace| = {tr_abs} <= 2")]
    NotHyperbolic { tr_abs: f64 },

    #[error("conformal factor rejected: {0}")]
    BadConformalFactor(String),

    #[error("angle field leaves the safe range (0, pi): theta = {theta} with margin {margin}")]
    AngleOutOfRange { theta: f64, margin: f64 },

    #[error("operation requires a contact backend, got {0}")]
    NotContact(&'static str),

    #[error("operation requires an Anosov backend, got {0}")]
    NotAnosov(&'static str),

    #[error("canonical-metric operation called with non-canonical parameters: {0}")]
    NotCanonical(String),

    #[error(
        "averaged-norm truncation bound {bound:.3e} exceeds 10% of the value {value:.3e}; \
         increase the horizon or eps_t"
    )]
    TruncationTooLarge { bound: f64, value: f64 },

    #[error("formula and direct modes disagree at t = {t}: {formula} vs {direct} (tol {tol})")]
    ModeDisagreement {
        t: f64,
        formula: f64,
        direct: f64,
        tol: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
