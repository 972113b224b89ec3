use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cubic auxiliary Y vanishes (|Y| = {magnitude:e}); use the oracle eigensolver")]
    DegenerateCubic { magnitude: f64 },

    #[error("closed-form eigenvectors need omega > 1e-12 (got {omega:e})")]
    OmegaSingular { omega: f64 },

    #[error("eigenvector residual {residual:e} exceeds tolerance {tolerance:e} near an exceptional point")]
    NearDefective { residual: f64, tolerance: f64 },

    #[error("closed-form spectrum disagrees with the oracle by {distance:e}")]
    ClosedFormMismatch { distance: f64 },

    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("bracket [{lo}, {hi}] does not straddle a PT phase change")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("exceptional point search did not converge: {reason}")]
    NotConverged { reason: String },

    #[error("no exceptional point found in the requested range")]
    EmptyCurve,

    #[error("parameters are not at an exceptional point: {reason}")]
    NotAtEp { reason: String },

    #[error("invalid density matrix: {reason}")]
    InvalidDensity { reason: String },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("time step {dt} too large: dt * |H|_row = {product} > 0.1")]
    StepTooLarge { dt: f64, product: f64 },

    #[error("state amplitudes became non-finite at t = {time}")]
    NonFinite { time: f64 },

    #[error("too close to the exceptional point (|E3 - E4| = {gap:e})")]
    EpTooClose { gap: f64 },

    #[error("finite-difference derivative did not stabilise (last relative change {relative_change:e})")]
    NoDerivativeConvergence { relative_change: f64 },

    #[error("coherence slope {slope:e} is too small; sensitivity undefined")]
    ZeroSlope { slope: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// `true` for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidArgument(_)
                | Error::InvalidDensity { .. }
                | Error::NotNormalized { .. }
                | Error::StepTooLarge { .. }
                | Error::NoSignChange { .. }
                | Error::OmegaSingular { .. }
        )
    }

    /// Short machine-readable tag, stable across versions.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateCubic { .. } => "degenerate_cubic",
            Error::OmegaSingular { .. } => "omega_singular",
            Error::NearDefective { .. } => "near_defective",
            Error::ClosedFormMismatch { .. } => "closed_form_mismatch",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::NotConverged { .. } => "not_converged",
            Error::EmptyCurve => "empty_curve",
            Error::NotAtEp { .. } => "not_at_ep",
            Error::InvalidDensity { .. } => "invalid_density",
            Error::NotNormalized { .. } => "not_normalized",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::NonFinite { .. } => "non_finite",
            Error::EpTooClose { .. } => "ep_too_close",
            Error::NoDerivativeConvergence { .. } => "no_derivative_convergence",
            Error::ZeroSlope { .. } => "zero_slope",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}
