use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Positions are reported in double precision regardless of the working scalar type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HillError {
    #[error("step size underflow at x = {x:.6e}")]
    StepSizeUnderflow { x: f64 },

    #[error("z = {re}{im:+}i is a Dirichlet point (|phi(z, pi)| = {phi:.3e})")]
    DirichletPoint { re: f64, im: f64, phi: f64 },

    #[error("z = {re}{im:+}i lies on or too close to the spectrum (|1 - Delta^2| = {gap:.3e})")]
    NearSpectrum { re: f64, im: f64, gap: f64 },

    #[error("a root sits on the contour; {attempts} perturbations did not help")]
    BoundaryRoot { attempts: usize },

    #[error("root search did not converge: {0}")]
    Nonconvergence(String),

    #[error("lambda = {re}{im:+}i is not an eigenvalue of the fiber (residual {residual:.3e})")]
    NotAnEigenvalue { re: f64, im: f64, residual: f64 },

    #[error("corrector diverged at t = {t:.6}")]
    CorrectorDivergence { t: f64 },

    #[error("arc is singular at t = {t:.6} (|Delta'| = {dot:.3e})")]
    SingularArc { t: f64, dot: f64 },

    #[error("point {re}{im:+}i lies outside the computed window")]
    Window { re: f64, im: f64 },

    #[error("fiber at t = {t:.6} is degenerate: {reason}")]
    DegenerateFiber { t: f64, reason: String },

    #[error("potential has nonzero mean {re}{im:+}i; shift it first")]
    NonZeroMean { re: f64, im: f64 },

    #[error("expansion refused: the criterion verdict is FAIL (pass the override to run anyway)")]
    ExpansionRefused,

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl HillError {
    /// Variant name, for reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            HillError::StepSizeUnderflow { .. } => "StepSizeUnderflow",
            HillError::DirichletPoint { .. } => "DirichletPointError",
            HillError::NearSpectrum { .. } => "NearSpectrumError",
            HillError::BoundaryRoot { .. } => "BoundaryRootError",
            HillError::Nonconvergence(_) => "NonconvergenceError",
            HillError::NotAnEigenvalue { .. } => "NotAnEigenvalueError",
            HillError::CorrectorDivergence { .. } => "CorrectorDivergence",
            HillError::SingularArc { .. } => "SingularArcError",
            HillError::Window { .. } => "WindowError",
            HillError::DegenerateFiber { .. } => "DegenerateFiberError",
            HillError::NonZeroMean { .. } => "NonZeroMeanError",
            HillError::ExpansionRefused => "ExpansionRefused",
            HillError::InvalidPotential(_) => "InvalidPotential",
            HillError::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T, E = HillError> = std::result::Result<T, E>;
