use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One evaluated cutoff of a stabilization trace, carried by
/// [`Error::NoStabilization`].
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TraceEntry {
    pub cutoff: usize,
    /// `None` when the cutoff was skipped as a degenerate truncation.
    pub difference: Option<i64>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("symmetric eigen-solver failed (residual {residual:e})")]
    EigenFailure { residual: f64 },

    #[error("signature difference did not stabilize on the final {window} cutoffs: {trace:?}")]
    NoStabilization { window: usize, trace: Vec<TraceEntry> },

    #[error("symplecticity residual {residual:e} exceeds {limit:e}")]
    SymplecticityLost { residual: f64, limit: f64 },

    #[error("mean Hessian is degenerate (smallest |eigenvalue| {min_abs_eig:e})")]
    DegenerateMeanHessian { min_abs_eig: f64 },

    #[error("crossing at path endpoint t = {time}")]
    EndpointCrossing { time: f64 },

    #[error("t = {time} is not a crossing (smallest singular value of Q - I is {sigma_min:e})")]
    NotACrossing { time: f64, sigma_min: f64 },

    #[error("degenerate path endpoint at t = {time}")]
    DegenerateEndpoint { time: f64 },

    #[error("degenerate crossing form at t = {time} (kernel dimension {kernel_dim}, form nullity {nullity})")]
    DegenerateCrossing {
        time: f64,
        kernel_dim: usize,
        nullity: usize,
    },

    #[error("restricted form is degenerate at t = {time}")]
    RegularityFailure { time: f64 },

    #[error("index is a half-integer ({twice}/2)")]
    HalfIntegerResult { twice: i64 },

    #[error("assembly quadrature error estimate {estimate:e} above 1e-10")]
    QuadratureWarning { estimate: f64 },

    #[error("signature difference {difference} is odd")]
    OddDifference { difference: i64 },

    #[error("degenerate problem: {0}")]
    DegenerateProblem(String),

    #[error("loop is not contractible (winding {winding:?})")]
    NonContractibleLoop { winding: Vec<i64> },

    #[error("orbit {orbit} is degenerate")]
    DegenerateOrbitPresent { orbit: usize },

    #[error("phi does not exceed the horizon {horizon} on |tau| <= {cap:e}")]
    HorizonTooSmall { horizon: f64, cap: f64 },

    #[error("endpoint w must be nonzero")]
    ZeroEndpoint,

    #[error("operation requires dim W = 2, got {dim_w}")]
    UnsupportedDimension { dim_w: usize },

    #[error("no regular value found after {trials} trials")]
    RegularValueNotFound { trials: usize },

    #[error("preimage search inconclusive; per-value degrees {estimates:?}")]
    PreimageIncomplete { estimates: Vec<i64> },

    #[error("degree differs across dimensions: {per_dim:?}")]
    Instability { per_dim: Vec<(usize, i64)> },

    #[error("orbit {orbit} at {q0:?}: {source}")]
    AtOrbit {
        orbit: usize,
        q0: Vec<f64>,
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::EigenFailure { .. } => "EigenFailure",
            Error::NoStabilization { .. } => "NoStabilization",
            Error::SymplecticityLost { .. } => "SymplecticityLost",
            Error::DegenerateMeanHessian { .. } => "DegenerateMeanHessian",
            Error::EndpointCrossing { .. } => "EndpointCrossing",
            Error::NotACrossing { .. } => "NotACrossing",
            Error::DegenerateEndpoint { .. } => "DegenerateEndpoint",
            Error::DegenerateCrossing { .. } => "DegenerateCrossing",
            Error::RegularityFailure { .. } => "RegularityFailure",
            Error::HalfIntegerResult { .. } => "HalfIntegerResult",
            Error::QuadratureWarning { .. } => "QuadratureWarning",
            Error::OddDifference { .. } => "OddDifference",
            Error::DegenerateProblem(_) => "DegenerateProblem",
            Error::NonContractibleLoop { .. } => "NonContractibleLoop",
            Error::DegenerateOrbitPresent { .. } => "DegenerateOrbitPresent",
            Error::HorizonTooSmall { .. } => "HorizonTooSmall",
            Error::ZeroEndpoint => "ZeroEndpoint",
            Error::UnsupportedDimension { .. } => "UnsupportedDimension",
            Error::RegularValueNotFound { .. } => "RegularValueNotFound",
            Error::PreimageIncomplete { .. } => "PreimageIncomplete",
            Error::Instability { .. } => "Instability",
            Error::AtOrbit { source, .. } => source.kind(),
        }
    }
}
