use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Every variant maps to a stable machine-readable `kind` string so the CLI
/// can emit JSON error records.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("negative exponent at position {position}")]
    NegativeExponent { position: usize },
    #[error("empty polynomial")]
    EmptyPolynomial,
    #[error("empty truncation")]
    EmptyTruncation,
    #[error("deformation parameter t = {0} outside (0, 1/e]")]
    ParameterOutOfRange(f64),
    #[error("missing lifting value for exponent ({i}, {j})")]
    MissingLifting { i: i64, j: i64 },
    #[error("identically zero fiber")]
    IdenticallyZeroFiber,
    #[error("singular point")]
    SingularPoint,
    #[error("too many singular samples ({singular} of {total})")]
    SingularCurve { singular: usize, total: usize },
    #[error("window too small: boundary columns carry {fraction:.3e} of the total density")]
    WindowTooSmall { fraction: f64 },
    #[error("near-critical query: distance {distance:.3e} to a critical value")]
    NearCriticalQuery { distance: f64 },
    #[error("nonconvergent seeds: {failed} of {total}")]
    NonconvergentSeeds { failed: usize, total: usize },
    #[error("inside amoeba: {0} fiber points")]
    InsideAmoeba(usize),
    #[error("ambiguous rounding of gradient ({0:.4}, {1:.4})")]
    AmbiguousRounding(f64, f64),
    #[error("fiber hits zero locus")]
    FiberHitsZeroLocus,
    #[error("missing coefficient at ({i}, {j})")]
    MissingCoefficient { i: i64, j: i64 },
    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(usize, usize),
    #[error("empty coamoeba")]
    EmptyCoamoeba,
    #[error("degenerate Newton polygon")]
    DegenerateNewtonPolygon,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("precondition fails: {0}")]
    PreconditionFails(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable identifier used in JSON error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::NegativeExponent { .. } => "negative_exponent",
            Error::EmptyPolynomial => "empty_polynomial",
            Error::EmptyTruncation => "empty_truncation",
            Error::ParameterOutOfRange(_) => "parameter_out_of_range",
            Error::MissingLifting { .. } => "missing_lifting",
            Error::IdenticallyZeroFiber => "identically_zero_fiber",
            Error::SingularPoint => "singular_point",
            Error::SingularCurve { .. } => "singular_curve",
            Error::WindowTooSmall { .. } => "window_too_small",
            Error::NearCriticalQuery { .. } => "near_critical_query",
            Error::NonconvergentSeeds { .. } => "nonconvergent_seeds",
            Error::InsideAmoeba(_) => "inside_amoeba",
            Error::AmbiguousRounding(..) => "ambiguous_rounding",
            Error::FiberHitsZeroLocus => "fiber_hits_zero_locus",
            Error::MissingCoefficient { .. } => "missing_coefficient",
            Error::ResolutionMismatch(..) => "resolution_mismatch",
            Error::EmptyCoamoeba => "empty_coamoeba",
            Error::DegenerateNewtonPolygon => "degenerate_newton_polygon",
            Error::NotApplicable(_) => "not_applicable",
            Error::PreconditionFails(_) => "precondition_fails",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
