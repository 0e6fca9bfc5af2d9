use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("leading coefficient is not invertible")]
    NotInvertible,
    #[error("leading coefficient is not the unit")]
    LeadingNotUnit,
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unsupported expression: {0}")]
    Unsupported(String),
    #[error("objects live on different charts")]
    ChartMismatch,
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("position-space map only supports power 2, got {0}")]
    UnsupportedPower(u32),
    #[error("degenerate fit: {0}")]
    FitDegenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
