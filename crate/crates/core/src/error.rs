use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("graph is not connected")]
    Disconnected,
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("edge `{0}` must have a positive length")]
    NonPositiveLength(String),
    #[error("infinite edge `{0}` needs exactly one endpoint of valence 1")]
    BadInfiniteEdge(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid rational `{0}`")]
    InvalidRational(String),
    #[error("rescaling factor must be positive")]
    NonPositiveScale,
    #[error("graph is not a Z-graph: {0}")]
    NotIntegral(String),
    #[error("graph is not a Q-graph: {0}")]
    NotRational(String),
    #[error("loop `{0}` has length 1; rescale by at least 2 before subdividing")]
    UnitLoop(String),
    #[error("operation needs a graph without unbounded edges")]
    HasInfiniteEdges,
    #[error("divisors or functions live on different graphs")]
    HostMismatch,
    #[error("divisor is not supported on Z-points")]
    NotIntegerDivisor,
    #[error("invalid rational function: {0}")]
    InvalidFunction(String),
    #[error("sum takes the value inf - inf at the end of edge `{0}`")]
    InfiniteCancellation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("enumeration limit exceeded: {0}")]
    CapExceeded(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
