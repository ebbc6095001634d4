use thiserror::Error;

/// Errors raised by graph construction, the state engine and the protocols.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("vertex {vertex} is outside 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("graph is not two-colorable (odd cycle through vertex {0})")]
    NotTwoColorable(usize),
    #[error("parameter {name} = {value} outside [0, 1]")]
    ParameterRange { name: &'static str, value: f64 },
    #[error("invalid probability vector: {0}")]
    InvalidState(String),
    #[error("joint state needs {bits} bits, above the cap of {cap}")]
    TooLarge { bits: usize, cap: usize },
    #[error("impossible post-selection: kept mass is zero")]
    ImpossiblePostSelection,
    #[error("auxiliary state does not match target partition: {0}")]
    AuxMismatch(String),
    #[error("success probability must lie in (0, 1], got {0}")]
    ZeroProbability(f64),
    #[error("resources {requested} below the base preparation cost {base}")]
    BelowBaseCost { requested: f64, base: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
