use thiserror::Error;

use crate::cell::Address;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("value {value:#x} does not fit in a {width}-bit cell")]
    ValueTooWide { value: u128, width: u32 },

    #[error("cell width must be in 1..=128, got {0}")]
    InvalidWidth(u32),

    #[error("pop_frame called with no open frame")]
    NoOpenFrame,

    #[error("cell width {width} too small, need at least {required} bits")]
    WidthTooSmall { width: u32, required: u32 },

    #[error("query {x} outside universe [0, {universe})")]
    OutOfUniverse { x: u64, universe: u64 },

    #[error("probe set lists address {0} more than once")]
    DuplicateProbe(usize),

    #[error("node (layer {layer}, index {index}) is outside the tree")]
    NodeOutOfBounds { layer: u32, index: u64 },

    #[error("version {0} is not a node of the version tree")]
    UnknownVersion(usize),

    #[error("certificate rejected while reading cell {addr}")]
    Rejected { addr: Address },

    #[error("index {index} out of bounds (limit {limit})")]
    IndexOutOfBounds { index: u64, limit: u64 },

    #[error("invalid butterfly edge: {0}")]
    InvalidEdge(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("cannot parse instance: {0}")]
    InstanceParse(String),

    #[error("verification failed: {0}")]
    VerificationFailure(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
