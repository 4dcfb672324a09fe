use thiserror::Error;

/// Errors produced by the localization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud contains a non-finite coordinate at index {index}")]
    NonFinitePoint { index: usize },

    #[error("cannot build a map from an empty point cloud")]
    EmptyMap,

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("only {found} correspondences survived the gate, {required} required")]
    CorrespondenceStarvation { found: usize, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} m is not a histogram bin edge")]
    NotABinEdge(f64),

    #[error("no estimate could be associated with ground truth")]
    NoAssociations,

    #[error("localization lost at step {step}: {streak} consecutive degenerate updates")]
    LostLocalization { step: usize, streak: usize },

    #[error("parse error in {source_name} at byte {offset}: {message}")]
    ParseBytes {
        source_name: String,
        offset: usize,
        message: String,
    },

    #[error("parse error in {source_name} at line {line}: {message}")]
    ParseLine {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
