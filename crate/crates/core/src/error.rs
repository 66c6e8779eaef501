use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Location inside a mesh file where parsing failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileLocation {
    Line(usize),
    Offset(u64),
}

impl std::fmt::Display for FileLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FileLocation::Line(l) => write!(f, "line {l}"),
            FileLocation::Offset(o) => write!(f, "byte offset {o}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error at {location}: {message}")]
    Format {
        location: FileLocation,
        message: String,
    },

    #[error("mesh has no vertices or no valid faces")]
    EmptyMesh,

    #[error("invalid vertex: {0}")]
    InvalidVertex(String),

    #[error("edge ({0}, {1}) is shared by more than two faces")]
    NonManifoldEdge(usize, usize),

    #[error("covariance is rank deficient, principal axes are undefined")]
    DegeneratePca,

    #[error("plane fit needs at least 3 non-collinear points")]
    DegeneratePlaneFit,

    #[error("bisector of anti-parallel planes is undefined")]
    UndefinedBisector,

    #[error("no grid node falls on the plate")]
    EmptyFootprint,

    #[error("plate has no boundary loop usable as a contour")]
    MissingContour,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate inventory id {0:?}")]
    DuplicateId(String),

    #[error("unknown instrument size {0:?}")]
    UnknownSize(String),

    #[error("corpus contains no instruments")]
    EmptyCorpus,

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable class of the error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::EmptyMesh => "empty-mesh",
            Error::InvalidVertex(_) => "invalid-vertex",
            Error::NonManifoldEdge(..) => "non-manifold-edge",
            Error::DegeneratePca => "degenerate-pca",
            Error::DegeneratePlaneFit => "degenerate-plane-fit",
            Error::UndefinedBisector => "undefined-bisector",
            Error::EmptyFootprint => "empty-footprint",
            Error::MissingContour => "missing-contour",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::DuplicateId(_) => "duplicate-id",
            Error::UnknownSize(_) => "unknown-size",
            Error::EmptyCorpus => "empty-corpus",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Config(_) => "config",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format_at_line(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            location: FileLocation::Line(line),
            message: message.into(),
        }
    }

    pub(crate) fn format_at_offset(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            location: FileLocation::Offset(offset),
            message: message.into(),
        }
    }
}
