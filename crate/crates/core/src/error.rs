use std::path::PathBuf;

use crate::tensor::Shape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("channel mismatch in {op}: expected {expected} channels, got {actual}")]
    ChannelMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("shape mismatch in {op}: expected {expected}, got {actual}")]
    ShapeMismatch {
        op: &'static str,
        expected: Shape,
        actual: Shape,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss term {term} = {value}")]
    NonFiniteLoss { term: &'static str, value: f64 },

    #[error("weights file: bad magic {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("weights file: unsupported version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("weights file truncated at byte {offset}: {what}")]
    Truncated { offset: usize, what: &'static str },

    #[error("weights file: duplicate tensor name {0:?}")]
    DuplicateName(String),

    #[error("weights file: malformed record at byte {offset}: {reason}")]
    MalformedWeights { offset: usize, reason: String },

    #[error("missing tensor {0:?}")]
    MissingTensor(String),

    #[error(
        "feature extractor weights missing ({0}); load them with FeatureExtractor::load \
         or pass the identity extractor"
    )]
    ExtractorWeightsMissing(String),

    #[error("extractor manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },

    #[error("image parse error at byte {offset}: {reason}")]
    ImageParse { offset: usize, reason: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("image codec: {0}")]
    Codec(String),

    #[error("image {width}x{height} is smaller than the required {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("missing directory {0}")]
    MissingDirectory(PathBuf),

    #[error("no paired files between {raw} and {reference}")]
    EmptyIntersection { raw: PathBuf, reference: PathBuf },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
