use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("unsupported maxval {0}, only 65535 is accepted")]
    UnsupportedMaxval(u64),

    #[error("unsupported channel count {0}")]
    UnsupportedChannels(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("channel mismatch: expected {expected} channels, got {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: coastline index {index} does not increase")]
    NonMonotonePath { line: usize, index: usize },

    #[error("coordinate out of range: {0}")]
    CoordinateOutOfRange(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("crop {crop_w}x{crop_h} larger than image {width}x{height}")]
    CropTooLarge {
        crop_w: usize,
        crop_h: usize,
        width: usize,
        height: usize,
    },

    #[error("donor {donor} ({width}x{height}) too small for a {cell_w}x{cell_h} cell")]
    DonorTooSmall {
        donor: usize,
        width: usize,
        height: usize,
        cell_w: usize,
        cell_h: usize,
    },

    #[error("missing prediction: {0}")]
    MissingPrediction(PathBuf),

    #[error("predictor backend failed: {0}")]
    Backend(String),

    #[error("evaluation point list is empty")]
    EmptyPointList,

    #[error("coastline paths have mixed orientations or lengths")]
    MixedOrientations,

    #[error("ensemble weights are all zero")]
    ZeroWeights,

    #[error("coastline curve leaves the image: y({x}) = {y} outside [0, {height})")]
    CurveOutOfBounds { x: usize, y: f64, height: usize },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Tag an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
