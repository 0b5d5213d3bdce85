use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid beam: {0}")]
    InvalidBeam(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("no scene pixel lies inside the beam footprint")]
    EmptyFootprint,

    #[error("transmitted symbol on subcarrier {index} is zero")]
    DivisionByZero { index: usize },

    #[error("layers do not match: {0}")]
    MismatchedLayers(String),

    #[error("patch {patch} is not aligned ({missing} alignment missing)")]
    NotAligned { patch: usize, missing: &'static str },

    #[error("sample {sample} of patch {patch} maps to spectrum index ({ix}, {iy}) outside the {size}x{size} grid")]
    IndexOverflow {
        patch: usize,
        sample: usize,
        ix: i64,
        iy: i64,
        size: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate grid step: {0}")]
    DegenerateStep(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("missing dataset at {}", .0.display())]
    MissingDataset(PathBuf),

    #[error("malformed file {}: {reason}", path.display())]
    Malformed { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
