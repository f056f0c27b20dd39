use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in parameter `{0}`")]
    NonFiniteParam(&'static str),

    #[error("degenerate rotation: quaternion has (near-)zero norm")]
    DegenerateRotation,

    #[error("scene initialization needs at least 4 points, got {0}")]
    TooFewPoints(usize),

    #[error("image dimension mismatch: {expected} vs {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("non-finite gradient in parameter group `{0}`")]
    NonFiniteGradient(&'static str),

    #[error("training diverged: loss is not finite at iteration {0}")]
    Diverged(u64),

    #[error("malformed PLY: {0}")]
    Ply(String),

    #[error("malformed dataset: {0}")]
    Dataset(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("bad config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
