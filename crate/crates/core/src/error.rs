use thiserror::Error;

use crate::{
    hog::HogError, imaging::ImageError, pck::PckError, pgm::PgmError, pose::PoseError,
    segmentation::SegmentationError, svm::TrainError, synth::SynthError, trigger::TriggerError,
};

/// Umbrella error for pipeline-level code that crosses module boundaries.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Hog(#[from] HogError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Trigger(#[from] TriggerError),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Pck(#[from] PckError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
