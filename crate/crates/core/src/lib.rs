//! In-bed pose monitoring pipeline.
//!
//! Stages, in the order a monitoring run uses them:
//!
//! 1. **Trigger** ([`trigger`]): frame differencing with a backward window; a
//!    falling edge of the filtered state starts one estimation.
//! 2. **Segmentation** ([`segmentation`]): threshold or Sobel-edge foreground
//!    mask, largest component, bounding box.
//! 3. **Orientation** ([`orientation`], [`hog`], [`svm`]): aspect bit, n-end HOG
//!    feature, linear SVM north verdict, decode to `{N, E, S, W}` and rectify to
//!    head-up portrait.
//! 4. **Estimation** ([`pose`]): pluggable [`pose::PoseEstimator`] backend.
//! 5. **Evaluation** ([`pck`]): PCK by body-part group.
//!
//! [`synth`] renders deterministic silhouette scenes and monitoring sequences
//! with ground truth; [`cli`] wires everything into the `inbed` binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod hog;
pub mod imaging;
pub mod orientation;
pub mod pck;
pub mod pgm;
pub mod pose;
pub mod segmentation;
pub mod svm;
pub mod synth;
pub mod trigger;

pub use error::{Error, Result};
pub use exec::Execution;
pub use imaging::{FrameSequence, GrayFrame, RgbFrame, Rotation};
pub use orientation::{detect_orientation, Detection, Orientation};
pub use segmentation::{BinaryMask, BoundingBox, SegmentationConfig, SegmentationMethod};
