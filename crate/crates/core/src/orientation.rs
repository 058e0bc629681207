//! Orientation detection and rectification.
//!
//! A horizontal box (`w / h > 1`) sets `bit_H` and the frame is turned a
//! quarter clockwise so the subject lies vertically. The n-end HOG feature of
//! the vertical subject feeds the SVM, whose north verdict is `bit_N`. The
//! pair decodes as:
//!
//! | bit_H | bit_N | orientation |
//! |-------|-------|-------------|
//! | 0     | 1     | N           |
//! | 0     | 0     | S           |
//! | 1     | 1     | W           |
//! | 1     | 0     | E           |
//!
//! A head-west subject turned clockwise ends up head-up, hence `(1, 1) -> W`.
//! The original frame is then rotated by the inverse of the detected
//! orientation so the output is always head-up portrait.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Execution;
use crate::hog::{calibrate_block_size, nend_feature, FeatureVector, HogParams};
use crate::imaging::{rotate, GrayFrame, Rotation};
use crate::segmentation::{detect_bbox, BoundingBox, SegmentationConfig};
use crate::svm::{predict_north, train_orientation, OrientationModel, TrainHyper};

/// Which way the subject's head points in the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    N,
    E,
    S,
    W,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation::N, Orientation::E, Orientation::S, Orientation::W];

    /// Rotation that takes a head-up (N) frame to this orientation.
    pub fn from_north(self) -> Rotation {
        match self {
            Orientation::N => Rotation::R0,
            Orientation::E => Rotation::R90Cw,
            Orientation::S => Rotation::R180,
            Orientation::W => Rotation::R90Ccw,
        }
    }

    /// Rotation that brings a frame of this orientation back to N.
    pub fn rectification(self) -> Rotation {
        self.from_north().inverse()
    }

    /// Orientation produced by applying `rotation` to a head-up frame.
    pub fn after_rotating_north(rotation: Rotation) -> Orientation {
        match rotation {
            Rotation::R0 => Orientation::N,
            Rotation::R90Cw => Orientation::E,
            Rotation::R180 => Orientation::S,
            Rotation::R90Ccw => Orientation::W,
        }
    }

    pub fn decode(bit_h: bool, bit_n: bool) -> Orientation {
        match (bit_h, bit_n) {
            (false, true) => Orientation::N,
            (false, false) => Orientation::S,
            (true, true) => Orientation::W,
            (true, false) => Orientation::E,
        }
    }

    /// The `(bit_H, bit_N)` pair an ideal detector reports for this orientation.
    pub fn encode(self) -> (bool, bool) {
        match self {
            Orientation::N => (false, true),
            Orientation::S => (false, false),
            Orientation::W => (true, true),
            Orientation::E => (true, false),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::N => "N",
            Orientation::E => "E",
            Orientation::S => "S",
            Orientation::W => "W",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" | "n" => Ok(Orientation::N),
            "E" | "e" => Ok(Orientation::E),
            "S" | "s" => Ok(Orientation::S),
            "W" | "w" => Ok(Orientation::W),
            other => Err(format!("unknown orientation {other:?}")),
        }
    }
}

/// `bit_H`: the box is strictly wider than tall.
pub fn aspect_bit(bbox: &BoundingBox) -> bool {
    bbox.w > bbox.h
}

/// Vertical working frame plus its box, as seen by the classifier.
#[derive(Debug, Clone)]
pub struct VerticalView {
    pub bit_h: bool,
    pub raw_bbox: BoundingBox,
    pub frame: GrayFrame,
    pub bbox: BoundingBox,
}

/// Front half of the detector: segment, and turn horizontal subjects upright.
pub fn vertical_view(frame: &GrayFrame, seg: &SegmentationConfig) -> Result<VerticalView> {
    let raw_bbox = detect_bbox(frame, seg)?;
    let bit_h = aspect_bit(&raw_bbox);
    if bit_h {
        let turned = rotate(frame, Rotation::R90Cw);
        let bbox = detect_bbox(&turned, seg)?;
        Ok(VerticalView {
            bit_h,
            raw_bbox,
            frame: turned,
            bbox,
        })
    } else {
        Ok(VerticalView {
            bit_h,
            raw_bbox,
            frame: frame.clone(),
            bbox: raw_bbox,
        })
    }
}

/// The classifier input for `frame`.
pub fn orientation_feature(
    frame: &GrayFrame,
    seg: &SegmentationConfig,
    params: &HogParams,
) -> Result<(VerticalView, FeatureVector)> {
    let view = vertical_view(frame, seg)?;
    let feature = nend_feature(&view.frame, &view.bbox, params)?;
    Ok((view, feature))
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub orientation: Orientation,
    pub bit_h: bool,
    pub bit_n: bool,
    /// Head-up portrait version of the input.
    pub rectified: GrayFrame,
    /// Subject box in the rectified frame.
    pub bbox: BoundingBox,
    /// Subject box in the input frame.
    pub raw_bbox: BoundingBox,
}

pub fn detect_orientation(
    frame: &GrayFrame,
    model: &OrientationModel,
    seg: &SegmentationConfig,
) -> Result<Detection> {
    let (view, feature) = orientation_feature(frame, seg, &model.hog_params)?;
    let bit_n = predict_north(model, &feature)?;
    let orientation = Orientation::decode(view.bit_h, bit_n);
    let rectification = orientation.rectification();
    Ok(Detection {
        orientation,
        bit_h: view.bit_h,
        bit_n,
        rectified: rotate(frame, rectification),
        bbox: view
            .raw_bbox
            .rotated(rectification, frame.width(), frame.height()),
        raw_bbox: view.raw_bbox,
    })
}

/// `bit_N` training target for a frame whose true orientation is known: the
/// subject is head-up once horizontal frames have been turned clockwise.
pub fn north_target(orientation: Orientation) -> bool {
    matches!(orientation, Orientation::N | Orientation::W)
}

/// Block side from the vertical boxes of a set of frames. Frames without a
/// detectable subject are skipped.
pub fn calibrate_from_frames(
    frames: &[GrayFrame],
    seg: &SegmentationConfig,
    exec: Execution,
) -> Result<usize> {
    let boxes: Vec<BoundingBox> = exec
        .map(frames, |f| vertical_view(f, seg).map(|v| v.bbox))
        .into_iter()
        .filter_map(Result::ok)
        .collect();
    Ok(calibrate_block_size(&boxes)?)
}

/// Features and targets for labeled frames, in input order.
pub fn training_samples(
    frames: &[(GrayFrame, bool)],
    seg: &SegmentationConfig,
    params: &HogParams,
    exec: Execution,
) -> Result<Vec<(FeatureVector, bool)>> {
    exec.map(frames, |(f, y)| {
        orientation_feature(f, seg, params).map(|(_, feat)| (feat, *y))
    })
    .into_iter()
    .collect()
}

/// Deterministic fold index for each of `n` samples.
pub fn kfold_assignments(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Held-out `bit_N` accuracy.
    pub north_accuracy: f64,
    /// Held-out accuracy of the full `{N, E, S, W}` decision, when true
    /// orientations are known.
    pub orientation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub mean_north_accuracy: f64,
    pub mean_orientation_accuracy: Option<f64>,
}

/// One labeled frame for cross-validation.
#[derive(Debug, Clone)]
pub struct LabeledFrame {
    pub frame: GrayFrame,
    pub is_north: bool,
    pub orientation: Option<Orientation>,
}

/// k-fold cross-validation of the orientation detector. Each fold trains
/// on the remaining folds and scores the held-out frames through the full
/// detector. Features are extracted once; folds run through `exec`.
pub fn cross_validate(
    data: &[LabeledFrame],
    folds: usize,
    seg: &SegmentationConfig,
    params: &HogParams,
    hyper: &TrainHyper,
    exec: Execution,
) -> Result<CvReport> {
    assert!(folds >= 2, "cross-validation needs at least two folds");
    let features: Vec<Result<FeatureVector>> = exec.map(data, |d| {
        orientation_feature(&d.frame, seg, params).map(|(_, f)| f)
    });
    let assignment = kfold_assignments(data.len(), folds, hyper.seed);

    let results: Vec<Result<FoldResult>> = exec.map_range(folds, |fold| {
        let train: Vec<(FeatureVector, bool)> = data
            .iter()
            .zip(&features)
            .zip(&assignment)
            .filter(|(_, &a)| a != fold)
            .filter_map(|((d, f), _)| f.as_ref().ok().map(|f| (f.clone(), d.is_north)))
            .collect();
        let model = train_orientation(&train, params, hyper)?;
        let test: Vec<&LabeledFrame> = data
            .iter()
            .zip(&assignment)
            .filter(|(_, &a)| a == fold)
            .map(|(d, _)| d)
            .collect();
        let mut north_ok = 0usize;
        let mut orient_ok = 0usize;
        let mut orient_total = 0usize;
        for d in &test {
            let detection = detect_orientation(&d.frame, &model, seg).ok();
            if detection.as_ref().is_some_and(|det| det.bit_n == d.is_north) {
                north_ok += 1;
            }
            if let Some(truth) = d.orientation {
                orient_total += 1;
                if detection.as_ref().is_some_and(|det| det.orientation == truth) {
                    orient_ok += 1;
                }
            }
        }
        Ok(FoldResult {
            fold,
            train_size: train.len(),
            test_size: test.len(),
            north_accuracy: ratio(north_ok, test.len()),
            orientation_accuracy: (orient_total > 0).then(|| ratio(orient_ok, orient_total)),
        })
    });
    let folds: Vec<FoldResult> = results.into_iter().collect::<Result<_>>()?;
    let mean_north_accuracy = folds.iter().map(|f| f.north_accuracy).sum::<f64>() / folds.len() as f64;
    let orient: Vec<f64> = folds.iter().filter_map(|f| f.orientation_accuracy).collect();
    let mean_orientation_accuracy =
        (orient.len() == folds.len()).then(|| orient.iter().sum::<f64>() / orient.len() as f64);
    Ok(CvReport {
        folds,
        mean_north_accuracy,
        mean_orientation_accuracy,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_table() {
        assert_eq!(Orientation::decode(false, true), Orientation::N);
        assert_eq!(Orientation::decode(false, false), Orientation::S);
        assert_eq!(Orientation::decode(true, true), Orientation::W);
        assert_eq!(Orientation::decode(true, false), Orientation::E);
        for o in Orientation::ALL {
            let (h, n) = o.encode();
            assert_eq!(Orientation::decode(h, n), o);
        }
    }

    #[test]
    fn rectification_inverts_orientation() {
        for o in Orientation::ALL {
            assert_eq!(o.from_north().then(o.rectification()), Rotation::R0);
            assert_eq!(Orientation::after_rotating_north(o.from_north()), o);
        }
    }

    #[test]
    fn north_target_follows_clockwise_pre_rotation() {
        for o in Orientation::ALL {
            // horizontal orientations are turned clockwise before classification
            let (bit_h, _) = o.encode();
            let seen = if bit_h { o.from_north().then(Rotation::R90Cw) } else { o.from_north() };
            assert_eq!(north_target(o), seen == Rotation::R0, "{o}");
        }
    }

    #[test]
    fn aspect_bit_examples() {
        assert!(aspect_bit(&BoundingBox::new(0, 0, 200, 80)));
        assert!(!aspect_bit(&BoundingBox::new(0, 0, 80, 200)));
        assert!(!aspect_bit(&BoundingBox::new(0, 0, 100, 100)));
    }

    #[test]
    fn parse_orientation() {
        assert_eq!("E".parse::<Orientation>().unwrap(), Orientation::E);
        assert!("X".parse::<Orientation>().is_err());
        assert_eq!(serde_json::to_string(&Orientation::W).unwrap(), "\"W\"");
    }

    #[test]
    fn kfold_is_balanced_and_deterministic() {
        let a = kfold_assignments(419, 10, 3);
        assert_eq!(a, kfold_assignments(419, 10, 3));
        for k in 0..10 {
            let n = a.iter().filter(|&&f| f == k).count();
            assert!(n == 41 || n == 42, "fold {k} has {n}");
        }
    }
}
