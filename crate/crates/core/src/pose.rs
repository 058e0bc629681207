//! 14-joint poses, the estimator boundary and pose files.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{GrayFrame, Rotation};
use crate::segmentation::BoundingBox;

pub const NUM_JOINTS: usize = 14;

#[derive(Debug, Error)]
pub enum PoseError {
    #[error("record {record}: expected 14 joints, found {found}")]
    JointCount { record: usize, found: usize },
    #[error("record {record}: expected 14 visibility flags, found {found}")]
    VisibilityCount { record: usize, found: usize },
    #[error("record {record}, joint {joint}: non-finite or negative coordinate ({x}, {y})")]
    OutOfBounds {
        record: usize,
        joint: usize,
        x: f64,
        y: f64,
    },
    #[error("zero torso: left shoulder and right hip coincide")]
    ZeroTorso,
    #[error("malformed pose file {path}: {source}")]
    Malformed {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("pose file exhausted after {0} estimates")]
    Exhausted(usize),
    #[error("estimator failed: {0}")]
    Backend(String),
}

/// Joint indices in LSP order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Joint {
    RAnkle,
    RKnee,
    RHip,
    LHip,
    LKnee,
    LAnkle,
    RWrist,
    RElbow,
    RShoulder,
    LShoulder,
    LElbow,
    LWrist,
    Neck,
    HeadTop,
}

impl Joint {
    pub const ALL: [Joint; NUM_JOINTS] = [
        Joint::RAnkle,
        Joint::RKnee,
        Joint::RHip,
        Joint::LHip,
        Joint::LKnee,
        Joint::LAnkle,
        Joint::RWrist,
        Joint::RElbow,
        Joint::RShoulder,
        Joint::LShoulder,
        Joint::LElbow,
        Joint::LWrist,
        Joint::Neck,
        Joint::HeadTop,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Joint::RAnkle => "r_ankle",
            Joint::RKnee => "r_knee",
            Joint::RHip => "r_hip",
            Joint::LHip => "l_hip",
            Joint::LKnee => "l_knee",
            Joint::LAnkle => "l_ankle",
            Joint::RWrist => "r_wrist",
            Joint::RElbow => "r_elbow",
            Joint::RShoulder => "r_shoulder",
            Joint::LShoulder => "l_shoulder",
            Joint::LElbow => "l_elbow",
            Joint::LWrist => "l_wrist",
            Joint::Neck => "neck",
            Joint::HeadTop => "head_top",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    /// `(x, y)` image coordinates indexed by [`Joint::index`].
    pub joints: [[f64; 2]; NUM_JOINTS],
    pub visible: [bool; NUM_JOINTS],
}

impl Pose {
    pub fn new(joints: [[f64; 2]; NUM_JOINTS]) -> Self {
        Self {
            joints,
            visible: [true; NUM_JOINTS],
        }
    }

    #[inline]
    pub fn joint(&self, j: Joint) -> [f64; 2] {
        self.joints[j.index()]
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Pose {
        let mut out = *self;
        for p in out.joints.iter_mut() {
            p[0] += dx;
            p[1] += dy;
        }
        out
    }

    /// Joint coordinates after rotating the `width x height` frame they live in.
    pub fn rotated(&self, rotation: Rotation, width: usize, height: usize) -> Pose {
        let mut out = *self;
        for p in out.joints.iter_mut() {
            let (x, y) = rotation.map_point(p[0], p[1], width, height);
            *p = [x, y];
        }
        out
    }

    pub fn within(&self, width: usize, height: usize) -> bool {
        self.joints
            .iter()
            .all(|p| p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= width as f64 && p[1] <= height as f64)
    }
}

/// Distance from the left shoulder to the right hip.
pub fn torso_length(gt: &Pose) -> Result<f64, PoseError> {
    let a = gt.joint(Joint::LShoulder);
    let b = gt.joint(Joint::RHip);
    let d = (a[0] - b[0]).hypot(a[1] - b[1]);
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(PoseError::ZeroTorso)
    }
}

/// Backend that turns a (rectified) frame and subject box into a pose.
pub trait PoseEstimator {
    fn estimate(&self, frame: &GrayFrame, bbox: &BoundingBox) -> Result<Pose, PoseError>;

    /// Whether `estimate` may be called from several threads at once.
    fn concurrent(&self) -> bool;
}

/// Box-relative joint template: fractions of `(w, h)` from the up-left corner.
pub const STUB_TEMPLATE: [[f64; 2]; NUM_JOINTS] = [
    [0.40, 0.95], // RAnkle
    [0.40, 0.72], // RKnee
    [0.40, 0.50], // RHip
    [0.60, 0.50], // LHip
    [0.60, 0.72], // LKnee
    [0.60, 0.95], // LAnkle
    [0.25, 0.47], // RWrist
    [0.28, 0.33], // RElbow
    [0.35, 0.20], // RShoulder
    [0.65, 0.20], // LShoulder
    [0.72, 0.33], // LElbow
    [0.75, 0.47], // LWrist
    [0.50, 0.15], // Neck
    [0.50, 0.05], // HeadTop
];

/// Fixed template scaled into the box. Stands in for a learned estimator.
pub fn stub_estimate(_frame: &GrayFrame, bbox: &BoundingBox) -> Pose {
    let mut joints = [[0.0; 2]; NUM_JOINTS];
    for (j, t) in joints.iter_mut().zip(STUB_TEMPLATE) {
        *j = [
            bbox.x_c as f64 + t[0] * bbox.w as f64,
            bbox.y_c as f64 + t[1] * bbox.h as f64,
        ];
    }
    Pose::new(joints)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StubEstimator;

impl PoseEstimator for StubEstimator {
    fn estimate(&self, frame: &GrayFrame, bbox: &BoundingBox) -> Result<Pose, PoseError> {
        Ok(stub_estimate(frame, bbox))
    }

    fn concurrent(&self) -> bool {
        true
    }
}

/// Precomputed poses from an external estimator, served in file order.
#[derive(Debug)]
pub struct PoseFileEstimator {
    records: Vec<PoseRecord>,
    cursor: AtomicUsize,
}

impl PoseFileEstimator {
    pub fn new(records: Vec<PoseRecord>) -> Self {
        Self {
            records,
            cursor: AtomicUsize::new(0),
        }
    }

    pub fn open(path: &Path) -> Result<Self, PoseError> {
        Ok(Self::new(load_pose_records(path)?))
    }

    /// Pose recorded for a given frame name.
    pub fn lookup(&self, frame: &str) -> Option<&Pose> {
        self.records.iter().find(|r| r.frame == frame).map(|r| &r.pose)
    }
}

impl PoseEstimator for PoseFileEstimator {
    fn estimate(&self, _frame: &GrayFrame, _bbox: &BoundingBox) -> Result<Pose, PoseError> {
        let i = self.cursor.fetch_add(1, Ordering::SeqCst);
        self.records
            .get(i)
            .map(|r| r.pose)
            .ok_or(PoseError::Exhausted(self.records.len()))
    }

    fn concurrent(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseRecord {
    pub frame: String,
    pub pose: Pose,
}

/// On-disk record: `{frame, joints: [[x, y] x 14], visible: [bool x 14]}`.
#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    frame: String,
    joints: Vec<[f64; 2]>,
    #[serde(default)]
    visible: Option<Vec<bool>>,
}

pub fn parse_pose_records(text: &str, path: &str) -> Result<Vec<PoseRecord>, PoseError> {
    let raw: Vec<RawRecord> = serde_json::from_str(text).map_err(|source| PoseError::Malformed {
        path: path.to_string(),
        source,
    })?;
    raw.into_iter()
        .enumerate()
        .map(|(record, r)| {
            if r.joints.len() != NUM_JOINTS {
                return Err(PoseError::JointCount {
                    record,
                    found: r.joints.len(),
                });
            }
            let visible = match r.visible {
                None => [true; NUM_JOINTS],
                Some(v) => v.try_into().map_err(|v: Vec<bool>| PoseError::VisibilityCount {
                    record,
                    found: v.len(),
                })?,
            };
            let mut joints = [[0.0; 2]; NUM_JOINTS];
            for (joint, (dst, src)) in joints.iter_mut().zip(&r.joints).enumerate() {
                let [x, y] = *src;
                if !(x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0) {
                    return Err(PoseError::OutOfBounds { record, joint, x, y });
                }
                *dst = *src;
            }
            Ok(PoseRecord {
                frame: r.frame,
                pose: Pose { joints, visible },
            })
        })
        .collect()
}

pub fn load_pose_records(path: &Path) -> Result<Vec<PoseRecord>, PoseError> {
    let text = fs::read_to_string(path).map_err(|source| PoseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pose_records(&text, &path.display().to_string())
}

pub fn load_pose_file(path: &Path) -> Result<Vec<Pose>, PoseError> {
    Ok(load_pose_records(path)?.into_iter().map(|r| r.pose).collect())
}

pub fn pose_records_json(records: &[PoseRecord]) -> String {
    let raw: Vec<RawRecord> = records
        .iter()
        .map(|r| RawRecord {
            frame: r.frame.clone(),
            joints: r.pose.joints.to_vec(),
            visible: Some(r.pose.visible.to_vec()),
        })
        .collect();
    serde_json::to_string_pretty(&raw).expect("pose records serialize") + "\n"
}

pub fn save_pose_records(path: &Path, records: &[PoseRecord]) -> Result<(), PoseError> {
    fs::write(path, pose_records_json(records)).map_err(|source| PoseError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Index of records by frame name; later duplicates win.
pub fn index_by_frame(records: &[PoseRecord]) -> HashMap<&str, &Pose> {
    records.iter().map(|r| (r.frame.as_str(), &r.pose)).collect()
}
