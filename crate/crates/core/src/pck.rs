//! Percentage of correct keypoints.
//!
//! A predicted joint is correct when it lies within `alpha` times the ground
//! truth torso length (left shoulder to right hip) of the true joint; the
//! boundary counts as correct. Left/right joints are merged into seven part
//! groups plus a total over all fourteen joints.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{torso_length, Joint, Pose, PoseError, NUM_JOINTS};

#[derive(Debug, Error)]
pub enum PckError {
    #[error("{preds} predictions for {gts} ground-truth poses")]
    LengthMismatch { preds: usize, gts: usize },
    #[error("no poses to evaluate")]
    Empty,
    #[error("ground truth {index}: {source}")]
    InvalidTorso {
        index: usize,
        #[source]
        source: PoseError,
    },
    #[error("alphas must be positive and finite, got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PckConfig {
    pub alphas: Vec<f64>,
}

impl Default for PckConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.1, 0.2],
        }
    }
}

impl PckConfig {
    pub fn validate(&self) -> Result<(), PckError> {
        match self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            Some(&a) => Err(PckError::InvalidAlpha(a)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartGroup {
    Total,
    Hip,
    Knee,
    Ankle,
    Head,
    Shoulder,
    Elbow,
    Wrist,
}

impl PartGroup {
    pub const ALL: [PartGroup; 8] = [
        PartGroup::Total,
        PartGroup::Hip,
        PartGroup::Knee,
        PartGroup::Ankle,
        PartGroup::Head,
        PartGroup::Shoulder,
        PartGroup::Elbow,
        PartGroup::Wrist,
    ];

    pub fn members(self) -> &'static [Joint] {
        match self {
            PartGroup::Total => &Joint::ALL,
            PartGroup::Hip => &[Joint::RHip, Joint::LHip],
            PartGroup::Knee => &[Joint::RKnee, Joint::LKnee],
            PartGroup::Ankle => &[Joint::RAnkle, Joint::LAnkle],
            PartGroup::Head => &[Joint::HeadTop, Joint::Neck],
            PartGroup::Shoulder => &[Joint::RShoulder, Joint::LShoulder],
            PartGroup::Elbow => &[Joint::RElbow, Joint::LElbow],
            PartGroup::Wrist => &[Joint::RWrist, Joint::LWrist],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PartGroup::Total => "total",
            PartGroup::Hip => "hip",
            PartGroup::Knee => "knee",
            PartGroup::Ankle => "ankle",
            PartGroup::Head => "head",
            PartGroup::Shoulder => "shoulder",
            PartGroup::Elbow => "elbow",
            PartGroup::Wrist => "wrist",
        }
    }
}

/// `distance(pred, gt) <= alpha * torso`.
#[inline]
pub fn pck_joint(pred: [f64; 2], gt: [f64; 2], torso: f64, alpha: f64) -> bool {
    (pred[0] - gt[0]).hypot(pred[1] - gt[1]) <= alpha * torso
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub name: String,
    /// One rate per configured alpha.
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PckReport {
    pub alphas: Vec<f64>,
    pub images: usize,
    pub groups: Vec<RateRow>,
    pub joints: Vec<RateRow>,
}

impl PckReport {
    pub fn group_rate(&self, group: PartGroup, alpha_index: usize) -> f64 {
        self.groups[PartGroup::ALL.iter().position(|g| *g == group).unwrap()].rates[alpha_index]
    }

    /// Rows are part groups (total first), columns are alphas.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group");
        for a in &self.alphas {
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
        for row in &self.groups {
            out.push_str(&row.name);
            for r in &row.rates {
                out.push_str(&format!(",{r:.6}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Per-joint correctness counts, `counts[alpha][joint]`.
fn correct_counts(preds: &[Pose], gts: &[Pose], alphas: &[f64]) -> Result<Vec<[usize; NUM_JOINTS]>, PckError> {
    let torsos = gts
        .iter()
        .enumerate()
        .map(|(index, g)| torso_length(g).map_err(|source| PckError::InvalidTorso { index, source }))
        .collect::<Result<Vec<_>, _>>()?;
    let mut counts = vec![[0usize; NUM_JOINTS]; alphas.len()];
    for ((pred, gt), &torso) in preds.iter().zip(gts).zip(&torsos) {
        for (row, &alpha) in counts.iter_mut().zip(alphas) {
            for (j, n) in row.iter_mut().enumerate() {
                if pck_joint(pred.joints[j], gt.joints[j], torso, alpha) {
                    *n += 1;
                }
            }
        }
    }
    Ok(counts)
}

pub fn evaluate(preds: &[Pose], gts: &[Pose], config: &PckConfig) -> Result<PckReport, PckError> {
    config.validate()?;
    if preds.len() != gts.len() {
        return Err(PckError::LengthMismatch {
            preds: preds.len(),
            gts: gts.len(),
        });
    }
    if gts.is_empty() {
        return Err(PckError::Empty);
    }
    let n = gts.len();
    let counts = correct_counts(preds, gts, &config.alphas)?;
    let groups = PartGroup::ALL
        .iter()
        .map(|g| RateRow {
            name: g.name().to_string(),
            rates: counts
                .iter()
                .map(|c| {
                    let hits: usize = g.members().iter().map(|j| c[j.index()]).sum();
                    hits as f64 / (g.members().len() * n) as f64
                })
                .collect(),
        })
        .collect();
    let joints = Joint::ALL
        .iter()
        .map(|j| RateRow {
            name: j.name().to_string(),
            rates: counts.iter().map(|c| c[j.index()] as f64 / n as f64).collect(),
        })
        .collect();
    Ok(PckReport {
        alphas: config.alphas.clone(),
        images: n,
        groups,
        joints,
    })
}
