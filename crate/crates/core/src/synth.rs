//! Deterministic synthetic in-bed scenes.
//!
//! A scene is a 2-D articulated silhouette (head disc, torso polygon, limb
//! capsules) drawn at intensity 200 over a background of 30, in head-up
//! orientation, with optional additive Gaussian noise. The finished canvas is
//! then rotated to the requested orientation, and joint annotations are
//! mapped with the same rotation. Everything is a pure function of the spec
//! and its seed.
//!
//! Sequences hold each episode's scene (fresh noise per frame) and insert
//! relocation transitions between episodes: a cross-fade between the two
//! scenes plus a moving occluder standing in for the caregiver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::imaging::{rotate, FrameSequence, GrayFrame, ImageError};
use crate::orientation::Orientation;
use crate::pose::{Joint, Pose, NUM_JOINTS};
use crate::segmentation::BinaryMask;

pub const FOREGROUND: u8 = 200;
pub const BACKGROUND: u8 = 30;
/// Intensity of the occluder drawn during relocations.
pub const OCCLUDER: u8 = 120;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error("subject does not fit a {width}x{height} frame at scale {scale}")]
    DoesNotFit {
        width: usize,
        height: usize,
        scale: f64,
    },
    #[error("invalid sequence script: {0}")]
    InvalidScript(String),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Posture {
    Supine,
    LeftLying,
    RightLying,
}

impl Posture {
    pub const ALL: [Posture; 3] = [Posture::Supine, Posture::LeftLying, Posture::RightLying];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub posture: Posture,
    pub orientation: Orientation,
    /// `(width, height)` of the head-up canvas; E/W outputs are transposed.
    pub frame_size: (usize, usize),
    /// Body length as a fraction of canvas height.
    pub subject_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.subject_scale > 0.0 && self.subject_scale < 1.0) {
            return Err(SynthError::InvalidSpec(format!(
                "subject_scale must be in (0, 1), got {}",
                self.subject_scale
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SynthError::InvalidSpec(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if self.frame_size.0 < 8 || self.frame_size.1 < 8 {
            return Err(SynthError::InvalidSpec(format!(
                "frame must be at least 8x8, got {}x{}",
                self.frame_size.0, self.frame_size.1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub frame: GrayFrame,
    pub pose: Pose,
    pub orientation: Orientation,
    /// Pixels covered by the silhouette, in output orientation.
    pub coverage: BinaryMask,
}

/// Joint layout in body units (length 1): `x` across the body from its
/// centerline, `y` down from the top of the head.
fn posture_template(posture: Posture) -> [[f64; 2]; NUM_JOINTS] {
    let supine = [
        [-0.080, 0.950], // RAnkle
        [-0.075, 0.740], // RKnee
        [-0.065, 0.520], // RHip
        [0.065, 0.520],  // LHip
        [0.075, 0.740],  // LKnee
        [0.080, 0.950],  // LAnkle
        [-0.170, 0.490], // RWrist
        [-0.150, 0.350], // RElbow
        [-0.100, 0.200], // RShoulder
        [0.100, 0.200],  // LShoulder
        [0.150, 0.350],  // LElbow
        [0.170, 0.490],  // LWrist
        [0.000, 0.160],  // Neck
        [0.000, 0.030],  // HeadTop
    ];
    let left_lying = [
        [0.020, 0.930],
        [0.100, 0.720],
        [-0.030, 0.520],
        [0.030, 0.530],
        [0.130, 0.700],
        [0.050, 0.950],
        [0.160, 0.420],
        [0.100, 0.320],
        [-0.030, 0.200],
        [0.030, 0.210],
        [0.120, 0.300],
        [0.180, 0.400],
        [0.010, 0.160],
        [0.020, 0.030],
    ];
    match posture {
        Posture::Supine => supine,
        Posture::LeftLying => left_lying,
        Posture::RightLying => left_lying.map(|[x, y]| [-x, y]),
    }
}

const HEAD_RADIUS: f64 = 0.080;
/// Head center sits this far below the head-top joint.
const HEAD_DROP: f64 = 0.065;
const JITTER: f64 = 0.012;

#[derive(Debug, Clone, Copy)]
enum Shape {
    Disc { c: [f64; 2], r: f64 },
    Capsule { a: [f64; 2], b: [f64; 2], r: f64 },
    Quad([[f64; 2]; 4]),
}

impl Shape {
    fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            Shape::Disc { c, r } => dist2(p, c) <= r * r,
            Shape::Capsule { a, b, r } => seg_dist2(p, a, b) <= r * r,
            Shape::Quad(q) => {
                let mut sign = 0.0f64;
                for i in 0..4 {
                    let (u, v) = (q[i], q[(i + 1) % 4]);
                    let cross = (v[0] - u[0]) * (p[1] - u[1]) - (v[1] - u[1]) * (p[0] - u[0]);
                    if cross != 0.0 {
                        if sign != 0.0 && cross.signum() != sign {
                            return false;
                        }
                        sign = cross.signum();
                    }
                }
                true
            }
        }
    }

    /// Inclusive `(x0, y0, x1, y1)` extent.
    fn extent(&self) -> [f64; 4] {
        match *self {
            Shape::Disc { c, r } => [c[0] - r, c[1] - r, c[0] + r, c[1] + r],
            Shape::Capsule { a, b, r } => [
                a[0].min(b[0]) - r,
                a[1].min(b[1]) - r,
                a[0].max(b[0]) + r,
                a[1].max(b[1]) + r,
            ],
            Shape::Quad(q) => q.iter().fold(
                [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
                |e, p| [e[0].min(p[0]), e[1].min(p[1]), e[2].max(p[0]), e[3].max(p[1])],
            ),
        }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn seg_dist2(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    dist2(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
}

/// Silhouette primitives for a pose, with radii in pixels.
fn body_shapes(pose: &Pose, length: f64) -> Vec<Shape> {
    use Joint::*;
    let j = |joint: Joint| pose.joint(joint);
    let head_top = j(HeadTop);
    let head = [head_top[0], head_top[1] + HEAD_DROP * length];
    let mid_shoulder = midpoint(j(RShoulder), j(LShoulder));
    let mid_hip = midpoint(j(RHip), j(LHip));
    let cap = |a: Joint, b: Joint, r: f64| Shape::Capsule {
        a: j(a),
        b: j(b),
        r: r * length,
    };
    vec![
        Shape::Disc {
            c: head,
            r: HEAD_RADIUS * length,
        },
        Shape::Capsule {
            a: j(Neck),
            b: head,
            r: 0.035 * length,
        },
        Shape::Quad([j(RShoulder), j(LShoulder), j(LHip), j(RHip)]),
        Shape::Capsule {
            a: mid_shoulder,
            b: mid_hip,
            r: 0.085 * length,
        },
        cap(RShoulder, LShoulder, 0.040),
        cap(RHip, LHip, 0.050),
        cap(RShoulder, RElbow, 0.035),
        cap(RElbow, RWrist, 0.030),
        cap(LShoulder, LElbow, 0.035),
        cap(LElbow, LWrist, 0.030),
        cap(RHip, RKnee, 0.050),
        cap(RKnee, RAnkle, 0.040),
        cap(LHip, LKnee, 0.050),
        cap(LKnee, LAnkle, 0.040),
    ]
}

fn mix_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Head-up pose and coverage mask before noise and rotation.
fn draw_north(spec: &SceneSpec) -> Result<(Pose, BinaryMask), SynthError> {
    spec.validate()?;
    let (w, h) = spec.frame_size;
    let length = spec.subject_scale * h as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 1));
    let center_x = (w as f64 - 1.0) / 2.0 + rng.gen_range(-0.04..=0.04) * w as f64;
    let top = (h as f64 - length) / 2.0 + rng.gen_range(-0.25..=0.25) * (h as f64 - length) / 2.0;

    let template = posture_template(spec.posture);
    let mut joints = [[0.0; 2]; NUM_JOINTS];
    for (i, (dst, t)) in joints.iter_mut().zip(template).enumerate() {
        let fixed = i == Joint::HeadTop.index() || i == Joint::Neck.index();
        let (jx, jy) = if fixed {
            (0.0, 0.0)
        } else {
            (rng.gen_range(-JITTER..=JITTER), rng.gen_range(-JITTER..=JITTER))
        };
        *dst = [
            center_x + (t[0] + jx) * length,
            top + (t[1] + jy) * length,
        ];
    }
    let pose = Pose::new(joints);
    let shapes = body_shapes(&pose, length);

    let extent = shapes.iter().map(Shape::extent).fold(
        [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
        |e, s| [e[0].min(s[0]), e[1].min(s[1]), e[2].max(s[2]), e[3].max(s[3])],
    );
    if extent[0] < 0.0 || extent[1] < 0.0 || extent[2] > (w - 1) as f64 || extent[3] > (h - 1) as f64 {
        return Err(SynthError::DoesNotFit {
            width: w,
            height: h,
            scale: spec.subject_scale,
        });
    }

    let mut bits = vec![false; w * h];
    for s in &shapes {
        let [x0, y0, x1, y1] = s.extent();
        for r in y0.ceil() as usize..=y1.floor() as usize {
            for c in x0.ceil() as usize..=x1.floor() as usize {
                let i = r * w + c;
                if !bits[i] && s.contains([c as f64, r as f64]) {
                    bits[i] = true;
                }
            }
        }
    }
    Ok((pose, BinaryMask::new(w, h, bits)))
}

fn add_noise(base: &[u8], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<u8> {
    if sigma == 0.0 {
        return base.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    base.iter()
        .map(|&v| (v as f64 + normal.sample(rng)).round().clamp(0.0, 255.0) as u8)
        .collect()
}

fn clean_canvas(mask: &BinaryMask) -> Vec<u8> {
    mask.bits()
        .iter()
        .map(|&b| if b { FOREGROUND } else { BACKGROUND })
        .collect()
}

/// Renders one scene. The same spec always yields the same bytes.
pub fn render_scene(spec: &SceneSpec) -> Result<RenderedScene, SynthError> {
    let (pose, mask) = draw_north(spec)?;
    let (w, h) = spec.frame_size;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 2));
    let data = add_noise(&clean_canvas(&mask), spec.noise_sigma, &mut rng);
    let north = GrayFrame::new(w, h, data)?;
    let rotation = spec.orientation.from_north();
    Ok(RenderedScene {
        frame: rotate(&north, rotation),
        pose: pose.rotated(rotation, w, h),
        orientation: spec.orientation,
        coverage: mask.rotate(rotation),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub count: usize,
    pub frame_size: (usize, usize),
    pub scale_range: (f64, f64),
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            count: 419,
            frame_size: (128, 128),
            scale_range: (0.72, 0.88),
            noise_sigma: 4.0,
            seed: 0,
        }
    }
}

/// Spec of scene `index` in a dataset: orientations cycle N, E, S, W and
/// postures cycle every four scenes, so both are balanced.
pub fn dataset_spec(config: &DatasetConfig, index: usize) -> SceneSpec {
    let seed = mix_seed(config.seed, 1000 + index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = config.scale_range;
    SceneSpec {
        posture: Posture::ALL[(index / 4) % 3],
        orientation: Orientation::ALL[index % 4],
        frame_size: config.frame_size,
        subject_scale: if hi > lo { rng.gen_range(lo..hi) } else { lo },
        noise_sigma: config.noise_sigma,
        seed,
    }
}

pub fn render_dataset(
    config: &DatasetConfig,
    exec: Execution,
) -> Result<Vec<(SceneSpec, RenderedScene)>, SynthError> {
    exec.map_range(config.count, |i| {
        let spec = dataset_spec(config, i);
        render_scene(&spec).map(|r| (spec, r))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub hold_frames: usize,
    pub scene: SceneSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceScript {
    pub episodes: Vec<Episode>,
    /// Dynamic frames inserted before every episode but the first.
    pub transition_frames: usize,
    pub fps: f64,
    pub seed: u64,
}

impl SequenceScript {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.episodes.is_empty() {
            return Err(SynthError::InvalidScript("no episodes".into()));
        }
        if let Some(i) = self.episodes.iter().position(|e| e.hold_frames == 0) {
            return Err(SynthError::InvalidScript(format!(
                "episode {i} has zero hold frames"
            )));
        }
        if self.episodes.len() > 1 && self.transition_frames == 0 {
            return Err(SynthError::InvalidScript(
                "relocations need at least one transition frame".into(),
            ));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(SynthError::InvalidScript(format!("fps must be positive, got {}", self.fps)));
        }
        Ok(())
    }

    /// `episodes` relocations of a randomly oriented subject on a square canvas.
    pub fn relocations(
        episodes: usize,
        hold_frames: usize,
        transition_frames: usize,
        fps: f64,
        seed: u64,
    ) -> SequenceScript {
        let episodes = (0..episodes)
            .map(|i| {
                let s = mix_seed(seed, 5000 + i as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                SceneSpec {
                    posture: Posture::ALL[rng.gen_range(0..3)],
                    // consecutive episodes always differ in orientation
                    orientation: Orientation::ALL[(i + rng.gen_range(0..2) * 2 * (i % 2)) % 4],
                    frame_size: (128, 128),
                    subject_scale: rng.gen_range(0.74..0.86),
                    noise_sigma: 2.0,
                    seed: s,
                }
            })
            .map(|scene| Episode { hold_frames, scene })
            .collect();
        SequenceScript {
            episodes,
            transition_frames,
            fps,
            seed,
        }
    }
}

/// Ground truth attached to each episode of a rendered sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLabel {
    pub first_static_frame: usize,
    pub hold_frames: usize,
    pub orientation: Orientation,
    pub posture: Posture,
    /// Joints in the episode's frame coordinates.
    pub joints: [[f64; 2]; NUM_JOINTS],
}

#[derive(Debug, Clone)]
pub struct RenderedSequence {
    pub sequence: FrameSequence,
    /// 1 for relocation frames, 0 for static frames.
    pub states: Vec<u8>,
    /// First static frame of every episode.
    pub trigger_frames: Vec<usize>,
    pub episodes: Vec<EpisodeLabel>,
}

pub fn render_sequence(script: &SequenceScript) -> Result<RenderedSequence, SynthError> {
    script.validate()?;
    let mut clean = Vec::with_capacity(script.episodes.len());
    for (i, ep) in script.episodes.iter().enumerate() {
        let mut spec = ep.scene.clone();
        spec.noise_sigma = 0.0;
        let scene = render_scene(&spec)?;
        if let Some((first, _)) = clean.first() {
            let first: &GrayFrame = first;
            if (first.width(), first.height()) != (scene.frame.width(), scene.frame.height()) {
                return Err(SynthError::InvalidScript(format!(
                    "episode {i} renders {}x{}, expected {}x{}; use a square canvas when orientations mix",
                    scene.frame.width(),
                    scene.frame.height(),
                    first.width(),
                    first.height()
                )));
            }
        }
        clean.push((scene.frame, scene.pose));
    }
    let (w, h) = (clean[0].0.width(), clean[0].0.height());
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(script.seed, 3));
    let mut frames = Vec::new();
    let mut states = Vec::new();
    let mut trigger_frames = Vec::new();
    let mut episodes = Vec::new();

    for (i, ep) in script.episodes.iter().enumerate() {
        let (base, pose) = &clean[i];
        if i > 0 {
            let prev = &clean[i - 1].0;
            let t = script.transition_frames;
            let (ow, oh) = (w / 4, h / 4);
            for k in 0..t {
                let alpha = (k + 1) as f64 / (t + 1) as f64;
                let mut data: Vec<u8> = prev
                    .data()
                    .iter()
                    .zip(base.data())
                    .map(|(&a, &b)| ((1.0 - alpha) * a as f64 + alpha * b as f64).round() as u8)
                    .collect();
                // occluder alternates between the left and right halves so
                // consecutive positions never overlap
                let half = w / 2;
                let x0 = if k % 2 == 0 {
                    rng.gen_range(0..=half.saturating_sub(ow))
                } else {
                    rng.gen_range(half..=w - ow)
                };
                let y0 = rng.gen_range(0..=h - oh);
                for r in y0..y0 + oh {
                    data[r * w + x0..r * w + x0 + ow].fill(OCCLUDER);
                }
                frames.push(GrayFrame::new(w, h, add_noise(&data, ep.scene.noise_sigma, &mut rng))?);
                states.push(1);
            }
        }
        let first_static_frame = frames.len();
        trigger_frames.push(first_static_frame);
        for _ in 0..ep.hold_frames {
            frames.push(GrayFrame::new(w, h, add_noise(base.data(), ep.scene.noise_sigma, &mut rng))?);
            states.push(0);
        }
        episodes.push(EpisodeLabel {
            first_static_frame,
            hold_frames: ep.hold_frames,
            orientation: ep.scene.orientation,
            posture: ep.scene.posture,
            joints: pose.joints,
        });
    }
    Ok(RenderedSequence {
        sequence: FrameSequence::new(frames, script.fps)?,
        states,
        trigger_frames,
        episodes,
    })
}
