//! Single-channel frames, orthogonal rotations and recorded sequences.
//!
//! Coordinates: row index grows downward, column index grows rightward. A
//! continuous point `(x, y)` refers to column `x`, row `y`, so pixel `(r, c)`
//! sits at `(c, r)`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::pgm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("frame dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("frame {index} is {actual_w}x{actual_h}, sequence is {width}x{height}")]
    SequenceDimensions {
        index: usize,
        width: usize,
        height: usize,
        actual_w: usize,
        actual_h: usize,
    },
    #[error("sequence fps must be positive, got {0}")]
    InvalidFps(f64),
    #[error("sequence has no frames")]
    EmptySequence,
}

/// 8-bit grayscale frame stored row-major. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(ImageError::BufferLength {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a frame by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    /// Pixel lookup with coordinates clamped to the frame (replicate padding).
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> u8 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c)
    }

    pub fn rotate(&self, rotation: Rotation) -> GrayFrame {
        rotate(self, rotation)
    }
}

/// Orthogonal rotation. `R90Cw` maps pixel `(r, c)` of an `H x W` frame to
/// `(c, H - 1 - r)` of a `W x H` frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rotation {
    R0,
    R90Cw,
    R180,
    R90Ccw,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [
        Rotation::R0,
        Rotation::R90Cw,
        Rotation::R180,
        Rotation::R90Ccw,
    ];

    /// Number of clockwise quarter turns.
    pub fn quarter_turns(self) -> u8 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90Cw => 1,
            Rotation::R180 => 2,
            Rotation::R90Ccw => 3,
        }
    }

    pub fn from_quarter_turns(turns: u8) -> Rotation {
        match turns % 4 {
            0 => Rotation::R0,
            1 => Rotation::R90Cw,
            2 => Rotation::R180,
            _ => Rotation::R90Ccw,
        }
    }

    /// `self` followed by `then`.
    pub fn then(self, then: Rotation) -> Rotation {
        Rotation::from_quarter_turns(self.quarter_turns() + then.quarter_turns())
    }

    pub fn inverse(self) -> Rotation {
        Rotation::from_quarter_turns(4 - self.quarter_turns())
    }

    /// Output `(width, height)` for an input of the given size.
    pub fn output_size(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            Rotation::R0 | Rotation::R180 => (width, height),
            Rotation::R90Cw | Rotation::R90Ccw => (height, width),
        }
    }

    /// Maps pixel `(row, col)` of a `width x height` frame to its rotated position.
    pub fn map_pixel(self, row: usize, col: usize, width: usize, height: usize) -> (usize, usize) {
        match self {
            Rotation::R0 => (row, col),
            Rotation::R90Cw => (col, height - 1 - row),
            Rotation::R180 => (height - 1 - row, width - 1 - col),
            Rotation::R90Ccw => (width - 1 - col, row),
        }
    }

    /// Continuous counterpart of [`Rotation::map_pixel`] for `(x, y)` points.
    pub fn map_point(self, x: f64, y: f64, width: usize, height: usize) -> (f64, f64) {
        let w1 = width as f64 - 1.0;
        let h1 = height as f64 - 1.0;
        match self {
            Rotation::R0 => (x, y),
            Rotation::R90Cw => (h1 - y, x),
            Rotation::R180 => (w1 - x, h1 - y),
            Rotation::R90Ccw => (y, w1 - x),
        }
    }
}

/// Lossless orthogonal rotation of a frame.
pub fn rotate(frame: &GrayFrame, rotation: Rotation) -> GrayFrame {
    let (w, h) = (frame.width, frame.height);
    if rotation == Rotation::R0 {
        return frame.clone();
    }
    let (ow, oh) = rotation.output_size(w, h);
    let mut out = vec![0u8; w * h];
    for r in 0..h {
        let row = &frame.data[r * w..(r + 1) * w];
        for (c, &v) in row.iter().enumerate() {
            let (dr, dc) = rotation.map_pixel(r, c, w, h);
            out[dr * ow + dc] = v;
        }
    }
    GrayFrame {
        width: ow,
        height: oh,
        data: out,
    }
}

/// Interleaved three-channel image for estimator backends that expect RGB input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbFrame {
    pub width: usize,
    pub height: usize,
    /// Interleaved `[c0, c1, c2]` per pixel, row-major.
    pub data: Vec<u8>,
}

impl RgbFrame {
    pub fn channel(&self, index: usize) -> Vec<u8> {
        assert!(index < 3, "channel index {index} out of range");
        self.data.iter().skip(index).step_by(3).copied().collect()
    }
}

pub fn replicate_channels(frame: &GrayFrame) -> RgbFrame {
    let data = frame.data.iter().flat_map(|&v| [v, v, v]).collect();
    RgbFrame {
        width: frame.width,
        height: frame.height,
        data,
    }
}

/// Ordered frames of identical size at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<GrayFrame>,
    fps: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<GrayFrame>, fps: f64) -> Result<Self, ImageError> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(ImageError::InvalidFps(fps));
        }
        let first = frames.first().ok_or(ImageError::EmptySequence)?;
        let (width, height) = (first.width, first.height);
        for (index, f) in frames.iter().enumerate() {
            if f.width != width || f.height != height {
                return Err(ImageError::SequenceDimensions {
                    index,
                    width,
                    height,
                    actual_w: f.width,
                    actual_h: f.height,
                });
            }
        }
        Ok(Self { frames, fps })
    }

    pub fn frames(&self) -> &[GrayFrame] {
        &self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// `manifest.json` of a sequence directory. Ground-truth fields are written
/// by the synthetic generator and ignored by consumers that do not need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub fps: f64,
    pub frames: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_frames: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episodes: Option<Vec<crate::synth::EpisodeLabel>>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.pgm")
}

/// Writes frames as zero-padded PGM files plus `manifest.json` into `dir`.
pub fn save_sequence(dir: &Path, sequence: &FrameSequence) -> Result<SequenceManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("create {}", dir.display()), e))?;
    let mut names = Vec::with_capacity(sequence.len());
    for (i, frame) in sequence.frames().iter().enumerate() {
        let name = frame_file_name(i);
        pgm::save_pgm(&dir.join(&name), frame)?;
        names.push(name);
    }
    let manifest = SequenceManifest {
        fps: sequence.fps(),
        frames: names,
        states: None,
        trigger_frames: None,
        episodes: None,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(dir: &Path, manifest: &SequenceManifest) -> Result<()> {
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::json(format!("encode {}", path.display()), e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(format!("write {}", path.display()), e))
}

pub fn read_manifest(path: &Path) -> Result<SequenceManifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("read {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(format!("parse {}", path.display()), e))
}

/// Loads a sequence from a manifest path or from a directory containing one.
pub fn load_sequence(path: &Path) -> Result<(FrameSequence, SequenceManifest)> {
    let manifest_path = if path.is_dir() {
        path.join(MANIFEST_NAME)
    } else {
        path.to_path_buf()
    };
    let manifest = read_manifest(&manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let frames = manifest
        .frames
        .iter()
        .map(|name| pgm::load_pgm(&base.join(name)).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    let sequence = FrameSequence::new(frames, manifest.fps)?;
    Ok((sequence, manifest))
}
