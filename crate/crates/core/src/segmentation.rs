//! Foreground masks and subject bounding boxes.
//!
//! Two mask sources are supported: a plain intensity threshold and a
//! thresholded Sobel gradient magnitude. Either mask is dilated with a square
//! structuring element, the largest 8-connected component is kept, and the box
//! tightly encloses that component's original (undilated) foreground pixels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{GrayFrame, Rotation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SegmentationError {
    #[error("no subject detected")]
    NoSubject,
    #[error("frame {width}x{height} is smaller than the 3x3 Sobel support")]
    FrameTooSmall { width: usize, height: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "mask buffer length");
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn rotate(&self, rotation: Rotation) -> BinaryMask {
        let (ow, oh) = rotation.output_size(self.width, self.height);
        let mut out = vec![false; self.bits.len()];
        for r in 0..self.height {
            for c in 0..self.width {
                let (dr, dc) = rotation.map_pixel(r, c, self.width, self.height);
                out[dr * ow + dc] = self.get(r, c);
            }
        }
        BinaryMask::new(ow, oh, out)
    }

    /// Dilation by a `(2 * radius + 1)` square, computed as two separable passes.
    pub fn dilate(&self, radius: usize) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width, self.height);
        let mut horiz = vec![false; w * h];
        for r in 0..h {
            let row = &self.bits[r * w..(r + 1) * w];
            // prefix counts make each window test O(1)
            let mut prefix = vec![0usize; w + 1];
            for c in 0..w {
                prefix[c + 1] = prefix[c] + row[c] as usize;
            }
            for c in 0..w {
                let lo = c.saturating_sub(radius);
                let hi = (c + radius + 1).min(w);
                horiz[r * w + c] = prefix[hi] > prefix[lo];
            }
        }
        let mut out = vec![false; w * h];
        for c in 0..w {
            let mut prefix = vec![0usize; h + 1];
            for r in 0..h {
                prefix[r + 1] = prefix[r] + horiz[r * w + c] as usize;
            }
            for r in 0..h {
                let lo = r.saturating_sub(radius);
                let hi = (r + radius + 1).min(h);
                out[r * w + c] = prefix[hi] > prefix[lo];
            }
        }
        BinaryMask::new(w, h, out)
    }
}

/// Axis-aligned box: `(x_c, y_c)` is the up-left corner (column, row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_c: usize,
    pub y_c: usize,
    pub w: usize,
    pub h: usize,
}

impl BoundingBox {
    pub fn new(x_c: usize, y_c: usize, w: usize, h: usize) -> Self {
        Self { x_c, y_c, w, h }
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w > 0 && self.h > 0 && self.x_c + self.w <= width && self.y_c + self.h <= height
    }

    /// Whether the continuous point `(x, y)` falls on one of the box's pixels
    /// after rounding.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let (cx, cy) = (x.round(), y.round());
        cx >= self.x_c as f64
            && cx < (self.x_c + self.w) as f64
            && cy >= self.y_c as f64
            && cy < (self.y_c + self.h) as f64
    }

    /// The same pixel set after rotating a `width x height` frame.
    pub fn rotated(&self, rotation: Rotation, width: usize, height: usize) -> BoundingBox {
        let (a_r, a_c) = rotation.map_pixel(self.y_c, self.x_c, width, height);
        let (b_r, b_c) = rotation.map_pixel(
            self.y_c + self.h - 1,
            self.x_c + self.w - 1,
            width,
            height,
        );
        BoundingBox {
            x_c: a_c.min(b_c),
            y_c: a_r.min(b_r),
            w: a_c.abs_diff(b_c) + 1,
            h: a_r.abs_diff(b_r) + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

/// 3x3 Sobel gradients with replicate padding. `gx` is positive for intensity
/// increasing to the right, `gy` for intensity increasing downward.
pub fn sobel(frame: &GrayFrame) -> Result<GradientField, SegmentationError> {
    let (w, h) = (frame.width(), frame.height());
    if w < 3 || h < 3 {
        return Err(SegmentationError::FrameTooSmall {
            width: w,
            height: h,
        });
    }
    let n = w * h;
    let (mut gx, mut gy, mut magnitude) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let px = |r: isize, c: isize| frame.get_clamped(r, c) as i32;
    for r in 0..h as isize {
        for c in 0..w as isize {
            let x = (px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1))
                - (px(r - 1, c - 1) + 2 * px(r, c - 1) + px(r + 1, c - 1));
            let y = (px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1))
                - (px(r - 1, c - 1) + 2 * px(r - 1, c) + px(r - 1, c + 1));
            let i = r as usize * w + c as usize;
            gx[i] = x as f64;
            gy[i] = y as f64;
            magnitude[i] = ((x * x + y * y) as f64).sqrt();
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
    })
}

/// Bit set iff intensity is strictly greater than `tau`.
pub fn threshold_mask(frame: &GrayFrame, tau: u8) -> BinaryMask {
    BinaryMask::new(
        frame.width(),
        frame.height(),
        frame.data().iter().map(|&v| v > tau).collect(),
    )
}

/// Bit set iff gradient magnitude is strictly greater than `tau_e`.
pub fn edge_mask(field: &GradientField, tau_e: f64) -> BinaryMask {
    BinaryMask::new(
        field.width,
        field.height,
        field.magnitude.iter().map(|&m| m > tau_e).collect(),
    )
}

/// Labels 8-connected components. Returns per-pixel labels (0 = background,
/// components numbered from 1 in raster order of their first pixel) and the
/// size of each component.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        sizes.push(0usize);
        let label = sizes.len() as u32;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            sizes[label as usize - 1] += 1;
            let (r, c) = (i / w, i % w);
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                        continue;
                    }
                    let j = nr as usize * w + nc as usize;
                    if mask.bits[j] && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
    }
    (labels, sizes)
}

/// Bounding box of the largest 8-connected component after dilation. Ties in
/// component size go to the component whose first pixel comes first in raster
/// order.
pub fn extract_bbox(mask: &BinaryMask, dilate_radius: usize) -> Result<BoundingBox, SegmentationError> {
    let dilated = mask.dilate(dilate_radius);
    let (labels, sizes) = label_components(&dilated);
    let best = sizes
        .iter()
        .enumerate()
        .fold(None::<(usize, usize)>, |best, (i, &s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((i, s)),
        })
        .ok_or(SegmentationError::NoSubject)?;
    let label = best.0 as u32 + 1;

    let (mut r0, mut c0, mut r1, mut c1) = (usize::MAX, usize::MAX, 0, 0);
    for r in 0..mask.height {
        for c in 0..mask.width {
            let i = r * mask.width + c;
            if mask.bits[i] && labels[i] == label {
                r0 = r0.min(r);
                r1 = r1.max(r);
                c0 = c0.min(c);
                c1 = c1.max(c);
            }
        }
    }
    Ok(BoundingBox::new(c0, r0, c1 - c0 + 1, r1 - r0 + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SegmentationMethod {
    #[default]
    Threshold,
    Edge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub method: SegmentationMethod,
    pub tau: u8,
    pub tau_e: f64,
    pub dilate_radius: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            method: SegmentationMethod::Threshold,
            tau: 128,
            tau_e: 100.0,
            dilate_radius: 2,
        }
    }
}

pub fn foreground_mask(
    frame: &GrayFrame,
    config: &SegmentationConfig,
) -> Result<BinaryMask, SegmentationError> {
    match config.method {
        SegmentationMethod::Threshold => Ok(threshold_mask(frame, config.tau)),
        SegmentationMethod::Edge => Ok(edge_mask(&sobel(frame)?, config.tau_e)),
    }
}

/// Subject box of a frame under the configured extraction method.
pub fn detect_bbox(
    frame: &GrayFrame,
    config: &SegmentationConfig,
) -> Result<BoundingBox, SegmentationError> {
    extract_bbox(&foreground_mask(frame, config)?, config.dilate_radius)
}

/// Otsu's threshold over the intensity histogram; pixels `> t` are foreground.
pub fn otsu_threshold(frames: &[GrayFrame]) -> u8 {
    let mut hist = [0u64; 256];
    for f in frames {
        for &v in f.data() {
            hist[v as usize] += 1;
        }
    }
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return 128;
    }
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &n)| i as f64 * n as f64).sum();
    let (mut w0, mut sum0) = (0.0f64, 0.0f64);
    let (mut best_t, mut best_var) = (0u8, -1.0f64);
    for (t, &n) in hist.iter().enumerate() {
        w0 += n as f64;
        sum0 += t as f64 * n as f64;
        let w1 = total as f64 - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }
    best_t
}
