//! n-end HOG features.
//!
//! Rather than a dense descriptor grid, HOG blocks are sampled at `n` interest
//! points along the subject's vertical axis: the first centered half a block
//! in from the box's top-left corner, the last half a block up from the box
//! bottom, and the rest linearly interpolated between them. Each block is a
//! 2x2 grid of cells with `n_bins` unsigned-orientation bins, L2-Hys
//! normalized. Blocks are concatenated top to bottom.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::GrayFrame;
use crate::segmentation::BoundingBox;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HogError {
    #[error("invalid HOG parameters: {0}")]
    InvalidParams(String),
    #[error("box height {box_h} cannot hold a {l_block}-pixel block")]
    BoxTooSmall { box_h: usize, l_block: usize },
    #[error("block of side {l_block} at ({x}, {y}) leaves the {width}x{height} frame")]
    BlockOutOfBounds {
        x: usize,
        y: usize,
        l_block: usize,
        width: usize,
        height: usize,
    },
    #[error("cannot calibrate block size from an empty box list")]
    NoBoxes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HogParams {
    pub n_points: usize,
    pub l_block: usize,
    pub n_bins: usize,
    pub clip: f64,
    /// Place the last interest point at `x_c + l_block / 2` (same column as the
    /// first) instead of `x_c + l_block`.
    pub symmetric_points: bool,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            n_points: 2,
            l_block: 32,
            n_bins: 9,
            clip: 0.2,
            symmetric_points: false,
        }
    }
}

impl HogParams {
    pub fn validate(&self) -> Result<(), HogError> {
        if self.n_points < 2 {
            return Err(HogError::InvalidParams(format!(
                "n_points must be >= 2, got {}",
                self.n_points
            )));
        }
        if self.l_block < 4 || !self.l_block.is_multiple_of(2) {
            return Err(HogError::InvalidParams(format!(
                "l_block must be even and >= 4, got {}",
                self.l_block
            )));
        }
        if self.n_bins < 2 {
            return Err(HogError::InvalidParams(format!(
                "n_bins must be >= 2, got {}",
                self.n_bins
            )));
        }
        if !(self.clip > 0.0 && self.clip.is_finite()) {
            return Err(HogError::InvalidParams(format!(
                "clip must be positive, got {}",
                self.clip
            )));
        }
        Ok(())
    }

    pub fn block_len(&self) -> usize {
        4 * self.n_bins
    }

    pub fn feature_len(&self) -> usize {
        self.n_points * self.block_len()
    }
}

/// Cascaded n-end HOG vector, topmost block first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Block side from averaged box extents: `min(mean w, mean h)`, rounded down
/// to an even integer and never below 4.
pub fn calibrate_block_size(boxes: &[BoundingBox]) -> Result<usize, HogError> {
    if boxes.is_empty() {
        return Err(HogError::NoBoxes);
    }
    let n = boxes.len() as f64;
    let mean_w = boxes.iter().map(|b| b.w as f64).sum::<f64>() / n;
    let mean_h = boxes.iter().map(|b| b.h as f64).sum::<f64>() / n;
    let side = mean_w.min(mean_h).floor() as usize;
    Ok((side - side % 2).max(4))
}

/// Block centers `(x, y)` for a vertical box. Centers are rounded to whole
/// pixels and clamped so the half-open block `[x - l/2, x + l/2)` stays inside
/// the frame.
pub fn interest_points(
    frame_width: usize,
    frame_height: usize,
    bbox: &BoundingBox,
    params: &HogParams,
) -> Result<Vec<(usize, usize)>, HogError> {
    params.validate()?;
    let l = params.l_block;
    let half = l / 2;
    if bbox.h < l {
        return Err(HogError::BoxTooSmall {
            box_h: bbox.h,
            l_block: l,
        });
    }
    if frame_width < l || frame_height < l {
        return Err(HogError::BlockOutOfBounds {
            x: bbox.x_c + half,
            y: bbox.y_c + half,
            l_block: l,
            width: frame_width,
            height: frame_height,
        });
    }
    let first = (bbox.x_c + half, bbox.y_c + half);
    let last_x = if params.symmetric_points {
        bbox.x_c + half
    } else {
        bbox.x_c + l
    };
    let last = (last_x, bbox.y_c + bbox.h - half);
    let d = params.n_points - 1;
    // first + round((last - first) * i / d), halves rounded up, in exact integers
    let lerp = |a: usize, b: usize, i: usize| a + (2 * (b - a) * i + d) / (2 * d);
    let points = (0..params.n_points)
        .map(|i| {
            let x = lerp(first.0, last.0, i).clamp(half, frame_width - half);
            let y = lerp(first.1, last.1, i).clamp(half, frame_height - half);
            (x, y)
        })
        .collect();
    Ok(points)
}

/// Maps a gradient to its unsigned orientation in degrees, `[0, 180)`.
#[inline]
fn unsigned_angle(gx: f64, gy: f64) -> f64 {
    let mut a = gy.atan2(gx).to_degrees();
    if a < 0.0 {
        a += 180.0;
    }
    if a >= 180.0 {
        a -= 180.0;
    }
    a
}

/// L2 normalize, clip each entry at `clip`, renormalize. A zero vector stays zero.
///
/// Only the clipped intermediate is bounded by `clip`; renormalization can
/// lift entries back up to 1 when mass sits in very few bins.
pub fn l2_hys(v: &mut [f64], clip: f64) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    for x in v.iter_mut() {
        *x = (*x / norm).min(clip);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// HOG descriptor of the `l_block`-square block centered at `center = (x, y)`.
pub fn hog_block(
    frame: &GrayFrame,
    center: (usize, usize),
    params: &HogParams,
) -> Result<Vec<f64>, HogError> {
    params.validate()?;
    let l = params.l_block;
    let half = l / 2;
    let (cx, cy) = center;
    if cx < half || cy < half || cx + half > frame.width() || cy + half > frame.height() {
        return Err(HogError::BlockOutOfBounds {
            x: cx,
            y: cy,
            l_block: l,
            width: frame.width(),
            height: frame.height(),
        });
    }
    let (x0, y0) = (cx - half, cy - half);
    let n_bins = params.n_bins;
    let bin_width = 180.0 / n_bins as f64;
    let mut hist = vec![0.0; 4 * n_bins];

    for dy in 0..l {
        let r = (y0 + dy) as isize;
        for dx in 0..l {
            let c = (x0 + dx) as isize;
            let gx = frame.get_clamped(r, c + 1) as f64 - frame.get_clamped(r, c - 1) as f64;
            let gy = frame.get_clamped(r + 1, c) as f64 - frame.get_clamped(r - 1, c) as f64;
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let pos = unsigned_angle(gx, gy) / bin_width - 0.5;
            let lo = pos.floor();
            let frac = pos - lo;
            let b0 = (lo as i64).rem_euclid(n_bins as i64) as usize;
            let b1 = (b0 + 1) % n_bins;
            let cell = (dy / half) * 2 + dx / half;
            let base = cell * n_bins;
            hist[base + b0] += mag * (1.0 - frac);
            hist[base + b1] += mag * frac;
        }
    }
    l2_hys(&mut hist, params.clip);
    Ok(hist)
}

/// n-end HOG feature of the subject in `bbox`.
pub fn nend_feature(
    frame: &GrayFrame,
    bbox: &BoundingBox,
    params: &HogParams,
) -> Result<FeatureVector, HogError> {
    let points = interest_points(frame.width(), frame.height(), bbox, params)?;
    let mut values = Vec::with_capacity(params.feature_len());
    for p in points {
        values.extend(hog_block(frame, p, params)?);
    }
    Ok(FeatureVector(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Rotation;
    use proptest::prelude::*;

    fn params(l_block: usize, n_points: usize) -> HogParams {
        HogParams {
            l_block,
            n_points,
            ..HogParams::default()
        }
    }

    #[test]
    fn block_size_examples() {
        let b = |w, h| BoundingBox::new(0, 0, w, h);
        assert_eq!(calibrate_block_size(&[b(80, 200), b(80, 200)]).unwrap(), 80);
        assert_eq!(calibrate_block_size(&[b(60, 200), b(100, 200)]).unwrap(), 80);
        assert_eq!(calibrate_block_size(&[b(5, 9)]).unwrap(), 4);
        assert_eq!(calibrate_block_size(&[b(41, 90)]).unwrap(), 40);
        assert_eq!(calibrate_block_size(&[]), Err(HogError::NoBoxes));
    }

    #[test]
    fn interest_points_two_end() {
        let b = BoundingBox::new(10, 20, 60, 160);
        let p = interest_points(200, 200, &b, &params(60, 2)).unwrap();
        assert_eq!(p, vec![(40, 50), (70, 150)]);
    }

    #[test]
    fn interest_points_interpolate() {
        let b = BoundingBox::new(10, 20, 60, 160);
        let p = interest_points(200, 200, &b, &params(60, 3)).unwrap();
        assert_eq!(p, vec![(40, 50), (55, 100), (70, 150)]);
    }

    #[test]
    fn interest_points_symmetric_flag() {
        let b = BoundingBox::new(10, 20, 60, 160);
        let mut hp = params(60, 2);
        hp.symmetric_points = true;
        let p = interest_points(200, 200, &b, &hp).unwrap();
        assert_eq!(p, vec![(40, 50), (40, 150)]);
    }

    #[test]
    fn interest_points_clamp_to_frame() {
        // the unclamped last center is x = 60; a 60-wide block centered there
        // would cover [30, 90) of a 60-wide frame, so it is pulled to x = 30.
        let b = BoundingBox::new(0, 0, 60, 60);
        let p = interest_points(60, 60, &b, &params(60, 2)).unwrap();
        assert_eq!(p, vec![(30, 30), (30, 30)]);
        for &c in &p {
            let f = GrayFrame::filled(60, 60, 0).unwrap();
            assert!(hog_block(&f, c, &params(60, 2)).is_ok());
        }
    }

    #[test]
    fn interest_points_reject_small_box() {
        let b = BoundingBox::new(0, 0, 10, 20);
        assert_eq!(
            interest_points(100, 100, &b, &params(32, 2)),
            Err(HogError::BoxTooSmall {
                box_h: 20,
                l_block: 32
            })
        );
        let b = BoundingBox::new(0, 0, 10, 40);
        assert!(matches!(
            interest_points(20, 100, &b, &params(32, 2)),
            Err(HogError::BlockOutOfBounds { .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(params(6, 2).validate().is_ok());
        assert!(params(5, 2).validate().is_err());
        assert!(params(2, 2).validate().is_err());
        assert!(params(8, 1).validate().is_err());
        let mut p = params(8, 2);
        p.n_bins = 1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn constant_block_is_zero() {
        let f = GrayFrame::filled(20, 20, 77).unwrap();
        let v = hog_block(&f, (10, 10), &params(8, 2)).unwrap();
        assert_eq!(v, vec![0.0; 36]);
        let b = BoundingBox::new(2, 2, 8, 16);
        let fv = nend_feature(&f, &b, &params(8, 2)).unwrap();
        assert_eq!(fv.0, vec![0.0; 72]);
    }

    #[test]
    fn out_of_bounds_block() {
        let f = GrayFrame::filled(20, 20, 0).unwrap();
        assert!(matches!(
            hog_block(&f, (3, 10), &params(8, 2)),
            Err(HogError::BlockOutOfBounds { .. })
        ));
        assert!(hog_block(&f, (16, 16), &params(8, 2)).is_ok());
        assert!(hog_block(&f, (17, 16), &params(8, 2)).is_err());
    }

    #[test]
    fn vertical_step_votes_split_between_first_and_last_bin() {
        // 8x8 block at columns 4..12; step between columns 7 and 8 lies in
        // the left cell column (4..8) at col 7 and the right cell column at 8.
        let f = GrayFrame::from_fn(16, 16, |_, c| if c < 8 { 40 } else { 140 }).unwrap();
        let v = hog_block(&f, (8, 8), &params(8, 2)).unwrap();
        for cell in 0..4 {
            let h = &v[cell * 9..cell * 9 + 9];
            // angle 0 sits on the boundary between bin 8 (170 deg) and bin 0 (10 deg)
            assert!(h[0] > 0.0 && (h[0] - h[8]).abs() < 1e-12, "cell {cell}: {h:?}");
            assert!(h[1..8].iter().all(|&x| x == 0.0));
        }
        assert_eq!(&v[0..9], &v[9..18]);
        assert_eq!(&v[0..9], &v[18..27]);
    }

    #[test]
    fn single_bin_mass_exceeds_clip_after_renormalization() {
        let mut v = vec![0.0; 9];
        v[3] = 5.0;
        l2_hys(&mut v, 0.2);
        assert_eq!(v[3], 1.0);
    }

    fn arb_frame(size: usize) -> impl Strategy<Value = GrayFrame> {
        proptest::collection::vec(any::<u8>(), size * size)
            .prop_map(move |d| GrayFrame::new(size, size, d).unwrap())
    }

    proptest! {
        #[test]
        fn block_invariant_under_r180(f in arb_frame(12)) {
            // 8x8 block centered at (6, 6) maps onto itself under R180 of a 12x12 frame;
            // cells swap diagonally.
            let hp = params(8, 2);
            let a = hog_block(&f, (6, 6), &hp).unwrap();
            let b = hog_block(&f.rotate(Rotation::R180), (6, 6), &hp).unwrap();
            for cell in 0..4 {
                for k in 0..9 {
                    let x = a[cell * 9 + k];
                    let y = b[(3 - cell) * 9 + k];
                    prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
                }
            }
        }

        #[test]
        fn feature_entries_are_normalized(f in arb_frame(24)) {
            let hp = params(8, 3);
            let fv = nend_feature(&f, &BoundingBox::new(4, 2, 10, 20), &hp).unwrap();
            prop_assert_eq!(fv.len(), 3 * 36);
            for block in fv.0.chunks(36) {
                let norm: f64 = block.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
                prop_assert!(block.iter().all(|&x| (0.0..=1.0).contains(&x)));
            }
        }
    }
}
