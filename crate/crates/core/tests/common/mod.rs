//! Reference implementations used as oracles by the integration and
//! acceptance tests. Written from the definitions, deliberately without
//! sharing code or structure with the library.

#![allow(dead_code)]

use inbed::hog::HogParams;
use inbed::pose::{Joint, Pose};
use inbed::{BoundingBox, GrayFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Block centers from the box corners, interpolated with exact rationals
/// and snapped into the frame.
pub fn oracle_points(w: usize, h: usize, b: &BoundingBox, p: &HogParams) -> Vec<(i64, i64)> {
    let l = p.l_block as i64;
    let (bx, by, bh) = (b.x_c as i64, b.y_c as i64, b.h as i64);
    let start = (bx + l / 2, by + l / 2);
    let end = (if p.symmetric_points { bx + l / 2 } else { bx + l }, by + bh - l / 2);
    let n = p.n_points as i64;
    (0..n)
        .map(|k| {
            // round(start + (end - start) * k / (n - 1)) with ties upward
            let interp = |s: i64, e: i64| {
                let num = s * (n - 1) + (e - s) * k;
                let den = n - 1;
                (2 * num + den).div_euclid(2 * den)
            };
            let x = interp(start.0, end.0).max(l / 2).min(w as i64 - l / 2);
            let y = interp(start.1, end.1).max(l / 2).min(h as i64 - l / 2);
            (x, y)
        })
        .collect()
}

/// Whole-frame centered-difference gradients with edge replication.
fn gradients(f: &GrayFrame) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (f.width() as i64, f.height() as i64);
    let px = |r: i64, c: i64| -> f64 {
        let r = r.max(0).min(h - 1) as usize;
        let c = c.max(0).min(w - 1) as usize;
        f.data()[r * w as usize + c] as f64
    };
    let mut gx = Vec::new();
    let mut gy = Vec::new();
    for r in 0..h {
        for c in 0..w {
            gx.push(px(r, c + 1) - px(r, c - 1));
            gy.push(px(r + 1, c) - px(r - 1, c));
        }
    }
    (gx, gy)
}

/// One block: triangular-kernel voting against every bin center on the
/// orientation circle, four quadrant cells, then L2, clip, L2.
fn oracle_block(f: &GrayFrame, gx: &[f64], gy: &[f64], cx: i64, cy: i64, p: &HogParams) -> Vec<f64> {
    let l = p.l_block as i64;
    let bins = p.n_bins;
    let width = 180.0 / bins as f64;
    let mut cells = vec![vec![0.0f64; bins]; 4];
    for r in cy - l / 2..cy + l / 2 {
        for c in cx - l / 2..cx + l / 2 {
            let i = (r * f.width() as i64 + c) as usize;
            let m = (gx[i] * gx[i] + gy[i] * gy[i]).sqrt();
            if m == 0.0 {
                continue;
            }
            let theta = gy[i].atan2(gx[i]).to_degrees().rem_euclid(180.0);
            let top = r < cy;
            let left = c < cx;
            let cell = match (top, left) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            for (k, v) in cells[cell].iter_mut().enumerate() {
                let center = (k as f64 + 0.5) * width;
                let mut d = (theta - center).abs();
                if d > 90.0 {
                    d = 180.0 - d;
                }
                let weight = 1.0 - d / width;
                if weight > 0.0 {
                    *v += m * weight;
                }
            }
        }
    }
    let mut v: Vec<f64> = cells.concat();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n = norm(&v);
    if n > 0.0 {
        v = v.iter().map(|x| (x / n).min(p.clip)).collect();
        let n = norm(&v);
        v = v.iter().map(|x| x / n).collect();
    }
    v
}

pub fn oracle_feature(f: &GrayFrame, b: &BoundingBox, p: &HogParams) -> Vec<f64> {
    let (gx, gy) = gradients(f);
    oracle_points(f.width(), f.height(), b, p)
        .into_iter()
        .flat_map(|(x, y)| oracle_block(f, &gx, &gy, x, y, p))
        .collect()
}

/// Largest relative deviation. Denominators are floored at 1e-3 so that
/// entries which are zero in the reference are held to 1e-12 absolute.
pub fn max_rel_error(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1e-3))
        .fold(0.0, f64::max)
}

/// Random HOG case: frame, box that fits, and parameters.
pub fn random_hog_case(rng: &mut ChaCha8Rng) -> (GrayFrame, BoundingBox, HogParams) {
    let params = HogParams {
        n_points: rng.gen_range(2..6),
        l_block: 2 * rng.gen_range(2..13),
        n_bins: rng.gen_range(4..13),
        clip: rng.gen_range(0.05..0.5),
        symmetric_points: rng.gen_bool(0.5),
    };
    let l = params.l_block;
    let w = rng.gen_range(l..l + 60);
    let h = rng.gen_range(l..l + 80);
    let bw = rng.gen_range(1..=w);
    let bh = rng.gen_range(l..=h);
    let bbox = BoundingBox::new(rng.gen_range(0..=w - bw), rng.gen_range(0..=h - bh), bw, bh);
    let style = rng.gen_range(0..3);
    let (a, bcoef) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
    let data = (0..w * h)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            match style {
                0 => rng.gen(),
                // smooth ramp plus a little noise, many exact bin-boundary angles
                1 => (100.0 + a * c + bcoef * r + rng.gen_range(0.0..3.0)).clamp(0.0, 255.0) as u8,
                _ => {
                    if rng.gen_bool(0.02) {
                        rng.gen()
                    } else if (r - h as f64 / 2.0).powi(2) + (c - w as f64 / 2.0).powi(2) < (w.min(h) as f64 / 3.0).powi(2) {
                        200
                    } else {
                        30
                    }
                }
            }
        })
        .collect();
    (GrayFrame::new(w, h, data).unwrap(), bbox, params)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const GROUPS: [(&str, &[Joint]); 8] = [
    ("total", &Joint::ALL),
    ("hip", &[Joint::RHip, Joint::LHip]),
    ("knee", &[Joint::RKnee, Joint::LKnee]),
    ("ankle", &[Joint::RAnkle, Joint::LAnkle]),
    ("head", &[Joint::HeadTop, Joint::Neck]),
    ("shoulder", &[Joint::RShoulder, Joint::LShoulder]),
    ("elbow", &[Joint::RElbow, Joint::LElbow]),
    ("wrist", &[Joint::RWrist, Joint::LWrist]),
];

/// PCK by brute force: for every group, alpha, image and member joint,
/// test the distance against alpha times the ground-truth torso.
pub fn oracle_pck(preds: &[Pose], gts: &[Pose], alphas: &[f64]) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    for (name, members) in GROUPS {
        let mut rates = Vec::new();
        for &alpha in alphas {
            let mut hit = 0u64;
            let mut all = 0u64;
            for i in 0..gts.len() {
                let ls = gts[i].joints[Joint::LShoulder.index()];
                let rh = gts[i].joints[Joint::RHip.index()];
                let torso = (ls[0] - rh[0]).hypot(ls[1] - rh[1]);
                for j in members {
                    let p = preds[i].joints[j.index()];
                    let g = gts[i].joints[j.index()];
                    all += 1;
                    if (p[0] - g[0]).hypot(p[1] - g[1]) <= alpha * torso {
                        hit += 1;
                    }
                }
            }
            rates.push(hit as f64 / all as f64);
        }
        out.push((name.to_string(), rates));
    }
    out
}

pub fn random_pose(rng: &mut ChaCha8Rng, spread: f64) -> Pose {
    let mut j = [[0.0; 2]; 14];
    for p in j.iter_mut() {
        *p = [rng.gen_range(0.0..spread), rng.gen_range(0.0..spread)];
    }
    Pose::new(j)
}

/// A prediction near `gt`, with joint errors spread around typical thresholds.
pub fn perturbed(rng: &mut ChaCha8Rng, gt: &Pose, scale: f64) -> Pose {
    let mut j = gt.joints;
    for p in j.iter_mut() {
        p[0] = (p[0] + rng.gen_range(-scale..scale)).max(0.0);
        p[1] = (p[1] + rng.gen_range(-scale..scale)).max(0.0);
    }
    Pose::new(j)
}
