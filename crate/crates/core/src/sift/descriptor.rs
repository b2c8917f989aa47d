use std::f64::consts::TAU;

use super::orient::{nearest_level, octave_frame};
use super::pyramid::ScaleSpace;
use super::Keypoint;
use crate::error::{Error, Result};
use crate::imgcore::GrayImage;

pub const DESCRIPTOR_LEN: usize = 128;
const SPATIAL_BINS: usize = 4;
const ORIENT_BINS: usize = 8;
/// Samples per side of the descriptor grid.
const GRID: usize = 16;
/// Width of one spatial bin in units of keypoint scale.
const BIN_WIDTH_FACTOR: f64 = 3.0;
/// Component clamp applied between the two normalizations.
const CLAMP: f64 = 0.2;

/// Unit-length, non-negative 128-bin gradient-orientation histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptor([f32; DESCRIPTOR_LEN]);

impl Descriptor {
    /// Accepts values that already satisfy the unit-norm, non-negative invariant.
    pub fn new(values: [f32; DESCRIPTOR_LEN]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::arg("descriptor components must be finite and non-negative"));
        }
        let norm = values.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::arg(format!("descriptor norm {norm} is not 1")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f32; DESCRIPTOR_LEN] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>().sqrt()
    }
}

impl AsRef<[f32]> for Descriptor {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as usize, y0 as usize);
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let at = |xx, yy| f64::from(img.get(xx, yy));
    (at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx) * (1.0 - fy) + (at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx) * fy
}

/// L2-normalize in place; false when the vector is zero.
fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 1e-12) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Builds the descriptor from a 16x16 grid rotated to the keypoint orientation.
///
/// Grid spacing is `3 sigma / 4`, so each 4x4 block of samples spans one spatial
/// bin of width `3 sigma`. Gradients are read by bilinear interpolation of the
/// nearest Gaussian level, weighted by a Gaussian of half the window width and
/// spread trilinearly over 4x4 positions and 8 orientations. Returns `None`
/// when the rotated grid leaves the image or the patch has no gradient.
pub fn compute_descriptor(kp: &Keypoint, ss: &ScaleSpace) -> Option<Descriptor> {
    let img = nearest_level(ss, kp);
    let (cx, cy, sigma) = octave_frame(ss, kp);
    let bin_width = BIN_WIDTH_FACTOR * sigma;
    let step = bin_width * SPATIAL_BINS as f64 / GRID as f64;
    let half_grid = (GRID as f64 - 1.0) / 2.0;
    let (sin, cos) = kp.orientation.sin_cos();

    // The sample extent plus the one-pixel central-difference stencil must stay inside.
    let reach = half_grid * step * (cos.abs() + sin.abs());
    let (w, h) = (img.width() as f64, img.height() as f64);
    if cx - reach < 1.0 || cy - reach < 1.0 || cx + reach > w - 2.0 || cy + reach > h - 2.0 {
        return None;
    }

    let window_sigma = 0.5 * bin_width * SPATIAL_BINS as f64;
    let denom = 2.0 * window_sigma * window_sigma;
    let mut hist = [0.0f64; DESCRIPTOR_LEN];

    for i in 0..GRID {
        let v = (i as f64 - half_grid) * step;
        for j in 0..GRID {
            let u = (j as f64 - half_grid) * step;
            let px = cx + u * cos - v * sin;
            let py = cy + u * sin + v * cos;
            let gx = bilinear(img, px + 1.0, py) - bilinear(img, px - 1.0, py);
            let gy = bilinear(img, px, py + 1.0) - bilinear(img, px, py - 1.0);
            let mag = gx.hypot(gy) * (-(u * u + v * v) / denom).exp();
            if mag == 0.0 {
                continue;
            }
            let rel = (gy.atan2(gx) - kp.orientation).rem_euclid(TAU);

            let rbin = v / bin_width + SPATIAL_BINS as f64 / 2.0 - 0.5;
            let cbin = u / bin_width + SPATIAL_BINS as f64 / 2.0 - 0.5;
            let obin = rel * ORIENT_BINS as f64 / TAU;
            let (r0, c0, o0) = (rbin.floor(), cbin.floor(), obin.floor());
            let (fr, fc, fo) = (rbin - r0, cbin - c0, obin - o0);
            for (dr, wr) in [(0i64, 1.0 - fr), (1, fr)] {
                let r = r0 as i64 + dr;
                if !(0..SPATIAL_BINS as i64).contains(&r) {
                    continue;
                }
                for (dc, wc) in [(0i64, 1.0 - fc), (1, fc)] {
                    let c = c0 as i64 + dc;
                    if !(0..SPATIAL_BINS as i64).contains(&c) {
                        continue;
                    }
                    for (d_o, wo) in [(0i64, 1.0 - fo), (1, fo)] {
                        let o = (o0 as i64 + d_o).rem_euclid(ORIENT_BINS as i64);
                        let idx = (r as usize * SPATIAL_BINS + c as usize) * ORIENT_BINS + o as usize;
                        hist[idx] += mag * wr * wc * wo;
                    }
                }
            }
        }
    }

    if !normalize(&mut hist) {
        return None;
    }
    hist.iter_mut().for_each(|x| *x = x.min(CLAMP));
    if !normalize(&mut hist) {
        return None;
    }
    let mut out = [0.0f32; DESCRIPTOR_LEN];
    for (o, v) in out.iter_mut().zip(&hist) {
        *o = *v as f32;
    }
    Some(Descriptor(out))
}
