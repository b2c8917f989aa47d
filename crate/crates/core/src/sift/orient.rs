use std::f64::consts::TAU;

use super::pyramid::ScaleSpace;
use super::Keypoint;
use crate::imgcore::GrayImage;

pub const ORIENTATION_BINS: usize = 36;
/// Orientation window Gaussian, relative to the keypoint scale.
const WINDOW_SIGMA_FACTOR: f64 = 1.5;
/// Secondary peaks at or above this fraction of the maximum spawn extra keypoints.
const PEAK_RATIO: f64 = 0.8;

/// Gaussian level of `octave` closest to a refined interval.
pub(crate) fn nearest_level<'a>(ss: &'a ScaleSpace, kp: &Keypoint) -> &'a GrayImage {
    let levels = &ss.octaves[kp.octave];
    let i = kp.interval.round().clamp(0.0, (levels.len() - 1) as f64) as usize;
    &levels[i]
}

/// Keypoint position and scale in its octave's pixel units.
pub(crate) fn octave_frame(ss: &ScaleSpace, kp: &Keypoint) -> (f64, f64, f64) {
    let scale = ss.octave_scale(kp.octave);
    (kp.x / scale, kp.y / scale, kp.sigma / scale)
}

/// Central-difference gradient as (magnitude, angle in (-pi, pi]).
#[inline]
pub(crate) fn pixel_gradient(img: &GrayImage, x: usize, y: usize) -> (f64, f64) {
    let dx = f64::from(img.get(x + 1, y)) - f64::from(img.get(x - 1, y));
    let dy = f64::from(img.get(x, y + 1)) - f64::from(img.get(x, y - 1));
    (dx.hypot(dy), dy.atan2(dx))
}

/// Raw Gaussian-weighted 36-bin gradient orientation histogram around `kp`.
pub fn orientation_histogram(kp: &Keypoint, ss: &ScaleSpace) -> [f64; ORIENTATION_BINS] {
    let img = nearest_level(ss, kp);
    let (ox, oy, sigma) = octave_frame(ss, kp);
    let sigma_w = WINDOW_SIGMA_FACTOR * sigma;
    let radius = (3.0 * sigma_w).round() as i64;
    let (cx, cy) = (ox.round() as i64, oy.round() as i64);
    let (w, h) = (img.width() as i64, img.height() as i64);
    let denom = 2.0 * sigma_w * sigma_w;

    let mut hist = [0.0; ORIENTATION_BINS];
    for dy in -radius..=radius {
        let py = cy + dy;
        if py < 1 || py > h - 2 {
            continue;
        }
        for dx in -radius..=radius {
            let px = cx + dx;
            if px < 1 || px > w - 2 || dx * dx + dy * dy > radius * radius {
                continue;
            }
            let (mag, angle) = pixel_gradient(img, px as usize, py as usize);
            let weight = (-((dx * dx + dy * dy) as f64) / denom).exp();
            let bin = (angle * ORIENTATION_BINS as f64 / TAU).round() as i64;
            hist[bin.rem_euclid(ORIENTATION_BINS as i64) as usize] += weight * mag;
        }
    }
    hist
}

/// Circular [1 4 6 4 1] / 16 smoothing.
pub(crate) fn smooth_histogram(hist: &[f64; ORIENTATION_BINS]) -> [f64; ORIENTATION_BINS] {
    let n = ORIENTATION_BINS;
    let mut out = [0.0; ORIENTATION_BINS];
    for (i, o) in out.iter_mut().enumerate() {
        let at = |d: isize| hist[(i as isize + d).rem_euclid(n as isize) as usize];
        *o = (at(-2) + at(2)) / 16.0 + 4.0 * (at(-1) + at(1)) / 16.0 + 6.0 * at(0) / 16.0;
    }
    out
}

/// Dominant orientations of a histogram: every local peak reaching 80% of the
/// maximum, each refined by a three-point parabola. Radians in `[0, 2pi)`.
pub fn histogram_peaks(hist: &[f64; ORIENTATION_BINS]) -> Vec<f64> {
    let n = ORIENTATION_BINS;
    let max = hist.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for b in 0..n {
        let (l, c, r) = (hist[(b + n - 1) % n], hist[b], hist[(b + 1) % n]);
        if c > l && c > r && c >= PEAK_RATIO * max {
            let offset = 0.5 * (l - r) / (l - 2.0 * c + r);
            let mut angle = ((b as f64 + offset) * TAU / n as f64).rem_euclid(TAU);
            if angle >= TAU {
                angle = 0.0;
            }
            peaks.push(angle);
        }
    }
    peaks
}

/// One copy of `kp` per dominant gradient orientation around it.
pub fn assign_orientations(kp: &Keypoint, ss: &ScaleSpace) -> Vec<Keypoint> {
    let hist = smooth_histogram(&orientation_histogram(kp, ss));
    histogram_peaks(&hist)
        .into_iter()
        .map(|orientation| Keypoint { orientation, ..*kp })
        .collect()
}
