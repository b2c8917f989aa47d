use nalgebra::{Matrix3, Vector3};

use super::pyramid::{DoGPyramid, ScaleSpace};
use super::Keypoint;
use crate::imgcore::GrayImage;

/// Re-localisation steps allowed before a candidate is abandoned.
const MAX_REFINE_STEPS: usize = 5;

/// A discrete scale-space extremum: DoG level `level` of `octave` at pixel `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Candidate {
    pub octave: usize,
    pub level: usize,
    pub y: usize,
    pub x: usize,
}

fn is_strict_extremum(below: &GrayImage, cur: &GrayImage, above: &GrayImage, x: usize, y: usize) -> bool {
    let v = cur.get(x, y);
    let mut greater = true;
    let mut less = true;
    for (layer, is_centre_layer) in [(below, false), (cur, true), (above, false)] {
        for ny in y - 1..=y + 1 {
            let row = layer.row(ny);
            for nx in x - 1..=x + 1 {
                if is_centre_layer && nx == x && ny == y {
                    continue;
                }
                let n = row[nx];
                greater &= v > n;
                less &= v < n;
                if !greater && !less {
                    return false;
                }
            }
        }
    }
    greater || less
}

/// Points strictly above or strictly below all 26 scale-space neighbours, on
/// DoG levels `1..=intervals` and away from a one-pixel border. Ordered by
/// octave, level, row, column.
pub fn detect_extrema(dog: &DoGPyramid) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (octave, levels) in dog.octaves.iter().enumerate() {
        let (w, h) = (levels[0].width(), levels[0].height());
        if w < 3 || h < 3 {
            continue;
        }
        for level in 1..levels.len() - 1 {
            let (below, cur, above) = (&levels[level - 1], &levels[level], &levels[level + 1]);
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    if is_strict_extremum(below, cur, above, x, y) {
                        out.push(Candidate { octave, level, y, x });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineParams {
    /// Minimum |D| at the interpolated extremum.
    pub contrast_thresh: f64,
    /// Principal-curvature ratio bound `r`.
    pub edge_ratio: f64,
}

struct Local<'a> {
    levels: &'a [GrayImage],
}

impl Local<'_> {
    fn at(&self, l: usize, x: usize, y: usize) -> f64 {
        f64::from(self.levels[l].get(x, y))
    }

    fn gradient(&self, l: usize, x: usize, y: usize) -> Vector3<f64> {
        Vector3::new(
            (self.at(l, x + 1, y) - self.at(l, x - 1, y)) / 2.0,
            (self.at(l, x, y + 1) - self.at(l, x, y - 1)) / 2.0,
            (self.at(l + 1, x, y) - self.at(l - 1, x, y)) / 2.0,
        )
    }

    fn hessian(&self, l: usize, x: usize, y: usize) -> Matrix3<f64> {
        let v2 = 2.0 * self.at(l, x, y);
        let dxx = self.at(l, x + 1, y) + self.at(l, x - 1, y) - v2;
        let dyy = self.at(l, x, y + 1) + self.at(l, x, y - 1) - v2;
        let dss = self.at(l + 1, x, y) + self.at(l - 1, x, y) - v2;
        let dxy = (self.at(l, x + 1, y + 1) - self.at(l, x - 1, y + 1) - self.at(l, x + 1, y - 1)
            + self.at(l, x - 1, y - 1))
            / 4.0;
        let dxs = (self.at(l + 1, x + 1, y) - self.at(l + 1, x - 1, y) - self.at(l - 1, x + 1, y)
            + self.at(l - 1, x - 1, y))
            / 4.0;
        let dys = (self.at(l + 1, x, y + 1) - self.at(l + 1, x, y - 1) - self.at(l - 1, x, y + 1)
            + self.at(l - 1, x, y - 1))
            / 4.0;
        Matrix3::new(dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss)
    }
}

/// Quadratic sub-pixel refinement with contrast and edge rejection.
///
/// Returns `None` when the interpolation offset keeps exceeding half a sample
/// for [`MAX_REFINE_STEPS`] steps, walks out of the valid range, or the refined
/// point fails the contrast or curvature-ratio tests.
pub fn refine_candidate(
    c: &Candidate,
    dog: &DoGPyramid,
    ss: &ScaleSpace,
    params: &RefineParams,
) -> Option<Keypoint> {
    let levels = &dog.octaves[c.octave];
    let local = Local { levels };
    let (w, h) = (levels[0].width() as i64, levels[0].height() as i64);
    let s = dog.intervals as i64;
    let (mut x, mut y, mut l) = (c.x as i64, c.y as i64, c.level as i64);

    let mut converged = None;
    for _ in 0..MAX_REFINE_STEPS {
        let (ux, uy, ul) = (x as usize, y as usize, l as usize);
        let g = local.gradient(ul, ux, uy);
        let hess = local.hessian(ul, ux, uy);
        let offset = -(hess.lu().solve(&g)?);
        if !offset.iter().all(|v| v.is_finite()) {
            return None;
        }
        if offset.iter().all(|v| v.abs() < 0.5) {
            converged = Some((offset, g));
            break;
        }
        if offset.iter().any(|v| v.abs() > 1e6) {
            return None;
        }
        x += offset[0].round() as i64;
        y += offset[1].round() as i64;
        l += offset[2].round() as i64;
        if l < 1 || l > s || x < 1 || x > w - 2 || y < 1 || y > h - 2 {
            return None;
        }
    }
    let (offset, g) = converged?;
    let (ux, uy, ul) = (x as usize, y as usize, l as usize);

    let value = local.at(ul, ux, uy) + 0.5 * g.dot(&offset);
    if value.abs() < params.contrast_thresh {
        return None;
    }

    let hess = local.hessian(ul, ux, uy);
    let (dxx, dyy, dxy) = (hess[(0, 0)], hess[(1, 1)], hess[(0, 1)]);
    let trace = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let r = params.edge_ratio;
    if det <= 0.0 || trace * trace * r >= (r + 1.0) * (r + 1.0) * det {
        return None;
    }

    let scale = ss.octave_scale(c.octave);
    let interval = l as f64 + offset[2];
    let kx = (x as f64 + offset[0]) * scale;
    let ky = (y as f64 + offset[1]) * scale;
    if !(0.0..ss.image_width as f64).contains(&kx) || !(0.0..ss.image_height as f64).contains(&ky) {
        return None;
    }
    Some(Keypoint {
        x: kx,
        y: ky,
        octave: c.octave,
        interval,
        sigma: ss.level_sigma(interval) * scale,
        orientation: 0.0,
        response: value.abs(),
    })
}

pub fn refine_keypoints(
    candidates: &[Candidate],
    dog: &DoGPyramid,
    ss: &ScaleSpace,
    params: &RefineParams,
) -> Vec<Keypoint> {
    candidates
        .iter()
        .filter_map(|c| refine_candidate(c, dog, ss, params))
        .collect()
}
