//! Scale-invariant keypoints and descriptors.
//!
//! [`extract`] runs the whole chain: Gaussian scale space, difference of
//! Gaussians, strict 26-neighbour extrema, quadratic refinement with contrast
//! and edge rejection, orientation assignment and 128-d descriptors. An
//! optional soft mask drops keypoints before orientation assignment.

mod descriptor;
mod detect;
mod io;
mod orient;
mod pyramid;

pub use descriptor::{compute_descriptor, Descriptor, DESCRIPTOR_LEN};
pub use detect::{detect_extrema, refine_candidate, refine_keypoints, Candidate, RefineParams};
pub use io::{format_sig9, parse_features, read_features, render_features, write_features};
pub use orient::{assign_orientations, histogram_peaks, orientation_histogram, ORIENTATION_BINS};
pub use pyramid::{auto_octave_count, build_dog, build_scale_space, DoGPyramid, ScaleSpace, MIN_IMAGE_SIDE};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, SoftMask};

#[derive(Debug, Clone, PartialEq)]
pub struct SiftParams {
    pub sigma0: f64,
    pub intervals: usize,
    /// `None` picks `floor(log2(min_side / 16)) + 1`.
    pub octaves: Option<usize>,
    /// Blur already present in the input.
    pub init_blur: f64,
    pub contrast_thresh: f64,
    pub edge_ratio: f64,
    /// Double the input before building the pyramid.
    pub upsample: bool,
    /// Minimum mask value at a keypoint for it to be kept.
    pub keypoint_threshold: f32,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self {
            sigma0: 1.6,
            intervals: 3,
            octaves: None,
            init_blur: 0.5,
            contrast_thresh: 0.03,
            edge_ratio: 10.0,
            upsample: false,
            keypoint_threshold: 0.75,
        }
    }
}

impl SiftParams {
    pub fn refine(&self) -> RefineParams {
        RefineParams {
            contrast_thresh: self.contrast_thresh,
            edge_ratio: self.edge_ratio,
        }
    }
}

/// A refined scale-space extremum. Coordinates and `sigma` are in input-image pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub octave: usize,
    /// Refined, real-valued DoG level inside the octave.
    pub interval: f64,
    pub sigma: f64,
    /// Radians in `[0, 2pi)`.
    pub orientation: f64,
    /// |D| at the interpolated extremum.
    pub response: f64,
}

/// The portable part of a keypoint plus its descriptor, as stored in feature files.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    pub orientation: f64,
    pub response: f64,
    pub descriptor: Descriptor,
}

impl From<(Keypoint, Descriptor)> for Feature {
    fn from((kp, descriptor): (Keypoint, Descriptor)) -> Self {
        Feature {
            x: kp.x,
            y: kp.y,
            sigma: kp.sigma,
            orientation: kp.orientation,
            response: kp.response,
            descriptor,
        }
    }
}

impl Feature {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Refined keypoints (before orientation assignment), mask-filtered when a mask is given.
pub fn detect_keypoints(
    image: &GrayImage,
    mask: Option<&SoftMask>,
    params: &SiftParams,
) -> Result<(ScaleSpace, Vec<Keypoint>)> {
    if let Some(m) = mask {
        if (m.width(), m.height()) != (image.width(), image.height()) {
            return Err(Error::arg(format!(
                "mask {}x{} does not match image {}x{}",
                m.width(),
                m.height(),
                image.width(),
                image.height()
            )));
        }
    }
    let ss = build_scale_space(image, params)?;
    let dog = build_dog(&ss);
    let candidates = detect_extrema(&dog);
    let mut keypoints = refine_keypoints(&candidates, &dog, &ss, &params.refine());
    if let Some(m) = mask {
        keypoints.retain(|kp| m.at_rounded(kp.x, kp.y) >= params.keypoint_threshold);
    }
    Ok((ss, keypoints))
}

/// Full detect, refine, orient, describe chain. Output is ordered by
/// octave, y, x, orientation regardless of thread count.
pub fn extract(
    image: &GrayImage,
    mask: Option<&SoftMask>,
    params: &SiftParams,
) -> Result<Vec<(Keypoint, Descriptor)>> {
    let (ss, keypoints) = detect_keypoints(image, mask, params)?;
    let mut features: Vec<(Keypoint, Descriptor)> = keypoints
        .par_iter()
        .flat_map_iter(|kp| {
            assign_orientations(kp, &ss)
                .into_iter()
                .filter_map(|oriented| compute_descriptor(&oriented, &ss).map(|d| (oriented, d)))
                .collect::<Vec<_>>()
        })
        .collect();
    features.sort_by(|(a, _), (b, _)| {
        a.octave
            .cmp(&b.octave)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
            .then(a.orientation.total_cmp(&b.orientation))
    });
    Ok(features)
}

/// [`extract`] converted to portable features.
pub fn extract_features(image: &GrayImage, mask: Option<&SoftMask>, params: &SiftParams) -> Result<Vec<Feature>> {
    Ok(extract(image, mask, params)?.into_iter().map(Feature::from).collect())
}

#[cfg(test)]
mod tests;
