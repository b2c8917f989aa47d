//! Object localisation: two-cluster k-means on the frame and on a background
//! shot, mask normalization, blob removal, superimposition and blurring.

mod kmeans;
mod mask;

pub use kmeans::{kmeans_segment, KmeansParams, LabelMap, PixelFeatures};
pub use mask::{normalize_mask, remove_small_blobs, superimpose, BackgroundPolicy, BinaryMask};

use crate::error::{Error, Result};
use crate::imgcore::{mean_blur, GrayImage, SoftMask};

/// Frame-selection probe threshold on the raw 8-bit intensity.
pub const FRAME_PROBE_THRESHOLD: u8 = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskParams {
    pub kmeans: KmeansParams,
    /// Blobs smaller than this fraction of the image area are cleared.
    pub min_blob_frac: f64,
    /// Odd box-blur window applied to the combined mask.
    pub blur: usize,
    pub bg_policy: BackgroundPolicy,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            kmeans: KmeansParams::default(),
            min_blob_frac: 0.02,
            blur: 9,
            bg_policy: BackgroundPolicy::default(),
        }
    }
}

/// Every intermediate of [`build_localisation_mask`].
#[derive(Debug, Clone)]
pub struct LocalisationStages {
    /// Subject plus static scenery, 1 = not background.
    pub foreground: BinaryMask,
    /// `foreground` after small-blob removal.
    pub foreground_clean: BinaryMask,
    /// 0 over the static scenery, 1 elsewhere.
    pub background: BinaryMask,
    pub combined: SoftMask,
    pub blurred: SoftMask,
}

pub fn localisation_stages<I: PixelFeatures + ?Sized>(
    foreground_image: &I,
    background_image: &I,
    params: &MaskParams,
) -> Result<LocalisationStages> {
    if foreground_image.dims() != background_image.dims() {
        return Err(Error::arg(format!(
            "foreground {:?} and background {:?} dimensions differ",
            foreground_image.dims(),
            background_image.dims()
        )));
    }
    let km = KmeansParams {
        k: 2,
        ..params.kmeans
    };
    let (w, h) = foreground_image.dims();
    let foreground = normalize_mask(&kmeans_segment(foreground_image, &km)?, params.bg_policy)?;
    let min_area = (params.min_blob_frac * (w * h) as f64).ceil() as usize;
    let foreground_clean = remove_small_blobs(&foreground, min_area);
    // The non-background cluster of the background shot is the static scenery; invert so it is 0.
    let background =
        normalize_mask(&kmeans_segment(background_image, &km)?, params.bg_policy)?.inverted();
    let combined = superimpose(&foreground_clean, &background)?;
    let blurred = mean_blur(&combined, params.blur)?;
    Ok(LocalisationStages {
        foreground,
        foreground_clean,
        background,
        combined,
        blurred,
    })
}

/// Soft localisation mask: segment both images, clean and superimpose the
/// normalized masks, then box-blur the result.
pub fn build_localisation_mask<I: PixelFeatures + ?Sized>(
    foreground_image: &I,
    background_image: &I,
    params: &MaskParams,
) -> Result<SoftMask> {
    Ok(localisation_stages(foreground_image, background_image, params)?.blurred)
}

/// True when the 8-bit intensity at `(w/2, 4h/5)` is strictly above 50.
pub fn select_frame(image: &GrayImage) -> bool {
    let (x, y) = (image.width() / 2, 4 * image.height() / 5);
    image.get_u8(x, y) > FRAME_PROBE_THRESHOLD
}
