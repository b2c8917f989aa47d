//! Descriptor matching and geometric verification.

mod brute;
mod homography;
mod ransac;

pub use brute::{
    euclidean, match_mnn, match_nn, match_nndr, match_with, squared_distance, FeatureMatch, MatchSet, Strategy,
};
pub use homography::{degenerate_sample, fit_homography, fit_minimal, Homography};
pub use ransac::{ransac_filter, RansacParams, RansacResult, MIN_SAMPLE};

/// Default distance ratio for [`match_nndr`].
pub const DEFAULT_RATIO: f64 = 0.8;
