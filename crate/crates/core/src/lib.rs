//! Unsupervised, feature-based image matching for re-identifying individual
//! animals from their markings.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`imgcore`]: rasters, PNM codec, Gaussian and box filters.
//! - [`segment`]: k-means segmentation and the localisation mask that keeps
//!   features on the subject and off static scenery.
//! - [`sift`]: scale-space keypoint detection and 128-d descriptors.
//! - [`matching`]: NN / MNN / NNDR preliminary matching and RANSAC homography filtering.
//! - [`similarity`]: the pair score, gallery ranking with same-clip exclusion.
//! - [`eval`]: top-X accuracy tables and a deterministic synthetic benchmark.
//!
//! [`config`] ties the stage parameters together and [`visualize`] renders
//! match overlays.

// Guards like `!(x > 0.0)` are written that way to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod eval;
pub mod imgcore;
pub mod matching;
pub mod seed;
pub mod segment;
pub mod sift;
pub mod similarity;
pub mod visualize;

pub use error::{Error, Result};
