//! Pair scoring and gallery ranking.
//!
//! A pair's score is `S(D) = |D| + 1 / (1 + mean(D))` over the descriptor
//! distances of the matches that survive RANSAC. Since the distance term lies
//! in `(0, 1]`, more surviving matches always rank higher.

mod index;
mod report;

pub use report::{PairReport, RansacReport, ReportMatch};
pub use index::{clip_id_of, load_labels, DatasetIndex, Entry, Gallery, FEATURE_EXT};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matching::{
    match_with, ransac_filter, Homography, MatchSet, RansacParams, Strategy, DEFAULT_RATIO, MIN_SAMPLE,
};
use crate::seed::pair_seed;
use crate::sift::Feature;

pub fn similarity_score(distances: &[f64]) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::UndefinedScore);
    }
    if distances.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::arg("match distances must be finite and non-negative"));
    }
    let n = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / n;
    Ok(n + 1.0 / (1.0 + mean))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    pub strategy: Strategy,
    /// NNDR ratio, ignored by the other strategies.
    pub ratio: f64,
    pub ransac: RansacParams,
    /// Base seed; each ordered image pair derives its own RANSAC stream.
    pub seed: u64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Mnn,
            ratio: DEFAULT_RATIO,
            ransac: RansacParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub image_a: String,
    pub image_b: String,
    /// Size of the preliminary match set before RANSAC.
    pub n_preliminary: usize,
    pub n_matches: usize,
    pub mean_distance: f64,
    pub score: f64,
    pub inliers: MatchSet,
    pub homography: Homography,
}

/// Preliminary matching plus RANSAC for one ordered pair.
///
/// `Ok(None)` is a no-match: too few features, fewer than four preliminary
/// matches, or no RANSAC consensus.
pub fn match_pair(
    image_a: &str,
    feats_a: &[Feature],
    image_b: &str,
    feats_b: &[Feature],
    cfg: &MatchConfig,
) -> Result<Option<PairResult>> {
    let min_b = if cfg.strategy == Strategy::Nndr { 2 } else { 1 };
    if feats_a.is_empty() || feats_b.len() < min_b {
        return Ok(None);
    }
    let da: Vec<&[f32]> = feats_a.iter().map(|f| f.descriptor.as_ref()).collect();
    let db: Vec<&[f32]> = feats_b.iter().map(|f| f.descriptor.as_ref()).collect();
    let prelim = match_with(cfg.strategy, &da, &db, cfg.ratio)?;
    if prelim.len() < MIN_SAMPLE {
        return Ok(None);
    }
    let pa: Vec<[f64; 2]> = feats_a.iter().map(Feature::position).collect();
    let pb: Vec<[f64; 2]> = feats_b.iter().map(Feature::position).collect();
    let seed = pair_seed(cfg.seed, image_a, image_b);
    let res = match ransac_filter(&prelim, &pa, &pb, &cfg.ransac, seed) {
        Ok(r) => r,
        Err(Error::NoConsensus | Error::InsufficientMatches { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let distances: Vec<f64> = res.inliers.matches.iter().map(|m| m.distance).collect();
    let score = similarity_score(&distances)?;
    Ok(Some(PairResult {
        image_a: image_a.to_string(),
        image_b: image_b.to_string(),
        n_preliminary: prelim.len(),
        n_matches: distances.len(),
        mean_distance: distances.iter().sum::<f64>() / distances.len() as f64,
        score,
        inliers: res.inliers,
        homography: res.homography,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub image: String,
    pub clip: String,
    pub score: f64,
    pub n_matches: usize,
    pub mean_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedResult {
    pub query: String,
    pub results: Vec<RankedEntry>,
}

impl RankedResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image,clip,score,n_matches,mean_distance\n");
        for r in &self.results {
            out.push_str(&format!("{},{},{},{},{}\n", r.image, r.clip, r.score, r.n_matches, r.mean_distance));
        }
        out
    }
}

/// Scores `query` against every gallery image outside its clip.
pub fn rank_matches(query: &str, gallery: &Gallery, cfg: &MatchConfig) -> Result<RankedResult> {
    let q = gallery.position(query).ok_or_else(|| Error::Lookup(query.to_string()))?;
    let (q_entry, q_feats) = gallery.get(q);
    let scored: Vec<Option<RankedEntry>> = (0..gallery.len())
        .into_par_iter()
        .filter(|&i| gallery.get(i).0.clip_id != q_entry.clip_id)
        .map(|i| {
            let (entry, feats) = gallery.get(i);
            Ok(match_pair(&q_entry.image_id, q_feats, &entry.image_id, feats, cfg)?.map(|p| RankedEntry {
                image: entry.image_id.clone(),
                clip: entry.clip_id.clone(),
                score: p.score,
                n_matches: p.n_matches,
                mean_distance: p.mean_distance,
            }))
        })
        .collect::<Result<_>>()?;
    let mut results: Vec<RankedEntry> = scored.into_iter().flatten().collect();
    results.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.image.cmp(&b.image)));
    Ok(RankedResult {
        query: query.to_string(),
        results,
    })
}

/// The first `min(x, len)` image ids of a ranking.
pub fn top_x(ranked: &RankedResult, x: usize) -> Vec<&str> {
    ranked.results.iter().take(x).map(|r| r.image.as_str()).collect()
}
