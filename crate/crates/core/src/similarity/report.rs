use serde::{Deserialize, Serialize};

use super::{match_pair, MatchConfig, PairResult};
use crate::error::Result;
use crate::sift::Feature;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMatch {
    pub query: usize,
    pub train: usize,
    pub distance: f64,
    pub reprojection_error: f64,
    /// `[x, y, sigma]` of the query keypoint.
    pub query_kp: [f64; 3],
    pub train_kp: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RansacReport {
    pub iters: usize,
    pub inlier_px: f64,
    pub seed: u64,
}

/// JSON form of one pair match, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub image_a: String,
    pub image_b: String,
    pub strategy: String,
    pub ratio: f64,
    pub ransac: RansacReport,
    pub n_features_a: usize,
    pub n_features_b: usize,
    pub n_preliminary: usize,
    pub n_matches: usize,
    pub mean_distance: Option<f64>,
    pub score: Option<f64>,
    /// Row-major, `h33 = 1`; absent when no consensus was found.
    pub homography: Option<[f64; 9]>,
    pub matches: Vec<ReportMatch>,
}

impl PairReport {
    pub fn build(
        image_a: &str,
        feats_a: &[Feature],
        image_b: &str,
        feats_b: &[Feature],
        cfg: &MatchConfig,
    ) -> Result<Self> {
        let result = match_pair(image_a, feats_a, image_b, feats_b, cfg)?;
        let mut report = PairReport {
            image_a: image_a.to_string(),
            image_b: image_b.to_string(),
            strategy: cfg.strategy.to_string(),
            ratio: cfg.ratio,
            ransac: RansacReport {
                iters: cfg.ransac.iterations,
                inlier_px: cfg.ransac.inlier_px,
                seed: cfg.seed,
            },
            n_features_a: feats_a.len(),
            n_features_b: feats_b.len(),
            n_preliminary: 0,
            n_matches: 0,
            mean_distance: None,
            score: None,
            homography: None,
            matches: Vec::new(),
        };
        if let Some(p) = result {
            report.fill(&p, feats_a, feats_b);
        }
        Ok(report)
    }

    fn fill(&mut self, p: &PairResult, feats_a: &[Feature], feats_b: &[Feature]) {
        let m = p.homography.matrix();
        let mut h = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                h[r * 3 + c] = m[(r, c)];
            }
        }
        self.n_preliminary = p.n_preliminary;
        self.n_matches = p.n_matches;
        self.mean_distance = Some(p.mean_distance);
        self.score = Some(p.score);
        self.homography = Some(h);
        self.matches = p
            .inliers
            .matches
            .iter()
            .map(|fm| {
                let (a, b) = (&feats_a[fm.query_idx], &feats_b[fm.train_idx]);
                ReportMatch {
                    query: fm.query_idx,
                    train: fm.train_idx,
                    distance: fm.distance,
                    reprojection_error: p.homography.transfer_error(a.position(), b.position()),
                    query_kp: [a.x, a.y, a.sigma],
                    train_kp: [b.x, b.y, b.sigma],
                }
            })
            .collect();
    }
}
