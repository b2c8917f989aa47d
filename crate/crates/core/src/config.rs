//! Flat `key = value` pipeline configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! seed = 7
//! sift.octaves = auto
//! match.strategy = mnn
//! ```
//!
//! Unknown or repeated keys are errors, and every value is range-checked.
//! [`PipelineConfig::render`] writes every key, so a rendered file parses back
//! to the same config.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matching::{RansacParams, Strategy};
use crate::seed::stage_seed;
use crate::segment::{BackgroundPolicy, KmeansParams, MaskParams};
use crate::sift::SiftParams;
use crate::similarity::MatchConfig;

pub const KEYS: &[&str] = &[
    "seed",
    "kmeans.seed",
    "kmeans.max_iters",
    "kmeans.tol",
    "mask.min_blob_frac",
    "mask.blur",
    "mask.keypoint_threshold",
    "mask.bg_policy",
    "sift.sigma0",
    "sift.intervals",
    "sift.octaves",
    "sift.init_blur",
    "sift.contrast",
    "sift.edge_ratio",
    "sift.upsample",
    "match.strategy",
    "match.ratio",
    "ransac.iters",
    "ransac.inlier_px",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Explicit k-means seed; derived from `seed` when absent.
    pub kmeans_seed: Option<u64>,
    pub kmeans_max_iters: usize,
    pub kmeans_tol: f64,
    pub min_blob_frac: f64,
    pub blur: usize,
    pub bg_policy: BackgroundPolicy,
    pub sift: SiftParams,
    pub strategy: Strategy,
    pub ratio: f64,
    pub ransac: RansacParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mask = MaskParams::default();
        let matching = MatchConfig::default();
        Self {
            seed: 0,
            kmeans_seed: None,
            kmeans_max_iters: mask.kmeans.max_iters,
            kmeans_tol: mask.kmeans.tol,
            min_blob_frac: mask.min_blob_frac,
            blur: mask.blur,
            bg_policy: mask.bg_policy,
            sift: SiftParams::default(),
            strategy: matching.strategy,
            ratio: matching.ratio,
            ransac: matching.ransac,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn check(ok: bool, key: &str, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("`{key}` must be {what}")))
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: `{key}` given twice", i + 1)));
            }
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key from its textual value, validating the range.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "kmeans.seed" => {
                self.kmeans_seed = if value == "auto" { None } else { Some(parse_num(key, value)?) }
            }
            "kmeans.max_iters" => {
                let v: usize = parse_num(key, value)?;
                check(v >= 1, key, "at least 1")?;
                self.kmeans_max_iters = v;
            }
            "kmeans.tol" => {
                let v: f64 = parse_num(key, value)?;
                check(v.is_finite() && v >= 0.0, key, "finite and non-negative")?;
                self.kmeans_tol = v;
            }
            "mask.min_blob_frac" => {
                let v: f64 = parse_num(key, value)?;
                check((0.0..=1.0).contains(&v), key, "in [0, 1]")?;
                self.min_blob_frac = v;
            }
            "mask.blur" => {
                let v: usize = parse_num(key, value)?;
                check(v % 2 == 1, key, "an odd window size")?;
                self.blur = v;
            }
            "mask.keypoint_threshold" => {
                let v: f32 = parse_num(key, value)?;
                check((0.0..=1.0).contains(&v), key, "in [0, 1]")?;
                self.sift.keypoint_threshold = v;
            }
            "mask.bg_policy" => self.bg_policy = value.parse()?,
            "sift.sigma0" => {
                let v: f64 = parse_num(key, value)?;
                check(v.is_finite() && v > 0.0, key, "positive")?;
                self.sift.sigma0 = v;
            }
            "sift.intervals" => {
                let v: usize = parse_num(key, value)?;
                check((1..=16).contains(&v), key, "in 1..=16")?;
                self.sift.intervals = v;
            }
            "sift.octaves" => {
                self.sift.octaves = if value == "auto" {
                    None
                } else {
                    let v: usize = parse_num(key, value)?;
                    check(v >= 1, key, "`auto` or at least 1")?;
                    Some(v)
                }
            }
            "sift.init_blur" => {
                let v: f64 = parse_num(key, value)?;
                check(v.is_finite() && v >= 0.0, key, "finite and non-negative")?;
                self.sift.init_blur = v;
            }
            "sift.contrast" => {
                let v: f64 = parse_num(key, value)?;
                check(v.is_finite() && v >= 0.0, key, "finite and non-negative")?;
                self.sift.contrast_thresh = v;
            }
            "sift.edge_ratio" => {
                let v: f64 = parse_num(key, value)?;
                check(v.is_finite() && v >= 1.0, key, "at least 1")?;
                self.sift.edge_ratio = v;
            }
            "sift.upsample" => self.sift.upsample = parse_num(key, value)?,
            "match.strategy" => self.strategy = value.parse()?,
            "match.ratio" => {
                let v: f64 = parse_num(key, value)?;
                check(v > 0.0 && v <= 1.0, key, "in (0, 1]")?;
                self.ratio = v;
            }
            "ransac.iters" => {
                let v: usize = parse_num(key, value)?;
                check(v >= 1, key, "at least 1")?;
                self.ransac.iterations = v;
            }
            "ransac.inlier_px" => {
                let v: f64 = parse_num(key, value)?;
                check(v.is_finite() && v > 0.0, key, "positive")?;
                self.ransac.inlier_px = v;
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Checks constraints that span several keys.
    pub fn validate(&self) -> Result<()> {
        if self.sift.init_blur >= self.sift.sigma0 {
            return Err(Error::Config("`sift.init_blur` must be below `sift.sigma0`".into()));
        }
        Ok(())
    }

    /// Every key in [`KEYS`] order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("seed", self.seed.to_string());
        put("kmeans.seed", self.kmeans_seed.map_or("auto".into(), |s| s.to_string()));
        put("kmeans.max_iters", self.kmeans_max_iters.to_string());
        put("kmeans.tol", self.kmeans_tol.to_string());
        put("mask.min_blob_frac", self.min_blob_frac.to_string());
        put("mask.blur", self.blur.to_string());
        put("mask.keypoint_threshold", self.sift.keypoint_threshold.to_string());
        put("mask.bg_policy", self.bg_policy.to_string());
        put("sift.sigma0", self.sift.sigma0.to_string());
        put("sift.intervals", self.sift.intervals.to_string());
        put("sift.octaves", self.sift.octaves.map_or("auto".into(), |o| o.to_string()));
        put("sift.init_blur", self.sift.init_blur.to_string());
        put("sift.contrast", self.sift.contrast_thresh.to_string());
        put("sift.edge_ratio", self.sift.edge_ratio.to_string());
        put("sift.upsample", self.sift.upsample.to_string());
        put("match.strategy", self.strategy.to_string());
        put("match.ratio", self.ratio.to_string());
        put("ransac.iters", self.ransac.iterations.to_string());
        put("ransac.inlier_px", self.ransac.inlier_px.to_string());
        out
    }

    pub fn mask_params(&self) -> MaskParams {
        MaskParams {
            kmeans: KmeansParams {
                k: 2,
                seed: self.kmeans_seed.unwrap_or_else(|| stage_seed(self.seed, "kmeans")),
                max_iters: self.kmeans_max_iters,
                tol: self.kmeans_tol,
            },
            min_blob_frac: self.min_blob_frac,
            blur: self.blur,
            bg_policy: self.bg_policy,
        }
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            strategy: self.strategy,
            ratio: self.ratio,
            ransac: self.ransac,
            seed: self.seed,
        }
    }
}
