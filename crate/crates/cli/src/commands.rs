use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context, Result};
use kakamatch::config::PipelineConfig;
use kakamatch::eval::evaluate_topx_many;
use kakamatch::eval::synth::{generate_synthetic_benchmark, SynthParams};
use kakamatch::imgcore::{decode_pnm, encode_pnm, PnmImage, SoftMask};
use kakamatch::segment::{build_localisation_mask, select_frame, MaskParams};
use kakamatch::sift::{extract_features, read_features, write_features};
use kakamatch::similarity::{clip_id_of, load_labels, rank_matches, DatasetIndex, Gallery, PairReport, FEATURE_EXT};
use kakamatch::visualize::render_matches;
use rayon::prelude::*;
use serde_json::json;

/// Bad invocation rather than bad data; maps to exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read_image(path: &Path) -> Result<PnmImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_pnm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// `*.pgm` and `*.ppm` files directly under `dir`, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for item in fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))? {
        let path = item?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("pgm" | "ppm")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

fn file_name(path: &Path) -> String {
    path.file_name().unwrap_or_default().to_string_lossy().into_owned()
}

pub fn select_frames(in_dir: &Path, out: Option<&Path>) -> Result<()> {
    let mut selected = Vec::new();
    let mut rejected = Vec::new();
    for path in list_images(in_dir)? {
        if select_frame(&read_image(&path)?.into_gray()) {
            selected.push(file_name(&path));
        } else {
            rejected.push(file_name(&path));
        }
    }
    emit(out, &to_json(&json!({ "selected": selected, "rejected": rejected }))?)
}

fn localisation_mask(image: &PnmImage, bg: &PnmImage, params: &MaskParams) -> Result<SoftMask> {
    Ok(match (image, bg) {
        (PnmImage::Rgb(a), PnmImage::Rgb(b)) => build_localisation_mask(a, b, params)?,
        _ => build_localisation_mask(&image.clone().into_gray(), &bg.clone().into_gray(), params)?,
    })
}

pub fn features(in_dir: &Path, out_dir: &Path, bg: Option<&Path>, cfg: &PipelineConfig, force: bool) -> Result<()> {
    let images = list_images(in_dir)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let corpus_bg = bg.map(read_image).transpose()?;
    let clip_bgs: Mutex<HashMap<String, Option<Arc<PnmImage>>>> = Mutex::new(HashMap::new());
    let mask_params = cfg.mask_params();

    let status = images
        .par_iter()
        .map(|path| -> Result<(bool, bool)> {
            let id = stem(path);
            let target = out_dir.join(format!("{id}.{FEATURE_EXT}"));
            if target.exists() && !force {
                return Ok((false, false));
            }
            let image = read_image(path)?;
            let clip = clip_id_of(&id).to_string();
            let clip_bg = {
                let mut cache = clip_bgs.lock().expect("background cache poisoned");
                match cache.get(&clip) {
                    Some(found) => found.clone(),
                    None => {
                        let p = in_dir.join("backgrounds").join(format!("{clip}.pgm"));
                        let loaded = if p.is_file() { Some(Arc::new(read_image(&p)?)) } else { None };
                        cache.insert(clip, loaded.clone());
                        loaded
                    }
                }
            };
            let background = clip_bg.as_deref().or(corpus_bg.as_ref());
            let mask = background
                .map(|b| localisation_mask(&image, b, &mask_params))
                .transpose()
                .with_context(|| format!("masking {}", path.display()))?;
            let feats = extract_features(&image.into_gray(), mask.as_ref(), &cfg.sift)
                .with_context(|| format!("extracting {}", path.display()))?;
            write_features(&target, &feats)?;
            Ok((true, mask.is_some()))
        })
        .collect::<Result<Vec<_>>>()?;

    let written = status.iter().filter(|s| s.0).count();
    let masked = status.iter().filter(|s| s.1).count();
    emit(
        None,
        &to_json(&json!({
            "images": images.len(),
            "written": written,
            "skipped": images.len() - written,
            "masked": masked,
        }))?,
    )
}

pub fn match_files(feat_a: &Path, feat_b: &Path, out: Option<&Path>, cfg: &PipelineConfig) -> Result<()> {
    let fa = read_features(feat_a)?;
    let fb = read_features(feat_b)?;
    let report = PairReport::build(&stem(feat_a), &fa, &stem(feat_b), &fb, &cfg.match_config())?;
    emit(out, &to_json(&report)?)
}

fn load_gallery(feature_dir: &Path, labels: Option<&Path>) -> Result<Gallery> {
    let labels = labels.map(load_labels).transpose()?;
    let index = DatasetIndex::from_feature_dir(feature_dir, labels.as_ref())?;
    if index.is_empty() {
        bail!("no .{FEATURE_EXT} files in {}", feature_dir.display());
    }
    Ok(Gallery::load(&index)?)
}

pub fn rank(query: &str, feature_dir: &Path, csv: bool, out: Option<&Path>, cfg: &PipelineConfig) -> Result<()> {
    let gallery = load_gallery(feature_dir, None)?;
    let ranked = rank_matches(query, &gallery, &cfg.match_config())?;
    let text = if csv { ranked.to_csv() } else { to_json(&ranked)? };
    emit(out, &text)
}

pub fn evaluate(feature_dir: &Path, labels: &Path, xs: &[usize], out: Option<&Path>, cfg: &PipelineConfig) -> Result<()> {
    let gallery = load_gallery(feature_dir, Some(labels))?;
    let tables = evaluate_topx_many(&gallery, xs, &cfg.match_config())?;
    let report = to_json(&json!({ "tables": tables }))?;
    match out {
        Some(path) => {
            emit(Some(path), &report)?;
            for t in &tables {
                println!("{}", t.to_text());
            }
            Ok(())
        }
        None => emit(None, &report),
    }
}

pub fn synth(
    out_dir: &Path,
    individuals: usize,
    views: usize,
    width: usize,
    height: usize,
    cfg: &PipelineConfig,
    force: bool,
) -> Result<()> {
    if out_dir.join("labels.csv").exists() && !force {
        bail!("{} already holds a corpus; pass --force to overwrite", out_dir.display());
    }
    let params = SynthParams {
        n_individuals: individuals,
        views_per_individual: views,
        seed: cfg.seed,
        width,
        height,
    };
    let index = generate_synthetic_benchmark(&params, out_dir)?;
    emit(
        None,
        &to_json(&json!({
            "images": index.len(),
            "individuals": individuals,
            "images_dir": out_dir.join("images"),
            "background": out_dir.join("background.pgm"),
            "labels": out_dir.join("labels.csv"),
        }))?,
    )
}

pub fn visualize(image_a: &Path, image_b: &Path, report: &Path, out: &Path) -> Result<()> {
    let a = read_image(image_a)?.into_gray();
    let b = read_image(image_b)?.into_gray();
    let text = fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
    let report: PairReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", report.display()))?;
    let inside = |kp: [f64; 3], w: usize, h: usize| kp[0] >= -0.5 && kp[1] >= -0.5 && kp[0] < w as f64 && kp[1] < h as f64;
    for m in &report.matches {
        if !inside(m.query_kp, a.width(), a.height()) || !inside(m.train_kp, b.width(), b.height()) {
            bail!("match {} -> {} lies outside the given images; wrong image pair?", m.query, m.train);
        }
    }
    let canvas = render_matches(&a, &b, &report.matches)?;
    fs::write(out, encode_pnm(&PnmImage::Rgb(canvas))).with_context(|| format!("writing {}", out.display()))
}
